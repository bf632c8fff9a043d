#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace senc {

// Base for all toolkit errors so callers can map them to exit codes.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or truncated binary input; offset is the byte position that failed.
struct parse_error : error {
  std::size_t offset;
  parse_error(const std::string& msg, std::size_t off)
      : error(msg + " (byte " + std::to_string(off) + ")"), offset(off) {}
};

// Bad command-line or configuration input.
struct usage_error : error {
  using error::error;
};

}  // namespace senc
