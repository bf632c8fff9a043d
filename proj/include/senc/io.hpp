#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "senc/dprm.hpp"
#include "senc/model.hpp"
#include "senc/permission.hpp"

namespace senc {

// All formats are little-endian byte streams with a 4-byte magic and a
// version byte. Parsers throw parse_error carrying the byte offset of the
// first field that failed; a wrong magic fails at offset 0.

// Model file ("SENC"): task, layer records (kind, shape, conv geometry,
// weights then biases), trailer with the considered-layer list. Plain and
// protected models share the format; protection is invisible in the file.
std::vector<std::uint8_t> serialize_model(const model& m);
model parse_model(const std::vector<std::uint8_t>& bytes);
void save_model(const model& m, const std::string& path);
model load_model(const std::string& path);

// Dataset file ("SDAT"): sample count, input extents, target kind, row-major
// inputs, then u32 class ids or f64 rows (dimension inferred from length).
std::vector<std::uint8_t> serialize_dataset(const dataset& d);
dataset parse_dataset(const std::vector<std::uint8_t>& bytes);
void save_dataset(const dataset& d, const std::string& path);
dataset load_dataset(const std::string& path);

// Importance sidecar ("SIMP"): per-layer records of (index, importance)
// pairs, records until end of file.
struct importance_record {
  std::uint16_t layer = 0;
  std::vector<std::uint32_t> indices;
  std::vector<double> importance;

  bool operator==(const importance_record&) const = default;
};

std::vector<std::uint8_t> serialize_importance(
    const std::vector<importance_record>& recs);
std::vector<importance_record> parse_importance(
    const std::vector<std::uint8_t>& bytes);
void save_importance(const std::vector<importance_record>& recs,
                     const std::string& path);
std::vector<importance_record> load_importance(const std::string& path);

// Permission file ("SPRM"): level, tier count, slot count, shared stats,
// then one record per released tier (key, bounds, located indices).
std::vector<std::uint8_t> serialize_permission(const permission& p);
permission parse_permission(const std::vector<std::uint8_t>& bytes);
void save_permission(const permission& p, const std::string& path);
permission load_permission(const std::string& path);

// Cipher bundle file ("SBND"): rho, per-layer stats, then every tier record.
// save_bundle restricts the file to owner read/write.
std::vector<std::uint8_t> serialize_bundle(const cipher_bundle& b);
cipher_bundle parse_bundle(const std::vector<std::uint8_t>& bytes);
void save_bundle(const cipher_bundle& b, const std::string& path);
cipher_bundle load_bundle(const std::string& path);

}  // namespace senc
