#include "senc/io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "senc/error.hpp"

namespace senc {

namespace {

constexpr std::uint8_t k_version = 1;

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) {
  out.push_back(v);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(std::uint8_t(v));
  out.push_back(std::uint8_t(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t(bits >> (8 * i)));
}

void put_magic(std::vector<std::uint8_t>& out, const char (&magic)[5]) {
  out.insert(out.end(), magic, magic + 4);
}

struct reader {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;

  void need(std::size_t n, const std::string& what) const {
    if (bytes.size() - pos < n)
      throw parse_error("truncated reading " + what, pos);
  }
  std::uint8_t u8(const std::string& what) {
    need(1, what);
    return bytes[pos++];
  }
  std::uint16_t u16(const std::string& what) {
    need(2, what);
    std::uint16_t v = std::uint16_t(bytes[pos]) |
                      std::uint16_t(bytes[pos + 1]) << 8;
    pos += 2;
    return v;
  }
  std::uint32_t u32(const std::string& what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  double f64(const std::string& what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(bytes[pos + i]) << (8 * i);
    pos += 8;
    return std::bit_cast<double>(v);
  }
  void magic(const char (&expect)[5]) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), expect, 4) != 0)
      throw parse_error(std::string("bad magic, expected ") + expect, 0);
    pos = 4;
  }
  void version() {
    std::size_t at = pos;
    std::uint8_t v = u8("version");
    if (v != k_version)
      throw parse_error("unsupported version " + std::to_string(v), at);
  }
  void done(const std::string& what) const {
    if (pos != bytes.size())
      throw parse_error("trailing bytes after " + what, pos);
  }
};

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw error("read failed on " + path);
  return bytes;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            std::streamsize(bytes.size()));
  if (!out) throw error("write failed on " + path);
}

std::pair<std::size_t, std::size_t> param_counts(const layer& l) {
  switch (l.kind) {
    case layer_kind::conv2d:
      return {std::size_t(l.shape[0]) * l.shape[1] * l.shape[2] * l.shape[3],
              l.shape[0]};
    case layer_kind::dense:
      return {std::size_t(l.shape[0]) * l.shape[1], l.shape[0]};
    default:
      return {0, 0};
  }
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const model& m) {
  validate_model(m);
  if (m.layers.size() > 0xffff) throw error("too many layers");
  std::vector<std::uint8_t> out;
  put_magic(out, "SENC");
  put_u8(out, k_version);
  put_u8(out, std::uint8_t(m.task));
  put_u16(out, std::uint16_t(m.layers.size()));
  for (const layer& l : m.layers) {
    put_u8(out, std::uint8_t(l.kind));
    for (std::uint32_t s : l.shape) put_u32(out, s);
    put_u32(out, l.kernel);
    put_u32(out, l.stride);
    put_u32(out, l.padding);
    for (double w : l.weights) put_f64(out, w);
    for (double b : l.biases) put_f64(out, b);
  }
  put_u16(out, std::uint16_t(m.considered.size()));
  for (std::uint16_t c : m.considered) put_u16(out, c);
  return out;
}

model parse_model(const std::vector<std::uint8_t>& bytes) {
  reader rd{bytes};
  rd.magic("SENC");
  rd.version();
  model m;
  std::size_t task_at = rd.pos;
  std::uint8_t task = rd.u8("task");
  if (task > 1) throw parse_error("unknown task kind", task_at);
  m.task = task_kind(task);
  std::uint16_t layer_count = rd.u16("layer count");
  for (std::uint16_t li = 0; li < layer_count; ++li) {
    std::string who = "layer " + std::to_string(li);
    layer l;
    std::size_t kind_at = rd.pos;
    std::uint8_t kind = rd.u8(who + " kind");
    if (kind > std::uint8_t(layer_kind::softmax))
      throw parse_error("unknown kind in " + who, kind_at);
    l.kind = layer_kind(kind);
    for (std::uint32_t& s : l.shape) s = rd.u32(who + " shape");
    l.kernel = rd.u32(who + " kernel");
    l.stride = rd.u32(who + " stride");
    l.padding = rd.u32(who + " padding");
    auto [nw, nb] = param_counts(l);
    l.weights.resize(nw);
    for (double& w : l.weights) w = rd.f64(who + " weights");
    l.biases.resize(nb);
    for (double& b : l.biases) b = rd.f64(who + " biases");
    m.layers.push_back(std::move(l));
  }
  std::uint16_t considered = rd.u16("considered count");
  for (std::uint16_t i = 0; i < considered; ++i)
    m.considered.push_back(rd.u16("considered layer"));
  rd.done("model");
  validate_model(m);
  return m;
}

void save_model(const model& m, const std::string& path) {
  write_file(path, serialize_model(m));
}

model load_model(const std::string& path) {
  return parse_model(read_file(path));
}

std::vector<std::uint8_t> serialize_dataset(const dataset& d) {
  validate_dataset(d);
  if (d.size() > 0xffffffffull) throw error("dataset too large");
  std::vector<std::uint8_t> out;
  put_magic(out, "SDAT");
  put_u8(out, k_version);
  put_u32(out, std::uint32_t(d.size()));
  for (std::size_t i = 0; i < 4; ++i)
    put_u32(out, std::uint32_t(d.inputs.extent(i)));
  put_u8(out, std::uint8_t(d.task));
  for (double v : d.inputs.values()) put_f64(out, v);
  if (d.task == task_kind::classification) {
    for (std::uint32_t c : d.labels) put_u32(out, c);
  } else {
    for (double v : d.targets) put_f64(out, v);
  }
  return out;
}

dataset parse_dataset(const std::vector<std::uint8_t>& bytes) {
  reader rd{bytes};
  rd.magic("SDAT");
  rd.version();
  std::uint32_t count = rd.u32("sample count");
  std::vector<std::size_t> ext(4);
  std::size_t shape_at = rd.pos;
  for (std::size_t& e : ext) e = rd.u32("input shape");
  if (ext[0] != count)
    throw parse_error("input shape disagrees with sample count", shape_at);
  std::size_t kind_at = rd.pos;
  std::uint8_t kind = rd.u8("target kind");
  if (kind > 1) throw parse_error("unknown target kind", kind_at);

  dataset d;
  d.task = task_kind(kind);
  d.inputs = tensor(ext);
  for (double& v : d.inputs.values()) v = rd.f64("inputs");
  if (d.task == task_kind::classification) {
    d.labels.resize(count);
    for (std::uint32_t& c : d.labels) c = rd.u32("labels");
  } else {
    std::size_t rem = bytes.size() - rd.pos;
    if (count == 0 || rem % (8 * std::size_t(count)) != 0)
      throw parse_error("target block does not divide into rows", rd.pos);
    d.target_dim = rem / (8 * std::size_t(count));
    d.targets.resize(std::size_t(count) * d.target_dim);
    for (double& v : d.targets) v = rd.f64("targets");
  }
  rd.done("dataset");
  validate_dataset(d);
  return d;
}

void save_dataset(const dataset& d, const std::string& path) {
  write_file(path, serialize_dataset(d));
}

dataset load_dataset(const std::string& path) {
  return parse_dataset(read_file(path));
}

std::vector<std::uint8_t> serialize_importance(
    const std::vector<importance_record>& recs) {
  std::vector<std::uint8_t> out;
  put_magic(out, "SIMP");
  put_u8(out, k_version);
  for (const importance_record& r : recs) {
    if (r.indices.size() != r.importance.size())
      throw error("importance record arity mismatch");
    if (r.indices.size() > 0xffffffffull) throw error("record too large");
    put_u16(out, r.layer);
    put_u32(out, std::uint32_t(r.indices.size()));
    for (std::size_t i = 0; i < r.indices.size(); ++i) {
      put_u32(out, r.indices[i]);
      put_f64(out, r.importance[i]);
    }
  }
  return out;
}

std::vector<importance_record> parse_importance(
    const std::vector<std::uint8_t>& bytes) {
  reader rd{bytes};
  rd.magic("SIMP");
  rd.version();
  std::vector<importance_record> recs;
  while (rd.pos < bytes.size()) {
    std::string who = "record " + std::to_string(recs.size());
    importance_record r;
    r.layer = rd.u16(who + " layer");
    std::uint32_t count = rd.u32(who + " count");
    r.indices.resize(count);
    r.importance.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
      r.indices[i] = rd.u32(who + " index");
      r.importance[i] = rd.f64(who + " importance");
    }
    recs.push_back(std::move(r));
  }
  return recs;
}

void save_importance(const std::vector<importance_record>& recs,
                     const std::string& path) {
  write_file(path, serialize_importance(recs));
}

std::vector<importance_record> load_importance(const std::string& path) {
  return parse_importance(read_file(path));
}

namespace {

void put_tier(std::vector<std::uint8_t>& out, const secret_key& key,
              const std::vector<double>& lo, const std::vector<double>& hi,
              const std::vector<std::vector<std::uint32_t>>& indices,
              std::size_t slots) {
  if (lo.size() != slots || hi.size() != slots || indices.size() != slots)
    throw error("tier geometry disagrees with slot count");
  out.insert(out.end(), key.begin(), key.end());
  for (double v : lo) put_f64(out, v);
  for (double v : hi) put_f64(out, v);
  for (const auto& idx : indices) {
    if (idx.size() > 0xffffffffull) throw error("tier too large");
    put_u32(out, std::uint32_t(idx.size()));
    for (std::uint32_t i : idx) put_u32(out, i);
  }
}

void get_tier(reader& rd, std::size_t t, std::size_t slots, secret_key& key,
              std::vector<double>& lo, std::vector<double>& hi,
              std::vector<std::vector<std::uint32_t>>& indices) {
  std::string who = "tier " + std::to_string(t + 1);
  rd.need(key.size(), who + " key");
  std::memcpy(key.data(), rd.bytes.data() + rd.pos, key.size());
  rd.pos += key.size();
  lo.resize(slots);
  hi.resize(slots);
  for (double& v : lo) v = rd.f64(who + " lower bounds");
  for (double& v : hi) v = rd.f64(who + " upper bounds");
  indices.resize(slots);
  for (std::size_t s = 0; s < slots; ++s) {
    std::uint32_t count = rd.u32(who + " index count");
    indices[s].resize(count);
    for (std::uint32_t& i : indices[s]) i = rd.u32(who + " indices");
  }
}

}  // namespace

std::vector<std::uint8_t> serialize_permission(const permission& p) {
  if (p.level < 1 || p.level > p.tier_count)
    throw error("permission level out of range");
  if (p.tiers.size() != p.level)
    throw error("permission carries the wrong tier count");
  if (p.mu.size() != p.sigma.size() || p.mu.empty() ||
      p.mu.size() > 0xffff)
    throw error("permission stats malformed");
  std::size_t slots = p.mu.size();
  std::vector<std::uint8_t> out;
  put_magic(out, "SPRM");
  put_u8(out, k_version);
  put_u8(out, p.level);
  put_u8(out, p.tier_count);
  put_u16(out, std::uint16_t(slots));
  for (double v : p.mu) put_f64(out, v);
  for (double v : p.sigma) put_f64(out, v);
  for (const permission_tier& t : p.tiers)
    put_tier(out, t.key, t.lo, t.hi, t.indices, slots);
  return out;
}

permission parse_permission(const std::vector<std::uint8_t>& bytes) {
  reader rd{bytes};
  rd.magic("SPRM");
  rd.version();
  permission p;
  std::size_t level_at = rd.pos;
  p.level = rd.u8("level");
  p.tier_count = rd.u8("tier count");
  if (p.level < 1 || p.level > p.tier_count)
    throw parse_error("level out of range", level_at);
  std::size_t slots_at = rd.pos;
  std::size_t slots = rd.u16("slot count");
  if (slots == 0) throw parse_error("no layer slots", slots_at);
  p.mu.resize(slots);
  p.sigma.resize(slots);
  for (double& v : p.mu) v = rd.f64("mu");
  for (double& v : p.sigma) v = rd.f64("sigma");
  p.tiers.resize(p.level);
  for (std::size_t t = 0; t < p.level; ++t)
    get_tier(rd, t, slots, p.tiers[t].key, p.tiers[t].lo, p.tiers[t].hi,
             p.tiers[t].indices);
  rd.done("permission");
  return p;
}

void save_permission(const permission& p, const std::string& path) {
  write_file(path, serialize_permission(p));
}

permission load_permission(const std::string& path) {
  return parse_permission(read_file(path));
}

std::vector<std::uint8_t> serialize_bundle(const cipher_bundle& b) {
  if (b.stats.empty() || b.stats.size() > 0xffff)
    throw error("bundle stats malformed");
  if (b.tiers.empty() || b.tiers.size() > 0xff)
    throw error("bundle tier count out of range");
  std::size_t slots = b.stats.size();
  std::vector<std::uint8_t> out;
  put_magic(out, "SBND");
  put_u8(out, k_version);
  put_f64(out, b.rho);
  put_u8(out, std::uint8_t(b.tiers.size()));
  put_u16(out, std::uint16_t(slots));
  for (const layer_stats_entry& s : b.stats) {
    put_u16(out, s.layer);
    put_f64(out, s.mu);
    put_f64(out, s.sigma);
  }
  for (const tier_cipher& t : b.tiers)
    put_tier(out, t.key, t.lo, t.hi, t.indices, slots);
  return out;
}

cipher_bundle parse_bundle(const std::vector<std::uint8_t>& bytes) {
  reader rd{bytes};
  rd.magic("SBND");
  rd.version();
  cipher_bundle b;
  b.rho = rd.f64("rho");
  std::size_t tiers_at = rd.pos;
  std::uint8_t tier_count = rd.u8("tier count");
  if (tier_count == 0) throw parse_error("no tiers", tiers_at);
  std::size_t slots_at = rd.pos;
  std::size_t slots = rd.u16("slot count");
  if (slots == 0) throw parse_error("no layer slots", slots_at);
  b.stats.resize(slots);
  for (layer_stats_entry& s : b.stats) {
    s.layer = rd.u16("stats layer");
    s.mu = rd.f64("stats mu");
    s.sigma = rd.f64("stats sigma");
  }
  b.tiers.resize(tier_count);
  for (std::size_t t = 0; t < tier_count; ++t)
    get_tier(rd, t, slots, b.tiers[t].key, b.tiers[t].lo, b.tiers[t].hi,
             b.tiers[t].indices);
  rd.done("bundle");
  return b;
}

void save_bundle(const cipher_bundle& b, const std::string& path) {
  write_file(path, serialize_bundle(b));
  std::filesystem::permissions(path,
                               std::filesystem::perms::owner_read |
                                   std::filesystem::perms::owner_write,
                               std::filesystem::perm_options::replace);
}

cipher_bundle load_bundle(const std::string& path) {
  return parse_bundle(read_file(path));
}

}  // namespace senc
