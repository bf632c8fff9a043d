#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

#include "senc/error.hpp"
#include "senc/io.hpp"
#include "senc/permission.hpp"
#include "senc/rng.hpp"
#include "senc/synth.hpp"

using namespace senc;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  fs::path dir = fs::temp_directory_path() / "senc_io_test";
  fs::create_directories(dir);
  return dir;
}

dominated_partition random_partition(const model& m, double fraction,
                                     std::size_t tiers, std::uint64_t seed) {
  dominated_partition p;
  p.tier_count = tiers;
  rng gen(seed);
  for (std::uint16_t l : m.considered) {
    layer_partition lp;
    lp.layer = l;
    std::size_t n = m.layers[l].weights.size();
    std::size_t phi = std::max<std::size_t>(
        1, std::size_t(std::ceil(fraction * double(n))));
    std::vector<std::size_t> pick = gen.choice(n, phi);
    std::sort(pick.begin(), pick.end());
    lp.tiers.resize(tiers);
    for (std::size_t i = 0; i < pick.size(); ++i) {
      lp.selected.push_back(std::uint32_t(pick[i]));
      lp.tiers[i % tiers].push_back(std::uint32_t(pick[i]));
    }
    for (auto& tier : lp.tiers) std::sort(tier.begin(), tier.end());
    p.layers.push_back(std::move(lp));
  }
  return p;
}

bool models_equal(const model& a, const model& b) {
  return serialize_model(a) == serialize_model(b);
}

template <typename Fn>
std::size_t offset_of_failure(Fn&& fn, std::string* msg = nullptr) {
  try {
    fn();
  } catch (const parse_error& e) {
    if (msg) *msg = e.what();
    return e.offset;
  }
  if (msg) *msg = "(no error)";
  return std::size_t(-1);
}

}  // namespace

TEST_CASE("model round trip is byte-identical") {
  model m = make_desk_model(3);
  auto bytes = serialize_model(m);
  model back = parse_model(bytes);
  CHECK(serialize_model(back) == bytes);
  CHECK(back.task == m.task);
  CHECK(back.considered == m.considered);
  REQUIRE(back.layers.size() == m.layers.size());
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    CHECK(back.layers[i].weights == m.layers[i].weights);
    CHECK(back.layers[i].biases == m.layers[i].biases);
  }

  fs::path p = scratch() / "model.senc";
  save_model(m, p.string());
  CHECK(models_equal(load_model(p.string()), m));
}

TEST_CASE("protection is invisible in the model file") {
  model m = make_desk_model(3);
  auto part = random_partition(m, 0.1, 3, 90);
  auto [prot, bundle] = encrypt_model(m, part, tier_keys(900, 3), 8.0);
  auto bytes = serialize_model(prot);
  // same format, same size, parses like any model
  CHECK(bytes.size() == serialize_model(m).size());
  CHECK(models_equal(parse_model(bytes), prot));
}

TEST_CASE("model parse failures carry offsets") {
  model m = make_two_blob_model(1);
  auto bytes = serialize_model(m);

  auto bad_magic = bytes;
  bad_magic[0] ^= 0xff;
  CHECK(offset_of_failure([&] { (void)parse_model(bad_magic); }) == 0);

  std::string msg;
  auto bad_version = bytes;
  bad_version[4] = 2;
  CHECK(offset_of_failure([&] { (void)parse_model(bad_version); }, &msg) == 4);
  CHECK(msg.find("version") != std::string::npos);

  auto cut = bytes;
  cut.resize(7);
  CHECK(offset_of_failure([&] { (void)parse_model(cut); }) != std::size_t(-1));

  auto trailing = bytes;
  trailing.push_back(0);
  CHECK(offset_of_failure([&] { (void)parse_model(trailing); }) ==
        bytes.size());

  CHECK_THROWS_AS((void)load_model((scratch() / "missing.senc").string()),
                  error);
}

TEST_CASE("classification dataset round trips field-for-field") {
  dataset d = make_desk_dataset(32, 5);
  auto bytes = serialize_dataset(d);
  dataset back = parse_dataset(bytes);
  CHECK(back.task == d.task);
  CHECK(back.inputs.values() == d.inputs.values());
  CHECK(back.labels == d.labels);
  CHECK(serialize_dataset(back) == bytes);

  fs::path p = scratch() / "data.sdat";
  save_dataset(d, p.string());
  dataset loaded = load_dataset(p.string());
  CHECK(loaded.inputs.values() == d.inputs.values());
  CHECK(loaded.labels == d.labels);
}

TEST_CASE("regression dataset infers its target width") {
  rng gen(6);
  dataset d;
  d.task = task_kind::regression;
  d.inputs = tensor({4, 1, 2, 2});
  for (double& v : d.inputs.values()) v = gen.normal();
  d.target_dim = 3;
  d.targets.resize(4 * 3);
  for (double& v : d.targets) v = gen.normal();

  dataset back = parse_dataset(serialize_dataset(d));
  CHECK(back.task == task_kind::regression);
  CHECK(back.target_dim == 3);
  CHECK(back.targets == d.targets);
  CHECK(back.inputs.values() == d.inputs.values());
}

TEST_CASE("dataset parse failures carry offsets") {
  dataset d = make_two_blob_dataset(16, 7);
  auto bytes = serialize_dataset(d);

  auto bad_magic = bytes;
  bad_magic[1] ^= 0x20;
  CHECK(offset_of_failure([&] { (void)parse_dataset(bad_magic); }) == 0);

  auto bad_count = bytes;
  bad_count[5] ^= 1;  // count no longer matches extent 0
  CHECK(offset_of_failure([&] { (void)parse_dataset(bad_count); }) == 9);

  auto cut = bytes;
  cut.resize(bytes.size() - 2);
  CHECK(offset_of_failure([&] { (void)parse_dataset(cut); }) !=
        std::size_t(-1));
}

TEST_CASE("importance sidecar round trips") {
  std::vector<importance_record> recs(2);
  recs[0].layer = 0;
  recs[0].indices = {0, 1, 2, 5};
  recs[0].importance = {0.9, 0.1, 0.5, 0.25};
  recs[1].layer = 2;
  recs[1].indices = {7};
  recs[1].importance = {1.0};

  auto bytes = serialize_importance(recs);
  CHECK(parse_importance(bytes) == recs);

  fs::path p = scratch() / "imp.simp";
  save_importance(recs, p.string());
  CHECK(load_importance(p.string()) == recs);

  CHECK(parse_importance(serialize_importance({})).empty());

  auto cut = bytes;
  cut.resize(bytes.size() - 3);
  std::string msg;
  CHECK(offset_of_failure([&] { (void)parse_importance(cut); }, &msg) !=
        std::size_t(-1));
  CHECK(msg.find("record 1") != std::string::npos);

  std::vector<importance_record> bad(1);
  bad[0].indices = {1, 2};
  bad[0].importance = {0.5};
  CHECK_THROWS_AS((void)serialize_importance(bad), error);
}

TEST_CASE("permission round trips field-for-field") {
  model m = make_desk_model(3);
  auto part = random_partition(m, 0.1, 5, 91);
  auto [prot, bundle] = encrypt_model(m, part, tier_keys(901, 5), 8.0);

  for (std::uint8_t level : {std::uint8_t(1), std::uint8_t(3), std::uint8_t(5)}) {
    permission p = assign_permission(bundle, level);
    permission back = parse_permission(serialize_permission(p));
    CHECK(back == p);
  }

  permission p = assign_permission(bundle, 2);
  fs::path path = scratch() / "perm.sprm";
  save_permission(p, path.string());
  CHECK(load_permission(path.string()) == p);
}

TEST_CASE("serialized permissions nest by level") {
  model m = make_desk_model(3);
  auto part = random_partition(m, 0.1, 4, 92);
  auto [prot, bundle] = encrypt_model(m, part, tier_keys(902, 4), 8.0);

  permission p2 = parse_permission(serialize_permission(assign_permission(bundle, 2)));
  permission p3 = parse_permission(serialize_permission(assign_permission(bundle, 3)));
  REQUIRE(p2.tiers.size() == 2);
  REQUIRE(p3.tiers.size() == 3);
  CHECK(p2.tiers[0] == p3.tiers[0]);
  CHECK(p2.tiers[1] == p3.tiers[1]);
  CHECK(p2.mu == p3.mu);
  CHECK(p2.sigma == p3.sigma);

  permission p1 = parse_permission(serialize_permission(assign_permission(bundle, 1)));
  CHECK(p1.tiers.size() == 1);
  CHECK(p1.level == 1);
}

TEST_CASE("permission parse failures carry offsets and tier names") {
  model m = make_desk_model(3);
  auto part = random_partition(m, 0.1, 3, 93);
  auto [prot, bundle] = encrypt_model(m, part, tier_keys(903, 3), 8.0);
  auto full = serialize_permission(assign_permission(bundle, 3));

  auto bad_magic = full;
  bad_magic[3] ^= 0x01;
  CHECK(offset_of_failure([&] { (void)parse_permission(bad_magic); }) == 0);

  std::string msg;
  auto bad_version = full;
  bad_version[4] = 9;
  CHECK(offset_of_failure([&] { (void)parse_permission(bad_version); }, &msg) ==
        4);
  CHECK(msg.find("version") != std::string::npos);

  auto bad_level = full;
  bad_level[5] = 7;  // level above tier count
  CHECK(offset_of_failure([&] { (void)parse_permission(bad_level); }) == 5);

  // cut inside the third tier's key: the error names the tier
  std::size_t two_tiers = serialize_permission(assign_permission(bundle, 2)).size();
  auto cut = full;
  cut.resize(two_tiers + 10);
  CHECK(offset_of_failure([&] { (void)parse_permission(cut); }, &msg) ==
        two_tiers);
  CHECK(msg.find("tier 3 key") != std::string::npos);
}

TEST_CASE("malformed permissions refuse to serialize") {
  permission p;
  p.level = 0;
  p.tier_count = 3;
  p.mu = {0.0};
  p.sigma = {1.0};
  CHECK_THROWS_AS((void)serialize_permission(p), error);
  p.level = 4;
  CHECK_THROWS_AS((void)serialize_permission(p), error);
  p.level = 1;
  CHECK_THROWS_AS((void)serialize_permission(p), error);  // no tier items
}

TEST_CASE("bundle round trips and stays private on disk") {
  model m = make_desk_model(3);
  auto part = random_partition(m, 0.1, 5, 94);
  auto [prot, bundle] = encrypt_model(m, part, tier_keys(904, 5), 16.0);

  cipher_bundle back = parse_bundle(serialize_bundle(bundle));
  CHECK(back == bundle);

  fs::path path = scratch() / "bundle.sbnd";
  save_bundle(bundle, path.string());
  CHECK(load_bundle(path.string()) == bundle);
  auto perms = fs::status(path).permissions();
  CHECK(perms == (fs::perms::owner_read | fs::perms::owner_write));

  auto bytes = serialize_bundle(bundle);
  bytes[0] ^= 0xff;
  CHECK(offset_of_failure([&] { (void)parse_bundle(bytes); }) == 0);
}

TEST_CASE("serialized size stays near the reported footprint") {
  model m = make_desk_model(3);
  auto part = random_partition(m, 0.10, 5, 95);  // even tier split
  auto [prot, bundle] = encrypt_model(m, part, tier_keys(905, 5), 8.0);

  std::size_t total_selected = 0;
  for (const auto& lp : part.layers) total_selected += lp.selected.size();
  std::uint64_t phi_mean =
      std::uint64_t(std::llround(double(total_selected) / double(part.layers.size())));

  for (std::uint8_t level : {std::uint8_t(1), std::uint8_t(3), std::uint8_t(5)}) {
    std::uint64_t bits = permission_size_bits(level, 5, part.layers.size(),
                                              phi_mean);
    std::size_t actual = serialize_permission(assign_permission(bundle, level)).size();
    INFO("level ", int(level), ": formula ", bits / 8, " bytes, actual ", actual);
    CHECK(double(actual) <= 3.0 * double(bits) / 8.0);
    CHECK(double(actual) >= double(bits) / 8.0);
  }
}
