#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "senc/attacks.hpp"
#include "senc/dprm.hpp"
#include "senc/error.hpp"
#include "senc/permission.hpp"
#include "senc/rng.hpp"
#include "senc/synth.hpp"

using namespace senc;

namespace {

const dataset& desk_train() {
  static dataset d = make_desk_dataset(1600, 42);
  return d;
}

const dataset& desk_eval() {
  static dataset d = make_desk_dataset(1000, 43);
  return d;
}

const model& desk_trained() {
  static model m = [] {
    model mm = make_desk_model(7);
    train_config tc;
    tc.epochs = 60;
    tc.seed = 1;
    train_sgd(mm, desk_train(), tc);
    return mm;
  }();
  return m;
}

model tiny_filter_model(std::vector<double> weights) {
  model m;
  m.task = task_kind::classification;
  m.layers.push_back(make_conv2d(1, std::uint32_t(weights.size()), 1, 1, 0));
  m.layers.push_back(make_flatten());
  m.layers.push_back(make_dense(2, 1));
  m.layers.push_back(make_softmax());
  m.considered = {0};
  m.layers[0].weights = std::move(weights);
  return m;
}

}  // namespace

TEST_CASE("haar step matches the hand transform") {
  auto [a, d] = dwt_step({4.0, 2.0}, wavelet_kind::haar);
  REQUIRE(a.size() == 1);
  CHECK(a[0] == doctest::Approx(3.0 * std::sqrt(2.0)).epsilon(1e-14));
  CHECK(d[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));

  auto back = idwt_step(a, d, wavelet_kind::haar);
  CHECK(back[0] == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(back[1] == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("soft threshold shrinks toward zero") {
  CHECK(soft_threshold(std::sqrt(2.0), 2.0) == 0.0);
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
  CHECK(soft_threshold(0.5, 1.0) == 0.0);
}

TEST_CASE("denoising [4,2] flattens it to the mean") {
  auto y = wavelet_denoise({4.0, 2.0}, wavelet_kind::haar, 1,
                           threshold_rule::universal);
  REQUIRE(y.size() == 2);
  CHECK(y[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(y[1] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("dwt stacks reconstruct perfectly for both wavelets") {
  rng gen(31);
  for (wavelet_kind w : {wavelet_kind::haar, wavelet_kind::db2}) {
    std::vector<double> x(64);
    for (double& v : x) v = gen.normal();

    std::vector<std::vector<double>> details;
    std::vector<double> approx = x;
    for (int l = 0; l < 3; ++l) {
      auto [a, d] = dwt_step(approx, w);
      details.push_back(d);
      approx = a;
    }
    for (std::size_t l = details.size(); l-- > 0;)
      approx = idwt_step(approx, details[l], w);

    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(std::abs(approx[i] - x[i]) <= 1e-10);
  }
}

TEST_CASE("zero effective threshold reproduces the signal end to end") {
  // Pairwise-constant input: the finest haar detail vanishes, so the
  // universal threshold is zero and deeper levels pass through untouched.
  rng gen(32);
  std::vector<double> x(32);
  for (std::size_t i = 0; i < x.size(); i += 2) {
    double v = gen.normal();
    x[i] = v;
    x[i + 1] = v;
  }
  auto y = wavelet_denoise(x, wavelet_kind::haar, 3, threshold_rule::universal);
  REQUIRE(y.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(std::abs(y[i] - x[i]) <= 1e-10);
}

TEST_CASE("wavelet attack rejects signals shorter than the filter") {
  CHECK_THROWS_AS(
      (void)wavelet_denoise({1.0}, wavelet_kind::haar, 1, threshold_rule::universal),
      error);
  CHECK_THROWS_AS(
      (void)wavelet_denoise({1.0, 2.0}, wavelet_kind::db2, 1, threshold_rule::universal),
      error);
}

TEST_CASE("attacks touch only considered layer weights") {
  model m = make_desk_model(7);
  for (auto attacked :
       {wavelet_attack(m, wavelet_kind::db2),
        filter_attack(m, filter_kind::gaussian, 3)}) {
    for (std::size_t li = 0; li < m.layers.size(); ++li) {
      bool considered =
          std::find(m.considered.begin(), m.considered.end(), li) !=
          m.considered.end();
      if (considered)
        CHECK(attacked.layers[li].weights != m.layers[li].weights);
      else
        CHECK(attacked.layers[li].weights == m.layers[li].weights);
      CHECK(attacked.layers[li].biases == m.layers[li].biases);
    }
  }
}

TEST_CASE("median filter flattens an isolated spike") {
  model m = tiny_filter_model({1.0, 9.0, 1.0});
  model y = filter_attack(m, filter_kind::median, 3);
  CHECK(y.layers[0].weights == std::vector<double>{1.0, 1.0, 1.0});
}

TEST_CASE("smoothing filters preserve constants") {
  model m = tiny_filter_model({2.5, 2.5, 2.5, 2.5, 2.5});
  for (filter_kind k :
       {filter_kind::average, filter_kind::gaussian, filter_kind::median}) {
    model y = filter_attack(m, k, 5);
    for (double v : y.layers[0].weights)
      CHECK(v == doctest::Approx(2.5).epsilon(1e-12));
  }
}

TEST_CASE("filter window must be odd and at least 3") {
  model m = tiny_filter_model({1.0, 2.0, 3.0});
  CHECK_THROWS_AS((void)filter_attack(m, filter_kind::average, 2), error);
  CHECK_THROWS_AS((void)filter_attack(m, filter_kind::median, 1), error);
}

TEST_CASE("attacker slice is a seeded subset of the training data") {
  const dataset& train = desk_train();
  dataset a = attacker_slice(train, 0.10, 99);
  dataset b = attacker_slice(train, 0.10, 99);
  CHECK(a.size() == 160);
  CHECK(a.inputs.values() == b.inputs.values());
  CHECK(a.labels == b.labels);

  dataset c = attacker_slice(train, 0.10, 100);
  CHECK(c.labels != a.labels);

  CHECK_THROWS_AS((void)attacker_slice(train, 0.0, 1), error);
  CHECK_THROWS_AS((void)attacker_slice(train, 1.5, 1), error);
}

TEST_CASE("zero-epoch retraining is a no-op") {
  model m = make_desk_model(7);
  dataset slice = attacker_slice(desk_train(), 0.10, 50);
  train_config tc;
  tc.epochs = 0;

  model lw = layerwise_retrain(m, slice, tc);
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    CHECK(lw.layers[li].weights == m.layers[li].weights);
    CHECK(lw.layers[li].biases == m.layers[li].biases);
  }

  select_config sel;
  sel.steps = 10;
  sel.seed = 51;
  model tr = transfer_retrain(m, slice, m, slice, sel, tc);
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    CHECK(tr.layers[li].weights == m.layers[li].weights);
    CHECK(tr.layers[li].biases == m.layers[li].biases);
  }
}

TEST_CASE("layerwise retraining does not damage an unprotected model") {
  const model& m = desk_trained();
  double before = evaluate(m, desk_eval());

  train_config tc;
  tc.epochs = 20;
  tc.seed = 52;
  model after = layerwise_retrain(m, desk_train(), tc);
  double score = evaluate(after, desk_eval());
  INFO("before ", before, " after ", score);
  CHECK(score >= before - 0.02);
}

TEST_CASE("surrogate importance does not reproduce the true selection") {
  const model& victim = desk_trained();

  model surrogate = make_desk_model(8);
  dataset surrogate_data = make_surrogate_dataset(1600, 777);
  train_config tc;
  tc.epochs = 60;
  tc.seed = 2;
  train_sgd(surrogate, surrogate_data, tc);

  select_config sel;
  sel.steps = 200;
  sel.fraction = 0.10;
  sel.seed = 21;
  dominated_partition truth = build_partition(victim, desk_train(), sel);
  sel.seed = 22;
  dominated_partition guess = build_partition(surrogate, surrogate_data, sel);

  std::size_t shared = 0, total = 0;
  for (std::size_t s = 0; s < truth.layers.size(); ++s) {
    std::set<std::uint32_t> t(truth.layers[s].selected.begin(),
                              truth.layers[s].selected.end());
    for (std::uint32_t i : guess.layers[s].selected) shared += t.count(i);
    total += truth.layers[s].selected.size();
  }
  INFO("overlap ", shared, " of ", total);
  CHECK(shared < total);
}

TEST_CASE("attack reports score against the lowest-permission goal") {
  const model& m = desk_trained();
  const dataset& eval_set = desk_eval();
  double baseline = evaluate(m, eval_set);

  select_config sel;
  sel.fraction = 0.10;
  sel.tiers = 5;
  sel.seed = 11;
  dominated_partition part = build_partition(m, desk_train(), sel);
  auto [prot, bundle] = encrypt_model(m, part, tier_keys(4000, 5), 8.0);

  double goal = evaluate(
      decrypt_with_permission(prot, assign_permission(bundle, 1), 8.0),
      eval_set);

  // the unattacked protected model must not reach the goal
  attack_report none = evaluate_attack(prot, eval_set, goal, baseline);
  CHECK(none.attacked < goal);
  CHECK_FALSE(none.success);

  // the pretrained model trivially reaches it
  attack_report ideal = evaluate_attack(m, eval_set, goal, baseline);
  CHECK(ideal.success);

  // boundary is inclusive
  attack_report edge = evaluate_attack(m, eval_set, ideal.attacked, baseline);
  CHECK(edge.success);
  CHECK(edge.attacked == ideal.attacked);
}
