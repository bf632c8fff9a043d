#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "senc/analysis.hpp"
#include "senc/attacks.hpp"
#include "senc/error.hpp"
#include "senc/io.hpp"
#include "senc/nn.hpp"
#include "senc/permission.hpp"
#include "senc/pss.hpp"
#include "senc/synth.hpp"

using nlohmann::json;
using namespace senc;

namespace {

// Flags beat config file entries, which beat defaults. Fillers run after
// parsing and only touch options the command line left unset.
struct config_layer {
  json values;
  std::vector<std::function<void()>> fillers;

  void load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw usage_error("cannot open config " + path);
    try {
      in >> values;
    } catch (const json::exception& e) {
      throw usage_error("config " + path + ": " + e.what());
    }
  }

  template <typename T>
  void bind(CLI::App* cmd, CLI::Option* opt, const std::string& key, T& var) {
    fillers.push_back([this, cmd, opt, key, &var] {
      if (cmd->parsed() && opt->count() == 0 && values.contains(key)) {
        try {
          var = values.at(key).get<T>();
        } catch (const json::exception& e) {
          throw usage_error("config key " + key + ": " + e.what());
        }
      }
    });
  }

  void apply() {
    for (auto& f : fillers) f();
  }
};

std::string hex(const secret_key& k) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (std::uint8_t b : k) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

json permission_json(const permission& p, bool show_keys) {
  json out;
  out["level"] = p.level;
  out["tier_count"] = p.tier_count;
  out["mu"] = p.mu;
  out["sigma"] = p.sigma;
  out["tiers"] = json::array();
  for (const permission_tier& t : p.tiers) {
    json jt;
    jt["key"] = show_keys ? hex(t.key) : "(redacted)";
    jt["lo"] = t.lo;
    jt["hi"] = t.hi;
    jt["indices"] = t.indices;
    out["tiers"].push_back(std::move(jt));
  }
  return out;
}

dominated_partition partition_from_importance(
    const model& m, const std::vector<importance_record>& recs,
    double fraction, std::size_t tiers) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw usage_error("fraction must be in (0, 1]");
  if (tiers < 1) throw usage_error("tiers must be positive");
  dominated_partition part;
  part.tier_count = tiers;
  for (std::uint16_t l : m.considered) {
    const importance_record* rec = nullptr;
    for (const auto& r : recs)
      if (r.layer == l) rec = &r;
    if (!rec)
      throw error("importance file has no record for layer " +
                  std::to_string(l));
    std::size_t n = m.layers[l].weights.size();
    if (rec->indices.size() != n)
      throw error("importance record for layer " + std::to_string(l) +
                  " does not cover the layer");
    std::vector<double> imp(n, -1.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (rec->indices[i] >= n || imp[rec->indices[i]] >= 0.0)
        throw error("importance record for layer " + std::to_string(l) +
                    " is not a permutation of the layer");
      imp[rec->indices[i]] = rec->importance[i];
    }
    layer_partition lp;
    lp.layer = l;
    std::size_t phi = std::max<std::size_t>(
        1, std::min(n, std::size_t(std::ceil(fraction * double(n)))));
    lp.selected = select_dominated(imp, phi);
    bool degenerate = false;
    lp.tiers = partition_by_importance(lp.selected, imp, tiers, &degenerate);
    if (degenerate) part.degenerate = true;
    lp.importance = std::move(imp);
    part.layers.push_back(std::move(lp));
  }
  return part;
}

dataset make_named_dataset(const std::string& kind, std::size_t count,
                           std::uint64_t seed) {
  if (kind == "desk") return make_desk_dataset(count, seed);
  if (kind == "surrogate") return make_surrogate_dataset(count, seed);
  if (kind == "blobs") return make_two_blob_dataset(count, seed);
  throw usage_error("unknown dataset kind " + kind);
}

selection_strategy strategy_from_name(const std::string& name) {
  for (selection_strategy s :
       {selection_strategy::pss, selection_strategy::random,
        selection_strategy::mean, selection_strategy::descending,
        selection_strategy::ascending})
    if (name == strategy_name(s)) return s;
  throw usage_error("unknown strategy " + name);
}

int dispatch(int argc, char** argv) {
  CLI::App app{"selective parameter encryption toolkit"};
  app.require_subcommand(1);
  config_layer cfg;
  std::string config_path;
  app.add_option("--config", config_path, "JSON file with default options");

  std::uint64_t seed = 0;

  // gen
  auto* gen = app.add_subcommand("gen", "emit a synthetic dataset");
  std::string gen_kind = "desk", gen_out;
  std::size_t gen_count = 1600;
  gen->add_option("--out", gen_out, "output dataset path")->required();
  cfg.bind(gen, gen->add_option("--kind", gen_kind, "desk|surrogate|blobs"),
           "kind", gen_kind);
  cfg.bind(gen, gen->add_option("--count", gen_count, "sample count"), "count",
           gen_count);
  cfg.bind(gen, gen->add_option("--seed", seed, "generator seed"), "seed", seed);

  // train
  auto* train = app.add_subcommand("train", "train a model");
  std::string train_data, train_out, train_in;
  std::uint64_t init_seed = 7;
  train_config tc;
  tc.epochs = 60;
  train->add_option("--data", train_data, "training dataset")->required();
  train->add_option("--out", train_out, "output model path")->required();
  train->add_option("--in", train_in, "continue from this model");
  cfg.bind(train, train->add_option("--init-seed", init_seed,
                             "weight init seed (fresh desk model)"),
           "init-seed", init_seed);
  cfg.bind(train, train->add_option("--epochs", tc.epochs, "training epochs"),
           "epochs", tc.epochs);
  cfg.bind(train, train->add_option("--lr", tc.lr, "step size"), "lr", tc.lr);
  cfg.bind(train, train->add_option("--batch", tc.batch, "batch size"), "batch",
           tc.batch);
  cfg.bind(train, train->add_option("--momentum", tc.momentum, "momentum"),
           "momentum", tc.momentum);
  cfg.bind(train, train->add_option("--seed", seed, "batch order seed"), "seed",
           seed);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "score a model on a dataset");
  std::string eval_model, eval_data;
  eval_cmd->add_option("--model", eval_model, "model path")->required();
  eval_cmd->add_option("--data", eval_data, "dataset path")->required();
  cfg.bind(eval_cmd, eval_cmd->add_option("--seed", seed, "unused, printed for parity"),
           "seed", seed);

  // select
  auto* select = app.add_subcommand("select", "fit per-weight importance");
  std::string sel_model, sel_data, sel_out;
  select_config sc;
  select->add_option("--model", sel_model, "model path")->required();
  select->add_option("--data", sel_data, "dataset path")->required();
  select->add_option("--out", sel_out, "output importance path")->required();
  cfg.bind(select, select->add_option("--steps", sc.steps, "gate optimization steps"),
           "steps", sc.steps);
  cfg.bind(select, select->add_option("--lr", sc.lr, "gate step size"), "lr", sc.lr);
  cfg.bind(select, select->add_option("--lambda", sc.lambda, "sparsity pressure"),
           "lambda", sc.lambda);
  cfg.bind(select, select->add_option("--batch", sc.batch, "batch size"), "batch",
           sc.batch);
  cfg.bind(select, select->add_option("--seed", seed, "gate sampling seed"), "seed",
           seed);

  // protect
  auto* protect = app.add_subcommand("protect", "encrypt dominated weights");
  std::string prot_model, prot_imp, prot_out, prot_bundle;
  double fraction = 0.10, rho = 8.0;
  std::size_t tiers = 5;
  std::uint64_t key_seed = 0;
  protect->add_option("--model", prot_model, "model path")->required();
  protect->add_option("--importance", prot_imp, "importance path")->required();
  protect->add_option("--out", prot_out, "protected model path")->required();
  protect->add_option("--bundle", prot_bundle, "cipher bundle path")
      ->required();
  cfg.bind(protect, protect->add_option("--fraction", fraction,
                               "share of each layer to encrypt"),
           "fraction", fraction);
  cfg.bind(protect, protect->add_option("--tiers", tiers, "permission tiers"), "tiers",
           tiers);
  cfg.bind(protect, protect->add_option("--rho", rho, "mask width in layer sigmas"),
           "rho", rho);
  auto* key_seed_opt =
      protect->add_option("--key-seed", key_seed, "tier key derivation seed");
  cfg.bind(protect, key_seed_opt, "key-seed", key_seed);
  cfg.bind(protect, protect->add_option("--seed", seed, "unused, printed for parity"),
           "seed", seed);

  // assign
  auto* assign = app.add_subcommand("assign", "issue a decryption permission");
  std::string asg_bundle, asg_out;
  unsigned asg_level = 0;
  bool asg_json = false, show_keys = false;
  assign->add_option("--bundle", asg_bundle, "cipher bundle path")->required();
  assign->add_option("--level", asg_level, "released tiers, 1..M")
      ->required()
      ->check(CLI::Range(1u, 255u));
  assign->add_option("--out", asg_out, "output permission path");
  assign->add_flag("--json", asg_json, "print a JSON rendering");
  assign->add_flag("--unsafe-show-keys", show_keys,
                   "include key material in the JSON rendering");
  cfg.bind(assign, assign->add_option("--seed", seed, "unused, printed for parity"),
           "seed", seed);

  // decrypt
  auto* decrypt = app.add_subcommand("decrypt", "apply a permission");
  std::string dec_model, dec_perm, dec_out;
  double dec_rho = 8.0;
  decrypt->add_option("--model", dec_model, "protected model path")
      ->required();
  decrypt->add_option("--permission", dec_perm, "permission path")->required();
  decrypt->add_option("--out", dec_out, "output model path")->required();
  cfg.bind(decrypt, decrypt->add_option("--rho", dec_rho,
                               "mask width used at protection time"),
           "rho", dec_rho);
  cfg.bind(decrypt, decrypt->add_option("--seed", seed, "unused, printed for parity"),
           "seed", seed);

  // attack
  auto* attack = app.add_subcommand("attack", "run one attack and score it");
  std::string atk_model, atk_eval, atk_out, atk_kind;
  std::string atk_wavelet = "haar", atk_filter = "average";
  std::string atk_train, atk_surrogate_model, atk_surrogate_data;
  std::size_t atk_levels = 3, atk_window = 3;
  double atk_goal = 0.0, atk_baseline = 0.0, atk_data_fraction = 0.10;
  train_config atk_tc;
  atk_tc.epochs = 40;
  select_config atk_sc;
  attack->add_option("--model", atk_model, "model under attack")->required();
  attack->add_option("--eval-data", atk_eval, "scoring dataset")->required();
  attack->add_option("--goal", atk_goal, "attacking goal score")->required();
  attack->add_option("--baseline", atk_baseline, "pretrained score")
      ->required();
  attack
      ->add_option("--kind", atk_kind, "wavelet|filter|layerwise|transfer")
      ->required();
  attack->add_option("--out", atk_out, "write the attacked model here");
  cfg.bind(attack, attack->add_option("--wavelet", atk_wavelet, "haar|db2"), "wavelet",
           atk_wavelet);
  cfg.bind(attack, attack->add_option("--levels", atk_levels, "decomposition levels"),
           "levels", atk_levels);
  cfg.bind(attack, attack->add_option("--filter", atk_filter,
                              "average|gaussian|median"),
           "filter", atk_filter);
  cfg.bind(attack, attack->add_option("--window", atk_window, "filter window"),
           "window", atk_window);
  attack->add_option("--train-data", atk_train,
                     "training corpus the attacker samples from");
  cfg.bind(attack, attack->add_option("--data-fraction", atk_data_fraction,
                              "attacker share of the training corpus"),
           "data-fraction", atk_data_fraction);
  cfg.bind(attack, attack->add_option("--epochs", atk_tc.epochs, "retrain epochs"),
           "epochs", atk_tc.epochs);
  cfg.bind(attack, attack->add_option("--lr", atk_tc.lr, "retrain step size"), "lr",
           atk_tc.lr);
  cfg.bind(attack, attack->add_option("--batch", atk_tc.batch, "retrain batch size"),
           "batch", atk_tc.batch);
  cfg.bind(attack, attack->add_option("--retrain-seed", atk_tc.seed,
                              "retrain batch order seed"),
           "retrain-seed", atk_tc.seed);
  attack->add_option("--surrogate-model", atk_surrogate_model,
                     "surrogate for transfer selection");
  attack->add_option("--surrogate-data", atk_surrogate_data,
                     "surrogate fitting corpus");
  cfg.bind(attack, attack->add_option("--select-steps", atk_sc.steps,
                              "surrogate gate steps"),
           "select-steps", atk_sc.steps);
  cfg.bind(attack, attack->add_option("--select-seed", atk_sc.seed,
                              "surrogate gate seed"),
           "select-seed", atk_sc.seed);
  cfg.bind(attack, attack->add_option("--seed", seed, "attacker sampling seed"),
           "seed", seed);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "reports and curves");
  std::string ana_report, ana_model, ana_bundle, ana_train, ana_eval, ana_out;
  std::vector<std::string> ana_strategies{"pss", "random"};
  std::vector<double> ana_fractions{0.0, 0.05, 0.1, 0.2, 0.4, 0.7, 1.0};
  curve_config ana_cfg;
  analyze
      ->add_option("--report", ana_report,
                   "imperceptibility|hierarchy|curve")
      ->required();
  analyze->add_option("--model", ana_model, "model path")->required();
  analyze->add_option("--bundle", ana_bundle, "cipher bundle path");
  analyze->add_option("--train-data", ana_train, "fitting dataset");
  analyze->add_option("--eval-data", ana_eval, "scoring dataset");
  analyze->add_option("--out", ana_out, "write the report here");
  cfg.bind(analyze, analyze
               ->add_option("--strategies", ana_strategies,
                            "comma-separated strategy list")
               ->delimiter(','),
           "strategies", ana_strategies);
  cfg.bind(analyze, analyze
               ->add_option("--fractions", ana_fractions,
                            "comma-separated fraction list")
               ->delimiter(','),
           "fractions", ana_fractions);
  cfg.bind(analyze, analyze->add_option("--trials", ana_cfg.trials, "trials per cell"),
           "trials", ana_cfg.trials);
  cfg.bind(analyze, analyze->add_option("--rho", ana_cfg.rho, "mask width"), "rho",
           ana_cfg.rho);
  cfg.bind(analyze, analyze->add_option("--steps", ana_cfg.sel.steps,
                               "importance fitting steps"),
           "steps", ana_cfg.sel.steps);
  cfg.bind(analyze, analyze->add_option("--seed", seed, "trial seed"), "seed", seed);

  for (CLI::App* sub : app.get_subcommands(nullptr))
    sub->fallthrough();  // lets --config appear after the subcommand

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (!config_path.empty()) cfg.load(config_path);
  cfg.apply();

  std::cout << "seed=" << seed << "\n";

  if (gen->parsed()) {
    save_dataset(make_named_dataset(gen_kind, gen_count, seed), gen_out);
    std::cout << "out=" << gen_out << "\n";
    return 0;
  }

  if (train->parsed()) {
    dataset data = load_dataset(train_data);
    model m = train_in.empty() ? make_desk_model(init_seed)
                               : load_model(train_in);
    tc.seed = seed;
    train_sgd(m, data, tc);
    save_model(m, train_out);
    std::cout << "init_seed=" << init_seed << "\n";
    std::cout << "out=" << train_out << "\n";
    return 0;
  }

  if (eval_cmd->parsed()) {
    double score = evaluate(load_model(eval_model), load_dataset(eval_data));
    std::printf("score=%.6f\n", score);
    return 0;
  }

  if (select->parsed()) {
    model m = load_model(sel_model);
    dataset data = load_dataset(sel_data);
    std::vector<importance_record> recs;
    for (std::uint16_t l : m.considered) {
      select_config layer_cfg = sc;
      layer_cfg.seed = seed + l;  // mirrors the library partition builder
      importance_record r;
      r.layer = l;
      r.importance = fit_importance(m, data, l, layer_cfg);
      r.indices.resize(r.importance.size());
      for (std::uint32_t i = 0; i < r.indices.size(); ++i) r.indices[i] = i;
      recs.push_back(std::move(r));
    }
    save_importance(recs, sel_out);
    std::cout << "out=" << sel_out << "\n";
    return 0;
  }

  if (protect->parsed()) {
    model m = load_model(prot_model);
    auto recs = load_importance(prot_imp);
    dominated_partition part =
        partition_from_importance(m, recs, fraction, tiers);
    if (part.degenerate)
      std::cerr << "warning: importance ties leave some tiers empty\n";
    if (key_seed_opt->count() == 0 && !cfg.values.contains("key-seed")) {
      std::random_device rd;
      key_seed = (std::uint64_t(rd()) << 32) | rd();
    }
    auto [prot_m, bundle] = encrypt_model(m, part, tier_keys(key_seed, tiers),
                                          rho);
    save_model(prot_m, prot_out);
    save_bundle(bundle, prot_bundle);
    std::cout << "key_seed=" << key_seed << "\n";
    std::cout << "out=" << prot_out << "\n";
    std::cout << "bundle=" << prot_bundle << "\n";
    return 0;
  }

  if (assign->parsed()) {
    cipher_bundle bundle = load_bundle(asg_bundle);
    if (asg_level > bundle.tiers.size())
      throw usage_error("level exceeds the bundle's tier count");
    permission p = assign_permission(bundle, std::uint8_t(asg_level));
    if (!asg_out.empty()) {
      save_permission(p, asg_out);
      std::cout << "out=" << asg_out << "\n";
    }
    if (asg_json) std::cout << permission_json(p, show_keys).dump(2) << "\n";
    return 0;
  }

  if (decrypt->parsed()) {
    model m = load_model(dec_model);
    permission p = load_permission(dec_perm);
    save_model(decrypt_with_permission(m, p, dec_rho), dec_out);
    std::cout << "out=" << dec_out << "\n";
    return 0;
  }

  if (attack->parsed()) {
    model m = load_model(atk_model);
    dataset eval_data = load_dataset(atk_eval);
    model attacked;
    json detail;
    if (atk_kind == "wavelet") {
      wavelet_kind w = atk_wavelet == "haar" ? wavelet_kind::haar
                       : atk_wavelet == "db2"
                           ? wavelet_kind::db2
                           : throw usage_error("unknown wavelet " + atk_wavelet);
      attacked = wavelet_attack(m, w, atk_levels);
      detail = {{"wavelet", atk_wavelet}, {"levels", atk_levels}};
    } else if (atk_kind == "filter") {
      filter_kind k = atk_filter == "average"    ? filter_kind::average
                      : atk_filter == "gaussian" ? filter_kind::gaussian
                      : atk_filter == "median"
                          ? filter_kind::median
                          : throw usage_error("unknown filter " + atk_filter);
      attacked = filter_attack(m, k, atk_window);
      detail = {{"filter", atk_filter}, {"window", atk_window}};
    } else if (atk_kind == "layerwise" || atk_kind == "transfer") {
      if (atk_train.empty())
        throw usage_error("--train-data is required for retraining attacks");
      dataset slice =
          attacker_slice(load_dataset(atk_train), atk_data_fraction, seed);
      detail = {{"data_fraction", atk_data_fraction},
                {"epochs", atk_tc.epochs},
                {"lr", atk_tc.lr}};
      if (atk_kind == "layerwise") {
        attacked = layerwise_retrain(m, slice, atk_tc);
      } else {
        if (atk_surrogate_model.empty() || atk_surrogate_data.empty())
          throw usage_error(
              "--surrogate-model and --surrogate-data are required for "
              "transfer attacks");
        attacked = transfer_retrain(m, slice, load_model(atk_surrogate_model),
                                    load_dataset(atk_surrogate_data), atk_sc,
                                    atk_tc);
        detail["select_steps"] = atk_sc.steps;
      }
    } else {
      throw usage_error("unknown attack kind " + atk_kind);
    }
    attack_report rep = evaluate_attack(attacked, eval_data, atk_goal,
                                        atk_baseline);
    if (!atk_out.empty()) save_model(attacked, atk_out);
    json line = {{"kind", atk_kind},
                 {"attacked", rep.attacked},
                 {"baseline", rep.baseline},
                 {"goal", rep.goal},
                 {"success", rep.success}};
    line.update(detail);
    std::cout << line.dump() << "\n";
    return 0;
  }

  if (analyze->parsed()) {
    model m = load_model(ana_model);
    if (ana_report == "imperceptibility") {
      if (ana_bundle.empty())
        throw usage_error("--bundle is required for this report");
      imperceptibility rep =
          imperceptibility_report(m, load_bundle(ana_bundle));
      json out = json::array();
      for (const auto& row : rep.layers)
        out.push_back({{"layer", row.layer},
                       {"cipher_count", row.cipher_count},
                       {"plain_count", row.plain_count},
                       {"skipped", row.skipped},
                       {"d", row.d},
                       {"p", row.p},
                       {"ks_pass", row.ks_pass},
                       {"mi", row.mi},
                       {"mi_bias", row.mi_bias}});
      std::string text = json{{"layers", out}}.dump(2) + "\n";
      if (ana_out.empty())
        std::cout << text;
      else
        std::ofstream(ana_out) << text;
      return 0;
    }
    if (ana_report == "hierarchy") {
      if (ana_bundle.empty() || ana_eval.empty())
        throw usage_error("--bundle and --eval-data are required");
      auto scores =
          hierarchy_table(m, load_bundle(ana_bundle), load_dataset(ana_eval));
      std::string text = json{{"scores", scores}}.dump(2) + "\n";
      if (ana_out.empty())
        std::cout << text;
      else
        std::ofstream(ana_out) << text;
      return 0;
    }
    if (ana_report == "curve") {
      if (ana_train.empty() || ana_eval.empty())
        throw usage_error("--train-data and --eval-data are required");
      std::vector<selection_strategy> strategies;
      for (const std::string& s : ana_strategies)
        strategies.push_back(strategy_from_name(s));
      ana_cfg.seed = seed;
      ana_cfg.sel.seed = seed;
      auto rows = degradation_curve(m, load_dataset(ana_train),
                                    load_dataset(ana_eval), strategies,
                                    ana_fractions, ana_cfg);
      std::string text = "strategy,fraction,mean_score,std_score\n";
      char buf[128];
      for (const auto& row : rows) {
        std::snprintf(buf, sizeof buf, "%s,%g,%.6f,%.6f\n",
                      strategy_name(row.strategy), row.fraction,
                      row.mean_score, row.std_score);
        text += buf;
      }
      if (ana_out.empty())
        std::cout << text;
      else
        std::ofstream(ana_out) << text;
      return 0;
    }
    throw usage_error("unknown report " + ana_report);
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const usage_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const parse_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
