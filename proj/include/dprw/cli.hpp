// Copyright 2026 The dprw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dprw/dpmech.hpp"
#include "dprw/error.hpp"
#include "dprw/pipeline.hpp"

namespace dprw::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

// Raw flag values; unset means "not given on the command line or in the
// config file".
struct CliValues {
  std::optional<std::string> config, train, val, test, name, out, out_dir, checkpoint, epsilon, epsilons, seeds,
      pretrain_corpus;
  std::optional<std::string> a_train, a_val, a_test, a_name, b_train, b_val, b_test, b_name;
  std::optional<std::uint64_t> seed, synthetic_seed;
  std::optional<std::size_t> jobs, epochs, max_len, embed_dim, hidden_dim, batch_size, clf_embed_dim, clf_epochs,
      clf_batch_size, dim, trials, synthetic_train, synthetic_val, synthetic_test;
  std::optional<double> lr, clip, clf_lr, leak_margin, sensitivity_factor;
  bool synthetic = false;
  bool quiet = false;
};

namespace detail {

inline void add_common(CLI::App* sub, CliValues& v) {
  sub->add_option("--config", v.config, "JSON file with the same keys as the flags; flags win");
  sub->add_option("--seed", v.seed, "single seed (fallback: DPRW_SEED)");
  sub->add_option("--seeds", v.seeds, "comma-separated seed list");
  sub->add_option("--jobs", v.jobs, "worker threads (default 1)");
  sub->add_option("--out-dir", v.out_dir, "directory for reports and rewritten data");
  sub->add_flag("--quiet", v.quiet, "no progress messages");
}

inline void add_autoencoder(CLI::App* sub, CliValues& v) {
  sub->add_option("--epochs", v.epochs, "pre-training epochs (200)");
  sub->add_option("--lr", v.lr, "pre-training learning rate (0.003)");
  sub->add_option("--clip", v.clip, "l1 clipping constant (5)");
  sub->add_option("--max-len", v.max_len, "maximum tokens per document (20)");
  sub->add_option("--embed-dim", v.embed_dim, "token embedding size (64)");
  sub->add_option("--hidden-dim", v.hidden_dim, "latent size (128)");
  sub->add_option("--batch-size", v.batch_size, "mini-batch size (32)");
}

inline void add_classifier(CLI::App* sub, CliValues& v, const std::string& prefix) {
  sub->add_option("--" + prefix + "embed-dim", v.clf_embed_dim, "classifier embedding size (64)");
  sub->add_option("--" + prefix + "lr", v.clf_lr, "classifier learning rate (0.01)");
  sub->add_option("--" + prefix + "epochs", v.clf_epochs, "classifier epochs (30)");
  sub->add_option("--" + prefix + "batch-size", v.clf_batch_size, "classifier mini-batch size (32)");
}

inline std::unique_ptr<CLI::App> build_app(CliValues& v) {
  auto app = std::make_unique<CLI::App>("Differentially private text rewriting experiments", "dprw");
  app->require_subcommand(1);
  app->failure_message(CLI::FailureMessage::help);

  CLI::App* pre = app->add_subcommand("pretrain", "pre-train the autoencoder and write a checkpoint");
  add_common(pre, v);
  pre->add_option("--train", v.train, "training split (TSV)");
  pre->add_option("--val", v.val, "validation split (TSV)");
  pre->add_option("--name", v.name, "dataset name (default: from the path)");
  pre->add_option("--out", v.out, "checkpoint path");
  add_autoencoder(pre, v);

  CLI::App* rw = app->add_subcommand("rewrite", "rewrite train and validation splits with a checkpoint");
  add_common(rw, v);
  rw->add_option("--checkpoint", v.checkpoint, "checkpoint from pretrain");
  rw->add_option("--train", v.train, "training split (TSV)");
  rw->add_option("--val", v.val, "validation split (TSV)");
  rw->add_option("--name", v.name, "dataset name (default: from the path)");
  rw->add_option("--epsilon", v.epsilon, "privacy budget, positive number or 'inf'");
  rw->add_option("--clip", v.clip, "l1 clipping constant (default: the checkpoint's)");
  rw->add_option("--pretrain-corpus", v.pretrain_corpus, "checkpoint's training split, for the leak audit");
  rw->add_option("--leak-margin", v.leak_margin, "leak audit margin (0.1)");

  CLI::App* ds = app->add_subcommand("downstream", "train and evaluate the intent classifier");
  add_common(ds, v);
  ds->add_option("--train", v.train, "training split, original or rewritten (TSV)");
  ds->add_option("--val", v.val, "validation split, original or rewritten (TSV)");
  ds->add_option("--test", v.test, "original test split (TSV)");
  ds->add_option("--name", v.name, "dataset name (default: from the path)");
  add_classifier(ds, v, "");

  CLI::App* cs = app->add_subcommand("case-study", "full pretrain x rewrite x epsilon matrix");
  add_common(cs, v);
  for (auto [tag, tr, va, te, nm] : {std::tuple{"a", &v.a_train, &v.a_val, &v.a_test, &v.a_name},
                                     std::tuple{"b", &v.b_train, &v.b_val, &v.b_test, &v.b_name}}) {
    const std::string t = tag;
    cs->add_option("--" + t + "-train", *tr, "dataset " + t + " training split");
    cs->add_option("--" + t + "-val", *va, "dataset " + t + " validation split");
    cs->add_option("--" + t + "-test", *te, "dataset " + t + " test split");
    cs->add_option("--" + t + "-name", *nm, "dataset " + t + " name");
  }
  cs->add_flag("--synthetic", v.synthetic, "use the built-in travel and assistant corpora");
  cs->add_option("--synthetic-seed", v.synthetic_seed, "generator seed for --synthetic (7)");
  cs->add_option("--synthetic-train", v.synthetic_train, "generated training documents (200)");
  cs->add_option("--synthetic-val", v.synthetic_val, "generated validation documents (40)");
  cs->add_option("--synthetic-test", v.synthetic_test, "generated test documents (160)");
  cs->add_option("--epsilons", v.epsilons, "comma-separated list (inf,1000,100,10,1)");
  cs->add_option("--leak-margin", v.leak_margin, "leak audit margin (0.1)");
  add_autoencoder(cs, v);
  add_classifier(cs, v, "clf-");

  CLI::App* dp = app->add_subcommand("validate-dp", "randomized check of the local DP bound");
  add_common(dp, v);
  dp->add_option("--clip", v.clip, "l1 clipping constant (5)");
  dp->add_option("--epsilon", v.epsilon, "privacy budget (finite)");
  dp->add_option("--dim", v.dim, "latent dimension (128)");
  dp->add_option("--trials", v.trials, "random triples (100000)");
  dp->add_option("--sensitivity-factor", v.sensitivity_factor)->group("");
  return app;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::uint64_t parse_seed(const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("invalid seed '" + s + "'");
  return v;
}

// Config-file entries turned into flags for keys absent from the command line.
inline std::vector<std::string> config_args(const std::string& path, CLI::App* sub) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  std::vector<std::string> args;
  for (const auto& [key, val] : j.items()) {
    const std::string flag = "--" + key;
    if (key == "config") throw ConfigError("config files cannot nest");
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (!opt) throw ConfigError("unknown config key '" + key + "' for " + sub->get_name());
    if (opt->count() > 0) continue;
    if (val.is_boolean()) {
      if (opt->get_expected_max() != 0) throw ConfigError("config key '" + key + "' is not a switch");
      if (val.get<bool>()) args.push_back(flag);
      continue;
    }
    std::string text;
    if (val.is_string()) {
      text = val.get<std::string>();
    } else if (val.is_number()) {
      text = val.dump();
    } else if (val.is_array()) {
      for (const auto& e : val) {
        if (!text.empty()) text.push_back(',');
        text += e.is_string() ? e.get<std::string>() : e.dump();
      }
    } else {
      throw ConfigError("config key '" + key + "' has an unsupported value");
    }
    args.push_back(flag);
    args.push_back(text);
  }
  return args;
}

inline std::string default_name(const std::string& path) {
  const std::filesystem::path p(path);
  const std::string stem = p.stem().string();
  if ((stem == "train" || stem == "validation" || stem == "test") && p.has_parent_path()) {
    const std::string parent = p.parent_path().filename().string();
    if (!parent.empty()) return parent;
  }
  return stem;
}

struct SeedChoice {
  std::vector<std::uint64_t> seeds;
  std::string source;
};

inline SeedChoice resolve_seeds(const CliValues& v, std::size_t default_count) {
  if (v.seed && v.seeds) throw ConfigError("give --seed or --seeds, not both");
  if (v.seeds) {
    SeedChoice c{{}, "flag"};
    for (const std::string& s : split_list(*v.seeds)) c.seeds.push_back(parse_seed(s));
    return c;
  }
  if (v.seed) return {{*v.seed}, "flag"};
  std::uint64_t base = 1;
  std::string source = "default";
  if (const char* env = std::getenv("DPRW_SEED"); env && *env) {
    base = parse_seed(env);
    source = "DPRW_SEED";
  }
  SeedChoice c{{}, source};
  for (std::size_t i = 0; i < default_count; ++i) c.seeds.push_back(base + i);
  return c;
}

inline Json dataset_json(const DatasetSpec& d) {
  Json j{{"name", d.name}};
  if (d.synthetic) {
    j["synthetic"] = domain_name(*d.synthetic);
  } else {
    j["train"] = d.paths.train;
    j["validation"] = d.paths.validation ? Json(*d.paths.validation) : Json();
    j["test"] = d.paths.test ? Json(*d.paths.test) : Json();
  }
  return j;
}

inline Json resolved_json(const ExperimentConfig& c, const SeedChoice& seeds, const std::string& subcommand) {
  Json j;
  j["subcommand"] = subcommand;
  j["seeds"] = c.seeds;
  j["seed_source"] = seeds.source;
  j["jobs"] = c.jobs;
  j["out_dir"] = c.output_dir;
  Json ds = Json::array();
  for (const DatasetSpec& d : c.datasets) ds.push_back(dataset_json(d));
  j["datasets"] = ds;
  switch (c.mode) {
    case Mode::kPretrain: {
      AutoencoderConfig ae = c.autoencoder;
      if (c.clip_c) ae.clip_c = *c.clip_c;
      j["checkpoint_out"] = *c.checkpoint_out;
      j["autoencoder"] = dprw::detail::autoencoder_config_json(ae);
      break;
    }
    case Mode::kRewrite:
      j["checkpoint_in"] = *c.checkpoint_in;
      j["epsilon"] = c.epsilon->to_string();
      j["clip_c"] = *c.clip_c;
      j["noise_scale"] = calibrate_scale(PrivacyParams{*c.epsilon, *c.clip_c}).b;
      j["validation_epsilon"] = c.epsilon->to_string();
      j["pretrain_corpus"] = c.pretrain_corpus ? Json(*c.pretrain_corpus) : Json();
      j["leak_margin"] = c.leak_margin;
      break;
    case Mode::kDownstream:
      j["test"] = c.test_path ? Json(*c.test_path) : Json();
      j["classifier"] = dprw::detail::classifier_config_json(c.classifier);
      break;
    case Mode::kCaseStudy: {
      AutoencoderConfig ae = c.autoencoder;
      ae.clip_c = c.clip_c.value_or(ae.clip_c);
      Json eps = Json::array();
      for (const Epsilon& e : c.epsilons) eps.push_back(e.to_string());
      j["epsilons"] = eps;
      j["autoencoder"] = dprw::detail::autoencoder_config_json(ae);
      j["classifier"] = dprw::detail::classifier_config_json(c.classifier);
      j["leak_margin"] = c.leak_margin;
      j["synthetic_seed"] = c.synthetic_seed;
      j["synthetic_sizes"] = Json{{"train", c.synthetic_sizes.train},
                                  {"validation", c.synthetic_sizes.validation},
                                  {"test", c.synthetic_sizes.test}};
      break;
    }
  }
  return j;
}

inline void write_json(const std::string& dir, const std::string& file, const Json& j) {
  dprw::detail::write_text(std::filesystem::path(dir) / file, j.dump(2) + "\n");
}

inline ExperimentConfig build_config(const std::string& sub, const CliValues& v, SeedChoice& seeds) {
  ExperimentConfig c;
  c.mode = sub == "pretrain" ? Mode::kPretrain
           : sub == "rewrite" ? Mode::kRewrite
           : sub == "downstream" ? Mode::kDownstream
                                 : Mode::kCaseStudy;
  seeds = resolve_seeds(v, c.mode == Mode::kPretrain ? 1 : 5);
  c.seeds = seeds.seeds;
  if (v.jobs) c.jobs = *v.jobs;
  if (v.epochs) c.autoencoder.epochs = *v.epochs;
  if (v.lr) c.autoencoder.learning_rate = *v.lr;
  if (v.max_len) c.autoencoder.max_len = *v.max_len;
  if (v.embed_dim) (c.mode == Mode::kDownstream ? c.classifier.embed_dim : c.autoencoder.embed_dim) = *v.embed_dim;
  if (v.hidden_dim) c.autoencoder.hidden_dim = *v.hidden_dim;
  if (v.batch_size) (c.mode == Mode::kDownstream ? c.classifier.batch_size : c.autoencoder.batch_size) = *v.batch_size;
  if (c.mode == Mode::kDownstream) {
    if (v.epochs) c.classifier.epochs = *v.epochs;
    if (v.lr) c.classifier.learning_rate = *v.lr;
  }
  if (v.clf_embed_dim) c.classifier.embed_dim = *v.clf_embed_dim;
  if (v.clf_lr) c.classifier.learning_rate = *v.clf_lr;
  if (v.clf_epochs) c.classifier.epochs = *v.clf_epochs;
  if (v.clf_batch_size) c.classifier.batch_size = *v.clf_batch_size;
  if (v.clip) c.clip_c = *v.clip;
  if (v.leak_margin) c.leak_margin = *v.leak_margin;
  if (v.epsilon) c.epsilon = Epsilon::parse(*v.epsilon);
  if (v.epsilons) {
    c.epsilons.clear();
    for (const std::string& e : split_list(*v.epsilons)) c.epsilons.push_back(Epsilon::parse(e));
  }
  c.checkpoint_in = v.checkpoint;
  c.checkpoint_out = v.out;
  c.pretrain_corpus = v.pretrain_corpus;
  c.test_path = v.test;

  if (c.mode == Mode::kCaseStudy) {
    if (v.synthetic) {
      if (v.a_train || v.b_train) throw ConfigError("--synthetic replaces --a-train/--b-train");
      if (v.synthetic_seed) c.synthetic_seed = *v.synthetic_seed;
      if (v.synthetic_train) c.synthetic_sizes.train = *v.synthetic_train;
      if (v.synthetic_val) c.synthetic_sizes.validation = *v.synthetic_val;
      if (v.synthetic_test) c.synthetic_sizes.test = *v.synthetic_test;
      if (c.synthetic_sizes.train == 0 || c.synthetic_sizes.test == 0)
        throw ConfigError("synthetic train and test sizes must be positive");
      for (SyntheticDomain d : {SyntheticDomain::kTravel, SyntheticDomain::kAssistant})
        c.datasets.push_back(DatasetSpec{domain_name(d), {}, d});
    } else {
      if (!v.a_train || !v.b_train) throw ConfigError("case-study needs --a-train and --b-train, or --synthetic");
      if (!v.a_test || !v.b_test) throw ConfigError("case-study needs --a-test and --b-test");
      c.datasets.push_back(DatasetSpec{v.a_name.value_or(default_name(*v.a_train)), {*v.a_train, v.a_val, v.a_test}, {}});
      c.datasets.push_back(DatasetSpec{v.b_name.value_or(default_name(*v.b_train)), {*v.b_train, v.b_val, v.b_test}, {}});
    }
  } else {
    if (!v.train) throw ConfigError(sub + " needs --train");
    c.datasets.push_back(DatasetSpec{v.name.value_or(default_name(*v.train)), {*v.train, v.val, {}}, {}});
  }

  if (v.out_dir) {
    c.output_dir = *v.out_dir;
  } else if (c.mode == Mode::kPretrain && v.out) {
    const auto parent = std::filesystem::path(*v.out).parent_path();
    c.output_dir = parent.empty() ? "." : parent.string();
  } else {
    c.output_dir = ".";
  }
  if (c.mode == Mode::kRewrite && c.checkpoint_in && !c.clip_c) c.clip_c = load_checkpoint(*c.checkpoint_in).config().clip_c;
  c.validate();
  return c;
}

inline int run_validate_dp(const CliValues& v, std::ostream& out) {
  if (!v.epsilon) throw ConfigError("validate-dp needs --epsilon");
  const SeedChoice seeds = resolve_seeds(v, 1);
  const PrivacyParams params{Epsilon::parse(*v.epsilon), v.clip.value_or(5.0)};
  const std::size_t dim = v.dim.value_or(128), trials = v.trials.value_or(100000);
  const double factor = v.sensitivity_factor.value_or(kL1SensitivityFactor);
  if (!(factor > 0)) throw ConfigError("sensitivity factor must be positive");
  if (params.epsilon.is_infinite()) throw ConfigError("nothing to verify for epsilon = inf");
  if (trials == 0) throw ConfigError("trials must be positive");
  if (dim == 0) throw ConfigError("dim must be positive");
  const std::string dir = v.out_dir.value_or(".");
  Json resolved{{"subcommand", "validate-dp"}, {"epsilon", params.epsilon.to_string()},
                {"clip_c", params.clip_c},     {"dim", dim},
                {"trials", trials},            {"seed", seeds.seeds.front()},
                {"seed_source", seeds.source}, {"sensitivity_factor", factor}};
  write_json(dir, "config_resolved.json", resolved);

  const DpSuiteReport r = run_dp_bound_suite(params, dim, trials, seeds.seeds.front(), factor);
  std::ostringstream s;
  s << "trials: " << r.trials << "  dim: " << dim << "  clip: " << params.clip_c
    << "  epsilon: " << params.epsilon.to_string() << "  scale b: " << r.scale << "\n"
    << "max |log ratio|: " << dprw::detail::fmt(r.max_abs_log_ratio, 12) << "\n"
    << "max |log ratio| (antipodal pairs): " << dprw::detail::fmt(r.max_antipodal_log_ratio, 12) << "\n"
    << "bound: " << params.epsilon.to_string() << " + " << kBoundTolerance << "\n"
    << "violations: " << r.violations << "\n"
    << "result: " << (r.passed() ? "PASS" : "FAIL") << "\n";
  Json rep{{"mode", "validate_dp"},
           {"config", resolved},
           {"trials", r.trials},
           {"violations", r.violations},
           {"max_abs_log_ratio", r.max_abs_log_ratio},
           {"max_antipodal_log_ratio", r.max_antipodal_log_ratio},
           {"bound", r.epsilon},
           {"scale", r.scale},
           {"passed", r.passed()}};
  write_json(dir, "report.json", rep);
  dprw::detail::write_text(std::filesystem::path(dir) / "summary.txt", s.str());
  out << s.str();
  return r.passed() ? kExitOk : kExitRuntime;
}

}  // namespace detail

/// Parses argv, runs the selected subcommand and maps failures to exit
/// codes: 0 success, 1 configuration or usage error, 2 runtime error.
inline int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                              std::ostream& err = std::cerr) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  try {
    CliValues first;
    auto app = detail::build_app(first);
    try {
      std::vector<std::string> rev(args.rbegin(), args.rend());
      app->parse(rev);
    } catch (const CLI::ParseError& e) {
      return app->exit(e, out, err) == 0 ? kExitOk : kExitConfig;
    }
    CLI::App* sub = app->get_subcommands().front();
    CliValues v = first;
    if (first.config) {
      for (const std::string& a : detail::config_args(*first.config, sub)) args.push_back(a);
      v = CliValues{};
      auto second = detail::build_app(v);
      try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        second->parse(rev);
      } catch (const CLI::ParseError& e) {
        err << "dprw: config file '" << *first.config << "': ";
        return second->exit(e, out, err) == 0 ? kExitOk : kExitConfig;
      }
    }
    const std::string name = sub->get_name();
    if (name == "validate-dp") return detail::run_validate_dp(v, out);

    detail::SeedChoice seeds;
    const ExperimentConfig config = detail::build_config(name, v, seeds);
    detail::write_json(config.output_dir, "config_resolved.json", detail::resolved_json(config, seeds, name));
    RunOptions options;
    options.jobs = config.jobs;
    options.output_dir = config.output_dir;
    std::mutex log_mu;
    if (!v.quiet)
      options.log = [&err, &log_mu](const std::string& m) {
        std::lock_guard<std::mutex> lock(log_mu);
        err << m << "\n";
      };
    const ExperimentReport report = run_experiment(config, options);
    out << report.summary;
    for (const std::string& w : report.warnings) err << "warning: " << w << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "dprw: error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "dprw: runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace dprw::cli
