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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "dprw/autoencoder.hpp"
#include "dprw/checkpoint.hpp"
#include "dprw/corpus.hpp"
#include "dprw/downstream.hpp"
#include "dprw/dpmech.hpp"
#include "dprw/error.hpp"
#include "dprw/metrics.hpp"
#include "dprw/synthetic.hpp"

namespace dprw {

using Json = nlohmann::ordered_json;

struct SeedStats {
  double mean = 0.0;
  double std = 0.0;
};

// Mean and sample (n - 1) standard deviation; std is 0 for one value.
inline SeedStats aggregate_seed_stats(const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("aggregate_seed_stats: no values");
  SeedStats s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

struct MetricSeries {
  std::string name;
  std::string split;
  std::vector<double> per_seed;

  SeedStats stats() const { return aggregate_seed_stats(per_seed); }

  Json to_json() const {
    const SeedStats s = stats();
    return Json{{"name", name}, {"split", split}, {"per_seed", per_seed}, {"mean", s.mean}, {"std", s.std}};
  }
};

/// Per-run metrics over seeds plus an echo of the configuration and the
/// provenance of every input.
struct ExperimentReport {
  std::string mode;
  Json config = Json::object();
  Json provenance = Json::object();
  std::vector<std::uint64_t> seeds;
  std::vector<MetricSeries> metrics;
  Json details = Json::object();
  std::vector<std::string> warnings;
  std::string summary;

  const MetricSeries& metric(const std::string& name, const std::string& split) const {
    for (const MetricSeries& m : metrics)
      if (m.name == name && m.split == split) return m;
    throw ConfigError("report has no metric '" + name + "' on split '" + split + "'");
  }

  Json to_json() const {
    Json j;
    j["mode"] = mode;
    j["config"] = config;
    j["provenance"] = provenance;
    j["seeds"] = seeds;
    Json ms = Json::array();
    for (const MetricSeries& m : metrics) ms.push_back(m.to_json());
    j["metrics"] = ms;
    j["details"] = details;
    j["warnings"] = warnings;
    return j;
  }
};

struct RunOptions {
  std::size_t jobs = 1;
  // Written to when non-empty: report.json, summary.txt, rewritten/...
  std::string output_dir;
  std::function<void(const std::string&)> log;
};

struct NamedDataset {
  std::string name;
  LabeledDataset data;
};

namespace detail {

inline void log(const RunOptions& o, const std::string& msg) {
  if (o.log) o.log(msg);
}

// Runs fn(0..n-1) on up to `jobs` threads. Results must be written by index.
inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < std::min(jobs, n); ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : workers) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline std::string fmt(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

// vocab_size is omitted while it is still unknown (before training data is seen).
inline Json autoencoder_config_json(const AutoencoderConfig& c) {
  Json j = detail::config_to_json(c);
  if (c.vocab_size == 0) j.erase("vocab_size");
  return j;
}

inline Json classifier_config_json(const ClassifierConfig& c) {
  return Json{{"embed_dim", c.embed_dim},
              {"learning_rate", c.learning_rate},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"optimizer", "adam(beta1=0.9,beta2=0.999,eps=1e-8)"}};
}

inline Json split_sizes(const LabeledDataset& d) {
  return Json{{"train", d.train.size()}, {"validation", d.validation.size()}, {"test", d.test.size()},
              {"labels", d.label_set.size()}};
}

inline std::vector<std::string> texts(const Split& s) {
  std::vector<std::string> out;
  for (const Document& d : s) out.push_back(d.text);
  return out;
}

}  // namespace detail

inline void write_report(const ExperimentReport& report, const std::string& dir) {
  if (dir.empty()) return;
  const std::filesystem::path root(dir);
  detail::write_text(root / "report.json", report.to_json().dump(2) + "\n");
  detail::write_text(root / "summary.txt", report.summary);
}

// "eps<val>" directory component; "epsinf" for the non-private setting.
inline std::string epsilon_tag(const Epsilon& e) { return "eps" + e.to_string(); }

inline std::string setting_dir(const std::string& pretrain, const std::string& rewrite, const Epsilon& e) {
  return pretrain + "__" + rewrite + "__" + epsilon_tag(e);
}

inline double reconstruction_bleu(const AutoencoderCheckpoint& ckpt, const Split& docs) {
  std::vector<std::string> hyp;
  for (const Document& d : docs) hyp.push_back(reconstruct(d, ckpt));
  return mean_bleu(hyp, detail::texts(docs));
}

// ---------------------------------------------------------------- pretrain

struct PretrainOutcome {
  AutoencoderCheckpoint checkpoint;  // from the first seed
  ExperimentReport report;
};

/// Mode (1). Trains one autoencoder per seed; the first seed's checkpoint
/// is the canonical output.
inline PretrainOutcome run_pretrain(const NamedDataset& dataset, const AutoencoderConfig& config,
                                    const std::vector<std::uint64_t>& seeds, const RunOptions& options = {}) {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (dataset.data.train.empty()) throw ConfigError("pretrain: training split is empty");
  const std::uint64_t draws_before = laplace_draw_counter().load();
  std::vector<std::optional<AutoencoderCheckpoint>> ckpts(seeds.size());
  detail::parallel_for(seeds.size(), options.jobs, [&](std::size_t i) {
    PretrainOptions po;
    po.dataset_name = dataset.name;
    if (options.log) {
      po.on_epoch = [&, seed = seeds[i]](std::size_t epoch, double loss) {
        if (epoch % 25 == 0 || epoch == config.epochs)
          detail::log(options, "[pretrain " + dataset.name + " seed " + std::to_string(seed) + "] epoch " +
                                   std::to_string(epoch) + " loss " + detail::fmt(loss, 5));
      };
    }
    ckpts[i] = pretrain(dataset.data, config, seeds[i], po);
  });

  ExperimentReport rep;
  rep.mode = "pretrain";
  rep.seeds = seeds;
  rep.config = Json{{"autoencoder", detail::autoencoder_config_json(ckpts[0]->config())}};
  rep.provenance = Json{{"dataset", dataset.name}, {"splits", detail::split_sizes(dataset.data)}};
  MetricSeries loss{"final_loss", "train", {}};
  MetricSeries bleu_train{"reconstruction_bleu", "train", {}};
  MetricSeries bleu_val{"reconstruction_bleu", "validation", {}};
  for (const auto& c : ckpts) {
    loss.per_seed.push_back(c->metadata.final_loss.value_or(0.0));
    bleu_train.per_seed.push_back(reconstruction_bleu(*c, dataset.data.train));
    if (!dataset.data.validation.empty()) bleu_val.per_seed.push_back(reconstruction_bleu(*c, dataset.data.validation));
  }
  if (config.epochs == 0) rep.warnings.push_back("epochs = 0: parameters are untrained");
  rep.metrics = {loss, bleu_train};
  if (!bleu_val.per_seed.empty()) rep.metrics.push_back(bleu_val);
  rep.details["laplace_draws"] = laplace_draw_counter().load() - draws_before;
  rep.details["loss_history"] = ckpts[0]->metadata.loss_history;

  std::ostringstream s;
  s << "mode: pretrain\ndataset: " << dataset.name << "\nseeds: " << seeds.size() << "\n";
  for (const MetricSeries& m : rep.metrics) {
    const SeedStats st = m.stats();
    s << detail::pad(m.name + " (" + m.split + ")", 34) << detail::fmt(st.mean, 4) << " (" << detail::fmt(st.std, 4)
      << ")\n";
  }
  rep.summary = s.str();
  write_report(rep, options.output_dir);
  return PretrainOutcome{std::move(*ckpts[0]), std::move(rep)};
}

// ----------------------------------------------------------------- rewrite

struct RewrittenSplits {
  Split train;
  Split validation;
};

/// Rewrites train and validation with the checkpoint under `privacy`. The
/// noise for document i of split k comes from stream (seed, k, i), so it
/// does not depend on processing order. Labels are carried over. The test
/// split is never touched.
inline RewrittenSplits rewrite_splits(const AutoencoderCheckpoint& ckpt, const LabeledDataset& data,
                                      const PrivacyParams& privacy, std::uint64_t seed) {
  privacy.validate();
  RewrittenSplits out;
  auto one = [&](const Split& src, Split& dst, std::uint64_t split_tag) {
    dst.reserve(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
      Rng rng = Rng::stream(seed, Purpose::kRewriteNoise, {split_tag, i});
      std::string text;
      for (const std::string& tok : rewrite_tokens(src[i], ckpt, privacy, rng)) {
        if (!text.empty()) text.push_back(' ');
        text += tok;
      }
      // An immediate EOS decodes to nothing; keep the document non-empty.
      if (text.empty()) text = std::string(Vocabulary::kUnkToken);
      dst.push_back(Document{std::move(text), src[i].label});
    }
  };
  one(data.train, out.train, 0);
  one(data.validation, out.validation, 1);
  return out;
}

struct RewriteOutcome {
  std::vector<RewrittenSplits> per_seed;
  ExperimentReport report;
};

/// Mode (2). With `pretrain_corpus` set, also runs the memorization audit
/// of each rewrite against it.
inline RewriteOutcome run_rewrite(const AutoencoderCheckpoint& ckpt, const NamedDataset& dataset,
                                  const PrivacyParams& privacy, const std::vector<std::uint64_t>& seeds,
                                  const RunOptions& options = {}, const Split* pretrain_corpus = nullptr,
                                  double leak_margin = kDefaultLeakMargin) {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  privacy.validate();
  RewriteOutcome out;
  out.per_seed.resize(seeds.size());
  std::vector<std::optional<LeakReport>> leaks(seeds.size());
  const std::string pre_name = ckpt.metadata.dataset_name.empty() ? "checkpoint" : ckpt.metadata.dataset_name;
  const std::string dir = setting_dir(pre_name, dataset.name, privacy.epsilon);
  detail::parallel_for(seeds.size(), options.jobs, [&](std::size_t i) {
    out.per_seed[i] = rewrite_splits(ckpt, dataset.data, privacy, seeds[i]);
    if (pretrain_corpus) {
      Split rw = out.per_seed[i].train, src = dataset.data.train;
      rw.insert(rw.end(), out.per_seed[i].validation.begin(), out.per_seed[i].validation.end());
      src.insert(src.end(), dataset.data.validation.begin(), dataset.data.validation.end());
      leaks[i] = leak_audit(rw, src, *pretrain_corpus, leak_margin);
    }
  });

  ExperimentReport& rep = out.report;
  rep.mode = "rewrite";
  rep.seeds = seeds;
  rep.config = Json{{"epsilon", privacy.epsilon.to_string()},
                    {"clip_c", privacy.clip_c},
                    {"noise_scale", calibrate_scale(privacy).b},
                    {"validation_epsilon", privacy.epsilon.to_string()}};
  rep.provenance = Json{{"checkpoint_dataset", pre_name},
                        {"checkpoint_seed", ckpt.metadata.seed},
                        {"checkpoint_epochs", ckpt.metadata.epochs_completed},
                        {"dataset", dataset.name},
                        {"splits", detail::split_sizes(dataset.data)},
                        {"rewritten_dir", "rewritten/" + dir}};
  MetricSeries bt{"bleu_vs_source", "train", {}}, bv{"bleu_vs_source", "validation", {}};
  MetricSeries lk{"leak_score", "train+validation", {}};
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    bt.per_seed.push_back(mean_bleu(detail::texts(out.per_seed[i].train), detail::texts(dataset.data.train)));
    if (!dataset.data.validation.empty())
      bv.per_seed.push_back(
          mean_bleu(detail::texts(out.per_seed[i].validation), detail::texts(dataset.data.validation)));
    if (leaks[i]) lk.per_seed.push_back(leaks[i]->leak_score);
  }
  rep.metrics = {bt};
  if (!bv.per_seed.empty()) rep.metrics.push_back(bv);
  if (!lk.per_seed.empty()) rep.metrics.push_back(lk);

  std::ostringstream s;
  s << "mode: rewrite\ncheckpoint: " << pre_name << "\ndataset: " << dataset.name
    << "\nepsilon: " << privacy.epsilon.to_string() << "\nclip: " << privacy.clip_c << "\n";
  for (const MetricSeries& m : rep.metrics) {
    const SeedStats st = m.stats();
    s << detail::pad(m.name + " (" + m.split + ")", 34) << detail::fmt(st.mean, 4) << " (" << detail::fmt(st.std, 4)
      << ")\n";
  }
  rep.summary = s.str();

  if (!options.output_dir.empty()) {
    const std::filesystem::path base = std::filesystem::path(options.output_dir) / "rewritten" / dir;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const auto sd = base / ("seed_" + std::to_string(seeds[i]));
      std::filesystem::create_directories(sd);
      write_rewritten_dataset(out.per_seed[i].train, (sd / "train.tsv").string());
      write_rewritten_dataset(out.per_seed[i].validation, (sd / "validation.tsv").string());
    }
    write_report(rep, options.output_dir);
  }
  return out;
}

// -------------------------------------------------------------- downstream

struct DownstreamSeedResult {
  double test_f1 = 0.0;
  double validation_f1 = 0.0;
  std::size_t best_epoch = 0;
  std::vector<std::string> warnings;
};

// One classifier run: train on train/validation, score on the original test.
inline DownstreamSeedResult downstream_once(const Split& train, const Split& validation, const Split& test,
                                            const std::set<std::string>& label_set, const ClassifierConfig& config,
                                            std::uint64_t seed) {
  if (test.empty()) throw ConfigError("downstream: test split is empty");
  auto trained = train_classifier(train, validation, config, seed);
  DownstreamSeedResult r;
  r.warnings = trained.warnings;
  r.test_f1 = evaluate_classifier(trained.model, test, label_set, &r.warnings);
  r.validation_f1 = trained.best_validation_f1;
  r.best_epoch = trained.best_epoch;
  return r;
}

struct Baselines {
  MetricSeries random;
  double majority = 0.0;
};

inline Baselines compute_baselines(const LabeledDataset& original, const std::vector<std::uint64_t>& seeds) {
  Baselines b{{"random_baseline_f1", "test", {}}, 0.0};
  for (std::uint64_t s : seeds) {
    Rng rng = Rng::stream(s, Purpose::kBaseline);
    b.random.per_seed.push_back(random_baseline(original.test, original.label_set, rng));
  }
  b.majority = majority_baseline(original.train, original.test, original.label_set);
  return b;
}

/// Mode (3). `train_data` supplies train/validation (original or
/// rewritten); `original` supplies the test split and label set.
inline ExperimentReport run_downstream(const NamedDataset& train_data, const NamedDataset& original,
                                       const ClassifierConfig& config, const std::vector<std::uint64_t>& seeds,
                                       const RunOptions& options = {}) {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (train_data.data.train.empty()) throw ConfigError("downstream: training split is empty");
  std::set<std::string> label_set = original.data.label_set;
  label_set.insert(train_data.data.label_set.begin(), train_data.data.label_set.end());
  std::vector<DownstreamSeedResult> runs(seeds.size());
  detail::parallel_for(seeds.size(), options.jobs, [&](std::size_t i) {
    runs[i] = downstream_once(train_data.data.train, train_data.data.validation, original.data.test, label_set, config,
                              seeds[i]);
  });

  ExperimentReport rep;
  rep.mode = "downstream";
  rep.seeds = seeds;
  rep.config = Json{{"classifier", detail::classifier_config_json(config)}};
  rep.provenance =
      Json{{"train_dataset", train_data.name}, {"test_dataset", original.name},
           {"train_splits", detail::split_sizes(train_data.data)}, {"test_size", original.data.test.size()}};
  MetricSeries test{"macro_f1", "test", {}}, val{"macro_f1", "validation", {}};
  std::set<std::string> warnings;
  Json epochs = Json::array();
  for (const auto& r : runs) {
    test.per_seed.push_back(r.test_f1);
    val.per_seed.push_back(r.validation_f1);
    epochs.push_back(r.best_epoch);
    warnings.insert(r.warnings.begin(), r.warnings.end());
  }
  const LabeledDataset baseline_source{train_data.data.train, {}, original.data.test, label_set};
  const Baselines base = compute_baselines(baseline_source, seeds);
  rep.metrics = {test};
  if (!train_data.data.validation.empty()) rep.metrics.push_back(val);
  rep.metrics.push_back(base.random);
  rep.metrics.push_back(MetricSeries{"majority_baseline_f1", "test", {base.majority}});
  rep.details["best_epoch_per_seed"] = epochs;
  rep.warnings.assign(warnings.begin(), warnings.end());

  std::ostringstream s;
  const SeedStats ts = test.stats();
  s << "mode: downstream\ntrain: " << train_data.name << "\ntest: " << original.name << " (original)\n"
    << "Test F1 " << detail::fmt(ts.mean, 2) << " (" << detail::fmt(ts.std, 2) << ") over " << seeds.size()
    << " seeds\n"
    << "Rand. " << detail::fmt(base.random.stats().mean, 2) << "\nMaj. " << detail::fmt(base.majority, 2) << "\n";
  rep.summary = s.str();
  write_report(rep, options.output_dir);
  return rep;
}

// -------------------------------------------------------------- case study

struct CaseStudyRow {
  std::string pretrain;
  std::string rewrite;
  Epsilon epsilon = Epsilon::infinite();
  MetricSeries test_f1;
  MetricSeries leak_score;
  MetricSeries bleu_vs_source;
};

struct CaseStudyOutcome {
  std::vector<CaseStudyRow> rows;          // pretrain x rewrite x epsilon
  std::vector<MetricSeries> original_f1;   // one per dataset, in input order
  std::vector<Baselines> baselines;        // one per dataset
  std::vector<double> reconstruction_bleu; // canonical checkpoint, train split
  ExperimentReport report;

  const CaseStudyRow& row(const std::string& pre, const std::string& rw, const Epsilon& e) const {
    for (const CaseStudyRow& r : rows)
      if (r.pretrain == pre && r.rewrite == rw && r.epsilon == e) return r;
    throw ConfigError("no case-study row " + setting_dir(pre, rw, e));
  }
};

inline const std::vector<Epsilon>& default_epsilons() {
  static const std::vector<Epsilon> e = {Epsilon::infinite(), Epsilon::finite(1000), Epsilon::finite(100),
                                         Epsilon::finite(10), Epsilon::finite(1)};
  return e;
}

struct CaseStudyConfig {
  AutoencoderConfig autoencoder;
  ClassifierConfig classifier;
  std::vector<Epsilon> epsilons = default_epsilons();
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  double clip_c = 5.0;
  double leak_margin = kDefaultLeakMargin;
};

/// Pre-trains on each dataset (first seed), rewrites every dataset with
/// every checkpoint at every epsilon once per seed, and runs downstream
/// and the memorization audit on each rewrite, plus downstream on the
/// originals and the random/majority baselines.
inline CaseStudyOutcome run_case_study(const std::vector<NamedDataset>& datasets, const CaseStudyConfig& config,
                                       const RunOptions& options = {}) {
  if (datasets.size() != 2) throw ConfigError("case study needs exactly two datasets");
  if (datasets[0].name == datasets[1].name) throw ConfigError("case-study datasets need distinct names");
  if (config.seeds.empty()) throw ConfigError("at least one seed is required");
  if (config.epsilons.empty()) throw ConfigError("at least one epsilon is required");
  const std::size_t D = datasets.size(), E = config.epsilons.size(), S = config.seeds.size();
  AutoencoderConfig ae = config.autoencoder;
  ae.clip_c = config.clip_c;

  std::vector<std::optional<AutoencoderCheckpoint>> ckpts(D);
  detail::parallel_for(D, options.jobs, [&](std::size_t d) {
    PretrainOptions po;
    po.dataset_name = datasets[d].name;
    if (options.log)
      po.on_epoch = [&, d](std::size_t epoch, double loss) {
        if (epoch % 25 == 0 || epoch == ae.epochs)
          detail::log(options, "[case-study pretrain " + datasets[d].name + "] epoch " + std::to_string(epoch) +
                                   " loss " + detail::fmt(loss, 5));
      };
    ckpts[d] = pretrain(datasets[d].data, ae, config.seeds.front(), po);
  });

  CaseStudyOutcome out;
  for (std::size_t d = 0; d < D; ++d) out.reconstruction_bleu.push_back(reconstruction_bleu(*ckpts[d], datasets[d].data.train));

  // Cell (p, r, e, s) at index ((p * D + r) * E + e) * S + s.
  struct Cell {
    RewrittenSplits rewritten;
    DownstreamSeedResult downstream;
    double leak = 0.0;
    double bleu = 0.0;
  };
  std::vector<Cell> cells(D * D * E * S);
  detail::parallel_for(cells.size(), options.jobs, [&](std::size_t idx) {
    const std::size_t s = idx % S, e = (idx / S) % E, r = (idx / (S * E)) % D, p = idx / (S * E * D);
    const LabeledDataset& target = datasets[r].data;
    const PrivacyParams privacy{config.epsilons[e], config.clip_c};
    Cell& c = cells[idx];
    c.rewritten = rewrite_splits(*ckpts[p], target, privacy, config.seeds[s]);
    c.downstream = downstream_once(c.rewritten.train, c.rewritten.validation, target.test, target.label_set,
                                   config.classifier, config.seeds[s]);
    Split rw = c.rewritten.train, src = target.train;
    rw.insert(rw.end(), c.rewritten.validation.begin(), c.rewritten.validation.end());
    src.insert(src.end(), target.validation.begin(), target.validation.end());
    c.leak = leak_audit(rw, src, datasets[p].data.train, config.leak_margin).leak_score;
    c.bleu = mean_bleu(detail::texts(rw), detail::texts(src));
    if (s == 0)
      detail::log(options, "[case-study] " + setting_dir(datasets[p].name, datasets[r].name, config.epsilons[e]) +
                               " seed " + std::to_string(config.seeds[s]) + " f1 " +
                               detail::fmt(c.downstream.test_f1, 3) + " leak " + detail::fmt(c.leak, 3));
  });

  std::vector<DownstreamSeedResult> originals(D * S);
  detail::parallel_for(originals.size(), options.jobs, [&](std::size_t idx) {
    const auto& ds = datasets[idx / S].data;
    originals[idx] = downstream_once(ds.train, ds.validation, ds.test, ds.label_set, config.classifier,
                                     config.seeds[idx % S]);
  });

  std::set<std::string> warnings;
  for (std::size_t p = 0; p < D; ++p)
    for (std::size_t r = 0; r < D; ++r)
      for (std::size_t e = 0; e < E; ++e) {
        CaseStudyRow row{datasets[p].name, datasets[r].name, config.epsilons[e],
                         {"macro_f1", "test", {}}, {"leak_score", "train+validation", {}},
                         {"bleu_vs_source", "train+validation", {}}};
        for (std::size_t s = 0; s < S; ++s) {
          const Cell& c = cells[((p * D + r) * E + e) * S + s];
          row.test_f1.per_seed.push_back(c.downstream.test_f1);
          row.leak_score.per_seed.push_back(c.leak);
          row.bleu_vs_source.per_seed.push_back(c.bleu);
          warnings.insert(c.downstream.warnings.begin(), c.downstream.warnings.end());
        }
        out.rows.push_back(std::move(row));
      }
  for (std::size_t d = 0; d < D; ++d) {
    MetricSeries m{"macro_f1", "test", {}};
    for (std::size_t s = 0; s < S; ++s) m.per_seed.push_back(originals[d * S + s].test_f1);
    out.original_f1.push_back(m);
    out.baselines.push_back(compute_baselines(datasets[d].data, config.seeds));
  }

  ExperimentReport& rep = out.report;
  rep.mode = "case_study";
  rep.seeds = config.seeds;
  Json eps = Json::array();
  for (const Epsilon& e : config.epsilons) eps.push_back(e.to_string());
  rep.config = Json{{"autoencoder", detail::autoencoder_config_json(ae)},
                    {"classifier", detail::classifier_config_json(config.classifier)},
                    {"epsilons", eps},
                    {"clip_c", config.clip_c},
                    {"leak_margin", config.leak_margin},
                    {"pretrain_seed", config.seeds.front()},
                    {"validation_epsilon", "same as train"}};
  Json prov = Json::array();
  for (std::size_t d = 0; d < D; ++d)
    prov.push_back(Json{{"name", datasets[d].name},
                        {"splits", detail::split_sizes(datasets[d].data)},
                        {"vocab_size", ckpts[d]->vocabulary.size()},
                        {"checkpoint_final_loss", ckpts[d]->metadata.final_loss.value_or(0.0)},
                        {"checkpoint_reconstruction_bleu", out.reconstruction_bleu[d]}});
  rep.provenance = Json{{"datasets", prov}};
  Json table = Json::array();
  for (const CaseStudyRow& r : out.rows)
    table.push_back(Json{{"pretrain_dataset", r.pretrain},
                         {"rewrite_dataset", r.rewrite},
                         {"epsilon", r.epsilon.to_string()},
                         {"test_f1", r.test_f1.to_json()},
                         {"leak_score", r.leak_score.to_json()},
                         {"bleu_vs_source", r.bleu_vs_source.to_json()},
                         {"rewritten_dir", "rewritten/" + setting_dir(r.pretrain, r.rewrite, r.epsilon)}});
  rep.details["table"] = table;
  Json orig = Json::array();
  for (std::size_t d = 0; d < D; ++d)
    orig.push_back(Json{{"dataset", datasets[d].name},
                        {"test_f1", out.original_f1[d].to_json()},
                        {"random_baseline_f1", out.baselines[d].random.to_json()},
                        {"majority_baseline_f1", out.baselines[d].majority}});
  rep.details["originals"] = orig;
  rep.details["bertscore"] = nullptr;
  rep.warnings.assign(warnings.begin(), warnings.end());

  std::ostringstream s;
  s << detail::pad("Pretr. Dat.", 14) << detail::pad("Rewr. Dat.", 14) << detail::pad("eps", 8)
    << detail::pad("| Test F1", 16) << detail::pad("Leak", 14) << "BLEU vs src\n";
  s << std::string(78, '-') << "\n";
  auto ms = [](const MetricSeries& m) {
    const SeedStats st = m.stats();
    return detail::fmt(st.mean, 2) + " (" + detail::fmt(st.std, 2) + ")";
  };
  for (const CaseStudyRow& r : out.rows)
    s << detail::pad(r.pretrain, 14) << detail::pad(r.rewrite, 14) << detail::pad(r.epsilon.to_string(), 8) << "| "
      << detail::pad(ms(r.test_f1), 14) << detail::pad(ms(r.leak_score), 14) << ms(r.bleu_vs_source) << "\n";
  s << std::string(78, '-') << "\n";
  for (std::size_t d = 0; d < D; ++d)
    s << detail::pad(datasets[d].name + " Orig.", 36) << "| " << ms(out.original_f1[d]) << "\n";
  for (std::size_t d = 0; d < D; ++d)
    s << detail::pad(datasets[d].name + " Rand.", 36) << "| " << detail::fmt(out.baselines[d].random.stats().mean, 2)
      << "\n";
  for (std::size_t d = 0; d < D; ++d)
    s << detail::pad(datasets[d].name + " Maj.", 36) << "| " << detail::fmt(out.baselines[d].majority, 2) << "\n";
  s << "\nTest F1 and leak score: mean (standard deviation) over " << S << " seeds.\n";
  rep.summary = s.str();

  if (!options.output_dir.empty()) {
    const std::filesystem::path base = std::filesystem::path(options.output_dir) / "rewritten";
    for (std::size_t idx = 0; idx < cells.size(); ++idx) {
      const std::size_t s_i = idx % S, e = (idx / S) % E, r = (idx / (S * E)) % D, p = idx / (S * E * D);
      const auto sd = base / setting_dir(datasets[p].name, datasets[r].name, config.epsilons[e]) /
                      ("seed_" + std::to_string(config.seeds[s_i]));
      std::filesystem::create_directories(sd);
      write_rewritten_dataset(cells[idx].rewritten.train, (sd / "train.tsv").string());
      write_rewritten_dataset(cells[idx].rewritten.validation, (sd / "validation.tsv").string());
    }
    for (std::size_t d = 0; d < D; ++d)
      save_checkpoint(*ckpts[d], (std::filesystem::path(options.output_dir) / (datasets[d].name + ".ckpt")).string());
    write_report(rep, options.output_dir);
  }
  return out;
}

// ------------------------------------------------------- experiment config

enum class Mode { kPretrain, kRewrite, kDownstream, kCaseStudy };

inline std::string mode_name(Mode m) {
  switch (m) {
    case Mode::kPretrain: return "pretrain";
    case Mode::kRewrite: return "rewrite";
    case Mode::kDownstream: return "downstream";
    case Mode::kCaseStudy: return "case_study";
  }
  return "?";
}

struct DatasetSpec {
  std::string name;
  DatasetPaths paths;
  // Built-in generated corpus instead of files.
  std::optional<SyntheticDomain> synthetic;
};

struct ExperimentConfig {
  Mode mode = Mode::kPretrain;
  std::vector<DatasetSpec> datasets;         // one, or two for the case study
  std::optional<std::string> test_path;      // downstream: original test split
  std::optional<std::string> pretrain_corpus; // rewrite: enables the leak audit
  std::optional<std::string> checkpoint_in;
  std::optional<std::string> checkpoint_out;
  std::optional<Epsilon> epsilon;
  std::optional<double> clip_c;              // rewrite: defaults to the checkpoint's
  std::vector<Epsilon> epsilons = default_epsilons();
  AutoencoderConfig autoencoder;
  ClassifierConfig classifier;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::uint64_t synthetic_seed = 7;
  SyntheticSizes synthetic_sizes;
  double leak_margin = kDefaultLeakMargin;
  std::string output_dir;
  std::size_t jobs = 1;

  void validate() const {
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (jobs == 0) throw ConfigError("--jobs must be at least 1");
    if (!(leak_margin >= 0 && leak_margin <= 1)) throw ConfigError("leak margin must lie in [0, 1]");
    if (clip_c && !(*clip_c > 0 && std::isfinite(*clip_c))) throw ConfigError("clip constant must be positive");
    AutoencoderConfig ae = autoencoder;
    ae.vocab_size = Vocabulary::kNumSpecials + 1;  // fixed later by the training data
    ae.validate();
    classifier.validate();
    const std::size_t want = mode == Mode::kCaseStudy ? 2 : 1;
    if (datasets.size() != want)
      throw ConfigError(mode_name(mode) + " needs " + std::to_string(want) + " dataset(s)");
    for (const DatasetSpec& d : datasets) {
      if (!d.synthetic && d.paths.train.empty()) throw ConfigError("a training split path is required");
      if (d.name.empty()) throw ConfigError("dataset name is empty");
    }
    switch (mode) {
      case Mode::kPretrain:
        if (!checkpoint_out) throw ConfigError("pretrain needs an output checkpoint path");
        break;
      case Mode::kRewrite:
        if (!checkpoint_in) throw ConfigError("rewrite needs a checkpoint");
        if (!epsilon) throw ConfigError("rewrite needs an epsilon");
        break;
      case Mode::kDownstream:
        if (!test_path && !datasets[0].paths.test && !datasets[0].synthetic)
          throw ConfigError("downstream needs the original test split");
        break;
      case Mode::kCaseStudy:
        if (epsilons.empty()) throw ConfigError("at least one epsilon is required");
        if (datasets[0].name == datasets[1].name) throw ConfigError("case-study datasets need distinct names");
        break;
    }
  }
};

inline NamedDataset load_named(const DatasetSpec& spec, const ExperimentConfig& config) {
  if (spec.synthetic) return {spec.name, make_synthetic_corpus(*spec.synthetic, config.synthetic_sizes, config.synthetic_seed)};
  return {spec.name, load_dataset(spec.paths)};
}

/// Loads inputs, runs the configured mode and writes its outputs.
inline ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  switch (config.mode) {
    case Mode::kPretrain: {
      const NamedDataset ds = load_named(config.datasets[0], config);
      AutoencoderConfig ae = config.autoencoder;
      if (config.clip_c) ae.clip_c = *config.clip_c;
      PretrainOutcome out = run_pretrain(ds, ae, config.seeds, options);
      save_checkpoint(out.checkpoint, *config.checkpoint_out);
      return std::move(out.report);
    }
    case Mode::kRewrite: {
      const AutoencoderCheckpoint ckpt = load_checkpoint(*config.checkpoint_in);
      const NamedDataset ds = load_named(config.datasets[0], config);
      const PrivacyParams privacy{*config.epsilon, config.clip_c.value_or(ckpt.config().clip_c)};
      std::optional<Split> pre;
      if (config.pretrain_corpus) pre = load_split(*config.pretrain_corpus);
      RewriteOutcome out =
          run_rewrite(ckpt, ds, privacy, config.seeds, options, pre ? &*pre : nullptr, config.leak_margin);
      out.report.provenance["checkpoint_path"] = *config.checkpoint_in;
      write_report(out.report, options.output_dir);
      return std::move(out.report);
    }
    case Mode::kDownstream: {
      NamedDataset ds = load_named(config.datasets[0], config);
      NamedDataset original{ds.name, {}};
      if (config.test_path) {
        original.name = std::filesystem::path(*config.test_path).stem().string();
        original.data.test = load_split(*config.test_path);
      } else {
        original.data.test = ds.data.test;
      }
      ds.data.test.clear();
      ds.data.recompute_label_set();
      original.data.recompute_label_set();
      return run_downstream(ds, original, config.classifier, config.seeds, options);
    }
    case Mode::kCaseStudy: {
      std::vector<NamedDataset> data;
      for (const DatasetSpec& d : config.datasets) data.push_back(load_named(d, config));
      if (!options.output_dir.empty())
        for (const NamedDataset& d : data) {
          if (!config.datasets[&d - data.data()].synthetic) continue;
          const auto dir = std::filesystem::path(options.output_dir) / "data" / d.name;
          std::filesystem::create_directories(dir);
          write_rewritten_dataset(d.data.train, (dir / "train.tsv").string());
          write_rewritten_dataset(d.data.validation, (dir / "validation.tsv").string());
          write_rewritten_dataset(d.data.test, (dir / "test.tsv").string());
        }
      CaseStudyConfig cs;
      cs.autoencoder = config.autoencoder;
      cs.classifier = config.classifier;
      cs.epsilons = config.epsilons;
      cs.seeds = config.seeds;
      cs.clip_c = config.clip_c.value_or(config.autoencoder.clip_c);
      cs.leak_margin = config.leak_margin;
      return std::move(run_case_study(data, cs, options).report);
    }
  }
  throw ConfigError("unknown mode");
}

}  // namespace dprw
