#pragma once

// Experiment configuration and the stages behind the command-line tool:
// corpus generation, sampling, training, prediction, clustering, scoring and
// template ablation. Every artifact starts with the config hash and seed.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecr/clustering.hpp"
#include "ecr/corpus.hpp"
#include "ecr/metrics.hpp"
#include "ecr/sampling.hpp"
#include "ecr/training.hpp"

namespace ecr {

namespace fs = std::filesystem;

// A stage failed; the message carries the stage name.
struct StageError : Error {
  StageError(const std::string& stage, const std::string& what) : Error(stage + ": " + what), stage_name(stage) {}
  std::string stage_name;
};

struct ExperimentConfig {
  nlohmann::json source;  // resolved configuration (after overrides)
  std::uint64_t seed = 42;
  std::string corpus_path;  // empty: generate a synthetic corpus
  std::string out_dir = "runs/desk";
  SyntheticConfig synthetic = default_synthetic_config();
  double test_fraction = 0.2;
  SamplingConfig sampling;
  ModelConfig model;
  TrainConfig train;
  double theta = 0.5;
  ClusterMode cluster_mode = ClusterMode::UnionMerge;
  int ablation_epochs = 0;  // 0: same as train.epochs
  int threads = 1;
};

inline std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace detail {

inline void require_keys(const nlohmann::json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

inline nlohmann::json section(const nlohmann::json& j, const char* name) {
  return j.contains(name) ? j.at(name) : nlohmann::json::object();
}

}  // namespace detail

// Builds the configuration from a JSON document. The seed drives corpus
// generation, encoder initialisation, sampling and batch order.
inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  detail::require_keys(j, "config", {"seed", "paths", "corpus", "sampling", "model", "train", "clustering", "ablation"});
  ExperimentConfig c;
  c.source = j;
  try {
    c.seed = j.value("seed", c.seed);
    const auto paths = detail::section(j, "paths");
    detail::require_keys(paths, "paths", {"corpus", "out"});
    c.corpus_path = paths.value("corpus", c.corpus_path);
    c.out_dir = paths.value("out", c.out_dir);

    const auto corpus = detail::section(j, "corpus");
    c.test_fraction = corpus.value("test_fraction", c.test_fraction);
    nlohmann::json synthetic = corpus;
    synthetic.erase("test_fraction");
    detail::require_keys(synthetic, "corpus",
                         {"num_docs", "mentions_per_doc", "mention_jitter", "singleton_rate", "max_chain",
                          "argument_rate", "max_filler_sentences", "scenarios", "filler_words"});
    c.synthetic = synthetic_config_from_json(synthetic);

    const auto sampling = detail::section(j, "sampling");
    detail::require_keys(sampling, "sampling",
                         {"strategy", "k", "gamma", "lambda", "enn1_mode", "encoder", "epochs", "learning_rate"});
    c.sampling = sampling_config_from_json(sampling);

    const auto model = detail::section(j, "model");
    detail::require_keys(model, "model", {"variant", "encoder", "matching", "max_length", "min_count", "shared_compat"});
    c.model = model_config_from_json(model);

    const auto train = detail::section(j, "train");
    detail::require_keys(train, "train",
                         {"batch_size", "epochs", "learning_rate", "trigger_mask", "type_loss", "grad_clip",
                          "shuffle_labels", "warmup_epochs"});
    c.train = train_config_from_json(train);

    const auto clustering = detail::section(j, "clustering");
    detail::require_keys(clustering, "clustering", {"theta", "mode"});
    c.theta = clustering.value("theta", c.theta);
    c.cluster_mode = parse_cluster_mode(clustering.value("mode", std::string("union")));

    const auto ablation = detail::section(j, "ablation");
    detail::require_keys(ablation, "ablation", {"epochs"});
    c.ablation_epochs = ablation.value("epochs", c.ablation_epochs);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config value has the wrong type: ") + e.what());
  }
  if (c.test_fraction <= 0.0 || c.test_fraction >= 1.0) throw ConfigError("corpus.test_fraction must be in (0, 1)");
  if (c.theta < 0.0 || c.theta > 1.0) throw ConfigError("clustering.theta must be in [0, 1]");
  if (c.ablation_epochs < 0) throw ConfigError("ablation.epochs must be >= 0");
  if (c.train.batch_size <= 0 || c.train.epochs <= 0 || !(c.train.learning_rate > 0.0)) {
    throw ConfigError("train.batch_size, train.epochs and train.learning_rate must be positive");
  }
  c.train.seed = c.seed;
  c.sampling.seed = c.seed;
  c.model.encoder.seed = c.seed;
  c.threads = thread_count_from_env();
  c.train.threads = c.threads;
  c.sampling.threads = c.threads;
  return c;
}

inline nlohmann::json load_config_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

// Hash of the resolved configuration, ignoring the output directory.
inline std::string config_hash(const ExperimentConfig& c) {
  nlohmann::json j = c.source;
  if (j.contains("paths")) j["paths"].erase("out");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

inline std::string artifact_stamp(const ExperimentConfig& c) {
  return "config=" + config_hash(c) + " seed=" + std::to_string(c.seed);
}

// ---------------------------------------------------------------------------
// Stages.

struct CorpusSplit {
  std::vector<Document> all, train, test;
};

inline CorpusSplit load_or_generate_corpus(const ExperimentConfig& c) {
  CorpusSplit s;
  if (!c.corpus_path.empty()) {
    if (!fs::exists(c.corpus_path)) throw ConfigError("corpus file '" + c.corpus_path + "' does not exist");
    s.all = load_corpus(c.corpus_path);
  } else {
    s.all = generate_synthetic_corpus(c.synthetic, c.seed);
  }
  if (s.all.size() < 2) throw DataError("corpus needs at least two documents");
  std::tie(s.train, s.test) = split_corpus(s.all, c.test_fraction);
  return s;
}

inline void write_pairs(std::ostream& out, const std::vector<MentionPair>& pairs, const std::string& stamp) {
  out << "# " << stamp << '\n';
  out << "# doc_id\tfirst\tsecond\tcoref\ttype_compat\targ_state\n";
  for (const auto& p : pairs) {
    out << p.doc_id << '\t' << p.first << '\t' << p.second << '\t' << (p.coref_label ? 1 : 0) << '\t'
        << (p.type_compat_label ? 1 : 0) << '\t' << to_string(p.arg_state) << '\n';
  }
}

inline std::vector<MentionPair> read_pairs(std::istream& in, const std::string& source) {
  std::vector<MentionPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    MentionPair p;
    int coref = -1, compat = -1;
    std::string state;
    if (!(fields >> p.doc_id >> p.first >> p.second >> coref >> compat >> state) || coref < 0 || coref > 1 ||
        compat < 0 || compat > 1) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": malformed pair line");
    }
    p.coref_label = coref == 1;
    p.type_compat_label = compat == 1;
    const auto parsed = parse_arg_state(state);
    if (!parsed) throw ParseError(source + ":" + std::to_string(line_no) + ": unknown argument state '" + state + "'");
    p.arg_state = *parsed;
    out.push_back(std::move(p));
  }
  return out;
}

struct SamplingOutcome {
  std::vector<MentionPair> pairs;
  SamplingReport before, after;
  Separation separation;
  double seconds = 0.0;
};

inline SamplingOutcome run_sampling(const ExperimentConfig& c, const std::vector<Document>& train_docs) {
  const auto started = std::chrono::steady_clock::now();
  SamplingOutcome o;
  const auto pairs = enumerate_pairs(train_docs);
  o.before = sampling_report(pairs);
  if (c.sampling.strategy == SamplingStrategy::None || c.sampling.strategy == SamplingStrategy::Random) {
    o.pairs = apply_sampling(pairs, SimilarityIndex{}, c.sampling);
  } else {
    const SimilarityIndex index = train_similarity_encoder(train_docs, c.sampling);
    o.separation = similarity_separation(index, train_docs);
    o.pairs = apply_sampling(pairs, index, c.sampling);
  }
  o.after = sampling_report(o.pairs);
  o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return o;
}

inline nlohmann::json to_json(const SamplingOutcome& o, const ExperimentConfig& c) {
  return {{"config", config_hash(c)}, {"seed", c.seed},
          {"strategy", to_string(c.sampling.strategy)}, {"before", to_json(o.before)},
          {"after", to_json(o.after)},
          {"similarity", {{"positive_mean", o.separation.positive}, {"negative_mean", o.separation.negative}}},
          {"seconds", o.seconds}};
}

struct TrainingOutcome {
  Model model;
  std::vector<EpochLog> log;
  std::vector<double> warmup_losses;
};

inline TrainingOutcome run_training(const ExperimentConfig& c, const ModelConfig& model_config,
                                    const TrainConfig& train_config, const std::vector<Document>& train_docs,
                                    const std::vector<MentionPair>& pairs, const EpochCallback& on_epoch = {}) {
  Model model = build_model(train_docs, model_config);
  std::vector<double> warmup;
  if (train_config.warmup_epochs > 0) {
    warmup = pretrain_mlm(model, train_docs, train_config.warmup_epochs, train_config.learning_rate, c.seed ^ 0x3a3aULL);
  }
  auto log = train(model, train_docs, pairs, train_config, on_epoch);
  return {std::move(model), std::move(log), std::move(warmup)};
}

struct Predictions {
  std::vector<MentionPair> pairs;
  std::vector<double> probs;

  std::vector<bool> labels() const {
    std::vector<bool> out;
    for (const auto& p : pairs) out.push_back(p.coref_label);
    return out;
  }
  std::vector<ArgState> states() const {
    std::vector<ArgState> out;
    for (const auto& p : pairs) out.push_back(p.arg_state);
    return out;
  }
};

inline Predictions run_prediction(Model& model, const std::vector<Document>& docs, int threads) {
  Predictions p;
  p.pairs = enumerate_pairs(docs);
  p.probs = predict_pairs(model, docs, p.pairs, threads);
  return p;
}

inline std::string format_probability(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9f", p);
  return buf;
}

inline void write_predictions(std::ostream& out, const Predictions& p, const std::string& stamp) {
  out << "# " << stamp << '\n';
  out << "# doc_id\tfirst\tsecond\tp_coref\tlabel\targ_state\n";
  for (std::size_t i = 0; i < p.pairs.size(); ++i) {
    const auto& pr = p.pairs[i];
    out << pr.doc_id << '\t' << pr.first << '\t' << pr.second << '\t' << format_probability(p.probs[i]) << '\t'
        << (pr.coref_label ? 1 : 0) << '\t' << to_string(pr.arg_state) << '\n';
  }
}

inline Predictions read_predictions(std::istream& in, const std::string& source) {
  Predictions p;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    MentionPair pr;
    double prob = -1.0;
    int label = -1;
    std::string state;
    if (!(fields >> pr.doc_id >> pr.first >> pr.second >> prob >> label >> state) || label < 0 || label > 1) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": malformed prediction line");
    }
    pr.coref_label = label == 1;
    const auto parsed = parse_arg_state(state);
    if (!parsed) throw ParseError(source + ":" + std::to_string(line_no) + ": unknown argument state '" + state + "'");
    pr.arg_state = *parsed;
    p.pairs.push_back(pr);
    p.probs.push_back(prob);
  }
  return p;
}

struct ScoredRun {
  std::vector<DocumentClusters> system;
  MetricReport report;
};

inline ScoredRun cluster_and_score(const ExperimentConfig& c, const std::vector<Document>& docs,
                                   const Predictions& p) {
  ScoredRun r;
  r.system = cluster_documents(docs, p.pairs, p.probs, c.theta, c.cluster_mode);
  r.report = make_report(gold_clusters(docs), r.system, p.probs, p.labels(), p.states());
  return r;
}

// ---------------------------------------------------------------------------
// Ablation over template variants, with a label-shuffled control.

struct AblationRow {
  std::string name;
  double pair_f1 = 0.0;
  double pair_precision = 0.0;
  double pair_recall = 0.0;
  double avg_f1 = 0.0;
  double final_loss = 0.0;
  double seconds = 0.0;
};

struct AblationResult {
  std::vector<AblationRow> rows;  // variants, then the control last
  const AblationRow& control() const { return rows.back(); }
};

inline AblationRow evaluate_variant(const ExperimentConfig& c, const std::string& name, TemplateVariant variant,
                                    bool shuffled, const CorpusSplit& split, const std::vector<MentionPair>& pairs) {
  const auto started = std::chrono::steady_clock::now();
  ModelConfig mc = c.model;
  mc.variant = variant;
  TrainConfig tc = c.train;
  if (c.ablation_epochs > 0) tc.epochs = c.ablation_epochs;
  tc.shuffle_labels = shuffled;
  auto outcome = run_training(c, mc, tc, split.train, pairs);
  const Predictions pred = run_prediction(outcome.model, split.test, c.threads);
  const ScoredRun scored = cluster_and_score(c, split.test, pred);
  AblationRow row;
  row.name = name;
  const Prf s = scored.report.pairs.at("ALL").score();
  row.pair_f1 = s.f1;
  row.pair_precision = s.precision;
  row.pair_recall = s.recall;
  row.avg_f1 = scored.report.avg_f1;
  row.final_loss = outcome.log.back().joint;
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return row;
}

using ProgressFn = std::function<void(const std::string&)>;

inline AblationResult run_ablation(const ExperimentConfig& c, const CorpusSplit& split,
                                   const std::vector<MentionPair>& pairs, const ProgressFn& progress = {}) {
  AblationResult r;
  for (auto v : {TemplateVariant::CorefPrompt, TemplateVariant::Normal, TemplateVariant::Connect,
                 TemplateVariant::Question, TemplateVariant::Soft}) {
    r.rows.push_back(evaluate_variant(c, to_string(v), v, false, split, pairs));
    if (progress) progress(to_string(v));
  }
  r.rows.push_back(evaluate_variant(c, "shuffled-control", c.model.variant, true, split, pairs));
  if (progress) progress("shuffled-control");
  return r;
}

inline std::string format_ablation_table(const AblationResult& r) {
  std::ostringstream out;
  out << std::left << std::setw(18) << "variant" << std::right << std::setw(9) << "pair P" << std::setw(9) << "pair R"
      << std::setw(9) << "pair F1" << std::setw(9) << "AVG" << std::setw(11) << "> control" << '\n';
  for (const auto& row : r.rows) {
    const bool is_control = &row == &r.rows.back();
    out << std::left << std::setw(18) << row.name << std::right << std::setw(9) << fixed3(row.pair_precision)
        << std::setw(9) << fixed3(row.pair_recall) << std::setw(9) << fixed3(row.pair_f1) << std::setw(9)
        << fixed3(row.avg_f1) << std::setw(11)
        << (is_control ? "-" : (row.pair_f1 > r.control().pair_f1 ? "yes" : "no")) << '\n';
  }
  return out.str();
}

inline nlohmann::json to_json(const AblationResult& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"name", row.name}, {"pair_precision", row.pair_precision}, {"pair_recall", row.pair_recall},
                    {"pair_f1", row.pair_f1}, {"avg_f1", row.avg_f1}, {"final_loss", row.final_loss},
                    {"seconds", row.seconds}});
  }
  return {{"rows", rows}, {"control", r.control().name}};
}

// ---------------------------------------------------------------------------
// Artifact helpers.

inline fs::path ensure_out_dir(const ExperimentConfig& c) {
  fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + c.out_dir + "': " + ec.message());
  return dir;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
}

inline void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

struct RunSummary {
  MetricReport report;
  std::vector<EpochLog> log;
  SamplingOutcome sampling;
  double seconds = 0.0;
};

// gen-corpus (optional) -> sample -> train -> predict -> cluster -> score.
inline RunSummary run_experiment(const ExperimentConfig& c, std::ostream& log_out) {
  const auto started = std::chrono::steady_clock::now();
  const auto stage = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
  };
  const fs::path dir = ensure_out_dir(c);
  const std::string stamp = artifact_stamp(c);
  RunSummary summary;

  const CorpusSplit split = stage("gen-corpus", [&] {
    auto s = load_or_generate_corpus(c);
    if (c.corpus_path.empty()) save_corpus((dir / "corpus.jsonl").string(), s.all, stamp);
    return s;
  });
  log_out << "corpus: " << split.all.size() << " documents (" << split.train.size() << " train, "
          << split.test.size() << " test)\n";

  summary.sampling = stage("sample", [&] {
    auto o = run_sampling(c, split.train);
    std::ofstream out(dir / "train_pairs.tsv");
    write_pairs(out, o.pairs, stamp);
    write_json(dir / "sampling.json", to_json(o, c));
    return o;
  });
  log_out << "sampling (" << to_string(c.sampling.strategy) << "): " << summary.sampling.after.coref << " coref, "
          << summary.sampling.after.non_coref << " non-coref of " << summary.sampling.before.all() << " pairs\n";

  Model model = stage("train", [&] {
    std::ofstream log_file(dir / "train_log.jsonl");
    log_file << "{\"config\":\"" << config_hash(c) << "\",\"seed\":" << c.seed << "}\n";
    auto outcome = run_training(c, c.model, c.train, split.train, summary.sampling.pairs, [&](const EpochLog& e) {
      log_file << to_json(e).dump() << '\n' << std::flush;
      log_out << "epoch " << e.epoch << ": L=" << fixed3(e.joint) << " L_s=" << fixed3(e.type)
              << " L_m=" << fixed3(e.compat) << " L_c=" << fixed3(e.coref) << " (" << fixed3(e.wall_seconds)
              << "s)\n"
              << std::flush;
    });
    summary.log = outcome.log;
    save_model(outcome.model, dir / "model", {{"config", config_hash(c)}, {"seed", c.seed}});
    return std::move(outcome.model);
  });

  const Predictions pred = stage("predict", [&] {
    auto p = run_prediction(model, split.test, c.threads);
    std::ofstream out(dir / "predictions.tsv", std::ios::binary);
    write_predictions(out, p, stamp);
    return p;
  });

  const ScoredRun scored = stage("cluster", [&] {
    auto r = cluster_and_score(c, split.test, pred);
    std::ofstream sys(dir / "clusters.txt");
    write_cluster_file(sys, r.system, stamp);
    std::ofstream gold(dir / "gold_clusters.txt");
    write_cluster_file(gold, gold_clusters(split.test), stamp);
    return r;
  });

  stage("score", [&] {
    const std::string table = format_score_table(scored.report);
    write_text(dir / "scores.txt", "# " + stamp + "\n" + table);
    auto j = to_json(scored.report);
    j["config"] = config_hash(c);
    j["seed"] = c.seed;
    write_json(dir / "scores.json", j);
    log_out << table;
    return 0;
  });
  summary.report = scored.report;
  summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return summary;
}

}  // namespace ecr
