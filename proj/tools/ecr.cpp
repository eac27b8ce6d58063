// ecr: command-line entry point for corpus generation, sampling, training,
// prediction, clustering, scoring and template ablation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ecr/experiment.hpp"

namespace fs = std::filesystem;
using namespace ecr;

namespace {

constexpr int kUsageError = 2;
constexpr int kFailure = 1;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<std::string> strategy;
  std::optional<double> theta;
  std::optional<std::string> out;
  std::optional<std::string> corpus;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Run seed");
  cmd->add_option("--variant", o.variant, "Template variant")
      ->check(CLI::IsMember({"corefprompt", "normal", "connect", "question", "soft"}));
  cmd->add_option("--strategy", o.strategy, "Undersampling strategy")
      ->check(CLI::IsMember({"none", "random", "enn1", "enn2", "nm"}));
  cmd->add_option("--theta", o.theta, "Clustering threshold")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--corpus", o.corpus, "Corpus file (JSON lines); default generates a synthetic corpus");
}

ExperimentConfig resolve(const CommonOptions& o, bool reuse_generated_corpus = true) {
  nlohmann::json j = o.config.empty() ? nlohmann::json::object() : load_config_json(o.config);
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  if (o.seed) j["seed"] = *o.seed;
  if (o.variant) j["model"]["variant"] = *o.variant;
  if (o.strategy) j["sampling"]["strategy"] = *o.strategy;
  if (o.theta) j["clustering"]["theta"] = *o.theta;
  if (o.out) j["paths"]["out"] = *o.out;
  if (o.corpus) j["paths"]["corpus"] = *o.corpus;
  ExperimentConfig c = experiment_config_from_json(j);
  if (reuse_generated_corpus && c.corpus_path.empty()) {
    const fs::path generated = fs::path(c.out_dir) / "corpus.jsonl";
    if (fs::exists(generated)) c.corpus_path = generated.string();
  }
  return c;
}

std::vector<MentionPair> training_pairs(const ExperimentConfig& c, const CorpusSplit& split) {
  const fs::path path = fs::path(c.out_dir) / "train_pairs.tsv";
  if (fs::exists(path)) {
    std::ifstream in(path);
    return read_pairs(in, path.string());
  }
  return run_sampling(c, split.train).pairs;
}

int cmd_gen_corpus(const CommonOptions& o) {
  const ExperimentConfig c = resolve(o, false);
  const auto dir = ensure_out_dir(c);
  const auto split = load_or_generate_corpus(c);
  save_corpus((dir / "corpus.jsonl").string(), split.all, artifact_stamp(c));
  std::cout << "wrote " << split.all.size() << " documents to " << (dir / "corpus.jsonl").string() << '\n';
  return 0;
}

int cmd_sample(const CommonOptions& o) {
  const ExperimentConfig c = resolve(o);
  const auto dir = ensure_out_dir(c);
  const auto split = load_or_generate_corpus(c);
  const auto outcome = run_sampling(c, split.train);
  std::ofstream out(dir / "train_pairs.tsv");
  write_pairs(out, outcome.pairs, artifact_stamp(c));
  write_json(dir / "sampling.json", to_json(outcome, c));
  std::cout << std::left << std::setw(8) << "" << std::right << std::setw(8) << "Coref" << std::setw(11)
            << "Non-Coref" << std::setw(8) << "All" << '\n';
  for (const auto& [name, r] : {std::pair{"before", outcome.before}, std::pair{"after", outcome.after}}) {
    std::cout << std::left << std::setw(8) << name << std::right << std::setw(8) << r.coref << std::setw(11)
              << r.non_coref << std::setw(8) << r.all() << '\n';
  }
  return 0;
}

int cmd_train(const CommonOptions& o) {
  const ExperimentConfig c = resolve(o);
  const auto dir = ensure_out_dir(c);
  const auto split = load_or_generate_corpus(c);
  const auto pairs = training_pairs(c, split);
  std::ofstream log_file(dir / "train_log.jsonl");
  log_file << "{\"config\":\"" << config_hash(c) << "\",\"seed\":" << c.seed << "}\n";
  auto outcome = run_training(c, c.model, c.train, split.train, pairs, [&](const EpochLog& e) {
    log_file << to_json(e).dump() << '\n' << std::flush;
    std::cout << to_json(e).dump() << '\n' << std::flush;
  });
  save_model(outcome.model, dir / "model", {{"config", config_hash(c)}, {"seed", c.seed}});
  return 0;
}

int cmd_predict(const CommonOptions& o, const std::string& model_dir) {
  const ExperimentConfig c = resolve(o);
  const auto dir = ensure_out_dir(c);
  const auto split = load_or_generate_corpus(c);
  Model model = load_model(model_dir.empty() ? dir / "model" : fs::path(model_dir));
  const auto pred = run_prediction(model, split.test, c.threads);
  std::ofstream out(dir / "predictions.tsv", std::ios::binary);
  write_predictions(out, pred, artifact_stamp(c));
  std::cout << "wrote " << pred.pairs.size() << " predictions to " << (dir / "predictions.tsv").string() << '\n';
  return 0;
}

int cmd_cluster(const CommonOptions& o, const std::string& predictions_path) {
  const ExperimentConfig c = resolve(o);
  const auto dir = ensure_out_dir(c);
  const auto split = load_or_generate_corpus(c);
  const fs::path path = predictions_path.empty() ? dir / "predictions.tsv" : fs::path(predictions_path);
  std::ifstream in(path);
  if (!in) throw InputError("cannot open predictions file '" + path.string() + "'");
  const auto pred = read_predictions(in, path.string());
  const auto scored = cluster_and_score(c, split.test, pred);
  std::ofstream sys(dir / "clusters.txt");
  write_cluster_file(sys, scored.system, artifact_stamp(c));
  std::ofstream gold(dir / "gold_clusters.txt");
  write_cluster_file(gold, gold_clusters(split.test), artifact_stamp(c));
  std::cout << "wrote " << (dir / "clusters.txt").string() << '\n';
  return 0;
}

int cmd_score(const std::string& gold_path, const std::string& sys_path, bool as_json) {
  const auto gold = load_cluster_file(gold_path);
  const auto sys = load_cluster_file(sys_path);
  const MetricReport r = score_partitions(gold, sys);
  std::cout << (as_json ? to_json(r).dump(2) + "\n" : format_score_table(r));
  return 0;
}

int cmd_ablate(const CommonOptions& o) {
  const ExperimentConfig c = resolve(o);
  const auto dir = ensure_out_dir(c);
  const auto split = load_or_generate_corpus(c);
  const auto pairs = training_pairs(c, split);
  const auto result = run_ablation(c, split, pairs, [](const std::string& name) {
    std::cerr << "ablation: finished " << name << '\n';
  });
  const std::string table = format_ablation_table(result);
  write_text(dir / "ablation.txt", "# " + artifact_stamp(c) + "\n" + table);
  auto j = to_json(result);
  j["config"] = config_hash(c);
  j["seed"] = c.seed;
  write_json(dir / "ablation.json", j);
  std::cout << table;
  return 0;
}

int cmd_run(const CommonOptions& o) {
  const ExperimentConfig c = resolve(o, false);
  const auto summary = run_experiment(c, std::cout);
  std::cout << "finished in " << fixed3(summary.seconds) << " s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event coreference resolution with prompt-based masked label prediction"};
  app.require_subcommand(1);
  CommonOptions common;
  std::string model_dir, predictions_path, gold_path, sys_path;
  bool as_json = false;

  auto* gen = app.add_subcommand("gen-corpus", "Generate the synthetic corpus");
  add_common(gen, common);
  auto* sample = app.add_subcommand("sample", "Train the similarity encoder and undersample training pairs");
  add_common(sample, common);
  auto* train_cmd = app.add_subcommand("train", "Train the coreference model");
  add_common(train_cmd, common);
  auto* predict = app.add_subcommand("predict", "Score held-out mention pairs");
  add_common(predict, common);
  predict->add_option("--model", model_dir, "Model directory (default: <out>/model)");
  auto* cluster = app.add_subcommand("cluster", "Cluster held-out mentions from pair predictions");
  add_common(cluster, common);
  cluster->add_option("--predictions", predictions_path, "Predictions file (default: <out>/predictions.tsv)");
  auto* score = app.add_subcommand("score", "Score a system cluster file against a gold cluster file");
  score->add_option("gold", gold_path, "Gold cluster file")->required();
  score->add_option("system", sys_path, "System cluster file")->required();
  score->add_flag("--json", as_json, "Print a JSON record instead of the table");
  auto* ablate = app.add_subcommand("ablate", "Compare template variants against a label-shuffled control");
  add_common(ablate, common);
  auto* run = app.add_subcommand("run", "Run every stage end to end");
  add_common(run, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (gen->parsed()) return cmd_gen_corpus(common);
    if (sample->parsed()) return cmd_sample(common);
    if (train_cmd->parsed()) return cmd_train(common);
    if (predict->parsed()) return cmd_predict(common, model_dir);
    if (cluster->parsed()) return cmd_cluster(common, predictions_path);
    if (score->parsed()) return cmd_score(gold_path, sys_path, as_json);
    if (ablate->parsed()) return cmd_ablate(common);
    if (run->parsed()) return cmd_run(common);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsageError;
}
