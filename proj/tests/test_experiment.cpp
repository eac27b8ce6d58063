#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ecr/experiment.hpp"

using namespace ecr;
namespace fs = std::filesystem;

namespace {

nlohmann::json tiny_json(const std::string& out) {
  return nlohmann::json::parse(R"({
    "seed": 7,
    "paths": {"out": ")" + out + R"("},
    "corpus": {"num_docs": 8, "mentions_per_doc": 3, "mention_jitter": 0, "test_fraction": 0.25},
    "sampling": {"strategy": "nm", "k": 2, "epochs": 1},
    "model": {"encoder": {"hidden": 16, "layers": 1, "heads": 2, "feed_forward": 32, "max_positions": 512},
              "matching": {"matching_dim": 4, "perspectives": 2, "rank": 1}},
    "train": {"epochs": 2, "learning_rate": 0.003},
    "ablation": {"epochs": 1}
  })");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(ExperimentConfig, ParsesAndAppliesSeed) {
  const auto c = experiment_config_from_json(tiny_json("/tmp/x"));
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.train.seed, 7u);
  EXPECT_EQ(c.sampling.seed, 7u);
  EXPECT_EQ(c.model.encoder.seed, 7u);
  EXPECT_EQ(c.model.encoder.hidden, 16);
  EXPECT_EQ(c.sampling.strategy, SamplingStrategy::CorefNM);
  EXPECT_EQ(c.synthetic.num_docs, 8);
  EXPECT_EQ(c.ablation_epochs, 1);
}

TEST(ExperimentConfig, RejectsUnknownKeysAndBadValues) {
  auto j = tiny_json("/tmp/x");
  j["train"]["epoch"] = 3;
  EXPECT_THROW(experiment_config_from_json(j), ConfigError);
  j = tiny_json("/tmp/x");
  j["extra"] = 1;
  EXPECT_THROW(experiment_config_from_json(j), ConfigError);
  j = tiny_json("/tmp/x");
  j["clustering"]["theta"] = 1.5;
  EXPECT_THROW(experiment_config_from_json(j), ConfigError);
  j = tiny_json("/tmp/x");
  j["train"]["epochs"] = "ten";
  EXPECT_THROW(experiment_config_from_json(j), ConfigError);
  j = tiny_json("/tmp/x");
  j["model"]["variant"] = "cloze";
  EXPECT_THROW(experiment_config_from_json(j), ConfigError);
  EXPECT_THROW(load_config_json("/nonexistent.json"), ConfigError);
}

TEST(ExperimentConfig, HashIgnoresOutputDirectory) {
  const auto a = experiment_config_from_json(tiny_json("/tmp/a"));
  const auto b = experiment_config_from_json(tiny_json("/tmp/b"));
  EXPECT_EQ(config_hash(a), config_hash(b));
  auto j = tiny_json("/tmp/a");
  j["seed"] = 8;
  EXPECT_NE(config_hash(a), config_hash(experiment_config_from_json(j)));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Artifacts, PairAndPredictionFilesRoundTrip) {
  Predictions p;
  p.pairs = {{"d", "m1", "m2", true, true, ArgState::OneA}, {"d", "m1", "m3", false, false, ArgState::NoA}};
  p.probs = {0.25, 0.75};
  std::stringstream buf;
  write_predictions(buf, p, "stamp");
  const auto back = read_predictions(buf, "buf");
  ASSERT_EQ(back.pairs.size(), 2u);
  EXPECT_EQ(back.probs, p.probs);
  EXPECT_EQ(back.labels(), p.labels());
  EXPECT_EQ(back.states(), p.states());

  std::stringstream pairs;
  write_pairs(pairs, p.pairs, "stamp");
  const auto pb = read_pairs(pairs, "pairs");
  ASSERT_EQ(pb.size(), 2u);
  EXPECT_EQ(pb[0].arg_state, ArgState::OneA);
  EXPECT_TRUE(pb[0].coref_label);

  std::stringstream bad("d\tm1\tm2\t1\t1\tSomeA\n");
  EXPECT_THROW(read_pairs(bad, "bad"), ParseError);
  std::stringstream bad2("d\tm1\tm2\t0.5\n");
  EXPECT_THROW(read_predictions(bad2, "bad2"), ParseError);
}

TEST(Experiment, EndToEndWritesArtifactsDeterministically) {
  const fs::path a = fs::temp_directory_path() / "ecr_e2e_a", b = fs::temp_directory_path() / "ecr_e2e_b";
  fs::remove_all(a);
  fs::remove_all(b);
  std::ostringstream log;
  const auto ra = run_experiment(experiment_config_from_json(tiny_json(a.string())), log);
  const auto rb = run_experiment(experiment_config_from_json(tiny_json(b.string())), log);
  for (const char* f : {"corpus.jsonl", "train_pairs.tsv", "sampling.json", "train_log.jsonl", "predictions.tsv",
                        "clusters.txt", "gold_clusters.txt", "scores.txt", "scores.json", "model/vocab.txt"}) {
    EXPECT_TRUE(fs::exists(a / f)) << f;
  }
  EXPECT_EQ(slurp(a / "predictions.tsv"), slurp(b / "predictions.tsv"));
  EXPECT_EQ(slurp(a / "scores.txt"), slurp(b / "scores.txt"));
  EXPECT_EQ(ra.log.size(), 2u);
  EXPECT_NE(log.str().find("MUC"), std::string::npos);
  // Every artifact carries the config hash.
  const auto c = experiment_config_from_json(tiny_json(a.string()));
  EXPECT_NE(slurp(a / "predictions.tsv").find(config_hash(c)), std::string::npos);
  EXPECT_NE(slurp(a / "scores.json").find(config_hash(c)), std::string::npos);
  EXPECT_EQ(ra.report.avg_f1, rb.report.avg_f1);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Experiment, StageFailuresNameTheStage) {
  auto j = tiny_json((fs::temp_directory_path() / "ecr_stage").string());
  j["model"]["max_length"] = 20;
  std::ostringstream log;
  try {
    run_experiment(experiment_config_from_json(j), log);
    FAIL() << "expected a stage error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage_name, "train");
  }
  j["model"]["max_length"] = 512;
  j["paths"]["corpus"] = "/nonexistent/corpus.jsonl";
  EXPECT_THROW(run_experiment(experiment_config_from_json(j), log), ConfigError);
  fs::remove_all(fs::temp_directory_path() / "ecr_stage");
}

TEST(Ablation, TableListsVariantsAndControl) {
  const auto c = experiment_config_from_json(tiny_json("/tmp/ecr_ablate"));
  const auto split = load_or_generate_corpus(c);
  const auto pairs = enumerate_pairs(split.train);
  const auto r = run_ablation(c, split, pairs);
  ASSERT_EQ(r.rows.size(), 6u);
  EXPECT_EQ(r.control().name, "shuffled-control");
  const std::string table = format_ablation_table(r);
  for (const char* n : {"corefprompt", "normal", "connect", "question", "soft", "shuffled-control"}) {
    EXPECT_NE(table.find(n), std::string::npos) << n;
  }
}
