#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "ecr/training.hpp"
#include "support.hpp"

using namespace ecr;

namespace {

ModelConfig small_config(TemplateVariant v = TemplateVariant::CorefPrompt) {
  ModelConfig c;
  c.variant = v;
  c.encoder = {16, 1, 2, 32, 512, 0.1, 13};
  c.matching = {4, 3, 2, 0.1, 1e-8};
  return c;
}

std::vector<Document> small_corpus(int docs, std::uint64_t seed = 3) {
  auto cfg = default_synthetic_config();
  cfg.num_docs = docs;
  cfg.mentions_per_doc = 3;
  cfg.mention_jitter = 0;
  return generate_synthetic_corpus(cfg, seed);
}

SlotDistributions one_hot_binary(int hot) {
  SlotDistributions d;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(2);
  p(hot) = 1.0;
  d.type_compat = d.arg_compat = d.coref = p;
  return d;
}

}  // namespace

TEST(JointLoss, Examples) {
  const double e1 = std::exp(1.0) - 1.0;
  EXPECT_EQ(joint_loss(0, 0, 0), 0.0);
  EXPECT_NEAR(joint_loss(e1, 0, 0), 1.0, 1e-12);
  EXPECT_NEAR(joint_loss(e1, e1, e1), 3.0, 1e-12);
  EXPECT_THROW(joint_loss(-0.1, 0, 0), ArgumentError);
  EXPECT_THROW(joint_loss(0, std::nan(""), 0), ArgumentError);
}

TEST(JointLoss, PartialDerivatives) {
  const double h = 1e-6;
  for (double base : {0.0, 0.3, 2.5, 10.0}) {
    const auto at = [](double x) { return joint_loss(0.7, x, 1.1); };
    // One-sided second-order difference at the boundary.
    const double numeric = base >= h ? (at(base + h) - at(base - h)) / (2 * h)
                                     : (-3 * at(base) + 4 * at(base + h) - at(base + 2 * h)) / (2 * h);
    EXPECT_NEAR(numeric, 1.0 / (1.0 + base), 1e-6) << base;
    EXPECT_GT(joint_loss(0.7, base + 0.1, 1.1), joint_loss(0.7, base, 1.1));
  }
}

TEST(ComputeLosses, Examples) {
  PairLabels y;
  y.coref = true;
  y.type_compat = true;
  const std::vector<SlotDistributions> perfect{one_hot_binary(0)};
  const std::vector<PairLabels> labels{y};
  const auto l = compute_losses(perfect, labels);
  EXPECT_EQ(l.joint, 0.0);
  EXPECT_EQ(l.coref, 0.0);

  SlotDistributions half;
  half.coref = Eigen::Vector2d(0.5, 0.5);
  const std::vector<SlotDistributions> halves{half};
  EXPECT_NEAR(compute_losses(halves, labels).coref, std::log(2.0), 1e-15);

  // L_m adds the two compatibility losses.
  SlotDistributions mix;
  mix.type_compat = Eigen::Vector2d(std::exp(-1.0), 1.0 - std::exp(-1.0));
  mix.arg_compat = Eigen::Vector2d(std::exp(-2.0), 1.0 - std::exp(-2.0));
  mix.coref = Eigen::Vector2d(1.0, 0.0);
  const std::vector<SlotDistributions> mixed{mix};
  const auto m = compute_losses(mixed, labels);
  EXPECT_NEAR(m.type_compat, 1.0, 1e-12);
  EXPECT_NEAR(m.arg_compat, 2.0, 1e-12);
  EXPECT_NEAR(m.compat, 3.0, 1e-12);

  const std::vector<PairLabels> missing{PairLabels{}};
  EXPECT_THROW(compute_losses(perfect, missing), DataError);
}

TEST(Model, BuildRegistersLabelWordsAndSlots) {
  const auto docs = small_corpus(4);
  Model m = build_model(docs, small_config());
  EXPECT_EQ(m.verbalizers.type.size(), static_cast<int>(event_types(docs).size()));
  EXPECT_EQ(m.encoder.vocab_size(), m.vocab.size());
  const auto pair = enumerate_pairs(docs[0]).front();
  ag::Graph g;
  const PromptLayout layout = assemble_prompt(docs[0], pair, m.vocab);
  const auto d = distributions(forward(g, m, layout));
  ASSERT_TRUE(d.type1 && d.type2 && d.type_compat && d.arg_compat && d.coref);
  EXPECT_EQ(d.type1->size(), m.verbalizers.type.size());
  EXPECT_NEAR(d.coref->sum(), 1.0, 1e-12);

  Model b = build_model(docs, small_config(TemplateVariant::Question));
  ag::Graph g2;
  const auto bd = distributions(forward(g2, b, assemble_prompt(docs[0], pair, b.vocab, TemplateVariant::Question)));
  EXPECT_FALSE(bd.type1.has_value());
  EXPECT_TRUE(bd.coref.has_value());
  EXPECT_LT(b.parameters().size(), m.parameters().size());
}

TEST(Model, SymmetricLabelWordsGiveOneHalf) {
  const auto docs = small_corpus(2);
  Model m = build_model(docs, small_config());
  const auto& ids = m.verbalizers.coref.token_ids;
  m.encoder.token_embedding().value.row(ids[1]) = m.encoder.token_embedding().value.row(ids[0]);
  const double p = predict_pair(m, docs[0], enumerate_pairs(docs[0]).front());
  EXPECT_NEAR(p, 0.5, 1e-12);
}

TEST(Model, PredictionEqualsStepByStepComposition) {
  const auto docs = small_corpus(2);
  Model m = build_model(docs, small_config());
  const auto pair = enumerate_pairs(docs[0]).back();
  const double got = predict_pair(m, docs[0], pair);

  const PromptLayout l = assemble_prompt(docs[0], pair, m.vocab);
  const Matrix h = encode_values(m.encoder, l.ids);
  const auto pool = [&](const TokenSpan& s) {
    const Matrix span = h.middleRows(s.start, s.length());
    Eigen::VectorXd score = span * m.matching.pool_weight.value;
    score = (score.array() - score.maxCoeff()).exp();
    score /= score.sum();
    return Eigen::RowVectorXd(score.transpose() * span);
  };
  const Eigen::RowVectorXd e1 = pool(*l.anchor_trigger_1), e2 = pool(*l.anchor_trigger_2);
  const Matrix w = m.matching.factor_u.value * m.matching.factor_v.value;
  const Eigen::RowVectorXd x1 = e1 * m.matching.projection.value, x2 = e2 * m.matching.projection.value;
  Eigen::RowVectorXd feats(x1.size() + w.rows());
  feats << x1.cwiseProduct(x2), Eigen::RowVectorXd::Zero(w.rows());
  for (Eigen::Index k = 0; k < w.rows(); ++k) {
    const Eigen::RowVectorXd a = w.row(k).cwiseProduct(x1), b = w.row(k).cwiseProduct(x2);
    feats(x1.size() + k) = a.dot(b) / (a.norm() * b.norm());
  }
  Eigen::RowVectorXd in(h.cols() + feats.size());
  in << h.row(l.slot(Slot::Coref)), feats;
  const Eigen::RowVectorXd updated = in * m.matching.update_coref.value;
  const Eigen::VectorXd probs = score_labels(mlm_logits(m.encoder, updated), m.verbalizers.coref);
  EXPECT_NEAR(got, probs(0), 1e-12);
}

TEST(Training, MaskedViewsCarryNoTriggerIds) {
  const auto docs = small_corpus(3);
  Model m = build_model(docs, small_config());
  const auto samples = prepare_samples(m, docs, enumerate_pairs(docs), true);
  for (const auto& s : samples) {
    for (int id : s.masked.ids) EXPECT_FALSE(s.layout.trigger_token_ids.contains(id));
    EXPECT_EQ(s.masked.slots, s.layout.slots);
  }
}

TEST(Training, DeterministicAndLearns) {
  const auto docs = small_corpus(6);
  const auto pairs = enumerate_pairs(docs);
  TrainConfig tc;
  tc.epochs = 3;
  tc.learning_rate = 3e-3;
  tc.batch_size = 4;
  Model a = build_model(docs, small_config());
  Model b = build_model(docs, small_config());
  const auto la = train(a, docs, pairs, tc);
  tc.threads = 2;
  const auto lb = train(b, docs, pairs, tc);
  ASSERT_EQ(la.size(), 3u);
  for (std::size_t i = 0; i < la.size(); ++i) EXPECT_EQ(la[i].joint, lb[i].joint);
  EXPECT_LT(la.back().joint, la.front().joint);
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    EXPECT_EQ(a.parameters()[i]->value, b.parameters()[i]->value);
  }
}

TEST(Training, TriggerMaskFlagChangesTheObjective) {
  const auto docs = small_corpus(3);
  const auto pairs = enumerate_pairs(docs);
  TrainConfig tc;
  tc.epochs = 1;
  Model a = build_model(docs, small_config());
  Model b = build_model(docs, small_config());
  const auto with = train(a, docs, pairs, tc);
  tc.trigger_mask = false;
  const auto without = train(b, docs, pairs, tc);
  EXPECT_NE(with[0].joint, without[0].joint);
}

TEST(Training, RejectsBadInput) {
  const auto docs = small_corpus(2);
  Model m = build_model(docs, small_config());
  TrainConfig tc;
  EXPECT_THROW(train(m, docs, {}, tc), DataError);
  tc.epochs = 0;
  EXPECT_THROW(train(m, docs, enumerate_pairs(docs), tc), ConfigError);
  MentionPair ghost{"nowhere", "m0", "m1"};
  EXPECT_THROW(predict_pairs(m, docs, {ghost}), LookupError);
}

TEST(Training, SaveAndLoadReproducePredictions) {
  const auto docs = small_corpus(3);
  const auto pairs = enumerate_pairs(docs);
  for (auto v : {TemplateVariant::CorefPrompt, TemplateVariant::Connect}) {
    Model m = build_model(docs, small_config(v));
    const auto dir = std::filesystem::temp_directory_path() / ("ecr_model_" + std::string(to_string(v)));
    save_model(m, dir, {{"note", "test"}});
    Model back = load_model(dir);
    EXPECT_EQ(predict_pairs(m, docs, pairs), predict_pairs(back, docs, pairs)) << to_string(v);
    std::filesystem::remove_all(dir);
  }
  EXPECT_THROW(load_model("/nonexistent/model"), InputError);
}

TEST(Training, MlmWarmupReducesLoss) {
  const auto docs = small_corpus(6);
  Model m = build_model(docs, small_config());
  const auto history = pretrain_mlm(m, docs, 4, 5e-3, 1);
  ASSERT_EQ(history.size(), 4u);
  EXPECT_LT(history.back(), history.front());
}
