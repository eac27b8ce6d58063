#include <gtest/gtest.h>

#include <cmath>

#include "ecr/matching.hpp"
#include "support.hpp"

using namespace ecr;
using ecr::testing::gradcheck;
using ecr::testing::probe;
using ecr::testing::random_matrix;

namespace {

Matrix rowv(std::initializer_list<double> xs) {
  Matrix m(1, static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) m(0, i++) = x;
  return m;
}

MatchingParams tiny(int hidden = 6, std::uint64_t seed = 4) {
  MatchingParams p = init_matching({3, 4, 2, 0.5, 1e-8}, hidden, seed);
  return p;
}

// Straight loops over the update equations, sharing nothing with the graph code.
Eigen::RowVectorXd oracle_features(const MatchingParams& p, const Eigen::RowVectorXd& hi,
                                   const Eigen::RowVectorXd& hj) {
  const Matrix& proj = p.projection.value;
  const Matrix w = p.factor_u.value * p.factor_v.value;
  const int dm = static_cast<int>(proj.cols()), np = static_cast<int>(w.rows());
  std::vector<double> x1(dm, 0.0), x2(dm, 0.0);
  for (int c = 0; c < dm; ++c) {
    for (int r = 0; r < proj.rows(); ++r) {
      x1[c] += hi(r) * proj(r, c);
      x2[c] += hj(r) * proj(r, c);
    }
  }
  Eigen::RowVectorXd out(dm + np);
  for (int c = 0; c < dm; ++c) out(c) = x1[c] * x2[c];
  for (int k = 0; k < np; ++k) {
    double dot = 0.0, n1 = 0.0, n2 = 0.0;
    for (int c = 0; c < dm; ++c) {
      const double a = w(k, c) * x1[c], b = w(k, c) * x2[c];
      dot += a * b;
      n1 += a * a;
      n2 += b * b;
    }
    out(dm + k) = (std::sqrt(n1) < 1e-8 || std::sqrt(n2) < 1e-8) ? 0.0 : dot / (std::sqrt(n1) * std::sqrt(n2));
  }
  return out;
}

Eigen::RowVectorXd oracle_update(const Matrix& weight, const Eigen::RowVectorXd& slot,
                                 const Eigen::RowVectorXd& features) {
  Eigen::RowVectorXd in(slot.size() + features.size());
  in << slot, features;
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(weight.cols());
  for (Eigen::Index c = 0; c < weight.cols(); ++c) {
    for (Eigen::Index r = 0; r < weight.rows(); ++r) out(c) += in(r) * weight(r, c);
  }
  return out;
}

}  // namespace

TEST(Matching, PoolSpan) {
  MatchingParams p = init_matching({2, 1, 1, 0.02, 1e-8}, 2, 1);
  Matrix h(3, 2);
  h << 1, 0, 0, 1, 5, 5;
  ag::Graph g;
  p.pool_weight.value << 1.0, 0.0;
  const Matrix e = pool_span(g, g.constant(h), 0, 1, p).value();
  const double a = std::exp(1.0) / (std::exp(1.0) + 1.0);
  EXPECT_NEAR(e(0, 0), a, 1e-12);
  EXPECT_NEAR(e(0, 1), 1.0 - a, 1e-12);
  EXPECT_NEAR(a, 0.7311, 1e-4);
  EXPECT_EQ(pool_span(g, g.constant(h), 2, 2, p).value(), h.row(2));
  p.pool_weight.value.setZero();
  EXPECT_TRUE(pool_span(g, g.constant(h), 0, 2, p).value().isApprox(h.colwise().mean()));
  EXPECT_THROW(pool_span(g, g.constant(h), 2, 1, p), ArgumentError);
  EXPECT_THROW(pool_span(g, g.constant(h), 0, 3, p), ArgumentError);
}

TEST(Matching, MultiCosExamples) {
  MatchingParams p = init_matching({2, 1, 1, 0.02, 1e-8}, 2, 1);
  p.factor_u.value << 1.0;
  p.factor_v.value << 1.0, 1.0;
  ag::Graph g;
  EXPECT_NEAR(multicos(g, g.constant(rowv({1, 0})), g.constant(rowv({0, 1})), p).scalar(), 0.0, 1e-15);

  MatchingParams q = tiny();
  q.factor_u.value = q.factor_u.value.cwiseAbs();
  q.factor_v.value = q.factor_v.value.cwiseAbs();
  const Matrix x = rowv({0.3, -1.2, 2.0});
  const Matrix same = multicos(g, g.constant(x), g.constant(x), q).value();
  EXPECT_TRUE(same.isApprox(Matrix::Ones(1, 4), 1e-12));
  const Matrix anti = multicos(g, g.constant(x), g.constant(-x), q).value();
  EXPECT_TRUE(anti.isApprox(-Matrix::Ones(1, 4), 1e-12));
  EXPECT_THROW(multicos(g, g.constant(rowv({1, 2})), g.constant(x), q), ShapeError);
}

TEST(Matching, MultiCosProperties) {
  MatchingParams p = tiny();
  Rng rng(8);
  ag::Graph g;
  for (int t = 0; t < 50; ++t) {
    const Matrix a = random_matrix(rng, 1, 3), b = random_matrix(rng, 1, 3);
    const Matrix ab = multicos(g, g.constant(a), g.constant(b), p).value();
    EXPECT_LE(ab.cwiseAbs().maxCoeff(), 1.0 + 1e-12);
    EXPECT_TRUE(ab.isApprox(multicos(g, g.constant(b), g.constant(a), p).value(), 1e-12));
    EXPECT_TRUE(ab.isApprox(multicos(g, g.constant(a * 3.7), g.constant(b), p).value(), 1e-12));
    const Matrix m = match_features(g, g.constant(a), g.constant(b), p).value();
    EXPECT_TRUE(m.isApprox(match_features(g, g.constant(b), g.constant(a), p).value(), 1e-12));
  }
}

TEST(Matching, MatchFeatures) {
  MatchingParams p = init_matching({2, 3, 1, 0.5, 1e-8}, 4, 2);
  ag::Graph g;
  const Matrix m = match_features(g, g.constant(rowv({1, 2})), g.constant(rowv({3, 4})), p).value();
  ASSERT_EQ(m.cols(), 5);
  EXPECT_EQ(m(0, 0), 3.0);
  EXPECT_EQ(m(0, 1), 8.0);
  const Matrix z = match_features(g, g.constant(rowv({0, 0})), g.constant(rowv({3, 4})), p).value();
  EXPECT_TRUE(z.isZero(0.0));
}

TEST(Matching, UpdateMaps) {
  MatchingParams p = tiny();
  Rng rng(12);
  ag::Graph g;
  std::vector<Matrix> in;
  for (int i = 0; i < 7; ++i) in.push_back(random_matrix(rng, 1, 6));
  const auto run = [&](ag::Graph& gg) {
    std::vector<ag::Var> v;
    for (const auto& m : in) v.push_back(gg.constant(m));
    return update_mask_embeddings(gg, v[0], v[1], v[2], v[3], v[4], v[5], v[6], p);
  };
  const auto out = run(g);
  const auto sem = oracle_features(p, in[3], in[4]);
  const auto type = oracle_features(p, in[5], in[6]);
  EXPECT_LT((out.type_compat.value() - oracle_update(p.update_type.value, in[0], type)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((out.arg_compat.value() - oracle_update(p.update_arg.value, in[1], sem)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((out.coref.value() - oracle_update(p.update_coref.value, in[2], sem)).cwiseAbs().maxCoeff(), 1e-12);

  // Identity on the slot block passes the slot through.
  p.update_coref.value.setZero();
  p.update_coref.value.topRows(6).setIdentity();
  ag::Graph g2;
  EXPECT_TRUE(run(g2).coref.value().isApprox(in[2], 1e-15));

  for (Parameter* w : {&p.update_type, &p.update_arg, &p.update_coref}) w->value.setZero();
  ag::Graph g3;
  const auto zero = run(g3);
  EXPECT_TRUE(zero.type_compat.value().isZero(0.0) && zero.arg_compat.value().isZero(0.0) &&
              zero.coref.value().isZero(0.0));

  ag::Graph g4;
  EXPECT_THROW(update_mask_embeddings(g4, g4.constant(rowv({1})), g4.constant(in[1]), g4.constant(in[2]),
                                      g4.constant(in[3]), g4.constant(in[4]), g4.constant(in[5]), g4.constant(in[6]), p),
               ShapeError);
}

TEST(Matching, GradientsMatchFiniteDifferences) {
  MatchingParams p = tiny();
  Rng rng(21);
  Parameter hidden{"hidden", random_matrix(rng, 6, 6)};
  std::vector<Parameter*> params = p.parameters();
  params.push_back(&hidden);
  const auto r = gradcheck(params, [&](ag::Graph& g) {
    ag::Var h = g.param(hidden);
    ag::Var ei = pool_span(g, h, 0, 1, p), ej = pool_span(g, h, 3, 5, p);
    const auto out = update_mask_embeddings(g, ag::row(h, 2), ag::row(h, 3), ag::row(h, 4), ei, ej, ag::row(h, 1),
                                            ag::row(h, 5), p);
    return ag::add(ag::add(probe(g, out.type_compat, 1), probe(g, out.arg_compat, 2)), probe(g, out.coref, 3));
  });
  EXPECT_LT(r.max_relative_error, 1e-6) << r.worst;
}
