#pragma once

// Attention pooling over trigger spans, element-wise product plus
// multi-perspective cosine matching, and the updates that inject matching
// features into the three inference-template mask embeddings.

#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecr/autograd.hpp"
#include "ecr/errors.hpp"
#include "ecr/random.hpp"

namespace ecr {

struct MatchingConfig {
  int matching_dim = 64;
  int perspectives = 128;
  int rank = 4;  // factorisation rank of the perspective matrix
  double init_std = 0.02;
  double cosine_eps = 1e-8;
};

inline nlohmann::json to_json(const MatchingConfig& c) {
  return {{"matching_dim", c.matching_dim}, {"perspectives", c.perspectives}, {"rank", c.rank},
          {"init_std", c.init_std}, {"cosine_eps", c.cosine_eps}};
}

inline MatchingConfig matching_config_from_json(const nlohmann::json& j, MatchingConfig c = {}) {
  c.matching_dim = j.value("matching_dim", c.matching_dim);
  c.perspectives = j.value("perspectives", c.perspectives);
  c.rank = j.value("rank", c.rank);
  c.init_std = j.value("init_std", c.init_std);
  c.cosine_eps = j.value("cosine_eps", c.cosine_eps);
  return c;
}

struct MatchingParams {
  MatchingConfig config;
  int hidden = 0;
  Parameter pool_weight;   // hidden x 1
  Parameter projection;    // hidden x matching_dim
  Parameter factor_u;      // perspectives x rank
  Parameter factor_v;      // rank x matching_dim
  Parameter update_type;   // (hidden + matching_dim + perspectives) x hidden
  Parameter update_arg;
  Parameter update_coref;

  int feature_dim() const { return config.matching_dim + config.perspectives; }

  std::vector<Parameter*> parameters() {
    return {&pool_weight, &projection, &factor_u, &factor_v, &update_type, &update_arg, &update_coref};
  }
};

// Update maps start as [I; noise] so the slot embedding initially passes through.
inline MatchingParams init_matching(const MatchingConfig& config, int hidden, std::uint64_t seed) {
  if (config.matching_dim <= 0 || config.perspectives <= 0 || config.rank <= 0 || hidden <= 0) {
    throw ConfigError("matching: dimensions must be positive");
  }
  Rng rng(seed);
  const auto random = [&](int rows, int cols, double std) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * std;
    return m;
  };
  MatchingParams p;
  p.config = config;
  p.hidden = hidden;
  const int dm = config.matching_dim;
  p.pool_weight = {"matching.pool_weight", random(hidden, 1, config.init_std)};
  p.projection = {"matching.projection", random(hidden, dm, 1.0 / std::sqrt(static_cast<double>(hidden)))};
  p.factor_u = {"matching.factor_u", random(config.perspectives, config.rank, 1.0)};
  p.factor_v = {"matching.factor_v", random(config.rank, dm, 1.0)};
  const int in = hidden + p.feature_dim();
  const auto update = [&](const std::string& name) {
    Matrix w = random(in, hidden, config.init_std);
    w.topRows(hidden) += Matrix::Identity(hidden, hidden);
    return Parameter{name, std::move(w)};
  };
  p.update_type = update("matching.update_type");
  p.update_arg = update("matching.update_arg");
  p.update_coref = update("matching.update_coref");
  return p;
}

// Attention-weighted sum of hidden rows p..q (inclusive).
inline ag::Var pool_span(ag::Graph& g, ag::Var hidden, int p, int q, MatchingParams& params) {
  if (p > q) throw ArgumentError("pool_span: empty span");
  if (p < 0 || q >= hidden.rows()) throw ArgumentError("pool_span: span outside hidden states");
  ag::Var span = ag::slice_rows(hidden, p, q - p + 1);
  ag::Var scores = ag::transpose(ag::matmul(span, g.param(params.pool_weight)));
  ag::Var alpha = ag::softmax_rows(scores);
  return ag::matmul(alpha, span);
}

// Component k: cosine(w_k o x1, w_k o x2), w_k the k-th row of U V.
inline ag::Var multicos(ag::Graph& g, ag::Var x1, ag::Var x2, MatchingParams& params) {
  const int dm = params.config.matching_dim;
  if (x1.rows() != 1 || x2.rows() != 1 || x1.cols() != dm || x2.cols() != dm) {
    throw ShapeError("multicos: inputs must be 1 x " + std::to_string(dm));
  }
  ag::Var w = ag::matmul(g.param(params.factor_u), g.param(params.factor_v));
  ag::Var a = ag::mul_row(w, x1);
  ag::Var b = ag::mul_row(w, x2);
  return ag::transpose(ag::row_cosine(a, b, params.config.cosine_eps));
}

// [x1 o x2 ; MultiCos(x1, x2)]
inline ag::Var match_features(ag::Graph& g, ag::Var x1, ag::Var x2, MatchingParams& params) {
  return ag::concat_cols({ag::mul(x1, x2), multicos(g, x1, x2, params)});
}

inline ag::Var project(ag::Graph& g, ag::Var h, MatchingParams& params) {
  if (h.cols() != params.hidden) throw ShapeError("matching: hidden vector has wrong width");
  return ag::matmul(h, g.param(params.projection));
}

struct UpdatedMasks {
  ag::Var type_compat;
  ag::Var arg_compat;
  ag::Var coref;
};

// m_Sem = M(e_i, e_j) and m_Type = M(h_type_i, h_type_j) on projected inputs;
// type slot <- [h; m_Type] W_t, arg slot <- [h; m_Sem] W_a, coref slot <- [h; m_Sem] W_c.
inline UpdatedMasks update_mask_embeddings(ag::Graph& g, ag::Var type_slot, ag::Var arg_slot, ag::Var coref_slot,
                                           ag::Var event_i, ag::Var event_j, ag::Var type_i, ag::Var type_j,
                                           MatchingParams& params) {
  for (ag::Var v : {type_slot, arg_slot, coref_slot, event_i, event_j, type_i, type_j}) {
    if (v.rows() != 1 || v.cols() != params.hidden) throw ShapeError("update_mask_embeddings: expected 1 x hidden rows");
  }
  ag::Var m_sem = match_features(g, project(g, event_i, params), project(g, event_j, params), params);
  ag::Var m_type = match_features(g, project(g, type_i, params), project(g, type_j, params), params);
  UpdatedMasks out;
  out.type_compat = ag::matmul(ag::concat_cols({type_slot, m_type}), g.param(params.update_type));
  out.arg_compat = ag::matmul(ag::concat_cols({arg_slot, m_sem}), g.param(params.update_arg));
  out.coref = ag::matmul(ag::concat_cols({coref_slot, m_sem}), g.param(params.update_coref));
  return out;
}

}  // namespace ecr
