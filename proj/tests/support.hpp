#pragma once

// Shared test helpers: finite-difference gradient checks and small fixtures.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ecr/autograd.hpp"
#include "ecr/corpus.hpp"
#include "ecr/random.hpp"

namespace ecr::testing {

// |analytic - numeric| / max(|analytic|, |numeric|, floor). The floor keeps
// entries whose true gradient is ~0 from being judged on round-off alone.
inline double relative_error(double analytic, double numeric, double floor = 1e-4) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst;  // parameter name and entry of the worst error
  std::size_t checked = 0;
};

using ScalarFn = std::function<ag::Var(ag::Graph&)>;

// Compares graph gradients with central differences on the listed parameters.
// Large parameters are checked on a seeded sample of entries: up to
// `max_nonzero` with non-zero analytic gradient and `max_zero` without.
inline GradCheckResult gradcheck(const std::vector<Parameter*>& params, const ScalarFn& loss, double step = 1e-5,
                                 std::size_t max_nonzero = 120, std::size_t max_zero = 10, std::uint64_t seed = 1) {
  Gradients analytic;
  {
    ag::Graph g;
    ag::Var l = loss(g);
    g.backward(l);
    analytic = g.param_grads();
  }
  const auto eval = [&] {
    ag::Graph g;
    return loss(g).scalar();
  };
  Rng rng(seed);
  GradCheckResult r;
  for (Parameter* p : params) {
    Matrix a = Matrix::Zero(p->value.rows(), p->value.cols());
    if (auto it = analytic.find(p); it != analytic.end()) a = it->second;
    std::vector<Eigen::Index> nonzero, zero;
    for (Eigen::Index i = 0; i < a.size(); ++i) (a.data()[i] != 0.0 ? nonzero : zero).push_back(i);
    rng.shuffle(nonzero);
    rng.shuffle(zero);
    nonzero.resize(std::min(nonzero.size(), max_nonzero));
    zero.resize(std::min(zero.size(), max_zero));
    nonzero.insert(nonzero.end(), zero.begin(), zero.end());
    for (Eigen::Index i : nonzero) {
      double& x = p->value.data()[i];
      const double saved = x;
      x = saved + step;
      const double up = eval();
      x = saved - step;
      const double down = eval();
      x = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err = relative_error(a.data()[i], numeric);
      ++r.checked;
      if (err > r.max_relative_error) {
        r.max_relative_error = err;
        r.worst = p->name + "[" + std::to_string(i) + "] analytic=" + std::to_string(a.data()[i]) +
                  " numeric=" + std::to_string(numeric);
      }
    }
  }
  return r;
}

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * scale;
  return m;
}

// sum(x o w) for a fixed random weight w, so every output entry matters.
inline ag::Var probe(ag::Graph& g, ag::Var x, std::uint64_t seed = 99) {
  Rng rng(seed);
  ag::Var w = g.constant(random_matrix(rng, x.rows(), x.cols()));
  return ag::sum(ag::mul(x, w));
}

// A hand-written two-sentence document with two coreferent mentions and one singleton.
inline Document small_document() {
  Document d;
  d.doc_id = "d1";
  d.sentences = {{"troops", "attacked", "the", "town", "in", "Gaza", "."},
                 {"the", "assault", "killed", "two", "soldiers", "near", "Gaza", "."}};
  EventMention a{"m1", {1, 1}, "Conflict.Attack", {{"troops", ArgumentRole::Participant}},
                 {{"Gaza", ArgumentRole::Location}}};
  EventMention b{"m2", {8, 8}, "Conflict.Attack", {}, {{"Gaza", ArgumentRole::Location}}};
  EventMention c{"m3", {9, 9}, "Life.Die", {{"soldiers", ArgumentRole::Participant}}, {}};
  d.mentions = {a, b, c};
  d.chains = {{"m1", "m2"}, {"m3"}};
  return d;
}

}  // namespace ecr::testing
