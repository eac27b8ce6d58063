#pragma once

#include <cmath>
#include <span>
#include <unordered_map>

#include "ecr/autograd.hpp"

namespace ecr {

struct AdamConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with per-parameter moments. Moments follow parameter growth (new
// vocabulary rows start with zero moments).
class Adam {
 public:
  explicit Adam(AdamConfig config) : config_(config) {}

  void step(std::span<Parameter* const> params, const Gradients& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (Parameter* p : params) {
      auto g = grads.find(p);
      if (g == grads.end()) continue;
      auto& [m, v] = moments_[p];
      if (m.rows() != p->value.rows() || m.cols() != p->value.cols()) {
        const auto old_rows = m.rows();
        m.conservativeResize(p->value.rows(), p->value.cols());
        v.conservativeResize(p->value.rows(), p->value.cols());
        if (old_rows == 0 || m.cols() != g->second.cols()) {
          m.setZero();
          v.setZero();
        } else {
          m.bottomRows(m.rows() - old_rows).setZero();
          v.bottomRows(v.rows() - old_rows).setZero();
        }
      }
      m = config_.beta1 * m + (1.0 - config_.beta1) * g->second;
      v = config_.beta2 * v + (1.0 - config_.beta2) * g->second.cwiseProduct(g->second);
      p->value.array() -= config_.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + config_.eps);
    }
  }

  long steps() const { return t_; }

 private:
  AdamConfig config_;
  long t_ = 0;
  std::unordered_map<const Parameter*, std::pair<Matrix, Matrix>> moments_;
};

// Global L2 norm over params in the given order; scales grads down to max_norm.
inline double clip_gradients(std::span<Parameter* const> params, Gradients& grads, double max_norm) {
  double sq = 0.0;
  for (Parameter* p : params) {
    if (auto g = grads.find(p); g != grads.end()) sq += g->second.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& [p, g] : grads) g *= s;
  }
  return norm;
}

// Sums per-graph gradients in the given order.
inline void add_gradients(Gradients& into, const Gradients& from) {
  for (const auto& [p, g] : from) {
    auto it = into.find(p);
    if (it == into.end()) {
      into.emplace(p, g);
    } else {
      it->second += g;
    }
  }
}

}  // namespace ecr
