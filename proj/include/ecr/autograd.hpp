#pragma once

// Reverse-mode automatic differentiation over dense double matrices.
//
// A Graph is a tape: nodes are appended in creation order, so reverse creation
// order is a valid topological order for the backward sweep. Parameters live
// outside the graph; the graph only accumulates their gradients, which lets
// several graphs be evaluated against the same parameters concurrently.

#include <cmath>
#include <deque>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ecr/errors.hpp"

namespace ecr {

using Matrix = Eigen::MatrixXd;

struct Parameter {
  std::string name;
  Matrix value;
};

using Gradients = std::unordered_map<const Parameter*, Matrix>;

namespace ag {

class Graph;

class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::size_t index) : graph_(graph), index_(index) {}

  Graph& graph() const { return *graph_; }
  std::size_t index() const { return index_; }
  bool valid() const { return graph_ != nullptr; }

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }

 private:
  Graph* graph_ = nullptr;
  std::size_t index_ = 0;
};

class Graph {
 public:
  using Backward = std::function<void(Graph&, const Matrix&)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Matrix value) { return push(std::move(value), false, nullptr); }

  Var param(Parameter& p) {
    Parameter* source = &p;
    return push(p.value, true, [source](Graph& g, const Matrix& grad) {
      g.accumulate_param(*source, grad);
    });
  }

  // Rows of a parameter table selected by id; only those rows receive gradient.
  Var gather_rows(Parameter& table, std::span<const int> ids) {
    Matrix out(static_cast<Eigen::Index>(ids.size()), table.value.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] < 0 || ids[i] >= table.value.rows()) {
        throw ShapeError("gather_rows: id " + std::to_string(ids[i]) + " outside table " + table.name);
      }
      out.row(static_cast<Eigen::Index>(i)) = table.value.row(ids[i]);
    }
    Parameter* source = &table;
    std::vector<int> rows(ids.begin(), ids.end());
    return push(std::move(out), true, [source, rows](Graph& g, const Matrix& grad) {
      Matrix& acc = g.param_grad(*source);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        acc.row(rows[i]) += grad.row(static_cast<Eigen::Index>(i));
      }
    });
  }

  Var push(Matrix value, bool needs_grad, Backward backward) {
    nodes_.push_back(Node{std::move(value), Matrix(), needs_grad, std::move(backward)});
    return Var(this, nodes_.size() - 1);
  }

  const Matrix& value(Var v) const { return nodes_[v.index()].value; }
  bool needs_grad(Var v) const { return nodes_[v.index()].needs_grad; }

  // Gradient of the seeded objective w.r.t. a node; empty until backward reaches it.
  const Matrix& grad(Var v) const { return nodes_[v.index()].grad; }

  void accumulate(Var v, const Matrix& g) {
    Node& node = nodes_[v.index()];
    if (!node.needs_grad) return;
    if (node.grad.size() == 0) {
      node.grad = g;
    } else {
      node.grad += g;
    }
  }

  void accumulate(Var v, Matrix&& g) {
    Node& node = nodes_[v.index()];
    if (!node.needs_grad) return;
    if (node.grad.size() == 0) {
      node.grad = std::move(g);
    } else {
      node.grad += g;
    }
  }

  Matrix& param_grad(const Parameter& p) {
    auto it = param_grads_.find(&p);
    if (it == param_grads_.end()) {
      it = param_grads_.emplace(&p, Matrix::Zero(p.value.rows(), p.value.cols())).first;
    }
    return it->second;
  }

  void accumulate_param(const Parameter& p, const Matrix& g) { param_grad(p) += g; }

  // Sweeps the tape once with d(objective)/d(seed_i) = weight_i.
  void backward(std::span<const std::pair<Var, double>> seeds) {
    for (const auto& [var, weight] : seeds) {
      accumulate(var, Matrix::Constant(var.rows(), var.cols(), weight));
    }
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      Node& node = nodes_[i];
      if (!node.needs_grad || node.grad.size() == 0 || !node.backward) continue;
      node.backward(*this, node.grad);
    }
  }

  void backward(Var scalar) {
    const std::pair<Var, double> seed{scalar, 1.0};
    backward(std::span<const std::pair<Var, double>>(&seed, 1));
  }

  const Gradients& param_grads() const { return param_grads_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad;
    Backward backward;
  };

  std::deque<Node> nodes_;
  Gradients param_grads_;
};

inline const Matrix& Var::value() const { return graph_->value(*this); }

namespace detail {

inline Graph& same_graph(Var a, Var b) {
  if (&a.graph() != &b.graph()) throw ArgumentError("autograd: operands from different graphs");
  return a.graph();
}

inline void require_shape(bool ok, const char* op) {
  if (!ok) throw ShapeError(std::string("autograd: shape mismatch in ") + op);
}

}  // namespace detail

inline Var matmul(Var a, Var b) {
  Graph& g = detail::same_graph(a, b);
  detail::require_shape(a.cols() == b.rows(), "matmul");
  return g.push(a.value() * b.value(), g.needs_grad(a) || g.needs_grad(b),
                [a, b](Graph& g, const Matrix& grad) {
                  if (g.needs_grad(a)) g.accumulate(a, grad * b.value().transpose());
                  if (g.needs_grad(b)) g.accumulate(b, a.value().transpose() * grad);
                });
}

// a * b^T without materialising the transpose node.
inline Var matmul_nt(Var a, Var b) {
  Graph& g = detail::same_graph(a, b);
  detail::require_shape(a.cols() == b.cols(), "matmul_nt");
  return g.push(a.value() * b.value().transpose(), g.needs_grad(a) || g.needs_grad(b),
                [a, b](Graph& g, const Matrix& grad) {
                  if (g.needs_grad(a)) g.accumulate(a, grad * b.value());
                  if (g.needs_grad(b)) g.accumulate(b, grad.transpose() * a.value());
                });
}

inline Var transpose(Var a) {
  Graph& g = a.graph();
  return g.push(a.value().transpose(), g.needs_grad(a),
                [a](Graph& g, const Matrix& grad) { g.accumulate(a, grad.transpose()); });
}

inline Var add(Var a, Var b) {
  Graph& g = detail::same_graph(a, b);
  detail::require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add");
  return g.push(a.value() + b.value(), g.needs_grad(a) || g.needs_grad(b),
                [a, b](Graph& g, const Matrix& grad) {
                  g.accumulate(a, grad);
                  g.accumulate(b, grad);
                });
}

inline Var sub(Var a, Var b) {
  Graph& g = detail::same_graph(a, b);
  detail::require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "sub");
  return g.push(a.value() - b.value(), g.needs_grad(a) || g.needs_grad(b),
                [a, b](Graph& g, const Matrix& grad) {
                  g.accumulate(a, grad);
                  g.accumulate(b, -grad);
                });
}

// Adds a 1 x n row to every row of a.
inline Var add_row(Var a, Var row) {
  Graph& g = detail::same_graph(a, row);
  detail::require_shape(row.rows() == 1 && row.cols() == a.cols(), "add_row");
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return g.push(std::move(out), g.needs_grad(a) || g.needs_grad(row),
                [a, row](Graph& g, const Matrix& grad) {
                  g.accumulate(a, grad);
                  if (g.needs_grad(row)) g.accumulate(row, grad.colwise().sum());
                });
}

inline Var mul(Var a, Var b) {
  Graph& g = detail::same_graph(a, b);
  detail::require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "mul");
  return g.push(a.value().cwiseProduct(b.value()), g.needs_grad(a) || g.needs_grad(b),
                [a, b](Graph& g, const Matrix& grad) {
                  if (g.needs_grad(a)) g.accumulate(a, grad.cwiseProduct(b.value()));
                  if (g.needs_grad(b)) g.accumulate(b, grad.cwiseProduct(a.value()));
                });
}

// Multiplies every row of a elementwise by a 1 x n row.
inline Var mul_row(Var a, Var row) {
  Graph& g = detail::same_graph(a, row);
  detail::require_shape(row.rows() == 1 && row.cols() == a.cols(), "mul_row");
  Matrix out = a.value();
  out.array().rowwise() *= row.value().row(0).array();
  return g.push(std::move(out), g.needs_grad(a) || g.needs_grad(row),
                [a, row](Graph& g, const Matrix& grad) {
                  if (g.needs_grad(a)) {
                    Matrix ga = grad;
                    ga.array().rowwise() *= row.value().row(0).array();
                    g.accumulate(a, ga);
                  }
                  if (g.needs_grad(row)) {
                    g.accumulate(row, grad.cwiseProduct(a.value()).colwise().sum());
                  }
                });
}

inline Var scale(Var a, double s) {
  Graph& g = a.graph();
  return g.push(a.value() * s, g.needs_grad(a),
                [a, s](Graph& g, const Matrix& grad) { g.accumulate(a, grad * s); });
}

inline Var gelu(Var a) {
  Graph& g = a.graph();
  const Matrix& x = a.value();
  Matrix cdf = x.unaryExpr([](double v) { return 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0)); });
  Matrix out = x.cwiseProduct(cdf);
  return g.push(std::move(out), g.needs_grad(a), [a, cdf = std::move(cdf)](Graph& g, const Matrix& grad) {
    const Matrix& x = a.value();
    Matrix d = (-0.5 * x.array().square()).exp().matrix();
    d = cdf + x.cwiseProduct(d) / std::sqrt(2.0 * std::numbers::pi);
    g.accumulate(a, grad.cwiseProduct(d));
  });
}

inline Var log1p(Var a) {
  Graph& g = a.graph();
  Matrix out = a.value().unaryExpr([](double v) { return std::log1p(v); });
  return g.push(std::move(out), g.needs_grad(a), [a](Graph& g, const Matrix& grad) {
    g.accumulate(a, grad.cwiseQuotient((a.value().array() + 1.0).matrix()));
  });
}

inline Var sum(Var a) {
  Graph& g = a.graph();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return g.push(std::move(out), g.needs_grad(a), [a](Graph& g, const Matrix& grad) {
    g.accumulate(a, Matrix::Constant(a.rows(), a.cols(), grad(0, 0)));
  });
}

// Row-wise layer normalisation with affine 1 x n gamma and beta.
inline Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5) {
  Graph& g = detail::same_graph(x, gamma);
  detail::require_shape(gamma.cols() == x.cols() && beta.cols() == x.cols(), "layer_norm");
  const Eigen::VectorXd mean = x.value().rowwise().mean();
  Matrix xhat = x.value().colwise() - mean;
  const Eigen::VectorXd inv_std = (xhat.array().square().rowwise().mean() + eps).rsqrt().matrix();
  xhat.array().colwise() *= inv_std.array();
  Matrix out = xhat;
  out.array().rowwise() *= gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);
  return g.push(std::move(out), g.needs_grad(x) || g.needs_grad(gamma) || g.needs_grad(beta),
                [x, gamma, beta, xhat = std::move(xhat), inv_std](Graph& g, const Matrix& grad) {
                  if (g.needs_grad(gamma)) g.accumulate(gamma, grad.cwiseProduct(xhat).colwise().sum());
                  if (g.needs_grad(beta)) g.accumulate(beta, grad.colwise().sum());
                  if (!g.needs_grad(x)) return;
                  Matrix dx = grad;
                  dx.array().rowwise() *= gamma.value().row(0).array();
                  const Eigen::VectorXd mean_d = dx.rowwise().mean();
                  const Eigen::VectorXd mean_dx = dx.cwiseProduct(xhat).rowwise().mean();
                  dx.colwise() -= mean_d;
                  dx -= xhat.cwiseProduct(mean_dx.replicate(1, xhat.cols()));
                  dx.array().colwise() *= inv_std.array();
                  g.accumulate(x, std::move(dx));
                });
}

namespace detail {

inline void softmax_rows_inplace(Matrix& m) {
  const Eigen::VectorXd mx = m.rowwise().maxCoeff();
  m.colwise() -= mx;
  m = m.array().exp().matrix();
  const Eigen::VectorXd total = m.rowwise().sum();
  m.array().colwise() /= total.array();
}

// d(softmax)/d(input) applied to an upstream gradient, row by row.
inline Matrix softmax_rows_backward(const Matrix& probs, const Matrix& grad) {
  const Eigen::VectorXd dot = grad.cwiseProduct(probs).rowwise().sum();
  Matrix d = grad;
  d.colwise() -= dot;
  return d.cwiseProduct(probs);
}

}  // namespace detail

inline Var softmax_rows(Var a) {
  Graph& g = a.graph();
  Matrix out = a.value();
  detail::softmax_rows_inplace(out);
  Matrix probs = out;
  return g.push(std::move(out), g.needs_grad(a), [a, probs = std::move(probs)](Graph& g, const Matrix& grad) {
    g.accumulate(a, detail::softmax_rows_backward(probs, grad));
  });
}

// Multi-head scaled dot-product self-attention over a packed n x 3H [Q K V]
// input; returns the n x H concatenation of the head outputs.
inline Var multi_head_attention(Var qkv, int heads) {
  Graph& g = qkv.graph();
  const Eigen::Index h = qkv.cols() / 3;
  detail::require_shape(heads > 0 && qkv.cols() == 3 * h && h % heads == 0, "multi_head_attention");
  const Eigen::Index d = h / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const Matrix& x = qkv.value();
  const Eigen::Index n = x.rows();
  Matrix out(n, h);
  std::vector<Matrix> probs(static_cast<std::size_t>(heads));
  for (int k = 0; k < heads; ++k) {
    Matrix& p = probs[static_cast<std::size_t>(k)];
    p.noalias() = x.middleCols(k * d, d) * x.middleCols(h + k * d, d).transpose();
    p *= scale;
    detail::softmax_rows_inplace(p);
    out.middleCols(k * d, d).noalias() = p * x.middleCols(2 * h + k * d, d);
  }
  return g.push(std::move(out), g.needs_grad(qkv),
                [qkv, heads, h, d, scale, probs = std::move(probs)](Graph& g, const Matrix& grad) {
                  const Matrix& x = qkv.value();
                  Matrix dx(x.rows(), x.cols());
                  for (int k = 0; k < heads; ++k) {
                    const Matrix& p = probs[static_cast<std::size_t>(k)];
                    const auto dout = grad.middleCols(k * d, d);
                    dx.middleCols(2 * h + k * d, d).noalias() = p.transpose() * dout;
                    Matrix dp = dout * x.middleCols(2 * h + k * d, d).transpose();
                    Matrix ds = detail::softmax_rows_backward(p, dp);
                    ds *= scale;
                    dx.middleCols(k * d, d).noalias() = ds * x.middleCols(h + k * d, d);
                    dx.middleCols(h + k * d, d).noalias() = ds.transpose() * x.middleCols(k * d, d);
                  }
                  g.accumulate(qkv, std::move(dx));
                });
}

inline Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  Graph& g = a.graph();
  detail::require_shape(start >= 0 && start + count <= a.cols(), "slice_cols");
  return g.push(a.value().middleCols(start, count), g.needs_grad(a),
                [a, start, count](Graph& g, const Matrix& grad) {
                  Matrix full = Matrix::Zero(a.rows(), a.cols());
                  full.middleCols(start, count) = grad;
                  g.accumulate(a, full);
                });
}

inline Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  Graph& g = a.graph();
  detail::require_shape(start >= 0 && start + count <= a.rows(), "slice_rows");
  return g.push(a.value().middleRows(start, count), g.needs_grad(a),
                [a, start, count](Graph& g, const Matrix& grad) {
                  Matrix full = Matrix::Zero(a.rows(), a.cols());
                  full.middleRows(start, count) = grad;
                  g.accumulate(a, full);
                });
}

inline Var row(Var a, Eigen::Index r) { return slice_rows(a, r, 1); }

inline Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ArgumentError("concat_cols: no inputs");
  Graph& g = parts.front().graph();
  Eigen::Index total = 0;
  bool needs = false;
  for (const Var& p : parts) {
    detail::require_shape(p.rows() == parts.front().rows(), "concat_cols");
    total += p.cols();
    needs = needs || g.needs_grad(p);
  }
  Matrix out(parts.front().rows(), total);
  Eigen::Index offset = 0;
  for (const Var& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return g.push(std::move(out), needs, [inputs](Graph& g, const Matrix& grad) {
    Eigen::Index off = 0;
    for (const Var& p : inputs) {
      if (g.needs_grad(p)) g.accumulate(p, grad.middleCols(off, p.cols()));
      off += p.cols();
    }
  });
}

inline Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

inline Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ArgumentError("concat_rows: no inputs");
  Graph& g = parts.front().graph();
  Eigen::Index total = 0;
  bool needs = false;
  for (const Var& p : parts) {
    detail::require_shape(p.cols() == parts.front().cols(), "concat_rows");
    total += p.rows();
    needs = needs || g.needs_grad(p);
  }
  Matrix out(total, parts.front().cols());
  Eigen::Index offset = 0;
  for (const Var& p : parts) {
    out.middleRows(offset, p.rows()) = p.value();
    offset += p.rows();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return g.push(std::move(out), needs, [inputs](Graph& g, const Matrix& grad) {
    Eigen::Index off = 0;
    for (const Var& p : inputs) {
      if (g.needs_grad(p)) g.accumulate(p, grad.middleRows(off, p.rows()));
      off += p.rows();
    }
  });
}

// Cosine similarity between matching rows of a and b, as an n x 1 column.
// Rows where either norm is below eps yield 0 with zero gradient.
inline Var row_cosine(Var a, Var b, double eps = 1e-8) {
  Graph& g = detail::same_graph(a, b);
  detail::require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "row_cosine");
  const Eigen::Index n = a.rows();
  Matrix out = Matrix::Zero(n, 1);
  Eigen::VectorXd na(n), nb(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    na(r) = a.value().row(r).norm();
    nb(r) = b.value().row(r).norm();
    if (na(r) >= eps && nb(r) >= eps) {
      out(r, 0) = a.value().row(r).dot(b.value().row(r)) / (na(r) * nb(r));
    }
  }
  Matrix cos = out;
  return g.push(std::move(out), g.needs_grad(a) || g.needs_grad(b),
                [a, b, na, nb, cos = std::move(cos), eps](Graph& g, const Matrix& grad) {
                  Matrix ga = Matrix::Zero(a.rows(), a.cols());
                  Matrix gb = Matrix::Zero(b.rows(), b.cols());
                  for (Eigen::Index r = 0; r < a.rows(); ++r) {
                    if (na(r) < eps || nb(r) < eps) continue;
                    const double c = cos(r, 0);
                    const double denom = na(r) * nb(r);
                    ga.row(r) = grad(r, 0) * (b.value().row(r) / denom - c * a.value().row(r) / (na(r) * na(r)));
                    gb.row(r) = grad(r, 0) * (a.value().row(r) / denom - c * b.value().row(r) / (nb(r) * nb(r)));
                  }
                  g.accumulate(a, ga);
                  g.accumulate(b, gb);
                });
}

// Scales each row to unit L2 norm; rows with norm below eps become zero.
inline Var normalize_rows(Var a, double eps = 1e-8) {
  Graph& g = a.graph();
  const Eigen::Index n = a.rows();
  Matrix out = Matrix::Zero(n, a.cols());
  Eigen::VectorXd norms(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    norms(r) = a.value().row(r).norm();
    if (norms(r) >= eps) out.row(r) = a.value().row(r) / norms(r);
  }
  Matrix unit = out;
  return g.push(std::move(out), g.needs_grad(a),
                [a, norms, unit = std::move(unit), eps](Graph& g, const Matrix& grad) {
                  Matrix d = Matrix::Zero(a.rows(), a.cols());
                  for (Eigen::Index r = 0; r < a.rows(); ++r) {
                    if (norms(r) < eps) continue;
                    const double proj = grad.row(r).dot(unit.row(r));
                    d.row(r) = (grad.row(r) - proj * unit.row(r)) / norms(r);
                  }
                  g.accumulate(a, d);
                });
}

// Picks entries (r, c) of a into a 1 x k row.
inline Var gather_entries(Var a, std::vector<std::pair<int, int>> entries) {
  Graph& g = a.graph();
  Matrix out(1, static_cast<Eigen::Index>(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    out(0, static_cast<Eigen::Index>(i)) = a.value()(entries[i].first, entries[i].second);
  }
  return g.push(std::move(out), g.needs_grad(a), [a, entries = std::move(entries)](Graph& g, const Matrix& grad) {
    Matrix d = Matrix::Zero(a.rows(), a.cols());
    for (std::size_t i = 0; i < entries.size(); ++i) {
      d(entries[i].first, entries[i].second) += grad(0, static_cast<Eigen::Index>(i));
    }
    g.accumulate(a, d);
  });
}

// out(k, l) = row(0, l) - col(k, 0)
inline Var outer_difference(Var col, Var row_vec) {
  Graph& g = detail::same_graph(col, row_vec);
  detail::require_shape(col.cols() == 1 && row_vec.rows() == 1, "outer_difference");
  Matrix out(col.rows(), row_vec.cols());
  for (Eigen::Index k = 0; k < col.rows(); ++k) {
    out.row(k) = row_vec.value().row(0).array() - col.value()(k, 0);
  }
  return g.push(std::move(out), g.needs_grad(col) || g.needs_grad(row_vec),
                [col, row_vec](Graph& g, const Matrix& grad) {
                  if (g.needs_grad(col)) g.accumulate(col, -grad.rowwise().sum());
                  if (g.needs_grad(row_vec)) g.accumulate(row_vec, grad.colwise().sum());
                });
}

// log(1 + sum(exp(a))) over every entry, computed stably.
inline Var log1p_sum_exp(Var a) {
  Graph& g = a.graph();
  const double mx = std::max(0.0, a.value().size() ? a.value().maxCoeff() : 0.0);
  const Matrix shifted = (a.value().array() - mx).exp().matrix();
  const double total = std::exp(-mx) + shifted.sum();
  Matrix out(1, 1);
  out(0, 0) = mx + std::log(total);
  Matrix weights = shifted / total;
  return g.push(std::move(out), g.needs_grad(a), [a, weights = std::move(weights)](Graph& g, const Matrix& grad) {
    g.accumulate(a, weights * grad(0, 0));
  });
}

// Cross-entropy of a 1 x k logit row against a target index: -log softmax(logits)[target].
inline Var cross_entropy(Var logits, int target) {
  Graph& g = logits.graph();
  detail::require_shape(logits.rows() == 1 && target >= 0 && target < logits.cols(), "cross_entropy");
  const Eigen::RowVectorXd l = logits.value().row(0);
  const double mx = l.maxCoeff();
  const Eigen::RowVectorXd e = (l.array() - mx).exp().matrix();
  const double z = e.sum();
  Matrix out(1, 1);
  out(0, 0) = -(l(target) - mx - std::log(z));
  Matrix probs = e / z;
  return g.push(std::move(out), g.needs_grad(logits),
                [logits, target, probs = std::move(probs)](Graph& g, const Matrix& grad) {
                  Matrix d = probs;
                  d(0, target) -= 1.0;
                  g.accumulate(logits, d * grad(0, 0));
                });
}

// Sum of scalar nodes scaled by a constant.
inline Var weighted_sum(std::span<const Var> scalars, double weight) {
  if (scalars.empty()) throw ArgumentError("weighted_sum: no inputs");
  Graph& g = scalars.front().graph();
  double total = 0.0;
  bool needs = false;
  for (const Var& s : scalars) {
    total += s.scalar();
    needs = needs || g.needs_grad(s);
  }
  Matrix out(1, 1);
  out(0, 0) = total * weight;
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  return g.push(std::move(out), needs, [inputs, weight](Graph& g, const Matrix& grad) {
    for (const Var& s : inputs) g.accumulate(s, grad * weight);
  });
}

}  // namespace ag
}  // namespace ecr
