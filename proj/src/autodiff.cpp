#include "lensr/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "lensr/kernels.hpp"

namespace lensr::ad {

Tensor::Tensor(std::string n, Matrix v, bool rg)
    : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()), requires_grad(rg) {}

void Tensor::zero_grad() {
  if (!grad.same_shape(value)) grad = Matrix(value.rows(), value.cols());
  grad.fill(0.0);
}

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw std::logic_error("Var: not bound to a tape");
  return tape_->value_of(index_);
}

const Matrix& Var::grad() const {
  if (tape_ == nullptr) throw std::logic_error("Var: not bound to a tape");
  return tape_->grad_of(index_);
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ShapeError("Var::scalar on " + v.shape_string());
  return v(0, 0);
}

bool Var::requires_grad() const { return tape_ != nullptr && tape_->requires_grad(index_); }

Var Tape::push(Node node) {
  if (!node.value.all_finite()) throw NumericError("non-finite value produced on tape");
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) { return push(Node{std::move(value), {}, false, nullptr, {}}); }

Var Tape::variable(Matrix value) { return push(Node{std::move(value), {}, true, nullptr, {}}); }

Var Tape::bind(Tensor& t) { return push(Node{t.value, {}, t.requires_grad, &t, {}}); }

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(fn));
}

Var Tape::record(Matrix value, std::span<const Var> inputs, BackwardFn fn) {
  bool needs = false;
  for (const Var& v : inputs) {
    if (v.tape_ != this) throw std::logic_error("Tape::record: input from another tape");
    needs = needs || nodes_[v.index_].requires_grad;
  }
  Node node{std::move(value), {}, needs, nullptr, {}};
  if (needs) node.backward = std::move(fn);
  return push(std::move(node));
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this || loss.index_ >= nodes_.size())
    throw std::invalid_argument("backward: loss is not on this tape");
  const Matrix& lv = nodes_[loss.index_].value;
  if (lv.rows() != 1 || lv.cols() != 1)
    throw ShapeError("backward: loss must be scalar, got " + lv.shape_string());
  for (std::size_t i = 0; i <= loss.index_; ++i) {
    Node& n = nodes_[i];
    if (!n.grad.same_shape(n.value)) n.grad = Matrix(n.value.rows(), n.value.cols());
    else n.grad.fill(0.0);
  }
  nodes_[loss.index_].grad(0, 0) = 1.0;
  for (std::size_t i = loss.index_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.source != nullptr) {
      Tensor& t = *n.source;
      if (!t.grad.same_shape(t.value)) t.grad = Matrix(t.value.rows(), t.value.cols());
      auto dst = t.grad.data();
      auto src = n.grad.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
}

namespace {

Tape& tape_of(Var a) {
  if (a.tape() == nullptr) throw std::logic_error("op on unbound Var");
  return *a.tape();
}

void require_same_tape(Var a, Var b) {
  if (a.tape() != b.tape()) throw std::logic_error("op mixes Vars from different tapes");
}

void accumulate(Tape& t, Var v, const Matrix& g) {
  if (!t.requires_grad(v.index())) return;
  auto dst = t.grad_of(v.index()).data();
  auto src = g.data();
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
}

Matrix scalar_matrix(double v) { return Matrix(1, 1, v); }

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  Tape& t = tape_of(a);
  Matrix out;
  kernels::matmul(a.value(), b.value(), out);
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(a.index()))
      kernels::matmul_nt_acc(g, tp.value_of(b.index()), tp.grad_of(a.index()));
    if (tp.requires_grad(b.index()))
      kernels::matmul_tn_acc(tp.value_of(a.index()), g, tp.grad_of(b.index()));
  });
}

Var matmul_nt(Var a, Var b) {
  require_same_tape(a, b);
  Tape& t = tape_of(a);
  Matrix out(a.rows(), b.rows());
  kernels::matmul_nt_acc(a.value(), b.value(), out);
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    // C = A B^T: dA = G B, dB = G^T A.
    if (tp.requires_grad(a.index())) {
      Matrix da;
      kernels::matmul(g, tp.value_of(b.index()), da);
      accumulate(tp, a, da);
    }
    if (tp.requires_grad(b.index()))
      kernels::matmul_tn_acc(g, tp.value_of(a.index()), tp.grad_of(b.index()));
  });
}

Var grouped_matmul(Var a, std::span<const Var> weights, std::span<const int> group) {
  Tape& t = tape_of(a);
  std::vector<const Matrix*> ws;
  std::vector<Var> inputs{a};
  for (const Var& w : weights) {
    require_same_tape(a, w);
    ws.push_back(&w.value());
    inputs.push_back(w);
  }
  Matrix out;
  kernels::grouped_matmul(a.value(), ws, group, out);
  std::vector<Var> wv(weights.begin(), weights.end());
  std::vector<int> grp(group.begin(), group.end());
  return t.record(std::move(out), inputs,
                  [a, wv = std::move(wv), grp = std::move(grp)](Tape& tp, const Matrix& g) {
                    std::vector<const Matrix*> ws;
                    std::vector<Matrix*> gws;
                    for (const Var& w : wv) {
                      ws.push_back(&tp.value_of(w.index()));
                      gws.push_back(tp.requires_grad(w.index()) ? &tp.grad_of(w.index())
                                                                : nullptr);
                    }
                    Matrix* ga = tp.requires_grad(a.index()) ? &tp.grad_of(a.index()) : nullptr;
                    kernels::grouped_matmul_backward(tp.value_of(a.index()), ws, grp, g, ga, gws);
                  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] += bv[k];
  return tape_of(a).record(std::move(out), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    accumulate(tp, a, g);
    accumulate(tp, b, g);
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Matrix out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] -= bv[k];
  return tape_of(a).record(std::move(out), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    accumulate(tp, a, g);
    if (tp.requires_grad(b.index())) {
      auto dst = tp.grad_of(b.index()).data();
      auto src = g.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] -= src[k];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Matrix out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] *= bv[k];
  return tape_of(a).record(std::move(out), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    auto gs = g.data();
    if (tp.requires_grad(a.index())) {
      auto dst = tp.grad_of(a.index()).data();
      auto bv = tp.value_of(b.index()).data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += gs[k] * bv[k];
    }
    if (tp.requires_grad(b.index())) {
      auto dst = tp.grad_of(b.index()).data();
      auto av = tp.value_of(a.index()).data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += gs[k] * av[k];
    }
  });
}

Var scalar_mul(Var a, double s) { return affine(a, s, 0.0); }

Var affine(Var a, double alpha, double beta) {
  Matrix out = a.value();
  for (double& v : out.data()) v = alpha * v + beta;
  return tape_of(a).record(std::move(out), {a}, [a, alpha](Tape& tp, const Matrix& g) {
    auto dst = tp.grad_of(a.index()).data();
    auto src = g.data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += alpha * src[k];
  });
}

Var relu(Var a) {
  Matrix out = a.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return tape_of(a).record(std::move(out), {a}, [a](Tape& tp, const Matrix& g) {
    auto dst = tp.grad_of(a.index()).data();
    auto x = tp.value_of(a.index()).data();
    auto src = g.data();
    for (std::size_t k = 0; k < dst.size(); ++k)
      if (x[k] > 0.0) dst[k] += src[k];
  });
}

Var sigmoid(Var a) {
  Matrix out = a.value();
  for (double& v : out.data()) v = 1.0 / (1.0 + std::exp(-v));
  Tape& t = tape_of(a);
  const std::size_t self = t.size();
  return t.record(std::move(out), {a}, [a, self](Tape& tp, const Matrix& g) {
    auto dst = tp.grad_of(a.index()).data();
    auto y = tp.value_of(self).data();
    auto src = g.data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k] * y[k] * (1.0 - y[k]);
  });
}

Var hinge(Var x, double margin) {
  Matrix out = x.value();
  for (double& v : out.data()) v = std::max(v + margin, 0.0);
  return tape_of(x).record(std::move(out), {x}, [x, margin](Tape& tp, const Matrix& g) {
    auto dst = tp.grad_of(x.index()).data();
    auto xv = tp.value_of(x.index()).data();
    auto src = g.data();
    for (std::size_t k = 0; k < dst.size(); ++k)
      if (xv[k] + margin > 0.0) dst[k] += src[k];
  });
}

Var add_row_broadcast(Var a, Var bias) {
  require_same_tape(a, bias);
  if (bias.rows() != 1 || bias.cols() != a.cols())
    throw ShapeError("add_row_broadcast: bias " + bias.value().shape_string() + " for " +
                     a.value().shape_string());
  Matrix out = a.value();
  const Matrix& bv = bias.value();
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += bv(0, j);
  return tape_of(a).record(std::move(out), {a, bias}, [a, bias](Tape& tp, const Matrix& g) {
    accumulate(tp, a, g);
    if (tp.requires_grad(bias.index())) {
      Matrix& gb = tp.grad_of(bias.index());
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gb(0, j) += g(i, j);
    }
  });
}

Var sum_rows(Var a) {
  const Matrix& v = a.value();
  Matrix out(1, v.cols());
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t j = 0; j < v.cols(); ++j) out(0, j) += v(i, j);
  return tape_of(a).record(std::move(out), {a}, [a](Tape& tp, const Matrix& g) {
    Matrix& ga = tp.grad_of(a.index());
    for (std::size_t i = 0; i < ga.rows(); ++i)
      for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += g(0, j);
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return tape_of(a).record(scalar_matrix(s), {a}, [a](Tape& tp, const Matrix& g) {
    const double gs = g(0, 0);
    for (double& d : tp.grad_of(a.index()).data()) d += gs;
  });
}

Var sq_euclidean(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a.value(), b.value(), "sq_euclidean");
  double s = 0.0;
  auto av = a.value().data();
  auto bv = b.value().data();
  for (std::size_t k = 0; k < av.size(); ++k) {
    const double d = av[k] - bv[k];
    s += d * d;
  }
  return tape_of(a).record(scalar_matrix(s), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    const double gs = g(0, 0);
    auto av = tp.value_of(a.index()).data();
    auto bv = tp.value_of(b.index()).data();
    if (tp.requires_grad(a.index())) {
      auto dst = tp.grad_of(a.index()).data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += 2.0 * gs * (av[k] - bv[k]);
    }
    if (tp.requires_grad(b.index())) {
      auto dst = tp.grad_of(b.index()).data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] -= 2.0 * gs * (av[k] - bv[k]);
    }
  });
}

Var frobenius_sq(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v * v;
  return tape_of(a).record(scalar_matrix(s), {a}, [a](Tape& tp, const Matrix& g) {
    const double gs = g(0, 0);
    auto dst = tp.grad_of(a.index()).data();
    auto av = tp.value_of(a.index()).data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += 2.0 * gs * av[k];
  });
}

Var gather_rows(Var a, std::span<const int> rows) {
  const Matrix& v = a.value();
  Matrix out(rows.size(), v.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || static_cast<std::size_t>(rows[i]) >= v.rows())
      throw ShapeError("gather_rows: row index out of range");
    auto src = v.row(static_cast<std::size_t>(rows[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  std::vector<int> idx(rows.begin(), rows.end());
  return tape_of(a).record(std::move(out), {a},
                           [a, idx = std::move(idx)](Tape& tp, const Matrix& g) {
                             Matrix& ga = tp.grad_of(a.index());
                             for (std::size_t i = 0; i < idx.size(); ++i) {
                               auto dst = ga.row(static_cast<std::size_t>(idx[i]));
                               auto src = g.row(i);
                               for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
                             }
                           });
}

Var embedding_sum(Var table, const std::vector<std::vector<int>>& rows_of) {
  const Matrix& v = table.value();
  Matrix out(rows_of.size(), v.cols());
  for (std::size_t i = 0; i < rows_of.size(); ++i) {
    auto dst = out.row(i);
    for (int r : rows_of[i]) {
      if (r < 0 || static_cast<std::size_t>(r) >= v.rows())
        throw ShapeError("embedding_sum: row index out of range");
      auto src = v.row(static_cast<std::size_t>(r));
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  }
  return tape_of(table).record(std::move(out), {table},
                               [table, rows_of](Tape& tp, const Matrix& g) {
                                 Matrix& gt = tp.grad_of(table.index());
                                 for (std::size_t i = 0; i < rows_of.size(); ++i)
                                   for (int r : rows_of[i]) {
                                     auto dst = gt.row(static_cast<std::size_t>(r));
                                     auto src = g.row(i);
                                     for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
                                   }
                               });
}

Var concat_cols(Var a, Var b) {
  require_same_tape(a, b);
  if (a.rows() != b.rows())
    throw ShapeError("concat_cols: row counts differ " + a.value().shape_string() + " vs " +
                     b.value().shape_string());
  const std::size_t ca = a.cols();
  const std::size_t cb = b.cols();
  Matrix out(a.rows(), ca + cb);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t j = 0; j < ca; ++j) out(i, j) = a.value()(i, j);
    for (std::size_t j = 0; j < cb; ++j) out(i, ca + j) = b.value()(i, j);
  }
  return tape_of(a).record(std::move(out), {a, b}, [a, b, ca, cb](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(a.index())) {
      Matrix& ga = tp.grad_of(a.index());
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < ca; ++j) ga(i, j) += g(i, j);
    }
    if (tp.requires_grad(b.index())) {
      Matrix& gb = tp.grad_of(b.index());
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < cb; ++j) gb(i, j) += g(i, ca + j);
    }
  });
}

Var weighted_row_average(Var weights, Var rows) {
  require_same_tape(weights, rows);
  const Matrix& w = weights.value();
  const Matrix& r = rows.value();
  const std::size_t n = w.rows();
  const std::size_t k = w.cols();
  if (r.rows() != n * k)
    throw ShapeError("weighted_row_average: " + w.shape_string() + " weights need " +
                     std::to_string(n * k) + " rows, got " + r.shape_string());
  Matrix out(n, r.cols());
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) total += w(i, c);
    if (total == 0.0) throw NumericError("weighted_row_average: weights sum to zero");
    auto dst = out.row(i);
    for (std::size_t c = 0; c < k; ++c) {
      auto src = r.row(i * k + c);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += w(i, c) * src[j];
    }
    for (double& v : dst) v /= total;
  }
  Tape& t = tape_of(weights);
  const std::size_t self = t.size();
  return t.record(std::move(out), {weights, rows}, [weights, rows, self](Tape& tp, const Matrix& g) {
    const Matrix& w = tp.value_of(weights.index());
    const Matrix& r = tp.value_of(rows.index());
    const Matrix& y = tp.value_of(self);
    const std::size_t k = w.cols();
    for (std::size_t i = 0; i < w.rows(); ++i) {
      double total = 0.0;
      for (std::size_t c = 0; c < k; ++c) total += w(i, c);
      auto gi = g.row(i);
      for (std::size_t c = 0; c < k; ++c) {
        auto rc = r.row(i * k + c);
        if (tp.requires_grad(weights.index())) {
          double s = 0.0;
          for (std::size_t j = 0; j < gi.size(); ++j) s += gi[j] * (rc[j] - y(i, j));
          tp.grad_of(weights.index())(i, c) += s / total;
        }
        if (tp.requires_grad(rows.index())) {
          auto dst = tp.grad_of(rows.index()).row(i * k + c);
          const double scale = w(i, c) / total;
          for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += scale * gi[j];
        }
      }
    }
  });
}

namespace {

Matrix softmax_of(const Matrix& v) {
  Matrix out = v;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double& x : row) {
      x = std::exp(x - mx);
      z += x;
    }
    for (double& x : row) x /= z;
  }
  return out;
}

}  // namespace

Var softmax_rows(Var a) {
  Tape& t = tape_of(a);
  const std::size_t self = t.size();
  return t.record(softmax_of(a.value()), {a}, [a, self](Tape& tp, const Matrix& g) {
    const Matrix& y = tp.value_of(self);
    Matrix& ga = tp.grad_of(a.index());
    for (std::size_t i = 0; i < y.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < y.cols(); ++j) ga(i, j) += y(i, j) * (g(i, j) - dot);
    }
  });
}

Var log_softmax_rows(Var a) {
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double x : row) z += std::exp(x - mx);
    const double lz = mx + std::log(z);
    for (double& x : row) x -= lz;
  }
  Tape& t = tape_of(a);
  const std::size_t self = t.size();
  return t.record(std::move(out), {a}, [a, self](Tape& tp, const Matrix& g) {
    const Matrix& y = tp.value_of(self);
    Matrix& ga = tp.grad_of(a.index());
    for (std::size_t i = 0; i < y.rows(); ++i) {
      double gs = 0.0;
      for (std::size_t j = 0; j < y.cols(); ++j) gs += g(i, j);
      for (std::size_t j = 0; j < y.cols(); ++j) ga(i, j) += g(i, j) - std::exp(y(i, j)) * gs;
    }
  });
}

Var cross_entropy(Var logits, std::span<const int> labels) {
  // Sizes are copied: recording below may move the tape's storage.
  const std::size_t rows = logits.rows();
  const std::size_t cols = logits.cols();
  if (labels.size() != rows) throw ShapeError("cross_entropy: one label per row required");
  for (int l : labels)
    if (l < 0 || static_cast<std::size_t>(l) >= cols) throw ShapeError("cross_entropy: label out of range");
  Var logp = log_softmax_rows(logits);
  Matrix picked(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    picked(i, static_cast<std::size_t>(labels[i])) = -1.0 / static_cast<double>(rows);
  Tape& t = tape_of(logits);
  return sum(mul(logp, t.constant(std::move(picked))));
}

Var bce_with_logits(Var logits, const Matrix& targets) {
  const Matrix& x = logits.value();
  require_same_shape(x, targets, "bce_with_logits");
  const double n = static_cast<double>(x.size());
  double s = 0.0;
  auto xv = x.data();
  auto tv = targets.data();
  for (std::size_t k = 0; k < xv.size(); ++k) {
    // log(1 + e^x) - t x, written to stay finite for large |x|.
    const double v = xv[k];
    s += std::max(v, 0.0) - v * tv[k] + std::log1p(std::exp(-std::abs(v)));
  }
  return tape_of(logits).record(
      scalar_matrix(s / n), {logits}, [logits, targets, n](Tape& tp, const Matrix& g) {
        const double gs = g(0, 0) / n;
        auto dst = tp.grad_of(logits.index()).data();
        auto xv = tp.value_of(logits.index()).data();
        auto tv = targets.data();
        for (std::size_t k = 0; k < dst.size(); ++k)
          dst[k] += gs * (1.0 / (1.0 + std::exp(-xv[k])) - tv[k]);
      });
}

}  // namespace lensr::ad
