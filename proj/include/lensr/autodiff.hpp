#pragma once

// Reverse-mode differentiation over dense matrices.
//
// A Tape owns every intermediate value produced while building a loss. Ops
// are free functions taking and returning Var handles; an op whose inputs
// all lack requires_grad records a plain value with no backward rule.
// Trainable parameters live outside the tape as Tensor objects and are bound
// with Tape::bind; backward() accumulates into Tensor::grad.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lensr/matrix.hpp"

namespace lensr::ad {

class NumericError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct Tensor {
  std::string name;
  Matrix value;
  Matrix grad;
  bool requires_grad = true;

  Tensor() = default;
  Tensor(std::string name, Matrix value, bool requires_grad = true);
  void zero_grad();
};

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  /// Gradient of the last backward() pass; zeros if the node needs no grad.
  const Matrix& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double scalar() const;
  bool requires_grad() const;
  Tape* tape() const { return tape_; }
  std::size_t index() const { return index_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}
  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Matrix& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Free leaf that requires grad; its gradient stays on the tape.
  Var variable(Matrix value);
  /// Leaf reading `t.value`. backward() adds into `t.grad` when t requires grad.
  Var bind(Tensor& t);

  /// Appends an op result. `fn` is kept only when some input requires grad.
  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Matrix value, std::span<const Var> inputs, BackwardFn fn);

  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  const Matrix& value_of(std::size_t i) const { return nodes_[i].value; }
  Matrix& grad_of(std::size_t i) { return nodes_[i].grad; }
  const Matrix& grad_of(std::size_t i) const { return nodes_[i].grad; }
  bool requires_grad(std::size_t i) const { return nodes_[i].requires_grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Tensor* source = nullptr;
    BackwardFn backward;
  };
  Var push(Node node);
  std::vector<Node> nodes_;
};

// --- linear algebra ---------------------------------------------------------
Var matmul(Var a, Var b);
/// a * b^T
Var matmul_nt(Var a, Var b);
/// Row i of the result is a.row(i) * weights[group[i]].
Var grouped_matmul(Var a, std::span<const Var> weights, std::span<const int> group);

// --- elementwise ------------------------------------------------------------
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scalar_mul(Var a, double s);
/// alpha * a + beta
Var affine(Var a, double alpha, double beta);
Var relu(Var a);
Var sigmoid(Var a);
/// max(x + margin, 0)
Var hinge(Var x, double margin);
/// a (n x d) plus the 1 x d row `bias` on every row.
Var add_row_broadcast(Var a, Var bias);

// --- reductions -------------------------------------------------------------
/// Column sums as a 1 x cols row.
Var sum_rows(Var a);
Var sum(Var a);
/// Squared Euclidean distance of two equally shaped tensors, 1 x 1.
Var sq_euclidean(Var a, Var b);
/// Sum of squared entries, 1 x 1.
Var frobenius_sq(Var a);

// --- row manipulation ---------------------------------------------------------
Var gather_rows(Var a, std::span<const int> rows);
/// Row i of the result is the sum of table rows listed in rows_of[i].
Var embedding_sum(Var table, const std::vector<std::vector<int>>& rows_of);
Var concat_cols(Var a, Var b);
/// weights is n x k; rows is (n*k) x d, where rows k*i .. k*i+k-1 belong to
/// output row i. Output row i is the weights-normalized average of its rows.
Var weighted_row_average(Var weights, Var rows);

// --- probabilistic heads ------------------------------------------------------
Var softmax_rows(Var a);
Var log_softmax_rows(Var a);
/// Mean negative log-likelihood of integer class labels under row softmax.
Var cross_entropy(Var logits, std::span<const int> labels);
/// Mean binary cross-entropy of sigmoid(logits) against 0/1 targets.
Var bce_with_logits(Var logits, const Matrix& targets);

}  // namespace lensr::ad
