// Textbook loops. Kept as the reference the OpenMP kernels are tested and
// benchmarked against; not used on the library's hot path.

#include "lensr/kernels.hpp"

namespace lensr::kernels::serial {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.rows()) throw ShapeError("serial::matmul: inner dimensions differ");
  out = Matrix(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols())
    throw ShapeError("serial::matmul_tn_acc: shape mismatch");
  for (std::size_t k = 0; k < a.cols(); ++k)
    for (std::size_t j = 0; j < b.cols(); ++j)
      for (std::size_t i = 0; i < a.rows(); ++i) out(k, j) += a(i, k) * b(i, j);
}

void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.cols() || out.rows() != a.rows() || out.cols() != b.rows())
    throw ShapeError("serial::matmul_nt_acc: shape mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      out(i, j) += s;
    }
}

void grouped_matmul(const Matrix& a, std::span<const Matrix* const> weights,
                    std::span<const int> group, Matrix& out) {
  if (group.size() != a.rows() || weights.empty())
    throw ShapeError("serial::grouped_matmul: shape mismatch");
  out = Matrix(a.rows(), weights.front()->cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const Matrix& w = *weights[static_cast<std::size_t>(group[i])];
    if (w.rows() != a.cols()) throw ShapeError("serial::grouped_matmul: shape mismatch");
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * w(k, j);
      out(i, j) = s;
    }
  }
}

void grouped_matmul_backward(const Matrix& a, std::span<const Matrix* const> weights,
                             std::span<const int> group, const Matrix& grad_out,
                             Matrix* grad_a, std::span<Matrix* const> grad_weights) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto g = static_cast<std::size_t>(group[i]);
    const Matrix& w = *weights[g];
    if (grad_a != nullptr)
      for (std::size_t k = 0; k < a.cols(); ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < w.cols(); ++j) s += grad_out(i, j) * w(k, j);
        (*grad_a)(i, k) += s;
      }
  }
  for (std::size_t k = 0; k < a.cols(); ++k)
    for (std::size_t i = 0; i < a.rows(); ++i) {
      Matrix* gw = grad_weights[static_cast<std::size_t>(group[i])];
      if (gw == nullptr) continue;
      for (std::size_t j = 0; j < gw->cols(); ++j) (*gw)(k, j) += a(i, k) * grad_out(i, j);
    }
}

}  // namespace lensr::kernels::serial
