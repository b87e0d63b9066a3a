#include "lensr/kernels.hpp"

#include <cstdint>
#include <string>

namespace lensr::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::int64_t kParallelWork = 1 << 15;

void check_matmul(const Matrix& a, const Matrix& b, const char* what) {
  if (a.cols() != b.rows())
    throw ShapeError(std::string(what) + ": inner dimensions differ " + a.shape_string() +
                     " * " + b.shape_string());
}

void check_groups(const Matrix& a, std::span<const Matrix* const> weights,
                  std::span<const int> group) {
  if (group.size() != a.rows()) throw ShapeError("grouped_matmul: one group per row required");
  if (weights.empty()) throw ShapeError("grouped_matmul: no weights");
  const auto out_cols = weights.front()->cols();
  for (const Matrix* w : weights) {
    if (w->rows() != a.cols() || w->cols() != out_cols)
      throw ShapeError("grouped_matmul: weight shape " + w->shape_string() +
                       " incompatible with input " + a.shape_string());
  }
  for (int g : group)
    if (g < 0 || static_cast<std::size_t>(g) >= weights.size())
      throw ShapeError("grouped_matmul: group index out of range");
}

// out_row = a_row * w, accumulated over k in ascending order.
inline void row_times(const double* a_row, const Matrix& w, double* out_row) {
  const std::size_t inner = w.rows();
  const std::size_t n = w.cols();
  for (std::size_t j = 0; j < n; ++j) out_row[j] = 0.0;
  for (std::size_t k = 0; k < inner; ++k) {
    const double aik = a_row[k];
    if (aik == 0.0) continue;
    const double* w_row = w.data().data() + k * n;
    for (std::size_t j = 0; j < n; ++j) out_row[j] += aik * w_row[j];
  }
}

}  // namespace

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  check_matmul(a, b, "matmul");
  out = Matrix(a.rows(), b.cols());
  const auto rows = static_cast<std::int64_t>(a.rows());
  const std::int64_t work = rows * static_cast<std::int64_t>(a.cols() * b.cols());
  const double* ad = a.data().data();
  double* od = out.data().data();
  const std::size_t inner = a.cols();
  const std::size_t n = b.cols();
#pragma omp parallel for schedule(static) if (work > kParallelWork)
  for (std::int64_t i = 0; i < rows; ++i) row_times(ad + i * inner, b, od + i * n);
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.rows() != b.rows())
    throw ShapeError("matmul_tn_acc: row counts differ " + a.shape_string() + " vs " +
                     b.shape_string());
  if (out.rows() != a.cols() || out.cols() != b.cols())
    throw ShapeError("matmul_tn_acc: output shape " + out.shape_string());
  const auto out_rows = static_cast<std::int64_t>(a.cols());
  const std::int64_t work = out_rows * static_cast<std::int64_t>(a.rows() * b.cols());
  const std::size_t m = a.rows();
  const std::size_t n = b.cols();
#pragma omp parallel for schedule(static) if (work > kParallelWork)
  for (std::int64_t k = 0; k < out_rows; ++k) {
    double* o = out.data().data() + k * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double aik = a(i, static_cast<std::size_t>(k));
      if (aik == 0.0) continue;
      const double* b_row = b.data().data() + i * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += aik * b_row[j];
    }
  }
}

void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.cols())
    throw ShapeError("matmul_nt_acc: column counts differ " + a.shape_string() + " vs " +
                     b.shape_string());
  if (out.rows() != a.rows() || out.cols() != b.rows())
    throw ShapeError("matmul_nt_acc: output shape " + out.shape_string());
  const auto rows = static_cast<std::int64_t>(a.rows());
  const std::int64_t work = rows * static_cast<std::int64_t>(b.rows() * a.cols());
  const std::size_t inner = a.cols();
#pragma omp parallel for schedule(static) if (work > kParallelWork)
  for (std::int64_t i = 0; i < rows; ++i) {
    const double* a_row = a.data().data() + i * inner;
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* b_row = b.data().data() + j * inner;
      double s = 0.0;
      for (std::size_t k = 0; k < inner; ++k) s += a_row[k] * b_row[k];
      out(static_cast<std::size_t>(i), j) += s;
    }
  }
}

void grouped_matmul(const Matrix& a, std::span<const Matrix* const> weights,
                    std::span<const int> group, Matrix& out) {
  check_groups(a, weights, group);
  const std::size_t n = weights.front()->cols();
  out = Matrix(a.rows(), n);
  const auto rows = static_cast<std::int64_t>(a.rows());
  const std::int64_t work = rows * static_cast<std::int64_t>(a.cols() * n);
  const double* ad = a.data().data();
  double* od = out.data().data();
#pragma omp parallel for schedule(static) if (work > kParallelWork)
  for (std::int64_t i = 0; i < rows; ++i)
    row_times(ad + i * a.cols(), *weights[static_cast<std::size_t>(group[i])], od + i * n);
}

void grouped_matmul_backward(const Matrix& a, std::span<const Matrix* const> weights,
                             std::span<const int> group, const Matrix& grad_out,
                             Matrix* grad_a, std::span<Matrix* const> grad_weights) {
  check_groups(a, weights, group);
  const std::size_t n = weights.front()->cols();
  const std::size_t inner = a.cols();
  const auto rows = static_cast<std::int64_t>(a.rows());
  const std::int64_t work = rows * static_cast<std::int64_t>(inner * n);
  if (grad_a != nullptr) {
#pragma omp parallel for schedule(static) if (work > kParallelWork)
    for (std::int64_t i = 0; i < rows; ++i) {
      const Matrix& w = *weights[static_cast<std::size_t>(group[i])];
      const double* g = grad_out.data().data() + i * n;
      double* o = grad_a->data().data() + i * inner;
      for (std::size_t k = 0; k < inner; ++k) {
        const double* w_row = w.data().data() + k * n;
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += g[j] * w_row[j];
        o[k] += s;
      }
    }
  }
  // Weight gradients: parallel over rows of W (the input feature index), so
  // every output element is owned by one thread and sums over i in order.
  const auto feat = static_cast<std::int64_t>(inner);
#pragma omp parallel for schedule(static) if (work > kParallelWork)
  for (std::int64_t k = 0; k < feat; ++k) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
      Matrix* gw = grad_weights[static_cast<std::size_t>(group[i])];
      if (gw == nullptr) continue;
      const double aik = a(i, static_cast<std::size_t>(k));
      if (aik == 0.0) continue;
      const double* g = grad_out.data().data() + i * n;
      double* o = gw->data().data() + k * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += aik * g[j];
    }
  }
}

}  // namespace lensr::kernels
