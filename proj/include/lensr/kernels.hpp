#pragma once

// Dense kernels behind the autodiff engine.
//
// Every kernel exists twice: an OpenMP version (row-parallel, used by the
// library) and a plain serial reference in `kernels::serial` used by the
// tests and the benchmark. Both accumulate each output element in the same
// order, so their results are bitwise identical.

#include <span>

#include "lensr/matrix.hpp"

namespace lensr::kernels {

/// out = a * b. `out` is resized.
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
/// out += a^T * b
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& out);
/// out += a * b^T
void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& out);

/// Row i of the result is a.row(i) * weights[group[i]]. `out` is resized.
void grouped_matmul(const Matrix& a, std::span<const Matrix* const> weights,
                    std::span<const int> group, Matrix& out);
/// Accumulates the gradients of grouped_matmul. Null entries in
/// `grad_weights` (and a null `grad_a`) are skipped.
void grouped_matmul_backward(const Matrix& a, std::span<const Matrix* const> weights,
                             std::span<const int> group, const Matrix& grad_out,
                             Matrix* grad_a, std::span<Matrix* const> grad_weights);

namespace serial {
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& out);
void grouped_matmul(const Matrix& a, std::span<const Matrix* const> weights,
                    std::span<const int> group, Matrix& out);
void grouped_matmul_backward(const Matrix& a, std::span<const Matrix* const> weights,
                             std::span<const int> group, const Matrix& grad_out,
                             Matrix* grad_a, std::span<Matrix* const> grad_weights);
}  // namespace serial

}  // namespace lensr::kernels
