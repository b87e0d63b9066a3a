#pragma once

// One randomized gradient-check case per differentiable op.

#include <string>
#include <vector>

#include "lensr/random.hpp"
#include "support/gradcheck.hpp"

namespace lensr::testing {

struct OpCase {
  std::string name;
  GradCheck result;
};

/// Runs every op once with shapes drawn from `seed` (each dimension 1..8).
inline std::vector<OpCase> run_op_cases(std::uint64_t seed) {
  using namespace lensr::ad;
  std::mt19937_64 rng(seed);
  auto dim = [&] { return static_cast<std::size_t>(1 + uniform_index(rng, 8)); };
  const std::size_t r = dim(), c = dim(), k = dim();
  std::vector<OpCase> out;

  // Projects a non-scalar result to a scalar with fixed random weights.
  auto projector = [&](std::size_t rows, std::size_t cols) {
    Matrix w = random_matrix(rng, rows, cols);
    return [w](Var v) {
      Tape& t = *v.tape();
      return sum(mul(v, t.constant(w)));
    };
  };
  auto run = [&](const std::string& name, std::vector<Tensor*> ps, const std::function<Var(Tape&)>& f) {
    out.push_back({name, grad_check(ps, f)});
  };

  Tensor a("a", random_matrix(rng, r, k));
  Tensor b("b", random_matrix(rng, k, c));
  Tensor bt("bt", random_matrix(rng, c, k));
  Tensor x("x", random_matrix(rng, r, c));
  Tensor y("y", random_matrix(rng, r, c));
  Tensor bias("bias", random_matrix(rng, 1, c));
  Tensor w0("w0", random_matrix(rng, k, c)), w1("w1", random_matrix(rng, k, c)), w2("w2", random_matrix(rng, k, c));
  std::vector<int> group;
  for (std::size_t i = 0; i < r; ++i) group.push_back(static_cast<int>(uniform_index(rng, 3)));

  auto p_rc = projector(r, c);
  auto p_1c = projector(1, c);
  auto p_r2c = projector(r, 2 * c);

  run("matmul", {&a, &b}, [&](Tape& t) { return p_rc(matmul(t.bind(a), t.bind(b))); });
  run("matmul_nt", {&a, &bt}, [&](Tape& t) { return p_rc(matmul_nt(t.bind(a), t.bind(bt))); });
  run("grouped_matmul", {&a, &w0, &w1, &w2}, [&](Tape& t) {
    const std::vector<Var> ws{t.bind(w0), t.bind(w1), t.bind(w2)};
    return p_rc(grouped_matmul(t.bind(a), ws, group));
  });
  run("add", {&x, &y}, [&](Tape& t) { return p_rc(add(t.bind(x), t.bind(y))); });
  run("sub", {&x, &y}, [&](Tape& t) { return p_rc(sub(t.bind(x), t.bind(y))); });
  run("mul", {&x, &y}, [&](Tape& t) { return p_rc(mul(t.bind(x), t.bind(y))); });
  run("scalar_mul", {&x}, [&](Tape& t) { return p_rc(scalar_mul(t.bind(x), -1.7)); });
  run("affine", {&x}, [&](Tape& t) { return p_rc(affine(t.bind(x), 0.3, 2.0)); });
  run("relu", {&x}, [&](Tape& t) { return p_rc(relu(t.bind(x))); });
  run("sigmoid", {&x}, [&](Tape& t) { return p_rc(sigmoid(t.bind(x))); });
  run("hinge", {&x}, [&](Tape& t) { return p_rc(hinge(t.bind(x), 0.5)); });
  run("add_row_broadcast", {&x, &bias}, [&](Tape& t) { return p_rc(add_row_broadcast(t.bind(x), t.bind(bias))); });
  run("sum_rows", {&x}, [&](Tape& t) { return p_1c(sum_rows(t.bind(x))); });
  run("sum", {&x}, [&](Tape& t) { return scalar_mul(sum(t.bind(x)), 0.7); });
  run("sq_euclidean", {&x, &y}, [&](Tape& t) { return sq_euclidean(t.bind(x), t.bind(y)); });
  run("frobenius_sq", {&x}, [&](Tape& t) { return frobenius_sq(t.bind(x)); });

  std::vector<int> picks;
  for (std::size_t i = 0; i < r + 1; ++i) picks.push_back(static_cast<int>(uniform_index(rng, r)));
  auto p_pick = projector(picks.size(), c);
  run("gather_rows", {&x}, [&](Tape& t) { return p_pick(gather_rows(t.bind(x), picks)); });

  std::vector<std::vector<int>> bags(r);
  for (auto& bag : bags) {
    const std::size_t n = 1 + uniform_index(rng, 3);
    for (std::size_t i = 0; i < n; ++i) bag.push_back(static_cast<int>(uniform_index(rng, k)));
  }
  Tensor table("table", random_matrix(rng, k, c));
  run("embedding_sum", {&table}, [&](Tape& t) { return p_rc(embedding_sum(t.bind(table), bags)); });
  run("concat_cols", {&x, &y}, [&](Tape& t) { return p_r2c(concat_cols(t.bind(x), t.bind(y))); });

  Matrix wv(r, 2);
  for (double& v : wv.data()) v = 0.1 + uniform_real(rng);
  Tensor weights("weights", wv);
  Tensor rows("rows", random_matrix(rng, 2 * r, c));
  run("weighted_row_average", {&weights, &rows},
      [&](Tape& t) { return p_rc(weighted_row_average(t.bind(weights), t.bind(rows))); });

  run("softmax_rows", {&x}, [&](Tape& t) { return p_rc(softmax_rows(t.bind(x))); });
  run("log_softmax_rows", {&x}, [&](Tape& t) { return p_rc(log_softmax_rows(t.bind(x))); });
  std::vector<int> labels;
  for (std::size_t i = 0; i < r; ++i) labels.push_back(static_cast<int>(uniform_index(rng, c)));
  run("cross_entropy", {&x}, [&](Tape& t) { return cross_entropy(t.bind(x), labels); });
  Matrix targets(r, c);
  for (double& v : targets.data()) v = static_cast<double>(uniform_index(rng, 2));
  run("bce_with_logits", {&x}, [&](Tape& t) { return bce_with_logits(t.bind(x), targets); });
  return out;
}

}  // namespace lensr::testing
