#include <algorithm>

#include "lensr/formula.hpp"

namespace lensr {

namespace {

constexpr double kLiteralProbability = 0.3;

Formula random_literal(int num_vars, std::mt19937_64& rng) {
  Formula v = Formula::variable(1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(num_vars))));
  return uniform_index(rng, 2) == 0 ? v : Formula::negation(std::move(v));
}

Formula grow(int level, int num_vars, int max_depth, std::mt19937_64& rng) {
  if (level >= max_depth || uniform_real(rng) < kLiteralProbability)
    return random_literal(num_vars, rng);
  const std::uint64_t op = uniform_index(rng, 4);
  switch (op) {
    case 0: return Formula::negation(grow(level + 1, num_vars, max_depth, rng));
    case 1:
    case 2: {
      const std::size_t arity = 2 + uniform_index(rng, 2);
      std::vector<Formula> cs;
      for (std::size_t i = 0; i < arity; ++i) cs.push_back(grow(level + 1, num_vars, max_depth, rng));
      return op == 1 ? Formula::conjunction(std::move(cs)) : Formula::disjunction(std::move(cs));
    }
    default: {
      Formula a = grow(level + 1, num_vars, max_depth, rng);
      Formula b = grow(level + 1, num_vars, max_depth, rng);
      return Formula::implication(std::move(a), std::move(b));
    }
  }
}

}  // namespace

Formula random_formula(int num_vars, int max_depth, std::mt19937_64& rng) {
  if (num_vars < 1 || max_depth < 1)
    throw std::invalid_argument("random_formula: num_vars and max_depth must be >= 1");
  if (num_vars > kMaxEnumerationVars)
    throw std::invalid_argument("random_formula: too many variables for the contingency check");
  const std::uint64_t rows = std::uint64_t{1} << num_vars;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Formula f = grow(1, num_vars, max_depth, rng);
    bool any_true = false;
    bool any_false = false;
    for (std::uint64_t bits = 0; bits < rows && !(any_true && any_false); ++bits)
      (eval_bits(f, bits) ? any_true : any_false) = true;
    if (any_true && any_false) return f;
  }
  throw std::runtime_error("random_formula: no contingent formula after 1000 draws");
}

AssignmentSample enumerate_assignments(const Formula& f, int max_each, std::mt19937_64& rng,
                                       int num_vars) {
  if (num_vars < 0) num_vars = max_var(f);
  if (num_vars < max_var(f))
    throw std::invalid_argument("enumerate_assignments: num_vars below the formula's variables");
  if (num_vars > kMaxEnumerationVars)
    throw std::invalid_argument("enumerate_assignments: " + std::to_string(num_vars) +
                                " variables exceed the brute-force bound of " +
                                std::to_string(kMaxEnumerationVars));
  if (max_each < 0) throw std::invalid_argument("enumerate_assignments: negative max_each");
  std::vector<std::uint64_t> sat;
  std::vector<std::uint64_t> unsat;
  const std::uint64_t rows = std::uint64_t{1} << num_vars;
  for (std::uint64_t bits = 0; bits < rows; ++bits) (eval_bits(f, bits) ? sat : unsat).push_back(bits);

  auto draw = [&](std::vector<std::uint64_t>& pool) {
    const std::size_t k = std::min(pool.size(), static_cast<std::size_t>(max_each));
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + uniform_index(rng, pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    std::vector<Assignment> out;
    for (std::uint64_t bits : pool) out.push_back(Assignment::from_bits(bits, num_vars));
    return out;
  };
  AssignmentSample s;
  s.sat = draw(sat);
  s.unsat = draw(unsat);
  return s;
}

}  // namespace lensr
