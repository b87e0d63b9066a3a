#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lensr/formula.hpp"

namespace lensr {

/// Signed variable ids, never 0.
using Clause = std::vector<int>;

struct Cnf {
  int num_vars = 0;
  std::vector<Clause> clauses;
  /// Input variables (sorted); the remaining ids are encoding auxiliaries.
  std::vector<int> original_vars;

  /// Throws std::invalid_argument on literal 0 or |literal| > num_vars.
  void validate() const;
  bool satisfied_by(const Assignment& tau) const;
  bool is_original(int var) const;

  bool operator==(const Cnf&) const = default;
};

/// Gate variables introduced by the Tseytin encoding.
struct TseytinMap {
  std::vector<int> input_vars;
  std::vector<int> aux_vars;
  /// aux var -> the sub-formula it is equivalent to
  std::map<int, Formula> gate_definitions;
};

struct TseytinResult {
  Cnf cnf;
  TseytinMap map;
};

/// Linear-size equisatisfiable CNF. Inputs are variables 1..max(num_inputs,
/// max_var(f)); every connective gets an auxiliary numbered above them with
/// full equivalence clauses, so each model of f extends to exactly one model
/// of the CNF. Negation is folded into literals.
TseytinResult to_cnf_tseytin(const Formula& f, int num_inputs = 0);

/// Equivalent CNF over the formula's own variables by distributing Or over
/// And, dropping tautologies and subsumed clauses. Throws std::length_error
/// when a disjunction expands past `max_clauses` clauses.
Cnf to_cnf_direct(const Formula& f, int num_inputs = 0, std::size_t max_clauses = 4096);

/// DPLL with unit propagation, branching on the lowest-index unassigned
/// variable (true first). Stops as soon as every clause is satisfied;
/// variables still free are reported false. `assumptions` are literals forced
/// before search.
std::optional<Assignment> dpll_sat(const Cnf& c, std::span<const int> assumptions = {});

/// DIMACS text. Input variables are recorded in a `c inputs ... 0` comment
/// line when they differ from 1..num_vars.
std::string write_dimacs(const Cnf& c);
/// Reads `p cnf` DIMACS; `c` lines are comments except `c inputs`.
Cnf parse_dimacs(std::string_view text);

}  // namespace lensr
