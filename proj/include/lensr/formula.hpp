#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lensr/random.hpp"

namespace lensr {

/// Propositional formula over integer variable ids (1-based).
struct Formula {
  enum class Kind : std::uint8_t { Var, Not, And, Or, Implies, True, False };

  Kind kind = Kind::True;
  int var = 0;
  std::vector<Formula> children;

  static Formula variable(int id);
  static Formula negation(Formula child);
  /// Requires at least two children.
  static Formula conjunction(std::vector<Formula> children);
  static Formula disjunction(std::vector<Formula> children);
  static Formula implication(Formula antecedent, Formula consequent);
  static Formula constant(bool value);

  /// Var or Not(Var).
  bool is_literal() const;
  bool operator==(const Formula&) const = default;
};

/// Partial map from variable id to truth value.
class Assignment {
 public:
  Assignment() = default;
  /// Variables 1..num_vars take bit (var - 1) of `bits`.
  static Assignment from_bits(std::uint64_t bits, int num_vars);
  /// Signed literals: +v means v is true, -v false.
  static Assignment from_literals(std::span<const int> literals);

  void set(int var, bool value);
  std::optional<bool> get(int var) const;
  bool contains(int var) const { return get(var).has_value(); }
  /// Throws std::out_of_range when `var` is unassigned.
  bool value(int var) const;

  int max_var() const { return static_cast<int>(values_.size()); }
  std::size_t size() const;
  bool empty() const { return size() == 0; }
  /// Assigned variables as signed literals, ascending by variable.
  std::vector<int> literals() const;

  bool operator==(const Assignment&) const = default;

 private:
  std::vector<std::int8_t> values_;  // index var-1; -1 unassigned
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Identifier names for variable ids, in id order.
class SymbolTable {
 public:
  SymbolTable() = default;
  /// x1 .. xn
  static SymbolTable numbered(int n);

  int intern(std::string_view name);
  std::optional<int> find(std::string_view name) const;
  /// Name of `id`, or "x<id>" when the table has no entry.
  std::string name(int id) const;
  int size() const { return static_cast<int>(names_.size()); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> ids_;
};

/// Infix grammar, loosest first: `->` (right-assoc), `|`, `&`, `!`.
/// Identifiers get ids in order of first appearance unless `symbols` already
/// knows them; `T` and `F` are the constants.
Formula parse_formula(std::string_view text, SymbolTable* symbols = nullptr);

/// Minimal-parenthesis rendering that parse_formula reads back to the same
/// tree (given the same symbol table).
std::string to_string(const Formula& f, const SymbolTable* symbols = nullptr);

/// Throws std::out_of_range if a variable of `f` is missing from `tau`.
bool eval(const Formula& f, const Assignment& tau);
/// Evaluation with variable v read from bit (v - 1).
bool eval_bits(const Formula& f, std::uint64_t bits);

/// Literals (a variable, possibly negated) and constants have depth 1.
int depth(const Formula& f);
int max_var(const Formula& f);
/// Sorted distinct variable ids.
std::vector<int> variables(const Formula& f);
std::size_t node_count(const Formula& f);

/// Removes T/F below the root. The result is either a constant or
/// constant-free.
Formula simplify_constants(const Formula& f);
/// Pushes negation down to variables (De Morgan; !(a -> b) = a & !b).
/// Implications not under a negation are kept.
Formula push_negations(const Formula& f);
/// Renumbers variables to 1..n in order of first appearance.
Formula canonicalize(const Formula& f);

/// Random contingent formula over variables 1..num_vars with depth at most
/// max_depth. Throws std::runtime_error after 1000 rejected draws.
Formula random_formula(int num_vars, int max_depth, std::mt19937_64& rng);

struct AssignmentSample {
  std::vector<Assignment> sat;
  std::vector<Assignment> unsat;
};

/// Brute force over variables 1..num_vars (default: max_var(f)); draws up to
/// max_each assignments per class uniformly without replacement, returned in
/// ascending bit order.
AssignmentSample enumerate_assignments(const Formula& f, int max_each, std::mt19937_64& rng,
                                       int num_vars = -1);

inline constexpr int kMaxEnumerationVars = 24;

}  // namespace lensr
