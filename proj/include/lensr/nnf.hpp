#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lensr/formula.hpp"

namespace lensr {

using NodeId = std::uint32_t;

struct NnfNode {
  enum class Kind : std::uint8_t { Lit, True, False, And, Or };

  Kind kind = Kind::True;
  int literal = 0;       // Lit only
  int decision_var = 0;  // Or only; 0 when the node is not a decision
  std::vector<NodeId> children;

  bool operator==(const NnfNode&) const = default;
};

/// Negation normal form DAG stored as a topological arena: every child id is
/// smaller than its parent's id.
class NnfDag {
 public:
  NnfDag() = default;

  NodeId add_literal(int literal);
  NodeId add_true();
  NodeId add_false();
  NodeId add_and(std::vector<NodeId> children);
  NodeId add_or(std::vector<NodeId> children, int decision_var = 0);

  void set_root(NodeId id);
  NodeId root() const { return root_; }
  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return nodes_.size(); }
  std::size_t num_edges() const;
  const NnfNode& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<NnfNode>& nodes() const { return nodes_; }

  /// Largest variable id the DAG is declared over (at least every literal).
  int num_vars() const { return num_vars_; }
  void set_num_vars(int n);

  /// Sorted variables mentioned below `id`.
  const std::vector<int>& vars(NodeId id) const { return vars_.at(id); }

  bool operator==(const NnfDag& other) const {
    return nodes_ == other.nodes_ && root_ == other.root_ && num_vars_ == other.num_vars_;
  }

 private:
  NodeId push(NnfNode node, std::vector<int> vars);

  std::vector<NnfNode> nodes_;
  std::vector<std::vector<int>> vars_;
  NodeId root_ = 0;
  int num_vars_ = 0;
};

/// Hash-consing construction with constant folding. And nodes are flattened
/// and sorted; single-child And/Or collapse to the child.
class NnfBuilder {
 public:
  NodeId literal(int lit);
  NodeId constant(bool value);
  NodeId conjoin(std::vector<NodeId> children);
  NodeId disjoin(std::vector<NodeId> children, int decision_var = 0);

  const NnfDag& dag() const { return dag_; }
  /// Keeps the nodes reachable from `root`, renumbered so the root is last.
  NnfDag finish(NodeId root, int num_vars) const;

 private:
  NodeId intern(NnfNode node);

  NnfDag dag_;
  std::map<NnfNode, NodeId, bool (*)(const NnfNode&, const NnfNode&)> unique_{&node_less};
  static bool node_less(const NnfNode& a, const NnfNode& b);
};

struct DdnnfViolation {
  enum class Kind : std::uint8_t { NotDecomposable, NotDeterministic };
  NodeId node;
  Kind kind;
  std::string detail;
};

struct DdnnfReport {
  bool decomposable = true;
  bool deterministic = true;
  std::vector<DdnnfViolation> violations;
  bool ok() const { return decomposable && deterministic; }
};

class NotDdnnfError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxSemanticCheckVars = 20;

/// Decomposability is syntactic. Determinism is syntactic for binary
/// decision nodes whose branches carry opposite decision literals, and
/// otherwise checked by enumerating the operands' joint variables; that
/// enumeration throws std::invalid_argument beyond kMaxSemanticCheckVars.
DdnnfReport check_ddnnf(const NnfDag& g);

/// Number of models over `over_vars`, which must contain every variable of
/// the DAG. Throws NotDdnnfError on a non-d-DNNF input.
std::uint64_t model_count(const NnfDag& g, std::span<const int> over_vars);
/// Convenience: counts over 1..g.num_vars().
std::uint64_t model_count(const NnfDag& g);

bool is_satisfiable(const NnfDag& g);
bool eval(const NnfDag& g, const Assignment& tau);
/// Up to `limit` models over `over_vars`, each a total assignment.
std::vector<Assignment> enumerate_models(const NnfDag& g, std::span<const int> over_vars,
                                         std::size_t limit);

/// Existentially quantifies `vars` away (sound on any DNNF: their literals
/// become true). Decision nodes on kept variables remain decision nodes.
NnfDag forget(const NnfDag& g, std::span<const int> vars);

/// c2d text: `nnf v e n` header then `L lit`, `A k ids`, `O j k ids` lines.
/// True is written `A 0` and false `O 0 0`; the root is the last line.
std::string write_nnf(const NnfDag& g);
NnfDag parse_nnf(std::string_view text);

}  // namespace lensr
