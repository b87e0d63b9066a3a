#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lensr/cnf.hpp"
#include "lensr/formula.hpp"
#include "lensr/matrix.hpp"
#include "lensr/nnf.hpp"

namespace lensr {

enum class NodeType : std::uint8_t { Leaf, And, Or, Implies, Global };
inline constexpr int kNumNodeTypes = 5;

enum class GraphForm : std::uint8_t { General, Cnf, Ddnnf, Assignment };

std::string node_type_name(NodeType t);
std::string graph_form_name(GraphForm f);
/// "general", "cnf" or "ddnnf"; throws std::invalid_argument otherwise.
GraphForm parse_graph_form(std::string_view name);

struct GraphNode {
  NodeType type = NodeType::Leaf;
  int literal = 0;  // Leaf only; the sign carries negation
  bool operator==(const GraphNode&) const = default;
};

/// Undirected typed graph with a global node adjacent to every other node.
/// Edges are stored as (parent, child) so the logical structure stays
/// recoverable; global edges are (global, node).
struct LogicGraph {
  GraphForm form = GraphForm::General;
  std::vector<GraphNode> nodes;
  std::vector<std::pair<int, int>> edges;
  int root = 0;
  int global = 0;

  std::size_t size() const { return nodes.size(); }
  /// Structural children of `node` in insertion order (never the global node).
  std::vector<int> children(int node) const;
  std::vector<int> degrees() const;
  std::vector<int> types() const;
  int max_var() const;
};

/// Negations are pushed to the leaves first; one leaf per literal occurrence.
/// Throws std::invalid_argument on constant formulas.
LogicGraph build_graph_general(const Formula& f);
/// And over clauses; unit clauses attach their leaf to the And, and a single
/// clause is its own root.
LogicGraph build_graph_cnf(const Cnf& c);
/// Nodes reachable from the root, sharing preserved.
LogicGraph build_graph_ddnnf(const NnfDag& g);
/// An And over one signed leaf per assigned variable.
LogicGraph build_assignment_graph(const Assignment& tau);

/// D^-1/2 (A + I) D^-1/2, dense.
Matrix normalize_adjacency(const LogicGraph& g);

/// New node k is old node order[k].
LogicGraph permute(const LogicGraph& g, const std::vector<int>& order);

/// Formula read back from the structural edges below the root.
Formula graph_to_formula(const LogicGraph& g);

/// Row layout of the feature table: one row per variable 1..max_vars, then
/// And, Or, Implies and Global type rows, then the negation row.
struct FeatureLayout {
  int max_vars = 0;
  std::size_t rows() const { return static_cast<std::size_t>(max_vars) + 5; }
  int var_row(int var) const;
  int type_row(NodeType t) const;
  int negation_row() const { return max_vars + 4; }
};

/// Table rows summed into each node's input feature.
std::vector<std::vector<int>> feature_rows(const LogicGraph& g, const FeatureLayout& layout);
/// X = per-node sums of table rows.
Matrix init_features(const LogicGraph& g, const FeatureLayout& layout, const Matrix& table);

/// JSON with node list, edge list and the sum of normalized adjacency entries.
std::string graph_to_json(const LogicGraph& g);

}  // namespace lensr
