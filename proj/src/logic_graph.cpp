#include "lensr/logic_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>

#include "json.hpp"

namespace lensr {

std::string node_type_name(NodeType t) {
  switch (t) {
    case NodeType::Leaf: return "leaf";
    case NodeType::And: return "and";
    case NodeType::Or: return "or";
    case NodeType::Implies: return "implies";
    case NodeType::Global: return "global";
  }
  return "?";
}

std::string graph_form_name(GraphForm f) {
  switch (f) {
    case GraphForm::General: return "general";
    case GraphForm::Cnf: return "cnf";
    case GraphForm::Ddnnf: return "ddnnf";
    case GraphForm::Assignment: return "assignment";
  }
  return "?";
}

GraphForm parse_graph_form(std::string_view name) {
  if (name == "general") return GraphForm::General;
  if (name == "cnf") return GraphForm::Cnf;
  if (name == "ddnnf") return GraphForm::Ddnnf;
  throw std::invalid_argument("unknown form `" + std::string(name) + "` (expected general, cnf or ddnnf)");
}

std::vector<int> LogicGraph::children(int node) const {
  std::vector<int> out;
  for (const auto& [p, c] : edges)
    if (p == node && p != global) out.push_back(c);
  return out;
}

std::vector<int> LogicGraph::degrees() const {
  std::vector<int> d(nodes.size(), 0);
  for (const auto& [p, c] : edges) {
    ++d[static_cast<std::size_t>(p)];
    ++d[static_cast<std::size_t>(c)];
  }
  return d;
}

std::vector<int> LogicGraph::types() const {
  std::vector<int> t;
  t.reserve(nodes.size());
  for (const GraphNode& n : nodes) t.push_back(static_cast<int>(n.type));
  return t;
}

int LogicGraph::max_var() const {
  int m = 0;
  for (const GraphNode& n : nodes) m = std::max(m, std::abs(n.literal));
  return m;
}

namespace {

class GraphBuilder {
 public:
  explicit GraphBuilder(GraphForm form) { g_.form = form; }

  int add(NodeType type, int literal = 0) {
    g_.nodes.push_back({type, literal});
    return static_cast<int>(g_.nodes.size() - 1);
  }
  void link(int parent, int child) { g_.edges.emplace_back(parent, child); }

  LogicGraph finish() {
    const int global = add(NodeType::Global);
    for (int i = 0; i < global; ++i) link(global, i);
    g_.root = 0;
    g_.global = global;
    return std::move(g_);
  }

 private:
  LogicGraph g_;
};

int add_formula(GraphBuilder& b, const Formula& f) {
  using K = Formula::Kind;
  switch (f.kind) {
    case K::Var: return b.add(NodeType::Leaf, f.var);
    case K::Not:
      if (f.children[0].kind != K::Var) throw std::logic_error("graph: negation above a non-variable");
      return b.add(NodeType::Leaf, -f.children[0].var);
    case K::And:
    case K::Or:
    case K::Implies: {
      const NodeType t = f.kind == K::And ? NodeType::And : f.kind == K::Or ? NodeType::Or : NodeType::Implies;
      const int id = b.add(t);
      for (const Formula& c : f.children) b.link(id, add_formula(b, c));
      return id;
    }
    case K::True:
    case K::False: break;
  }
  throw std::invalid_argument("graph: constant formulas have no logic graph");
}

}  // namespace

LogicGraph build_graph_general(const Formula& f) {
  const Formula g = push_negations(simplify_constants(f));
  GraphBuilder b(GraphForm::General);
  add_formula(b, g);
  return b.finish();
}

LogicGraph build_graph_cnf(const Cnf& c) {
  if (c.clauses.empty()) throw std::invalid_argument("graph: empty CNF (constant true)");
  for (const Clause& cl : c.clauses)
    if (cl.empty()) throw std::invalid_argument("graph: CNF with an empty clause (constant false)");
  GraphBuilder b(GraphForm::Cnf);
  auto add_clause = [&](const Clause& cl) {
    if (cl.size() == 1) return b.add(NodeType::Leaf, cl[0]);
    const int o = b.add(NodeType::Or);
    for (int lit : cl) b.link(o, b.add(NodeType::Leaf, lit));
    return o;
  };
  if (c.clauses.size() == 1) {
    add_clause(c.clauses[0]);
  } else {
    const int root = b.add(NodeType::And);
    for (const Clause& cl : c.clauses) b.link(root, add_clause(cl));
  }
  return b.finish();
}

LogicGraph build_graph_ddnnf(const NnfDag& dag) {
  if (dag.empty()) throw std::invalid_argument("graph: empty DAG");
  // Reachable nodes, visited from the root downward (descending arena ids).
  std::vector<char> live(dag.size(), 0);
  live[dag.root()] = 1;
  for (std::size_t i = dag.root() + 1; i-- > 0;)
    if (live[i])
      for (NodeId c : dag.node(static_cast<NodeId>(i)).children) live[c] = 1;
  GraphBuilder b(GraphForm::Ddnnf);
  std::vector<int> id(dag.size(), -1);
  for (std::size_t i = dag.root() + 1; i-- > 0;) {
    if (!live[i]) continue;
    const NnfNode& n = dag.node(static_cast<NodeId>(i));
    switch (n.kind) {
      case NnfNode::Kind::Lit: id[i] = b.add(NodeType::Leaf, n.literal); break;
      case NnfNode::Kind::True:
      case NnfNode::Kind::And: id[i] = b.add(NodeType::And); break;
      case NnfNode::Kind::False:
      case NnfNode::Kind::Or: id[i] = b.add(NodeType::Or); break;
    }
  }
  for (std::size_t i = dag.root() + 1; i-- > 0;) {
    if (!live[i]) continue;
    std::set<NodeId> seen;
    for (NodeId c : dag.node(static_cast<NodeId>(i)).children)
      if (seen.insert(c).second) b.link(id[i], id[c]);
  }
  return b.finish();
}

LogicGraph build_assignment_graph(const Assignment& tau) {
  if (tau.empty()) throw std::invalid_argument("graph: empty assignment");
  GraphBuilder b(GraphForm::Assignment);
  const int root = b.add(NodeType::And);
  for (int lit : tau.literals()) b.link(root, b.add(NodeType::Leaf, lit));
  return b.finish();
}

Matrix normalize_adjacency(const LogicGraph& g) {
  const std::size_t n = g.size();
  Matrix a = Matrix::identity(n);
  for (const auto& [p, c] : g.edges) {
    if (p == c) throw std::invalid_argument("graph: self-loop");
    a(static_cast<std::size_t>(p), static_cast<std::size_t>(c)) = 1.0;
    a(static_cast<std::size_t>(c), static_cast<std::size_t>(p)) = 1.0;
  }
  std::vector<double> deg(n);
  for (std::size_t i = 0; i < n; ++i)
    for (double v : a.row(i)) deg[i] += v;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (a(i, j) != 0.0) a(i, j) = 1.0 / std::sqrt(deg[i] * deg[j]);
  return a;
}

LogicGraph permute(const LogicGraph& g, const std::vector<int>& order) {
  if (order.size() != g.size()) throw std::invalid_argument("permute: order has the wrong length");
  std::vector<int> where(g.size(), -1);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const int old = order[k];
    if (old < 0 || static_cast<std::size_t>(old) >= g.size() || where[static_cast<std::size_t>(old)] != -1)
      throw std::invalid_argument("permute: order is not a permutation");
    where[static_cast<std::size_t>(old)] = static_cast<int>(k);
  }
  LogicGraph out;
  out.form = g.form;
  for (int old : order) out.nodes.push_back(g.nodes[static_cast<std::size_t>(old)]);
  for (const auto& [p, c] : g.edges)
    out.edges.emplace_back(where[static_cast<std::size_t>(p)], where[static_cast<std::size_t>(c)]);
  out.root = where[static_cast<std::size_t>(g.root)];
  out.global = where[static_cast<std::size_t>(g.global)];
  return out;
}

namespace {

Formula rebuild(const LogicGraph& g, int node) {
  const GraphNode& n = g.nodes[static_cast<std::size_t>(node)];
  if (n.type == NodeType::Leaf)
    return n.literal > 0 ? Formula::variable(n.literal) : Formula::negation(Formula::variable(-n.literal));
  std::vector<Formula> kids;
  for (int c : g.children(node)) kids.push_back(rebuild(g, c));
  switch (n.type) {
    case NodeType::And:
      if (kids.empty()) return Formula::constant(true);
      return kids.size() == 1 ? kids[0] : Formula::conjunction(std::move(kids));
    case NodeType::Or:
      if (kids.empty()) return Formula::constant(false);
      return kids.size() == 1 ? kids[0] : Formula::disjunction(std::move(kids));
    case NodeType::Implies:
      if (kids.size() != 2) throw std::invalid_argument("graph: implication without two operands");
      return Formula::implication(std::move(kids[0]), std::move(kids[1]));
    default: break;
  }
  throw std::invalid_argument("graph: global node inside the structure");
}

}  // namespace

Formula graph_to_formula(const LogicGraph& g) { return rebuild(g, g.root); }

int FeatureLayout::var_row(int var) const {
  if (var < 1 || var > max_vars)
    throw std::out_of_range("feature table: variable " + std::to_string(var) + " outside 1.." +
                            std::to_string(max_vars));
  return var - 1;
}

int FeatureLayout::type_row(NodeType t) const {
  switch (t) {
    case NodeType::And: return max_vars;
    case NodeType::Or: return max_vars + 1;
    case NodeType::Implies: return max_vars + 2;
    case NodeType::Global: return max_vars + 3;
    case NodeType::Leaf: break;
  }
  throw std::invalid_argument("feature table: leaves have no type row");
}

std::vector<std::vector<int>> feature_rows(const LogicGraph& g, const FeatureLayout& layout) {
  std::vector<std::vector<int>> rows;
  rows.reserve(g.size());
  for (const GraphNode& n : g.nodes) {
    if (n.type == NodeType::Leaf) {
      std::vector<int> r{layout.var_row(std::abs(n.literal))};
      if (n.literal < 0) r.push_back(layout.negation_row());
      rows.push_back(std::move(r));
    } else {
      rows.push_back({layout.type_row(n.type)});
    }
  }
  return rows;
}

Matrix init_features(const LogicGraph& g, const FeatureLayout& layout, const Matrix& table) {
  if (table.rows() != layout.rows())
    throw ShapeError("init_features: table has " + std::to_string(table.rows()) + " rows, layout needs " +
                     std::to_string(layout.rows()));
  const auto rows = feature_rows(g, layout);
  Matrix x(g.size(), table.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int r : rows[i]) {
      auto src = table.row(static_cast<std::size_t>(r));
      auto dst = x.row(i);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  return x;
}

std::string graph_to_json(const LogicGraph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const GraphNode& n : g.nodes) {
    nlohmann::json e = {{"type", node_type_name(n.type)}};
    if (n.type == NodeType::Leaf) e["literal"] = n.literal;
    nodes.push_back(std::move(e));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [p, c] : g.edges) edges.push_back({p, c});
  double checksum = 0.0;
  for (double v : normalize_adjacency(g).data()) checksum += v;
  nlohmann::json j = {{"form", graph_form_name(g.form)},
                      {"root", g.root},
                      {"global", g.global},
                      {"nodes", std::move(nodes)},
                      {"edges", std::move(edges)},
                      {"adjacency_checksum", checksum}};
  return j.dump();
}

}  // namespace lensr
