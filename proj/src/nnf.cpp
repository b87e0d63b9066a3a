#include "lensr/nnf.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>
#include <tuple>

namespace lensr {

using NK = NnfNode::Kind;

// --- NnfDag -----------------------------------------------------------------------

NodeId NnfDag::push(NnfNode node, std::vector<int> vars) {
  for (NodeId c : node.children)
    if (c >= nodes_.size())
      throw std::invalid_argument("NnfDag: child " + std::to_string(c) + " does not precede node " +
                                  std::to_string(nodes_.size()));
  nodes_.push_back(std::move(node));
  vars_.push_back(std::move(vars));
  root_ = static_cast<NodeId>(nodes_.size() - 1);
  return root_;
}

NodeId NnfDag::add_literal(int literal) {
  if (literal == 0) throw std::invalid_argument("NnfDag: literal 0");
  num_vars_ = std::max(num_vars_, std::abs(literal));
  NnfNode n;
  n.kind = NK::Lit;
  n.literal = literal;
  return push(std::move(n), {std::abs(literal)});
}

NodeId NnfDag::add_true() { return push(NnfNode{NK::True, 0, 0, {}}, {}); }
NodeId NnfDag::add_false() { return push(NnfNode{NK::False, 0, 0, {}}, {}); }

namespace {

std::vector<int> union_vars(const NnfDag& g, const std::vector<NodeId>& children, std::size_t limit) {
  std::vector<int> out;
  for (NodeId c : children) {
    if (c >= limit) throw std::invalid_argument("NnfDag: forward reference to node " + std::to_string(c));
    const auto& v = g.vars(c);
    std::vector<int> merged;
    merged.reserve(out.size() + v.size());
    std::set_union(out.begin(), out.end(), v.begin(), v.end(), std::back_inserter(merged));
    out.swap(merged);
  }
  return out;
}

}  // namespace

NodeId NnfDag::add_and(std::vector<NodeId> children) {
  if (children.empty()) return add_true();
  auto vars = union_vars(*this, children, nodes_.size());
  return push(NnfNode{NK::And, 0, 0, std::move(children)}, std::move(vars));
}

NodeId NnfDag::add_or(std::vector<NodeId> children, int decision_var) {
  if (decision_var < 0) throw std::invalid_argument("NnfDag: negative decision variable");
  if (children.empty()) return add_false();
  auto vars = union_vars(*this, children, nodes_.size());
  num_vars_ = std::max(num_vars_, decision_var);
  return push(NnfNode{NK::Or, 0, decision_var, std::move(children)}, std::move(vars));
}

void NnfDag::set_root(NodeId id) {
  if (id >= nodes_.size()) throw std::out_of_range("NnfDag: root out of range");
  root_ = id;
}

std::size_t NnfDag::num_edges() const {
  std::size_t e = 0;
  for (const NnfNode& n : nodes_) e += n.children.size();
  return e;
}

void NnfDag::set_num_vars(int n) {
  for (const NnfNode& node : nodes_)
    if (std::abs(node.literal) > n || node.decision_var > n)
      throw std::invalid_argument("NnfDag: num_vars " + std::to_string(n) + " below a variable in use");
  num_vars_ = n;
}

// --- NnfBuilder -------------------------------------------------------------

bool NnfBuilder::node_less(const NnfNode& a, const NnfNode& b) {
  return std::tie(a.kind, a.literal, a.decision_var, a.children) <
         std::tie(b.kind, b.literal, b.decision_var, b.children);
}

NodeId NnfBuilder::intern(NnfNode node) {
  auto it = unique_.find(node);
  if (it != unique_.end()) return it->second;
  NodeId id;
  switch (node.kind) {
    case NK::Lit: id = dag_.add_literal(node.literal); break;
    case NK::True: id = dag_.add_true(); break;
    case NK::False: id = dag_.add_false(); break;
    case NK::And: id = dag_.add_and(node.children); break;
    case NK::Or: id = dag_.add_or(node.children, node.decision_var); break;
    default: throw std::logic_error("NnfBuilder: bad kind");
  }
  unique_.emplace(std::move(node), id);
  return id;
}

NodeId NnfBuilder::literal(int lit) { return intern(NnfNode{NK::Lit, lit, 0, {}}); }

NodeId NnfBuilder::constant(bool value) { return intern(NnfNode{value ? NK::True : NK::False, 0, 0, {}}); }

NodeId NnfBuilder::conjoin(std::vector<NodeId> children) {
  std::vector<NodeId> flat;
  for (NodeId c : children) {
    const NnfNode& n = dag_.node(c);
    if (n.kind == NK::False) return constant(false);
    if (n.kind == NK::True) continue;
    if (n.kind == NK::And)
      flat.insert(flat.end(), n.children.begin(), n.children.end());
    else
      flat.push_back(c);
  }
  std::sort(flat.begin(), flat.end());
  flat.erase(std::unique(flat.begin(), flat.end()), flat.end());
  if (flat.empty()) return constant(true);
  if (flat.size() == 1) return flat.front();
  return intern(NnfNode{NK::And, 0, 0, std::move(flat)});
}

NodeId NnfBuilder::disjoin(std::vector<NodeId> children, int decision_var) {
  std::vector<NodeId> kept;
  for (NodeId c : children) {
    const NnfNode& n = dag_.node(c);
    if (n.kind == NK::True) return constant(true);
    if (n.kind == NK::False) continue;
    if (std::find(kept.begin(), kept.end(), c) == kept.end()) kept.push_back(c);
  }
  if (kept.empty()) return constant(false);
  if (kept.size() == 1) return kept.front();
  return intern(NnfNode{NK::Or, 0, decision_var, std::move(kept)});
}

NnfDag NnfBuilder::finish(NodeId root, int num_vars) const {
  std::vector<char> live(dag_.size(), 0);
  live.at(root) = 1;
  for (std::size_t i = root + 1; i-- > 0;)
    if (live[i])
      for (NodeId c : dag_.node(static_cast<NodeId>(i)).children) live[c] = 1;
  std::vector<NodeId> remap(dag_.size(), 0);
  NnfDag out;
  for (std::size_t i = 0; i <= root; ++i) {
    if (!live[i]) continue;
    const NnfNode& n = dag_.node(static_cast<NodeId>(i));
    std::vector<NodeId> kids;
    for (NodeId c : n.children) kids.push_back(remap[c]);
    switch (n.kind) {
      case NK::Lit: remap[i] = out.add_literal(n.literal); break;
      case NK::True: remap[i] = out.add_true(); break;
      case NK::False: remap[i] = out.add_false(); break;
      case NK::And: remap[i] = out.add_and(std::move(kids)); break;
      case NK::Or: remap[i] = out.add_or(std::move(kids), n.decision_var); break;
    }
  }
  out.set_root(remap[root]);
  out.set_num_vars(std::max(num_vars, out.num_vars()));
  return out;
}

// --- validation -----------------------------------------------------------------

namespace {

bool asserts_literal(const NnfDag& g, NodeId id, int lit) {
  const NnfNode& n = g.node(id);
  if (n.kind == NK::Lit) return n.literal == lit;
  if (n.kind != NK::And) return false;
  return std::any_of(n.children.begin(), n.children.end(), [&](NodeId c) {
    const NnfNode& k = g.node(c);
    return k.kind == NK::Lit && k.literal == lit;
  });
}

// Truth value of every node in `order` (ascending ids) under `value`, which
// is indexed by variable and holds 0/1.
void eval_nodes(const NnfDag& g, const std::vector<NodeId>& order, const std::vector<char>& value,
                std::vector<char>& out) {
  for (NodeId id : order) {
    const NnfNode& n = g.node(id);
    switch (n.kind) {
      case NK::Lit: out[id] = value[std::abs(n.literal)] == (n.literal > 0 ? 1 : 0); break;
      case NK::True: out[id] = 1; break;
      case NK::False: out[id] = 0; break;
      case NK::And:
        out[id] = std::all_of(n.children.begin(), n.children.end(), [&](NodeId c) { return out[c] != 0; });
        break;
      case NK::Or:
        out[id] = std::any_of(n.children.begin(), n.children.end(), [&](NodeId c) { return out[c] != 0; });
        break;
    }
  }
}

std::vector<NodeId> descendants(const NnfDag& g, std::initializer_list<NodeId> roots) {
  NodeId top = 0;
  for (NodeId r : roots) top = std::max(top, r);
  std::vector<char> live(static_cast<std::size_t>(top) + 1, 0);
  for (NodeId r : roots) live[r] = 1;
  for (std::size_t i = top + 1; i-- > 0;)
    if (live[i])
      for (NodeId c : g.node(static_cast<NodeId>(i)).children) live[c] = 1;
  std::vector<NodeId> out;
  for (std::size_t i = 0; i <= top; ++i)
    if (live[i]) out.push_back(static_cast<NodeId>(i));
  return out;
}

bool operands_overlap(const NnfDag& g, NodeId a, NodeId b) {
  std::vector<int> joint;
  std::set_union(g.vars(a).begin(), g.vars(a).end(), g.vars(b).begin(), g.vars(b).end(),
                 std::back_inserter(joint));
  if (static_cast<int>(joint.size()) > kMaxSemanticCheckVars)
    throw std::invalid_argument("check_ddnnf: semantic determinism check over " +
                                std::to_string(joint.size()) + " variables exceeds the bound of " +
                                std::to_string(kMaxSemanticCheckVars));
  const auto order = descendants(g, {a, b});
  std::vector<char> value(static_cast<std::size_t>(g.num_vars()) + 1, 0);
  std::vector<char> out(g.size(), 0);
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << joint.size()); ++bits) {
    for (std::size_t i = 0; i < joint.size(); ++i) value[joint[i]] = (bits >> i) & 1;
    eval_nodes(g, order, value, out);
    if (out[a] && out[b]) return true;
  }
  return false;
}

}  // namespace

DdnnfReport check_ddnnf(const NnfDag& g) {
  DdnnfReport r;
  if (g.empty()) return r;
  for (NodeId id : descendants(g, {g.root()})) {
    const NnfNode& n = g.node(id);
    if (n.kind == NK::And) {
      std::size_t total = 0;
      for (NodeId c : n.children) total += g.vars(c).size();
      if (total != g.vars(id).size()) {
        r.decomposable = false;
        r.violations.push_back({id, DdnnfViolation::Kind::NotDecomposable,
                                "And node " + std::to_string(id) + " has children sharing variables"});
      }
    } else if (n.kind == NK::Or) {
      const int d = n.decision_var;
      if (d != 0 && n.children.size() == 2 &&
          ((asserts_literal(g, n.children[0], d) && asserts_literal(g, n.children[1], -d)) ||
           (asserts_literal(g, n.children[0], -d) && asserts_literal(g, n.children[1], d))))
        continue;
      for (std::size_t i = 0; i < n.children.size(); ++i)
        for (std::size_t j = i + 1; j < n.children.size(); ++j)
          if (operands_overlap(g, n.children[i], n.children[j])) {
            r.deterministic = false;
            r.violations.push_back({id, DdnnfViolation::Kind::NotDeterministic,
                                    "Or node " + std::to_string(id) + " operands " + std::to_string(i) +
                                        " and " + std::to_string(j) + " share a model"});
          }
    }
  }
  return r;
}

// --- queries ------------------------------------------------------------------

std::uint64_t model_count(const NnfDag& g, std::span<const int> over_vars) {
  if (g.empty()) throw std::invalid_argument("model_count: empty DAG");
  std::vector<int> over(over_vars.begin(), over_vars.end());
  std::sort(over.begin(), over.end());
  over.erase(std::unique(over.begin(), over.end()), over.end());
  const auto& rv = g.vars(g.root());
  if (!std::includes(over.begin(), over.end(), rv.begin(), rv.end()))
    throw std::invalid_argument("model_count: over_vars must include every variable of the DAG");
  if (over.size() > 63) throw std::overflow_error("model_count: more than 63 variables");
  const DdnnfReport report = check_ddnnf(g);
  if (!report.ok())
    throw NotDdnnfError("model_count: input is not d-DNNF (" + report.violations.front().detail + ")");

  std::vector<std::uint64_t> count(g.size(), 0);
  for (NodeId id : descendants(g, {g.root()})) {
    const NnfNode& n = g.node(id);
    switch (n.kind) {
      case NK::Lit:
      case NK::True: count[id] = 1; break;
      case NK::False: count[id] = 0; break;
      case NK::And: {
        std::uint64_t p = 1;
        for (NodeId c : n.children) p *= count[c];
        count[id] = p;
        break;
      }
      case NK::Or: {
        std::uint64_t s = 0;
        for (NodeId c : n.children) s += count[c] << (g.vars(id).size() - g.vars(c).size());
        count[id] = s;
        break;
      }
    }
  }
  return count[g.root()] << (over.size() - rv.size());
}

std::uint64_t model_count(const NnfDag& g) {
  std::vector<int> all;
  for (int v = 1; v <= g.num_vars(); ++v) all.push_back(v);
  return model_count(g, all);
}

namespace {

// Satisfiability of a DNNF under a partial assignment (`value`: -1 free).
bool sat_under(const NnfDag& g, const std::vector<std::int8_t>& value) {
  std::vector<char> ok(g.size(), 0);
  for (NodeId id : descendants(g, {g.root()})) {
    const NnfNode& n = g.node(id);
    switch (n.kind) {
      case NK::Lit: {
        const std::int8_t v = value[std::abs(n.literal)];
        ok[id] = v < 0 || v == (n.literal > 0 ? 1 : 0);
        break;
      }
      case NK::True: ok[id] = 1; break;
      case NK::False: ok[id] = 0; break;
      case NK::And:
        ok[id] = std::all_of(n.children.begin(), n.children.end(), [&](NodeId c) { return ok[c] != 0; });
        break;
      case NK::Or:
        ok[id] = std::any_of(n.children.begin(), n.children.end(), [&](NodeId c) { return ok[c] != 0; });
        break;
    }
  }
  return ok[g.root()] != 0;
}

}  // namespace

bool is_satisfiable(const NnfDag& g) {
  if (g.empty()) throw std::invalid_argument("is_satisfiable: empty DAG");
  return sat_under(g, std::vector<std::int8_t>(static_cast<std::size_t>(g.num_vars()) + 1, -1));
}

bool eval(const NnfDag& g, const Assignment& tau) {
  if (g.empty()) throw std::invalid_argument("eval: empty DAG");
  std::vector<char> value(static_cast<std::size_t>(g.num_vars()) + 1, 0);
  for (int v : g.vars(g.root())) value[v] = tau.value(v);
  std::vector<char> out(g.size(), 0);
  eval_nodes(g, descendants(g, {g.root()}), value, out);
  return out[g.root()] != 0;
}

std::vector<Assignment> enumerate_models(const NnfDag& g, std::span<const int> over_vars,
                                         std::size_t limit) {
  if (g.empty()) throw std::invalid_argument("enumerate_models: empty DAG");
  std::vector<int> over(over_vars.begin(), over_vars.end());
  std::sort(over.begin(), over.end());
  over.erase(std::unique(over.begin(), over.end()), over.end());
  const auto& rv = g.vars(g.root());
  if (!std::includes(over.begin(), over.end(), rv.begin(), rv.end()))
    throw std::invalid_argument("enumerate_models: over_vars must include every variable of the DAG");
  const int top = std::max(g.num_vars(), over.empty() ? 0 : over.back());
  std::vector<std::int8_t> value(static_cast<std::size_t>(top) + 1, -1);
  std::vector<Assignment> out;
  if (limit == 0 || !sat_under(g, value)) return out;

  // Depth-first over `over` (false before true), pruning with a DNNF
  // satisfiability test at every step.
  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (out.size() >= limit) return;
    if (i == over.size()) {
      Assignment a;
      for (int v : over) a.set(v, value[v] == 1);
      out.push_back(std::move(a));
      return;
    }
    for (std::int8_t b : {std::int8_t{0}, std::int8_t{1}}) {
      value[over[i]] = b;
      if (sat_under(g, value)) self(self, i + 1);
      if (out.size() >= limit) break;
    }
    value[over[i]] = -1;
  };
  rec(rec, 0);
  return out;
}

NnfDag forget(const NnfDag& g, std::span<const int> vars) {
  if (g.empty()) return g;
  std::vector<int> drop(vars.begin(), vars.end());
  std::sort(drop.begin(), drop.end());
  auto dropped = [&](int v) { return std::binary_search(drop.begin(), drop.end(), v); };
  NnfBuilder b;
  std::vector<NodeId> remap(g.size(), 0);
  for (NodeId id : descendants(g, {g.root()})) {
    const NnfNode& n = g.node(id);
    std::vector<NodeId> kids;
    for (NodeId c : n.children) kids.push_back(remap[c]);
    switch (n.kind) {
      case NK::Lit: remap[id] = dropped(std::abs(n.literal)) ? b.constant(true) : b.literal(n.literal); break;
      case NK::True: remap[id] = b.constant(true); break;
      case NK::False: remap[id] = b.constant(false); break;
      case NK::And: remap[id] = b.conjoin(std::move(kids)); break;
      case NK::Or: remap[id] = b.disjoin(std::move(kids), dropped(n.decision_var) ? 0 : n.decision_var); break;
    }
  }
  int kept = 0;
  for (int v = 1; v <= g.num_vars(); ++v)
    if (!dropped(v)) kept = v;
  return b.finish(remap[g.root()], kept);
}

// --- .nnf text ------------------------------------------------------------------

std::string write_nnf(const NnfDag& g) {
  if (g.empty()) throw std::invalid_argument("write_nnf: empty DAG");
  const std::size_t count = static_cast<std::size_t>(g.root()) + 1;
  std::size_t edges = 0;
  for (std::size_t i = 0; i < count; ++i) edges += g.node(static_cast<NodeId>(i)).children.size();
  std::ostringstream out;
  out << "nnf " << count << ' ' << edges << ' ' << g.num_vars() << '\n';
  for (std::size_t i = 0; i < count; ++i) {
    const NnfNode& n = g.node(static_cast<NodeId>(i));
    switch (n.kind) {
      case NK::Lit: out << "L " << n.literal; break;
      case NK::True: out << "A 0"; break;
      case NK::False: out << "O 0 0"; break;
      case NK::And:
        out << "A " << n.children.size();
        for (NodeId c : n.children) out << ' ' << c;
        break;
      case NK::Or:
        out << "O " << n.decision_var << ' ' << n.children.size();
        for (NodeId c : n.children) out << ' ' << c;
        break;
    }
    out << '\n';
  }
  return out.str();
}

NnfDag parse_nnf(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw std::invalid_argument(".nnf line " + std::to_string(line_no) + ": " + msg);
  };
  bool header = false;
  long declared_nodes = 0;
  long declared_edges = 0;
  long declared_vars = 0;
  std::size_t edges = 0;
  NnfDag g;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag == "c") continue;
    if (!header) {
      if (tag != "nnf" || !(ls >> declared_nodes >> declared_edges >> declared_vars) || declared_nodes < 1 ||
          declared_edges < 0 || declared_vars < 0)
        fail("expected header `nnf <nodes> <edges> <vars>`");
      header = true;
      continue;
    }
    if (static_cast<long>(g.size()) >= declared_nodes) fail("more nodes than the header declares");
    auto read_children = [&](long k) {
      if (k < 0) fail("negative child count");
      std::vector<NodeId> kids;
      for (long i = 0; i < k; ++i) {
        long c;
        if (!(ls >> c)) fail("missing child id");
        if (c < 0 || c >= static_cast<long>(g.size())) fail("child " + std::to_string(c) + " is a forward reference");
        kids.push_back(static_cast<NodeId>(c));
      }
      edges += kids.size();
      return kids;
    };
    if (tag == "L") {
      long lit;
      if (!(ls >> lit) || lit == 0) fail("bad literal");
      if (std::labs(lit) > declared_vars) fail("literal exceeds the declared variable count");
      g.add_literal(static_cast<int>(lit));
    } else if (tag == "A") {
      long k;
      if (!(ls >> k)) fail("missing child count");
      auto kids = read_children(k);
      if (kids.empty())
        g.add_true();
      else
        g.add_and(std::move(kids));
    } else if (tag == "O") {
      long j, k;
      if (!(ls >> j >> k)) fail("missing decision variable or child count");
      if (j < 0 || j > declared_vars) fail("bad decision variable");
      auto kids = read_children(k);
      if (kids.empty())
        g.add_false();
      else
        g.add_or(std::move(kids), static_cast<int>(j));
    } else {
      fail("unknown node tag `" + tag + "`");
    }
    std::string extra;
    if (ls >> extra) fail("trailing tokens");
  }
  if (!header) throw std::invalid_argument(".nnf: missing header");
  if (static_cast<long>(g.size()) != declared_nodes)
    throw std::invalid_argument(".nnf: header declares " + std::to_string(declared_nodes) + " nodes, found " +
                                std::to_string(g.size()));
  if (static_cast<long>(edges) != declared_edges)
    throw std::invalid_argument(".nnf: header declares " + std::to_string(declared_edges) + " edges, found " +
                                std::to_string(edges));
  g.set_num_vars(static_cast<int>(declared_vars));
  g.set_root(static_cast<NodeId>(g.size() - 1));
  return g;
}

}  // namespace lensr
