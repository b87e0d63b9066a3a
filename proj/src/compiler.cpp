#include "lensr/compiler.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <numeric>

namespace lensr {

namespace {

using Clauses = std::vector<Clause>;

bool by_var(int a, int b) { return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a < b; }

// Clauses with lit made true: satisfied clauses go, the opposite literal is
// removed from the rest.
Clauses condition(const Clauses& cs, int lit) {
  Clauses out;
  out.reserve(cs.size());
  for (const Clause& c : cs) {
    if (std::find(c.begin(), c.end(), lit) != c.end()) continue;
    Clause k;
    k.reserve(c.size());
    for (int l : c)
      if (l != -lit) k.push_back(l);
    out.push_back(std::move(k));
  }
  return out;
}

class Compiler {
 public:
  NodeId compile(Clauses cs) {
    // Unit propagation.
    std::vector<int> units;
    for (;;) {
      int unit = 0;
      for (const Clause& c : cs) {
        if (c.empty()) return b.constant(false);
        if (c.size() == 1) {
          unit = c.front();
          break;
        }
      }
      if (unit == 0) break;
      units.push_back(unit);
      cs = condition(cs, unit);
    }

    std::vector<NodeId> parts;
    for (int u : units) parts.push_back(b.literal(u));
    for (Clauses& comp : components(std::move(cs))) {
      const NodeId n = compile_component(std::move(comp));
      if (b.dag().node(n).kind == NnfNode::Kind::False) return n;
      parts.push_back(n);
    }
    return b.conjoin(std::move(parts));
  }

  NnfBuilder b;

 private:
  // Groups clauses into variable-connected components, ordered by lowest variable.
  static std::vector<Clauses> components(Clauses cs) {
    if (cs.empty()) return {};
    int top = 0;
    for (const Clause& c : cs)
      for (int l : c) top = std::max(top, std::abs(l));
    std::vector<int> parent(static_cast<std::size_t>(top) + 1);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int v) {
      while (parent[v] != v) v = parent[v] = parent[parent[v]];
      return v;
    };
    for (const Clause& c : cs)
      for (std::size_t i = 1; i < c.size(); ++i) {
        const int a = find(std::abs(c[0]));
        const int d = find(std::abs(c[i]));
        if (a != d) parent[std::max(a, d)] = std::min(a, d);
      }
    std::map<int, Clauses> groups;
    for (Clause& c : cs) groups[find(std::abs(c[0]))].push_back(std::move(c));
    std::vector<Clauses> out;
    for (auto& [rep, g] : groups) out.push_back(std::move(g));
    return out;
  }

  NodeId compile_component(Clauses cs) {
    for (Clause& c : cs) std::sort(c.begin(), c.end(), by_var);
    std::sort(cs.begin(), cs.end());
    auto hit = cache_.find(cs);
    if (hit != cache_.end()) return hit->second;

    int v = std::abs(cs.front().front());
    for (const Clause& c : cs) v = std::min(v, std::abs(c.front()));
    const NodeId pos = b.conjoin({b.literal(v), compile(condition(cs, v))});
    const NodeId neg = b.conjoin({b.literal(-v), compile(condition(cs, -v))});
    const NodeId node = b.disjoin({pos, neg}, v);
    cache_.emplace(std::move(cs), node);
    return node;
  }

  std::map<Clauses, NodeId> cache_;
};

}  // namespace

NnfDag compile_ddnnf(const Cnf& c) {
  c.validate();
  Compiler comp;
  Clauses cs;
  for (Clause cl : c.clauses) {
    std::sort(cl.begin(), cl.end(), by_var);
    cl.erase(std::unique(cl.begin(), cl.end()), cl.end());
    bool taut = false;
    for (std::size_t i = 1; i < cl.size(); ++i) taut = taut || cl[i] == -cl[i - 1];
    if (!taut) cs.push_back(std::move(cl));
  }
  const NodeId root = comp.compile(std::move(cs));
  return comp.b.finish(root, c.num_vars);
}

NnfDag compile_formula(const Formula& f, int num_inputs) {
  const TseytinResult t = to_cnf_tseytin(f, num_inputs);
  NnfDag full = compile_ddnnf(t.cnf);
  NnfDag out = forget(full, t.map.aux_vars);
  out.set_num_vars(static_cast<int>(t.map.input_vars.size()));
  return out;
}

}  // namespace lensr
