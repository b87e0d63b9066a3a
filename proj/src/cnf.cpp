#include "lensr/cnf.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

namespace lensr {

using Kind = Formula::Kind;

void Cnf::validate() const {
  for (const Clause& c : clauses)
    for (int lit : c) {
      if (lit == 0) throw std::invalid_argument("Cnf: literal 0 inside a clause");
      if (std::abs(lit) > num_vars)
        throw std::invalid_argument("Cnf: literal " + std::to_string(lit) + " exceeds num_vars " +
                                    std::to_string(num_vars));
    }
}

bool Cnf::satisfied_by(const Assignment& tau) const {
  return std::all_of(clauses.begin(), clauses.end(), [&](const Clause& c) {
    return std::any_of(c.begin(), c.end(),
                       [&](int lit) { return tau.value(std::abs(lit)) == (lit > 0); });
  });
}

bool Cnf::is_original(int var) const {
  return std::binary_search(original_vars.begin(), original_vars.end(), var);
}

// --- Tseytin ----------------------------------------------------------------------

namespace {

class TseytinEncoder {
 public:
  explicit TseytinEncoder(int num_inputs) : next_var_(num_inputs + 1) {}

  int encode(const Formula& f) {
    switch (f.kind) {
      case Kind::Var: return f.var;
      case Kind::Not: return -encode(f.children[0]);
      case Kind::And:
      case Kind::Or: {
        std::vector<int> ins;
        for (const Formula& c : f.children) ins.push_back(encode(c));
        return f.kind == Kind::And ? gate_and(ins, f) : gate_or(ins, f);
      }
      case Kind::Implies: {
        std::vector<int> ins{-encode(f.children[0]), encode(f.children[1])};
        return gate_or(ins, f);
      }
      case Kind::True:
      case Kind::False: break;
    }
    throw std::logic_error("Tseytin: constants must be simplified away first");
  }

  void add(Clause c) {
    std::sort(c.begin(), c.end(), [](int a, int b) {
      return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a < b;
    });
    c.erase(std::unique(c.begin(), c.end()), c.end());
    for (std::size_t i = 1; i < c.size(); ++i)
      if (c[i] == -c[i - 1]) return;  // tautology
    clauses.push_back(std::move(c));
  }

  std::vector<Clause> clauses;
  TseytinMap map;
  int next_var_;

 private:
  int fresh(const Formula& definition) {
    const int g = next_var_++;
    map.aux_vars.push_back(g);
    map.gate_definitions.emplace(g, definition);
    return g;
  }

  // g <-> (a1 & ... & ak)
  int gate_and(const std::vector<int>& ins, const Formula& def) {
    const int g = fresh(def);
    Clause big{g};
    for (int a : ins) {
      add({-g, a});
      big.push_back(-a);
    }
    add(std::move(big));
    return g;
  }

  // g <-> (a1 | ... | ak)
  int gate_or(const std::vector<int>& ins, const Formula& def) {
    const int g = fresh(def);
    Clause big{-g};
    for (int a : ins) {
      add({g, -a});
      big.push_back(a);
    }
    add(std::move(big));
    return g;
  }
};

}  // namespace

TseytinResult to_cnf_tseytin(const Formula& f, int num_inputs) {
  const int inputs = std::max(num_inputs, max_var(f));
  TseytinResult r;
  for (int v = 1; v <= inputs; ++v) r.map.input_vars.push_back(v);
  r.cnf.original_vars = r.map.input_vars;

  const Formula g = simplify_constants(f);
  if (g.kind == Kind::True || g.kind == Kind::False) {
    r.cnf.num_vars = inputs;
    if (g.kind == Kind::False) r.cnf.clauses.push_back({});
    return r;
  }
  TseytinEncoder enc(inputs);
  const int root = enc.encode(g);
  enc.add({root});
  r.cnf.num_vars = enc.next_var_ - 1;
  r.cnf.clauses = std::move(enc.clauses);
  r.map.aux_vars = std::move(enc.map.aux_vars);
  r.map.gate_definitions = std::move(enc.map.gate_definitions);
  return r;
}

// --- distribution -------------------------------------------------------------

namespace {

// Sorted by variable, duplicates removed; false when the clause is a tautology.
bool normalize_clause(Clause& c) {
  std::sort(c.begin(), c.end(), [](int a, int b) {
    return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a < b;
  });
  c.erase(std::unique(c.begin(), c.end()), c.end());
  for (std::size_t i = 1; i < c.size(); ++i)
    if (c[i] == -c[i - 1]) return false;
  return true;
}

bool subsumes(const Clause& a, const Clause& b) {
  return a.size() <= b.size() && std::all_of(a.begin(), a.end(), [&](int l) {
           return std::find(b.begin(), b.end(), l) != b.end();
         });
}

std::vector<Clause> minimize(std::vector<Clause> cs) {
  std::sort(cs.begin(), cs.end(), [](const Clause& a, const Clause& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
  std::vector<Clause> out;
  for (Clause& c : cs)
    if (std::none_of(out.begin(), out.end(), [&](const Clause& k) { return subsumes(k, c); }))
      out.push_back(std::move(c));
  return out;
}

std::vector<Clause> distribute(const Formula& f, std::size_t cap) {
  switch (f.kind) {
    case Kind::Var: return {{f.var}};
    case Kind::Not: return {{-f.children[0].var}};
    case Kind::And: {
      std::vector<Clause> out;
      for (const Formula& c : f.children) {
        auto part = distribute(c, cap);
        out.insert(out.end(), part.begin(), part.end());
      }
      return minimize(std::move(out));
    }
    case Kind::Or: {
      std::vector<Clause> acc{{}};
      for (const Formula& c : f.children) {
        const auto part = distribute(c, cap);
        std::vector<Clause> next;
        for (const Clause& a : acc)
          for (const Clause& p : part) {
            Clause m = a;
            m.insert(m.end(), p.begin(), p.end());
            if (normalize_clause(m)) next.push_back(std::move(m));
          }
        acc = minimize(std::move(next));
        if (acc.size() > cap) throw std::length_error("to_cnf_direct: clause budget exceeded");
      }
      return acc;
    }
    default: break;
  }
  throw std::logic_error("to_cnf_direct: unexpected connective after normalization");
}

// Implications rewritten to disjunctions, then negations pushed to variables.
Formula drop_implications(const Formula& f) {
  if (f.kind == Kind::Implies)
    return Formula::disjunction({Formula::negation(drop_implications(f.children[0])),
                                 drop_implications(f.children[1])});
  Formula out = f;
  for (Formula& c : out.children) c = drop_implications(c);
  return out;
}

}  // namespace

Cnf to_cnf_direct(const Formula& f, int num_inputs, std::size_t max_clauses) {
  Cnf c;
  c.num_vars = std::max(num_inputs, max_var(f));
  for (int v = 1; v <= c.num_vars; ++v) c.original_vars.push_back(v);
  const Formula g = simplify_constants(f);
  if (g.kind == Kind::True) return c;
  if (g.kind == Kind::False) {
    c.clauses.push_back({});
    return c;
  }
  c.clauses = distribute(push_negations(drop_implications(g)), max_clauses);
  return c;
}

// --- DPLL -------------------------------------------------------------------------------

namespace {

class Dpll {
 public:
  explicit Dpll(const Cnf& c) : cnf_(c), value_(static_cast<std::size_t>(c.num_vars) + 1, 0) {}

  bool assume(int lit) {
    const int v = std::abs(lit);
    if (v < 1 || v > cnf_.num_vars) throw std::invalid_argument("dpll_sat: assumption out of range");
    const std::int8_t want = lit > 0 ? 1 : -1;
    if (value_[v] == -want) return false;
    if (value_[v] == 0) assign(lit);
    return true;
  }

  bool solve() {
    const std::size_t mark = trail_.size();
    if (!propagate()) {
      undo(mark);
      return false;
    }
    if (all_satisfied()) return true;
    int branch = 0;
    for (int v = 1; v <= cnf_.num_vars; ++v)
      if (value_[v] == 0) {
        branch = v;
        break;
      }
    if (branch == 0) {
      undo(mark);
      return false;
    }
    for (int lit : {branch, -branch}) {
      const std::size_t inner = trail_.size();
      assign(lit);
      if (solve()) return true;
      undo(inner);
    }
    undo(mark);
    return false;
  }

  Assignment model() const {
    Assignment a;
    for (int v = 1; v <= cnf_.num_vars; ++v) a.set(v, value_[v] == 1);
    return a;
  }

 private:
  std::int8_t lit_value(int lit) const {
    const std::int8_t v = value_[std::abs(lit)];
    return lit > 0 ? v : static_cast<std::int8_t>(-v);
  }

  bool satisfied(const Clause& c) const {
    return std::any_of(c.begin(), c.end(), [&](int l) { return lit_value(l) == 1; });
  }

  bool all_satisfied() const {
    return std::all_of(cnf_.clauses.begin(), cnf_.clauses.end(),
                       [&](const Clause& c) { return satisfied(c); });
  }

  void assign(int lit) {
    value_[std::abs(lit)] = lit > 0 ? 1 : -1;
    trail_.push_back(std::abs(lit));
  }

  void undo(std::size_t mark) {
    while (trail_.size() > mark) {
      value_[trail_.back()] = 0;
      trail_.pop_back();
    }
  }

  // Clause scanning to a fixpoint; false on conflict.
  bool propagate() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const Clause& c : cnf_.clauses) {
        int unassigned = 0;
        int last = 0;
        bool sat = false;
        for (int l : c) {
          const std::int8_t lv = lit_value(l);
          if (lv == 1) {
            sat = true;
            break;
          }
          if (lv == 0) {
            ++unassigned;
            last = l;
          }
        }
        if (sat) continue;
        if (unassigned == 0) return false;
        if (unassigned == 1) {
          assign(last);
          changed = true;
        }
      }
    }
    return true;
  }

  const Cnf& cnf_;
  std::vector<std::int8_t> value_;
  std::vector<int> trail_;
};

}  // namespace

std::optional<Assignment> dpll_sat(const Cnf& c, std::span<const int> assumptions) {
  c.validate();
  Dpll solver(c);
  for (int lit : assumptions)
    if (!solver.assume(lit)) return std::nullopt;
  if (!solver.solve()) return std::nullopt;
  return solver.model();
}

// --- DIMACS ---------------------------------------------------------------------------------

std::string write_dimacs(const Cnf& c) {
  std::ostringstream out;
  bool all_original = static_cast<int>(c.original_vars.size()) == c.num_vars;
  if (!all_original) {
    out << "c inputs";
    for (int v : c.original_vars) out << ' ' << v;
    out << " 0\n";
  }
  out << "p cnf " << c.num_vars << ' ' << c.clauses.size() << '\n';
  for (const Clause& cl : c.clauses) {
    for (int lit : cl) out << lit << ' ';
    out << "0\n";
  }
  return out.str();
}

Cnf parse_dimacs(std::string_view text) {
  Cnf c;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = false;
  bool have_inputs = false;
  std::size_t declared = 0;
  Clause current;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw std::invalid_argument("DIMACS line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first == "c") {
      std::string tag;
      if (ls >> tag && tag == "inputs") {
        int v;
        while (ls >> v && v != 0) c.original_vars.push_back(v);
        have_inputs = true;
      }
      continue;
    }
    if (first == "%") break;
    if (first == "p") {
      std::string fmt;
      long vars = -1;
      long count = -1;
      if (!(ls >> fmt >> vars >> count) || fmt != "cnf" || vars < 0 || count < 0)
        fail("malformed problem line");
      if (header) fail("duplicate problem line");
      header = true;
      c.num_vars = static_cast<int>(vars);
      declared = static_cast<std::size_t>(count);
      continue;
    }
    if (!header) fail("clause before the problem line");
    std::istringstream body(line);
    long lit;
    while (body >> lit) {
      if (lit == 0) {
        c.clauses.push_back(std::move(current));
        current.clear();
      } else {
        if (std::labs(lit) > c.num_vars) fail("literal " + std::to_string(lit) + " exceeds declared variables");
        current.push_back(static_cast<int>(lit));
      }
    }
    if (!body.eof()) fail("unexpected token");
  }
  if (!header) throw std::invalid_argument("DIMACS: missing problem line");
  if (!current.empty()) c.clauses.push_back(std::move(current));
  if (c.clauses.size() != declared)
    throw std::invalid_argument("DIMACS: header declares " + std::to_string(declared) +
                                " clauses, found " + std::to_string(c.clauses.size()));
  if (!have_inputs)
    for (int v = 1; v <= c.num_vars; ++v) c.original_vars.push_back(v);
  std::sort(c.original_vars.begin(), c.original_vars.end());
  return c;
}

}  // namespace lensr
