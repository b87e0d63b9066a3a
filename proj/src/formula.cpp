#include "lensr/formula.hpp"

#include <algorithm>
#include <cctype>

namespace lensr {

using Kind = Formula::Kind;

Formula Formula::variable(int id) {
  if (id < 1) throw std::invalid_argument("Formula::variable: ids start at 1");
  Formula f;
  f.kind = Kind::Var;
  f.var = id;
  return f;
}

Formula Formula::negation(Formula child) {
  Formula f;
  f.kind = Kind::Not;
  f.children.push_back(std::move(child));
  return f;
}

Formula Formula::conjunction(std::vector<Formula> children) {
  if (children.size() < 2) throw std::invalid_argument("Formula::conjunction: needs >= 2 children");
  Formula f;
  f.kind = Kind::And;
  f.children = std::move(children);
  return f;
}

Formula Formula::disjunction(std::vector<Formula> children) {
  if (children.size() < 2) throw std::invalid_argument("Formula::disjunction: needs >= 2 children");
  Formula f;
  f.kind = Kind::Or;
  f.children = std::move(children);
  return f;
}

Formula Formula::implication(Formula antecedent, Formula consequent) {
  Formula f;
  f.kind = Kind::Implies;
  f.children.push_back(std::move(antecedent));
  f.children.push_back(std::move(consequent));
  return f;
}

Formula Formula::constant(bool value) {
  Formula f;
  f.kind = value ? Kind::True : Kind::False;
  return f;
}

bool Formula::is_literal() const {
  return kind == Kind::Var || (kind == Kind::Not && children[0].kind == Kind::Var);
}

// --- Assignment ---------------------------------------------------------------

Assignment Assignment::from_bits(std::uint64_t bits, int num_vars) {
  Assignment a;
  for (int v = 1; v <= num_vars; ++v) a.set(v, ((bits >> (v - 1)) & 1U) != 0);
  return a;
}

Assignment Assignment::from_literals(std::span<const int> literals) {
  Assignment a;
  for (int lit : literals) {
    if (lit == 0) throw std::invalid_argument("Assignment: literal 0");
    a.set(std::abs(lit), lit > 0);
  }
  return a;
}

void Assignment::set(int var, bool value) {
  if (var < 1) throw std::invalid_argument("Assignment::set: ids start at 1");
  if (static_cast<std::size_t>(var) > values_.size()) values_.resize(static_cast<std::size_t>(var), -1);
  values_[static_cast<std::size_t>(var - 1)] = value ? 1 : 0;
}

std::optional<bool> Assignment::get(int var) const {
  if (var < 1 || static_cast<std::size_t>(var) > values_.size()) return std::nullopt;
  const auto v = values_[static_cast<std::size_t>(var - 1)];
  if (v < 0) return std::nullopt;
  return v == 1;
}

bool Assignment::value(int var) const {
  auto v = get(var);
  if (!v) throw std::out_of_range("assignment has no value for variable " + std::to_string(var));
  return *v;
}

std::size_t Assignment::size() const {
  return static_cast<std::size_t>(
      std::count_if(values_.begin(), values_.end(), [](std::int8_t v) { return v >= 0; }));
}

std::vector<int> Assignment::literals() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] < 0) continue;
    const int v = static_cast<int>(i) + 1;
    out.push_back(values_[i] == 1 ? v : -v);
  }
  return out;
}

// --- symbols --------------------------------------------------------------------

ParseError::ParseError(const std::string& message, std::size_t offset)
    : std::runtime_error(message + " at offset " + std::to_string(offset)), offset_(offset) {}

SymbolTable SymbolTable::numbered(int n) {
  SymbolTable t;
  for (int i = 1; i <= n; ++i) t.intern("x" + std::to_string(i));
  return t;
}

int SymbolTable::intern(std::string_view name) {
  if (auto id = find(name)) return *id;
  names_.emplace_back(name);
  const int id = static_cast<int>(names_.size());
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<int> SymbolTable::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::string SymbolTable::name(int id) const {
  if (id >= 1 && id <= size()) return names_[static_cast<std::size_t>(id - 1)];
  return "x" + std::to_string(id);
}

// --- parser -------------------------------------------------------------------------

namespace {

class Parser {
 public:
  Parser(std::string_view text, SymbolTable& symbols) : text_(text), symbols_(symbols) {}

  Formula parse() {
    skip_space();
    if (pos_ == text_.size()) throw ParseError("empty formula", pos_);
    Formula f = parse_implies();
    skip_space();
    if (pos_ != text_.size()) throw ParseError("unexpected character '" + std::string(1, text_[pos_]) + "'", pos_);
    return f;
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(std::string_view token) {
    skip_space();
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  Formula parse_implies() {
    Formula lhs = parse_or();
    if (accept("->")) return Formula::implication(std::move(lhs), parse_implies());
    return lhs;
  }

  Formula parse_or() {
    std::vector<Formula> parts;
    parts.push_back(parse_and());
    while (accept("|")) parts.push_back(parse_and());
    if (parts.size() == 1) return std::move(parts.front());
    return Formula::disjunction(std::move(parts));
  }

  Formula parse_and() {
    std::vector<Formula> parts;
    parts.push_back(parse_unary());
    while (accept("&")) parts.push_back(parse_unary());
    if (parts.size() == 1) return std::move(parts.front());
    return Formula::conjunction(std::move(parts));
  }

  Formula parse_unary() {
    if (accept("!")) return Formula::negation(parse_unary());
    return parse_atom();
  }

  Formula parse_atom() {
    skip_space();
    if (pos_ == text_.size()) throw ParseError("unexpected end of input", pos_);
    if (accept("(")) {
      Formula inner = parse_implies();
      if (!accept(")")) throw ParseError("expected ')'", pos_);
      return inner;
    }
    const char c = text_[pos_];
    if (!(std::isalpha(static_cast<unsigned char>(c)) || c == '_'))
      throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_);
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string_view ident = text_.substr(start, pos_ - start);
    if (ident == "T") return Formula::constant(true);
    if (ident == "F") return Formula::constant(false);
    return Formula::variable(symbols_.intern(ident));
  }

  std::string_view text_;
  SymbolTable& symbols_;
  std::size_t pos_ = 0;
};

// Binding strength, tightest highest.
int precedence(const Formula& f) {
  switch (f.kind) {
    case Kind::Implies: return 1;
    case Kind::Or: return 2;
    case Kind::And: return 3;
    case Kind::Not: return 4;
    default: return 5;
  }
}

void render(const Formula& f, const SymbolTable* symbols, std::string& out) {
  auto child = [&](const Formula& c, bool parens) {
    if (parens) out += '(';
    render(c, symbols, out);
    if (parens) out += ')';
  };
  switch (f.kind) {
    case Kind::Var:
      out += symbols ? symbols->name(f.var) : "x" + std::to_string(f.var);
      return;
    case Kind::True: out += 'T'; return;
    case Kind::False: out += 'F'; return;
    case Kind::Not:
      out += '!';
      child(f.children[0], precedence(f.children[0]) < precedence(f));
      return;
    case Kind::And:
    case Kind::Or: {
      const char* sep = f.kind == Kind::And ? " & " : " | ";
      for (std::size_t i = 0; i < f.children.size(); ++i) {
        if (i) out += sep;
        // An operand of the same connective must keep its own parentheses.
        child(f.children[i], precedence(f.children[i]) <= precedence(f));
      }
      return;
    }
    case Kind::Implies:
      child(f.children[0], precedence(f.children[0]) <= precedence(f));
      out += " -> ";
      child(f.children[1], precedence(f.children[1]) < precedence(f));
      return;
  }
}

}  // namespace

Formula parse_formula(std::string_view text, SymbolTable* symbols) {
  SymbolTable local;
  Parser p(text, symbols ? *symbols : local);
  return p.parse();
}

std::string to_string(const Formula& f, const SymbolTable* symbols) {
  std::string out;
  render(f, symbols, out);
  return out;
}

// --- semantics ----------------------------------------------------------------------

bool eval(const Formula& f, const Assignment& tau) {
  switch (f.kind) {
    case Kind::Var: return tau.value(f.var);
    case Kind::True: return true;
    case Kind::False: return false;
    case Kind::Not: return !eval(f.children[0], tau);
    case Kind::And:
      return std::all_of(f.children.begin(), f.children.end(),
                         [&](const Formula& c) { return eval(c, tau); });
    case Kind::Or:
      return std::any_of(f.children.begin(), f.children.end(),
                         [&](const Formula& c) { return eval(c, tau); });
    case Kind::Implies: return !eval(f.children[0], tau) || eval(f.children[1], tau);
  }
  return false;
}

bool eval_bits(const Formula& f, std::uint64_t bits) {
  switch (f.kind) {
    case Kind::Var: return ((bits >> (f.var - 1)) & 1U) != 0;
    case Kind::True: return true;
    case Kind::False: return false;
    case Kind::Not: return !eval_bits(f.children[0], bits);
    case Kind::And:
      for (const Formula& c : f.children)
        if (!eval_bits(c, bits)) return false;
      return true;
    case Kind::Or:
      for (const Formula& c : f.children)
        if (eval_bits(c, bits)) return true;
      return false;
    case Kind::Implies: return !eval_bits(f.children[0], bits) || eval_bits(f.children[1], bits);
  }
  return false;
}

int depth(const Formula& f) {
  if (f.children.empty() || f.is_literal()) return 1;
  int d = 0;
  for (const Formula& c : f.children) d = std::max(d, depth(c));
  return d + 1;
}

int max_var(const Formula& f) {
  int m = f.kind == Kind::Var ? f.var : 0;
  for (const Formula& c : f.children) m = std::max(m, max_var(c));
  return m;
}

namespace {
void collect_vars(const Formula& f, std::vector<int>& out) {
  if (f.kind == Kind::Var) out.push_back(f.var);
  for (const Formula& c : f.children) collect_vars(c, out);
}
}  // namespace

std::vector<int> variables(const Formula& f) {
  std::vector<int> out;
  collect_vars(f, out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t node_count(const Formula& f) {
  std::size_t n = 1;
  for (const Formula& c : f.children) n += node_count(c);
  return n;
}

Formula simplify_constants(const Formula& f) {
  switch (f.kind) {
    case Kind::Var:
    case Kind::True:
    case Kind::False: return f;
    case Kind::Not: {
      Formula c = simplify_constants(f.children[0]);
      if (c.kind == Kind::True) return Formula::constant(false);
      if (c.kind == Kind::False) return Formula::constant(true);
      return Formula::negation(std::move(c));
    }
    case Kind::And:
    case Kind::Or: {
      const bool is_and = f.kind == Kind::And;
      const Kind absorbing = is_and ? Kind::False : Kind::True;
      const Kind neutral = is_and ? Kind::True : Kind::False;
      std::vector<Formula> kept;
      for (const Formula& c0 : f.children) {
        Formula c = simplify_constants(c0);
        if (c.kind == absorbing) return c;
        if (c.kind != neutral) kept.push_back(std::move(c));
      }
      if (kept.empty()) return Formula::constant(is_and);
      if (kept.size() == 1) return std::move(kept.front());
      return is_and ? Formula::conjunction(std::move(kept)) : Formula::disjunction(std::move(kept));
    }
    case Kind::Implies: {
      Formula a = simplify_constants(f.children[0]);
      Formula b = simplify_constants(f.children[1]);
      if (a.kind == Kind::False || b.kind == Kind::True) return Formula::constant(true);
      if (a.kind == Kind::True) return b;
      if (b.kind == Kind::False) return simplify_constants(Formula::negation(std::move(a)));
      return Formula::implication(std::move(a), std::move(b));
    }
  }
  return f;
}

namespace {

Formula push(const Formula& f, bool negated) {
  switch (f.kind) {
    case Kind::Var: return negated ? Formula::negation(f) : f;
    case Kind::True:
    case Kind::False: return negated ? Formula::constant(f.kind == Kind::False) : f;
    case Kind::Not: return push(f.children[0], !negated);
    case Kind::And:
    case Kind::Or: {
      std::vector<Formula> cs;
      for (const Formula& c : f.children) cs.push_back(push(c, negated));
      const bool conj = (f.kind == Kind::And) != negated;
      return conj ? Formula::conjunction(std::move(cs)) : Formula::disjunction(std::move(cs));
    }
    case Kind::Implies:
      if (negated)
        return Formula::conjunction({push(f.children[0], false), push(f.children[1], true)});
      return Formula::implication(push(f.children[0], false), push(f.children[1], false));
  }
  return f;
}

void renumber(Formula& f, std::unordered_map<int, int>& ids) {
  if (f.kind == Kind::Var) {
    auto [it, inserted] = ids.emplace(f.var, static_cast<int>(ids.size()) + 1);
    f.var = it->second;
  }
  for (Formula& c : f.children) renumber(c, ids);
}

}  // namespace

Formula push_negations(const Formula& f) { return push(f, false); }

Formula canonicalize(const Formula& f) {
  Formula out = f;
  std::unordered_map<int, int> ids;
  renumber(out, ids);
  return out;
}

}  // namespace lensr
