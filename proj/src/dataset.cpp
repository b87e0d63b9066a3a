#include "lensr/dataset.hpp"

#include <istream>
#include <ostream>

#include "json.hpp"
#include "lensr/compiler.hpp"

namespace lensr {

using nlohmann::json;

TierBounds tier_bounds(Tier t) {
  switch (t) {
    case Tier::Low: return {3, 3};
    case Tier::Moderate: return {3, 6};
    case Tier::High: return {6, 6};
  }
  throw std::invalid_argument("tier_bounds: bad tier");
}

std::string tier_name(Tier t) {
  switch (t) {
    case Tier::Low: return "low";
    case Tier::Moderate: return "moderate";
    case Tier::High: return "high";
  }
  throw std::invalid_argument("tier_name: bad tier");
}

Tier parse_tier(std::string_view name) {
  if (name == "low") return Tier::Low;
  if (name == "moderate") return Tier::Moderate;
  if (name == "high") return Tier::High;
  throw std::invalid_argument("unknown tier `" + std::string(name) + "` (expected low, moderate or high)");
}

DatasetRecord make_record(Tier tier, std::uint64_t record_seed) {
  const TierBounds b = tier_bounds(tier);
  std::mt19937_64 rng(record_seed);
  DatasetRecord r;
  r.tier = tier;
  r.seed = record_seed;
  r.formula = canonicalize(random_formula(b.num_vars, b.max_depth, rng));
  r.num_vars = max_var(r.formula);
  auto sample = enumerate_assignments(r.formula, kAssignmentsPerClass, rng, r.num_vars);
  r.sat = std::move(sample.sat);
  r.unsat = std::move(sample.unsat);
  r.cnf = to_cnf_direct(r.formula, r.num_vars);
  r.ddnnf = compile_formula(r.formula, r.num_vars);
  return r;
}

std::vector<DatasetRecord> gen_dataset(Tier tier, int count, std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("gen_dataset: negative count");
  std::vector<DatasetRecord> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(make_record(tier, derive_seed(seed, static_cast<std::uint64_t>(i))));
  return out;
}

void validate_record(const DatasetRecord& r) {
  auto fail = [](const std::string& m) { throw std::invalid_argument("dataset record: " + m); };
  const TierBounds b = tier_bounds(r.tier);
  if (r.num_vars < 1 || r.num_vars > b.num_vars) fail("variable count outside the tier bound");
  if (depth(r.formula) > b.max_depth) fail("formula deeper than the tier bound");
  if (max_var(r.formula) != r.num_vars) fail("num_vars does not match the formula");
  if (r.sat.empty() || r.unsat.empty()) fail("needs at least one sat and one unsat assignment");
  if (r.sat.size() > kAssignmentsPerClass || r.unsat.size() > kAssignmentsPerClass) fail("too many assignments");
  for (const Assignment& a : r.sat)
    if (!eval(r.formula, a)) fail("a sat assignment falsifies the formula");
  for (const Assignment& a : r.unsat)
    if (eval(r.formula, a)) fail("an unsat assignment satisfies the formula");
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << r.num_vars); ++bits) {
    const Assignment a = Assignment::from_bits(bits, r.num_vars);
    const bool want = eval_bits(r.formula, bits);
    if (r.cnf.satisfied_by(a) != want) fail("cnf form disagrees with the formula");
    if (eval(r.ddnnf, a) != want) fail("d-DNNF form disagrees with the formula");
  }
}

// --- JSON -----------------------------------------------------------------------

namespace {

json nnf_to_json(const NnfDag& g) {
  json nodes = json::array();
  for (std::size_t i = 0; i <= g.root(); ++i) {
    const NnfNode& n = g.node(static_cast<NodeId>(i));
    json e = json::array();
    switch (n.kind) {
      case NnfNode::Kind::Lit: e = {"L", n.literal}; break;
      case NnfNode::Kind::True: e = {"A"}; break;
      case NnfNode::Kind::False: e = {"O", 0}; break;
      case NnfNode::Kind::And:
        e.push_back("A");
        for (NodeId c : n.children) e.push_back(c);
        break;
      case NnfNode::Kind::Or:
        e.push_back("O");
        e.push_back(n.decision_var);
        for (NodeId c : n.children) e.push_back(c);
        break;
    }
    nodes.push_back(std::move(e));
  }
  return {{"num_vars", g.num_vars()}, {"nodes", std::move(nodes)}};
}

NnfDag nnf_from_json(const json& j) {
  NnfDag g;
  for (const json& e : j.at("nodes")) {
    const std::string tag = e.at(0).get<std::string>();
    if (tag == "L") {
      g.add_literal(e.at(1).get<int>());
    } else if (tag == "A") {
      std::vector<NodeId> kids;
      for (std::size_t i = 1; i < e.size(); ++i) kids.push_back(e[i].get<NodeId>());
      kids.empty() ? g.add_true() : g.add_and(std::move(kids));
    } else if (tag == "O") {
      std::vector<NodeId> kids;
      for (std::size_t i = 2; i < e.size(); ++i) kids.push_back(e[i].get<NodeId>());
      kids.empty() ? g.add_false() : g.add_or(std::move(kids), e.at(1).get<int>());
    } else {
      throw std::invalid_argument("nnf node tag `" + tag + "`");
    }
  }
  if (g.empty()) throw std::invalid_argument("nnf: no nodes");
  g.set_num_vars(j.at("num_vars").get<int>());
  return g;
}

json assignments_to_json(const std::vector<Assignment>& as) {
  json out = json::array();
  for (const Assignment& a : as) out.push_back(a.literals());
  return out;
}

std::vector<Assignment> assignments_from_json(const json& j) {
  std::vector<Assignment> out;
  for (const json& e : j) out.push_back(Assignment::from_literals(e.get<std::vector<int>>()));
  return out;
}

}  // namespace

std::string record_to_json(const DatasetRecord& r) {
  const SymbolTable names = SymbolTable::numbered(r.num_vars);
  json j;
  j["tier"] = tier_name(r.tier);
  j["seed"] = r.seed;
  j["num_vars"] = r.num_vars;
  j["formula"] = to_string(r.formula, &names);
  j["cnf"] = {{"num_vars", r.cnf.num_vars}, {"clauses", r.cnf.clauses}};
  j["nnf"] = nnf_to_json(r.ddnnf);
  j["sat"] = assignments_to_json(r.sat);
  j["unsat"] = assignments_to_json(r.unsat);
  return j.dump();
}

DatasetRecord record_from_json(std::string_view line) {
  try {
    const json j = json::parse(line);
    DatasetRecord r;
    r.tier = parse_tier(j.at("tier").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.num_vars = j.at("num_vars").get<int>();
    SymbolTable names = SymbolTable::numbered(r.num_vars);
    r.formula = parse_formula(j.at("formula").get<std::string>(), &names);
    r.cnf.num_vars = j.at("cnf").at("num_vars").get<int>();
    r.cnf.clauses = j.at("cnf").at("clauses").get<std::vector<Clause>>();
    for (int v = 1; v <= r.cnf.num_vars; ++v) r.cnf.original_vars.push_back(v);
    r.cnf.validate();
    r.ddnnf = nnf_from_json(j.at("nnf"));
    r.sat = assignments_from_json(j.at("sat"));
    r.unsat = assignments_from_json(j.at("unsat"));
    return r;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("dataset line: ") + e.what());
  }
}

void write_jsonl(std::ostream& out, const std::vector<DatasetRecord>& records) {
  for (const DatasetRecord& r : records) out << record_to_json(r) << '\n';
}

std::vector<DatasetRecord> read_jsonl(std::istream& in) {
  std::vector<DatasetRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(line));
    } catch (const std::exception& e) {
      throw std::invalid_argument("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace lensr
