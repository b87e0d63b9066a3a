#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "lensr/cnf.hpp"
#include "lensr/formula.hpp"
#include "lensr/nnf.hpp"

namespace lensr {

enum class Tier { Low, Moderate, High };

struct TierBounds {
  int num_vars;
  int max_depth;
};

/// low = (3, 3), moderate = (3, 6), high = (6, 6)
TierBounds tier_bounds(Tier t);
std::string tier_name(Tier t);
/// Throws std::invalid_argument on an unknown name.
Tier parse_tier(std::string_view name);

inline constexpr int kAssignmentsPerClass = 5;

/// One synthetic formula in three equivalent forms plus sampled assignments.
/// Variables are canonical (1..num_vars in first-appearance order).
struct DatasetRecord {
  Tier tier = Tier::Low;
  std::uint64_t seed = 0;
  int num_vars = 0;
  Formula formula;
  Cnf cnf;
  NnfDag ddnnf;
  std::vector<Assignment> sat;
  std::vector<Assignment> unsat;

  bool operator==(const DatasetRecord&) const = default;
};

/// Record i is drawn from its own generator seeded with derive_seed(seed, i).
std::vector<DatasetRecord> gen_dataset(Tier tier, int count, std::uint64_t seed);
DatasetRecord make_record(Tier tier, std::uint64_t record_seed);

/// Throws std::invalid_argument naming the first broken invariant.
void validate_record(const DatasetRecord& r);

/// JSON Lines: fields tier, seed, num_vars, formula, cnf, nnf, sat, unsat.
std::string record_to_json(const DatasetRecord& r);
DatasetRecord record_from_json(std::string_view line);
void write_jsonl(std::ostream& out, const std::vector<DatasetRecord>& records);
std::vector<DatasetRecord> read_jsonl(std::istream& in);

}  // namespace lensr
