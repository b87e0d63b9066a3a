#include <gtest/gtest.h>

#include "lensr/formula.hpp"

using namespace lensr;

namespace {

Formula V(int i) { return Formula::variable(i); }

std::uint64_t truth_count(const Formula& f, int n) {
  std::uint64_t k = 0;
  for (std::uint64_t b = 0; b < (std::uint64_t{1} << n); ++b) k += eval_bits(f, b);
  return k;
}

}  // namespace

TEST(Parse, GlassesRule) {
  SymbolTable s;
  const Formula f = parse_formula("(p -> q) & m & n", &s);
  EXPECT_EQ(f, Formula::conjunction({Formula::implication(V(1), V(2)), V(3), V(4)}));
  EXPECT_EQ(s.name(3), "m");
}

TEST(Parse, Constants) {
  EXPECT_EQ(parse_formula("T"), Formula::constant(true));
  EXPECT_EQ(parse_formula("F"), Formula::constant(false));
}

TEST(Parse, NegatedConjunction) {
  EXPECT_EQ(parse_formula("!(a & b) | a"),
            Formula::disjunction({Formula::negation(Formula::conjunction({V(1), V(2)})), V(1)}));
}

TEST(Parse, Precedence) {
  // & binds tighter than |, which binds tighter than ->
  EXPECT_EQ(parse_formula("a | b & c -> d"),
            Formula::implication(Formula::disjunction({V(1), Formula::conjunction({V(2), V(3)})}), V(4)));
  // -> is right-associative
  EXPECT_EQ(parse_formula("a -> b -> c"), Formula::implication(V(1), Formula::implication(V(2), V(3))));
  EXPECT_EQ(parse_formula("!!a"), Formula::negation(Formula::negation(V(1))));
}

TEST(Parse, Errors) {
  EXPECT_THROW(parse_formula(""), ParseError);
  EXPECT_THROW(parse_formula("   "), ParseError);
  try {
    parse_formula("a & & b");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }
  EXPECT_THROW(parse_formula("(a | b"), ParseError);
  EXPECT_THROW(parse_formula("a b"), ParseError);
  EXPECT_THROW(parse_formula("a # b"), ParseError);
}

TEST(Eval, Examples) {
  const Formula f = parse_formula("(p -> q) & m & n");
  EXPECT_TRUE(eval(f, Assignment::from_bits(0b1111, 4)));
  EXPECT_FALSE(eval(f, Assignment::from_bits(0b1101, 4)));  // p true, q false
  EXPECT_FALSE(eval(Formula::constant(false), Assignment::from_bits(1, 1)));
  EXPECT_FALSE(eval(parse_formula("p & !p"), Assignment::from_bits(1, 1)));
}

TEST(Eval, MissingVariableThrows) {
  Assignment a;
  a.set(1, true);
  EXPECT_THROW(eval(parse_formula("a & b"), a), std::out_of_range);
}

TEST(Formula, DepthAndVars) {
  const Formula f = parse_formula("(p -> q) & m & !n");
  EXPECT_EQ(depth(f), 3);
  EXPECT_EQ(depth(V(1)), 1);
  EXPECT_EQ(depth(Formula::negation(V(1))), 1);
  EXPECT_EQ(max_var(f), 4);
  EXPECT_EQ(variables(f), (std::vector<int>{1, 2, 3, 4}));
}

TEST(Formula, ConstructorsValidate) {
  EXPECT_THROW(Formula::conjunction({V(1)}), std::invalid_argument);
  EXPECT_THROW(Formula::variable(0), std::invalid_argument);
}

TEST(Formula, RoundTripRandom) {
  for (int seed = 0; seed < 300; ++seed) {
    std::mt19937_64 rng(seed);
    const Formula f = random_formula(1 + seed % 6, 1 + seed % 6, rng);
    const SymbolTable s = SymbolTable::numbered(max_var(f));
    SymbolTable t = s;
    EXPECT_EQ(parse_formula(to_string(f, &s), &t), f) << to_string(f, &s);
  }
}

TEST(Formula, PushNegationsPreservesSemantics) {
  for (int seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    const Formula f = random_formula(4, 5, rng);
    const Formula g = push_negations(f);
    for (std::uint64_t b = 0; b < 16; ++b) ASSERT_EQ(eval_bits(f, b), eval_bits(g, b));
  }
}

TEST(Formula, SimplifyConstants) {
  EXPECT_EQ(simplify_constants(parse_formula("a & T")), V(1));
  EXPECT_EQ(simplify_constants(parse_formula("a & F")), Formula::constant(false));
  EXPECT_EQ(simplify_constants(parse_formula("F -> a")), Formula::constant(true));
  EXPECT_EQ(simplify_constants(parse_formula("a -> F")), Formula::negation(V(1)));
}

TEST(Formula, Canonicalize) {
  EXPECT_EQ(canonicalize(Formula::conjunction({V(5), V(2), V(5)})), Formula::conjunction({V(1), V(2), V(1)}));
}

TEST(RandomFormula, PostConditions) {
  for (auto [nv, dm] : {std::pair{3, 3}, {3, 6}, {6, 6}}) {
    for (int seed = 0; seed < 50; ++seed) {
      std::mt19937_64 rng(seed);
      const Formula f = random_formula(nv, dm, rng);
      EXPECT_LE(depth(f), dm);
      EXPECT_LE(max_var(f), nv);
      const auto k = truth_count(f, nv);
      EXPECT_GT(k, 0u);
      EXPECT_LT(k, std::uint64_t{1} << nv);
    }
  }
}

TEST(RandomFormula, SingleVariableDepthOne) {
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const Formula f = random_formula(1, 1, rng);
    EXPECT_TRUE(f == V(1) || f == Formula::negation(V(1)));
  }
}

TEST(RandomFormula, Deterministic) {
  std::mt19937_64 a(42), b(42);
  EXPECT_EQ(random_formula(6, 6, a), random_formula(6, 6, b));
}

TEST(Enumerate, Examples) {
  std::mt19937_64 rng(0);
  auto s = enumerate_assignments(V(1), 5, rng);
  ASSERT_EQ(s.sat.size(), 1u);
  ASSERT_EQ(s.unsat.size(), 1u);
  EXPECT_TRUE(s.sat[0].value(1));
  EXPECT_FALSE(s.unsat[0].value(1));

  s = enumerate_assignments(parse_formula("p | q"), 5, rng);
  EXPECT_EQ(s.sat.size(), 3u);
  EXPECT_EQ(s.unsat.size(), 1u);

  const Formula g = parse_formula("(p -> q) & m & n");
  s = enumerate_assignments(g, 5, rng);
  // 3 of the 16 rows satisfy it (p -> q has 3 models, m and n are forced)
  EXPECT_EQ(s.sat.size(), 3u);
  EXPECT_EQ(s.unsat.size(), 5u);
  for (const auto& a : s.sat) EXPECT_TRUE(eval(g, a));
  for (const auto& a : s.unsat) EXPECT_FALSE(eval(g, a));
  for (std::size_t i = 1; i < s.unsat.size(); ++i) EXPECT_NE(s.unsat[i], s.unsat[i - 1]);
}

TEST(Enumerate, Bound) {
  std::mt19937_64 rng(0);
  EXPECT_THROW(enumerate_assignments(V(25), 5, rng), std::invalid_argument);
}

TEST(Assignment, Basics) {
  const Assignment a = Assignment::from_literals(std::vector<int>{1, -3});
  EXPECT_TRUE(a.value(1));
  EXPECT_FALSE(a.value(3));
  EXPECT_FALSE(a.contains(2));
  EXPECT_EQ(a.size(), 2u);
  EXPECT_EQ(a.literals(), (std::vector<int>{1, -3}));
  EXPECT_THROW(a.value(2), std::out_of_range);
}
