#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "lensr/compiler.hpp"
#include "lensr/logic_graph.hpp"
#include "support/gradcheck.hpp"

using namespace lensr;

namespace {

int count_type(const LogicGraph& g, NodeType t) {
  int k = 0;
  for (const auto& n : g.nodes) k += n.type == t;
  return k;
}

void expect_global_wired(const LogicGraph& g) {
  EXPECT_EQ(count_type(g, NodeType::Global), 1);
  EXPECT_EQ(g.degrees()[static_cast<std::size_t>(g.global)], static_cast<int>(g.size()) - 1);
}

bool equivalent(const Formula& a, const Formula& b, int n) {
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << n); ++x)
    if (eval_bits(a, x) != eval_bits(b, x)) return false;
  return true;
}

}  // namespace

TEST(GraphGeneral, GlassesRule) {
  const LogicGraph g = build_graph_general(parse_formula("(p -> q) & m & n"));
  EXPECT_EQ(g.size(), 7u);
  EXPECT_EQ(g.nodes[0].type, NodeType::And);
  EXPECT_EQ(count_type(g, NodeType::Implies), 1);
  EXPECT_EQ(count_type(g, NodeType::Leaf), 4);
  // 5 tree edges among the 6 formula nodes plus 6 global edges
  EXPECT_EQ(g.edges.size(), 11u);
  expect_global_wired(g);
}

TEST(GraphGeneral, SingleLiteral) {
  const LogicGraph g = build_graph_general(parse_formula("p"));
  EXPECT_EQ(g.size(), 2u);
  EXPECT_EQ(g.edges.size(), 1u);
}

TEST(GraphGeneral, NegationPushedToLeaves) {
  const Formula f = parse_formula("!(p & q)");
  const LogicGraph g = build_graph_general(f);
  EXPECT_EQ(g.nodes[0].type, NodeType::Or);
  EXPECT_EQ(g.nodes[1].literal, -1);
  EXPECT_EQ(g.nodes[2].literal, -2);
  EXPECT_TRUE(equivalent(graph_to_formula(g), f, 2));
}

TEST(GraphGeneral, FaithfulOnRandomFormulas) {
  for (int seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    const Formula f = random_formula(6, 6, rng);
    const LogicGraph g = build_graph_general(f);
    expect_global_wired(g);
    EXPECT_TRUE(equivalent(graph_to_formula(g), f, 6));
  }
}

TEST(GraphGeneral, ConstantsRejected) {
  EXPECT_THROW(build_graph_general(Formula::constant(true)), std::invalid_argument);
}

TEST(GraphCnf, GlassesRule) {
  const LogicGraph g = build_graph_cnf(to_cnf_direct(parse_formula("(p -> q) & m & n")));
  EXPECT_EQ(g.nodes[0].type, NodeType::And);
  EXPECT_EQ(count_type(g, NodeType::Or), 1);
  EXPECT_EQ(count_type(g, NodeType::Leaf), 4);
  EXPECT_EQ(g.children(0).size(), 3u);
  expect_global_wired(g);
}

TEST(GraphCnf, Degenerate) {
  const LogicGraph unit = build_graph_cnf(Cnf{1, {{1}}, {1}});
  EXPECT_EQ(unit.size(), 2u);
  EXPECT_EQ(unit.nodes[0].type, NodeType::Leaf);
  const LogicGraph two = build_graph_cnf(Cnf{2, {{1, -2}, {2}}, {1, 2}});
  EXPECT_EQ(count_type(two, NodeType::And), 1);
  EXPECT_EQ(count_type(two, NodeType::Or), 1);
  EXPECT_EQ(count_type(two, NodeType::Leaf), 3);
  EXPECT_EQ(two.size(), 6u);
  EXPECT_THROW(build_graph_cnf(Cnf{1, {}, {1}}), std::invalid_argument);
}

TEST(GraphDdnnf, Literal) {
  NnfDag d;
  d.add_literal(1);
  const LogicGraph g = build_graph_ddnnf(d);
  EXPECT_EQ(g.size(), 2u);
  EXPECT_EQ(g.nodes[0].literal, 1);
}

TEST(GraphDdnnf, GlassesRuleIsFaithful) {
  const Formula f = parse_formula("(p -> q) & m & n");
  const LogicGraph g = build_graph_ddnnf(compile_formula(f));
  expect_global_wired(g);
  EXPECT_EQ(g.nodes[0].type, NodeType::And);
  EXPECT_GE(count_type(g, NodeType::Or), 1);
  EXPECT_TRUE(equivalent(graph_to_formula(g), f, 4));
}

TEST(GraphDdnnf, SharingKeepsGraphSmall) {
  NnfDag d;
  const NodeId x = d.add_literal(1);
  const NodeId nx = d.add_literal(-1);
  const NodeId y = d.add_literal(2);
  const NodeId a = d.add_and({x, y});
  const NodeId b = d.add_and({nx, y});
  d.add_or({a, b}, 1);
  const LogicGraph g = build_graph_ddnnf(d);
  // tree expansion would duplicate the shared leaf y
  EXPECT_EQ(g.size(), 7u);
  EXPECT_LT(g.size(), 8u);
  EXPECT_EQ(count_type(g, NodeType::Leaf), 3);
}

TEST(GraphAssignment, Shapes) {
  Assignment a;
  a.set(1, true);
  const LogicGraph g = build_assignment_graph(a);
  EXPECT_EQ(g.size(), 3u);
  EXPECT_EQ(g.nodes[0].type, NodeType::And);
  EXPECT_EQ(g.nodes[1].literal, 1);
  const LogicGraph h = build_assignment_graph(Assignment::from_literals(std::vector<int>{1, -2, 3, 4}));
  EXPECT_EQ(h.children(0).size(), 4u);
  EXPECT_EQ(h.nodes[2].literal, -2);
  const LogicGraph k = build_assignment_graph(Assignment::from_literals(std::vector<int>{1, 2, 3, 4}));
  int differing = 0;
  for (std::size_t i = 0; i < h.size(); ++i) differing += !(h.nodes[i] == k.nodes[i]);
  EXPECT_EQ(differing, 1);
  EXPECT_EQ(h.edges, k.edges);
  EXPECT_THROW(build_assignment_graph(Assignment{}), std::invalid_argument);
}

TEST(Adjacency, SmallCases) {
  LogicGraph one;
  one.nodes = {{NodeType::Global, 0}};
  EXPECT_EQ(normalize_adjacency(one), Matrix::from_rows({{1.0}}));
  LogicGraph two;
  two.nodes = {{NodeType::Leaf, 1}, {NodeType::Global, 0}};
  two.edges = {{1, 0}};
  two.global = 1;
  EXPECT_EQ(normalize_adjacency(two), Matrix(2, 2, 0.5));
}

TEST(Adjacency, MatchesDefinition) {
  const LogicGraph g = build_graph_general(parse_formula("(p -> q) & m & n"));
  const Matrix a = normalize_adjacency(g);
  ASSERT_EQ(a.rows(), 7u);
  const auto deg = g.degrees();
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 7; ++j) {
      bool adjacent = i == j;
      for (const auto& [p, c] : g.edges)
        adjacent = adjacent || (static_cast<std::size_t>(p) == i && static_cast<std::size_t>(c) == j) ||
                   (static_cast<std::size_t>(p) == j && static_cast<std::size_t>(c) == i);
      const double want = adjacent ? 1.0 / std::sqrt((1.0 + deg[i]) * (1.0 + deg[j])) : 0.0;
      EXPECT_NEAR(a(i, j), want, 1e-15);
      EXPECT_EQ(a(i, j), a(j, i));
    }
}

TEST(Adjacency, SpectralRadiusAtMostOne) {
  std::mt19937_64 rng(4);
  const LogicGraph g = build_graph_general(random_formula(6, 6, rng));
  const Matrix a = normalize_adjacency(g);
  // power iteration on the symmetric matrix
  Matrix v(a.rows(), 1, 1.0);
  double lambda = 0.0;
  for (int it = 0; it < 500; ++it) {
    Matrix w(a.rows(), 1);
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j) w(i, 0) += a(i, j) * v(j, 0);
    double norm = 0.0;
    for (double x : w.data()) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : w.data()) x /= norm;
    lambda = norm;
    v = w;
  }
  EXPECT_LE(lambda, 1.0 + 1e-9);
}

TEST(Features, LeafRows) {
  const FeatureLayout layout{4};
  std::mt19937_64 rng(0);
  const Matrix table = lensr::testing::random_matrix(rng, layout.rows(), 5);
  const LogicGraph g = build_assignment_graph(Assignment::from_literals(std::vector<int>{1, -2}));
  const Matrix x = init_features(g, layout, table);
  for (std::size_t j = 0; j < 5; ++j) {
    EXPECT_EQ(x(0, j), table(static_cast<std::size_t>(layout.type_row(NodeType::And)), j));
    EXPECT_EQ(x(1, j), table(0, j));
    EXPECT_EQ(x(2, j), table(1, j) + table(static_cast<std::size_t>(layout.negation_row()), j));
    EXPECT_EQ(x(3, j), table(static_cast<std::size_t>(layout.type_row(NodeType::Global)), j));
  }
  const LogicGraph big = build_assignment_graph(Assignment::from_literals(std::vector<int>{5}));
  EXPECT_THROW(init_features(big, layout, table), std::out_of_range);
}

TEST(Permutation, RowsAndAdjacencyMoveTogether) {
  std::mt19937_64 rng(8);
  const LogicGraph g = build_graph_ddnnf(compile_formula(random_formula(6, 6, rng), 6));
  std::vector<int> order(g.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const LogicGraph p = permute(g, order);
  const FeatureLayout layout{6};
  const Matrix table = lensr::testing::random_matrix(rng, layout.rows(), 3);
  const Matrix a = normalize_adjacency(g), pa = normalize_adjacency(p);
  const Matrix x = init_features(g, layout, table), px = init_features(p, layout, table);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto oi = static_cast<std::size_t>(order[i]);
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_EQ(pa(i, j), a(oi, static_cast<std::size_t>(order[j])));
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(px(i, j), x(oi, j));
  }
  EXPECT_EQ(graph_to_formula(p), graph_to_formula(g));
  EXPECT_THROW(permute(g, std::vector<int>(g.size(), 0)), std::invalid_argument);
}

TEST(GraphJson, HasFields) {
  const std::string j = graph_to_json(build_graph_general(parse_formula("p & q")));
  EXPECT_NE(j.find("\"adjacency_checksum\""), std::string::npos);
  EXPECT_NE(j.find("\"edges\""), std::string::npos);
  EXPECT_NE(j.find("\"global\""), std::string::npos);
}
