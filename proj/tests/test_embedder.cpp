#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lensr/compiler.hpp"
#include "lensr/embedder.hpp"
#include "lensr/kernels.hpp"
#include "support/gradcheck.hpp"

using namespace lensr;
using namespace lensr::ad;
using lensr::testing::grad_check;
using lensr::testing::random_matrix;

namespace {

EmbedderConfig small_config(bool he, bool sr) {
  EmbedderConfig c;
  c.heterogeneous = he;
  c.semantic_reg = sr;
  c.in_dim = 4;
  c.hidden = 3;
  c.out_dim = 5;
  c.max_vars = 4;
  c.seed = 11;
  return c;
}

PreparedGraph glasses_ddnnf(const FeatureLayout& layout) {
  return prepare(build_graph_ddnnf(compile_formula(parse_formula("(p -> q) & m & n"))), layout);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Latents enter as a free variable so the SR terms can be set by hand.
double sr_of(const PreparedGraph& g, const Matrix& latents) {
  Tape t;
  return semantic_reg_loss(t.constant(latents), g).scalar();
}

}  // namespace

TEST(EmbedderConfig, Validation) {
  EmbedderConfig c;
  EXPECT_NO_THROW(c.validate());
  c.form = GraphForm::General;
  c.semantic_reg = true;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.form = GraphForm::Cnf;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = EmbedderConfig{};
  c.out_dim = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = EmbedderConfig{};
  c.batch = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(EmbedderParams, Shapes) {
  EmbedderConfig c;
  c.heterogeneous = true;
  const EmbedderParams p = init_params(c);
  EXPECT_EQ(p.table.value.rows(), FeatureLayout{c.max_vars}.rows());
  EXPECT_EQ(p.table.value.cols(), 50u);
  ASSERT_EQ(p.weights.size(), 3u);
  for (const auto& layer : p.weights) EXPECT_EQ(layer.size(), 5u);
  EXPECT_EQ(p.weights[0][0].value.rows(), 50u);
  EXPECT_EQ(p.weights[1][0].value.cols(), 50u);
  EXPECT_EQ(p.weights[2][4].value.cols(), 100u);
  c.heterogeneous = false;
  EXPECT_EQ(init_params(c).weights[0].size(), 1u);
}

TEST(Forward, GlobalOnlyGraph) {
  LogicGraph g;
  g.nodes.push_back({NodeType::Global, 0});
  const EmbedderConfig c = small_config(false, false);
  const EmbedderParams p = init_params(c);
  const PreparedGraph pg = prepare(g, p.layout());
  EXPECT_EQ(pg.adjacency, Matrix(1, 1, 1.0));

  Matrix z(1, static_cast<std::size_t>(c.in_dim));
  const auto src = p.table.value.row(static_cast<std::size_t>(p.layout().type_row(NodeType::Global)));
  std::copy(src.begin(), src.end(), z.data().begin());
  for (int l = 0; l < c.layers; ++l) {
    Matrix out;
    kernels::matmul(z, p.weights[static_cast<std::size_t>(l)][0].value, out);
    if (l + 1 < c.layers)
      for (double& v : out.data()) v = std::max(v, 0.0);
    z = out;
  }
  const auto q = embed(p, pg);
  EXPECT_EQ(q, std::vector<double>(z.data().begin(), z.data().end()));
}

TEST(Forward, EmbeddingDimension) {
  const EmbedderParams p = init_params(EmbedderConfig{});
  const auto q = embed(p, glasses_ddnnf(p.layout()));
  EXPECT_EQ(q.size(), 100u);
  for (double v : q) EXPECT_TRUE(std::isfinite(v));
  const Assignment tau = Assignment::from_bits(1, 1);
  EXPECT_EQ(build_assignment_graph(tau).size(), 3u);
  EXPECT_EQ(embed_assignment(p, tau).size(), 100u);
}

TEST(Forward, PermutationInvariance) {
  for (bool he : {false, true}) {
    EmbedderConfig c;
    c.heterogeneous = he;
    const EmbedderParams p = init_params(c);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const DatasetRecord r = make_record(Tier::Moderate, seed);
      for (GraphForm form : {GraphForm::General, GraphForm::Cnf, GraphForm::Ddnnf}) {
        const LogicGraph g = formula_graph(r, form);
        std::vector<int> order(g.size());
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(seed);
        std::shuffle(order.begin(), order.end(), rng);
        const auto a = embed(p, prepare(g, p.layout()));
        const auto b = embed(p, prepare(permute(g, order), p.layout()));
        EXPECT_LE(max_abs_diff(a, b), 1e-9) << "seed " << seed;
      }
    }
  }
}

TEST(Forward, HeterogeneousWithEqualWeightsMatchesHomogeneous) {
  EmbedderConfig c;
  const EmbedderParams homo = init_params(c);
  c.heterogeneous = true;
  EmbedderParams het = init_params(c);
  het.table.value = homo.table.value;
  for (std::size_t l = 0; l < het.weights.size(); ++l)
    for (auto& w : het.weights[l]) w.value = homo.weights[l][0].value;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const DatasetRecord r = make_record(Tier::Moderate, seed);
    const PreparedGraph g = prepare(formula_graph(r, GraphForm::Ddnnf), homo.layout());
    EXPECT_EQ(embed(het, g), embed(homo, g));
  }
}

TEST(Forward, EndToEndGradientCheck) {
  for (bool he : {false, true}) {
    const EmbedderConfig c = small_config(he, true);
    EmbedderParams p = init_params(c);
    const PreparedGraph f = glasses_ddnnf(p.layout());
    const PreparedGraph pos = prepare(build_assignment_graph(Assignment::from_bits(0b1110, 4)), p.layout());
    const PreparedGraph neg = prepare(build_assignment_graph(Assignment::from_bits(0b0001, 4)), p.layout());
    const auto r = grad_check(p.tensors(), [&](Tape& t) {
      const BoundParams b = bind(t, p);
      const Embedding ef = forward(b, c, f);
      const Var lt = triplet_loss(ef.q, forward(b, c, pos).q, forward(b, c, neg).q, 100.0);
      return add(lt, scalar_mul(semantic_reg_loss(ef.latents, f), c.lambda_r));
    });
    EXPECT_LT(r.max_rel_error, 1e-4) << "he " << he;
    EXPECT_EQ(r.checked, p.num_parameters());
  }
}

TEST(SemanticReg, OrthogonalAndChildrenGiveZero) {
  const FeatureLayout layout{4};
  // And(m, n, Or(...)) at the root of the compiled glasses rule
  const PreparedGraph g = glasses_ddnnf(layout);
  ASSERT_FALSE(g.and_children.empty());
  Matrix z(g.graph.size(), g.graph.size() + 1, 0.0);
  for (std::size_t i = 0; i < g.graph.size(); ++i) z(i, i) = 2.0;
  // Or children then need rows summing to ones; zero the Or terms by hand
  PreparedGraph and_only = g;
  and_only.or_children.clear();
  EXPECT_EQ(sr_of(and_only, z), 0.0);
  EXPECT_GT(sr_of(g, z), 0.0);
}

TEST(SemanticReg, OrChildrenSummingToOnesGiveZero) {
  const FeatureLayout layout{4};
  PreparedGraph g = glasses_ddnnf(layout);
  ASSERT_FALSE(g.or_children.empty());
  g.and_children.clear();
  Matrix z(g.graph.size(), 3, 0.0);
  for (const auto& ch : g.or_children)
    for (int c : ch)
      for (std::size_t j = 0; j < 3; ++j) z(static_cast<std::size_t>(c), j) = 1.0 / static_cast<double>(ch.size());
  EXPECT_NEAR(sr_of(g, z), 0.0, 1e-24);
  ASSERT_EQ(g.or_children[0].size(), 2u);
  EXPECT_EQ(sr_of(g, z), 0.0);
}

TEST(SemanticReg, MatchesDirectGramRecompute) {
  const EmbedderConfig c = small_config(true, true);
  EmbedderParams p = init_params(c);
  const PreparedGraph g = glasses_ddnnf(p.layout());
  Tape t;
  const Embedding e = forward(bind(t, p), c, g);
  const Matrix& z = e.latents.value();
  double expected = 0.0;
  for (const auto& ch : g.or_children)
    for (std::size_t j = 0; j < z.cols(); ++j) {
      double s = -1.0;
      for (int k : ch) s += z(static_cast<std::size_t>(k), j);
      expected += s * s;
    }
  bool three_child_and = false;
  for (const auto& ch : g.and_children) {
    three_child_and = three_child_and || ch.size() == 3;
    for (int a : ch)
      for (int b : ch) {
        if (a == b) continue;
        double dot = 0.0;
        for (std::size_t j = 0; j < z.cols(); ++j) dot += z(static_cast<std::size_t>(a), j) * z(static_cast<std::size_t>(b), j);
        expected += dot * dot;
      }
  }
  EXPECT_TRUE(three_child_and);
  EXPECT_NEAR(semantic_reg_loss(e.latents, g).scalar(), expected, 1e-12 * std::max(1.0, expected));
}

TEST(SemanticReg, RejectsOtherForms) {
  const FeatureLayout layout{4};
  const PreparedGraph g = prepare(build_graph_general(parse_formula("a & b")), layout);
  EXPECT_THROW(sr_of(g, Matrix(g.graph.size(), 2, 0.0)), std::invalid_argument);
}

TEST(Triplet, Examples) {
  Tape t;
  const Var f = t.constant(Matrix::from_rows({{0.0, 0.0}}));
  const Var far = t.constant(Matrix::from_rows({{3.0, 0.0}}));
  EXPECT_EQ(triplet_loss(f, f, far, 1.0).scalar(), 0.0);
  EXPECT_EQ(triplet_loss(f, far, far, 1.0).scalar(), 1.0);
  // qT = [1, 0], qU = [0.5, 0]: 0.25 - 1 + 1 with the unsat point in the pulled slot
  const Var qt = t.constant(Matrix::from_rows({{1.0, 0.0}}));
  const Var qu = t.constant(Matrix::from_rows({{0.5, 0.0}}));
  EXPECT_DOUBLE_EQ(triplet_loss(f, qu, qt, 1.0).scalar(), 0.25);
  EXPECT_DOUBLE_EQ(triplet_loss(f, qt, qu, 1.0).scalar(), 1.75);
  EXPECT_THROW(triplet_loss(f, t.constant(Matrix(1, 3)), qu, 1.0), ShapeError);
}

TEST(Triplet, NonNegative) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    Tape t;
    const Var a = t.constant(random_matrix(rng, 1, 6));
    const Var b = t.constant(random_matrix(rng, 1, 6));
    const Var c = t.constant(random_matrix(rng, 1, 6));
    EXPECT_GE(triplet_loss(a, b, c, 1.0).scalar(), 0.0);
    EXPECT_GE(sr_of(glasses_ddnnf(FeatureLayout{4}), random_matrix(rng, 10, 3)), 0.0);
  }
}

TEST(Train, LossDecreasesOnLowTier) {
  const auto data = gen_dataset(Tier::Low, 20, 3);
  EmbedderConfig c;
  c.heterogeneous = true;
  c.semantic_reg = true;
  c.epochs = 30;
  std::vector<EpochLog> log;
  train_embedder(data, c, &log);
  ASSERT_EQ(log.size(), 30u);
  EXPECT_LT(log.back().triplet, log.front().triplet);
  for (const EpochLog& e : log) {
    EXPECT_GE(e.triplet, 0.0);
    EXPECT_GE(e.sr, 0.0);
  }
}

TEST(Train, Deterministic) {
  const auto data = gen_dataset(Tier::Low, 10, 5);
  EmbedderConfig c = small_config(true, true);
  c.epochs = 5;
  c.batch = 3;
  EXPECT_EQ(checkpoint_to_json(train_embedder(data, c)), checkpoint_to_json(train_embedder(data, c)));
  c.seed = 12;
  EXPECT_NE(checkpoint_to_json(train_embedder(data, c)), checkpoint_to_json(train_embedder(data, small_config(true, true))));
}

TEST(Train, ZeroLambdaMatchesNoRegularizer) {
  const auto data = gen_dataset(Tier::Low, 10, 6);
  EmbedderConfig off = small_config(false, false);
  off.epochs = 5;
  EmbedderConfig on = off;
  on.semantic_reg = true;
  on.lambda_r = 0.0;
  std::vector<EpochLog> a, b;
  const EmbedderParams pa = train_embedder(data, off, &a);
  const EmbedderParams pb = train_embedder(data, on, &b);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].triplet, b[i].triplet);
    EXPECT_EQ(a[i].total, b[i].total);
  }
  EXPECT_EQ(pa.table.value, pb.table.value);
  EXPECT_EQ(pa.weights[2][0].value, pb.weights[2][0].value);
}

TEST(Train, Errors) {
  EXPECT_THROW(train_embedder({}, EmbedderConfig{}), std::invalid_argument);
  auto data = gen_dataset(Tier::Low, 2, 1);
  data[1].unsat.clear();
  EXPECT_THROW(train_embedder(data, EmbedderConfig{}), std::invalid_argument);
  EmbedderConfig bad;
  bad.form = GraphForm::Cnf;
  bad.semantic_reg = true;
  EXPECT_THROW(train_embedder(gen_dataset(Tier::Low, 2, 1), bad), std::invalid_argument);
}

TEST(Train, SatisfyingAssignmentsEndUpCloser) {
  const auto all = gen_dataset(Tier::Low, 200, 1);
  const std::vector<DatasetRecord> train(all.begin(), all.begin() + 160), held(all.begin() + 160, all.end());
  EmbedderConfig c;
  c.form = GraphForm::Ddnnf;
  c.epochs = 40;
  const EmbedderParams p = train_embedder(train, c);
  double sat = 0.0, unsat = 0.0;
  std::size_t ns = 0, nu = 0;
  for (const DatasetRecord& r : held) {
    const auto qf = embed_formula(p, r);
    for (const Assignment& a : r.sat) sat += sq_distance(qf, embed_assignment(p, a)), ++ns;
    for (const Assignment& a : r.unsat) unsat += sq_distance(qf, embed_assignment(p, a)), ++nu;
  }
  EXPECT_LT(sat / static_cast<double>(ns), unsat / static_cast<double>(nu));
}

TEST(Checkpoint, ExactRoundTrip) {
  const auto data = gen_dataset(Tier::Low, 5, 2);
  EmbedderConfig c = small_config(true, true);
  c.epochs = 3;
  const EmbedderParams p = train_embedder(data, c);
  const std::string text = checkpoint_to_json(p);
  const EmbedderParams q = checkpoint_from_json(text);
  EXPECT_EQ(q.config, p.config);
  EXPECT_EQ(q.table.value, p.table.value);
  for (std::size_t l = 0; l < p.weights.size(); ++l)
    for (std::size_t t = 0; t < p.weights[l].size(); ++t) EXPECT_EQ(q.weights[l][t].value, p.weights[l][t].value);
  EXPECT_EQ(checkpoint_to_json(q), text);
}

TEST(Checkpoint, Errors) {
  EXPECT_THROW(checkpoint_from_json("{"), std::invalid_argument);
  EXPECT_THROW(checkpoint_from_json(R"({"version": 9})"), std::invalid_argument);
  const std::string good = checkpoint_to_json(init_params(small_config(false, false)));
  auto j = good;
  j.replace(j.find("\"rows\":9"), 8, "\"rows\":7");
  EXPECT_THROW(checkpoint_from_json(j), ShapeError);
}

TEST(Checkpoint, ConfigJson) {
  EmbedderConfig c;
  c.form = GraphForm::Cnf;
  c.heterogeneous = true;
  c.seed = 99;
  EXPECT_EQ(config_from_json(config_to_json(c)), c);
}
