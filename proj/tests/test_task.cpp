#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "lensr/task.hpp"
#include "support/gradcheck.hpp"

using namespace lensr;
using namespace lensr::ad;
using lensr::testing::grad_check;

namespace {

EmbedderConfig tiny_embedder(int epochs) {
  EmbedderConfig c;
  c.in_dim = 8;
  c.hidden = 8;
  c.out_dim = 6;
  c.epochs = epochs;
  c.seed = 3;
  return c;
}

PairData gaussian_pairs(std::size_t n, std::uint64_t seed, bool separable) {
  std::mt19937_64 rng(seed);
  PairData d;
  d.x = Matrix(n, 10);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(uniform_index(rng, 2));
    for (std::size_t j = 0; j < 10; ++j) d.x(i, j) = standard_normal(rng) + (separable && j == 0 ? 4.0 * label : 0.0);
    d.labels.push_back(label);
    d.formula.push_back(i);
  }
  return d;
}

}  // namespace

TEST(Split, DisjointCoverAndSizes) {
  const Split s = split_formulas(200, 9);
  EXPECT_EQ(s.train.size(), 160u);
  EXPECT_EQ(s.test.size(), 40u);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  for (std::size_t i : s.test) EXPECT_TRUE(all.insert(i).second);
  EXPECT_EQ(all.size(), 200u);
  EXPECT_EQ(split_formulas(200, 9).test, s.test);
  EXPECT_NE(split_formulas(200, 10).test, s.test);
  EXPECT_THROW(split_formulas(10, 1, 1.0), std::invalid_argument);
}

TEST(MeanSe, Definition) {
  const MeanSe m = mean_se({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.se, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  const MeanSe c = mean_se(std::vector<double>(10, 75.0));
  EXPECT_EQ(c.se, 0.0);
  EXPECT_THROW(mean_se({1.0}), std::invalid_argument);
}

TEST(Standardizer, ZeroMeanUnitScale) {
  Matrix x = Matrix::from_rows({{1.0, 5.0}, {3.0, 5.0}, {5.0, 5.0}});
  const Standardizer s = Standardizer::fit(x);
  const Matrix y = s.apply(x);
  EXPECT_DOUBLE_EQ(y(0, 0) + y(1, 0) + y(2, 0), 0.0);
  EXPECT_NEAR(y(0, 0) * y(0, 0) + y(1, 0) * y(1, 0) + y(2, 0) * y(2, 0), 3.0, 1e-12);
  EXPECT_EQ(y(1, 1), 0.0);  // constant column keeps scale 1
  EXPECT_THROW(s.apply(Matrix(1, 3)), ShapeError);
}

TEST(Entailment, LearnsSeparableData) {
  const PairData train = gaussian_pairs(400, 1, true);
  const PairData test = gaussian_pairs(400, 2, true);
  MlpParams p = train_entailment(train, MlpConfig{}, 5);
  EXPECT_GT(accuracy(p, test), 95.0);
}

TEST(Entailment, ShuffledLabelsAtChance) {
  const PairData train = gaussian_pairs(400, 3, false);
  const PairData test = gaussian_pairs(2000, 4, false);
  MlpParams p = train_entailment(train, MlpConfig{}, 5);
  EXPECT_NEAR(accuracy(p, test), 50.0, 5.0);
}

TEST(Entailment, DeterministicAndErrors) {
  const PairData d = gaussian_pairs(100, 6, true);
  MlpParams a = train_entailment(d, MlpConfig{}, 8);
  MlpParams b = train_entailment(d, MlpConfig{}, 8);
  EXPECT_EQ(a.w1.value, b.w1.value);
  EXPECT_EQ(accuracy(a, d), accuracy(b, d));
  EXPECT_THROW(train_entailment(PairData{}, MlpConfig{}, 1), std::invalid_argument);
  PairData one = d;
  std::fill(one.labels.begin(), one.labels.end(), 1);
  EXPECT_THROW(train_entailment(one, MlpConfig{}, 1), std::invalid_argument);
}

TEST(Pairs, LayoutAndLabels) {
  const auto data = gen_dataset(Tier::Low, 6, 4);
  const EmbedderParams e = init_params(tiny_embedder(0));
  const PairData d = make_pairs(e, data);
  std::size_t sat = 0, total = 0;
  for (const DatasetRecord& r : data) sat += r.sat.size(), total += r.sat.size() + r.unsat.size();
  ASSERT_EQ(d.labels.size(), total);
  EXPECT_EQ(static_cast<std::size_t>(std::count(d.labels.begin(), d.labels.end(), 1)), sat);
  EXPECT_EQ(d.x.cols(), 12u);
  const auto qf = embed_formula(e, data[0]);
  const auto qt = embed_assignment(e, data[0].sat[0]);
  for (std::size_t j = 0; j < 6; ++j) {
    EXPECT_EQ(d.x(0, j), qf[j]);
    EXPECT_EQ(d.x(0, 6 + j), qt[j]);
  }
}

TEST(Settings, TableRows) {
  const auto s = ablation_settings();
  ASSERT_EQ(s.size(), 7u);
  for (const Setting& x : s)
    if (x.semantic_reg) {
      EXPECT_EQ(x.form, GraphForm::Ddnnf);
    }
  EXPECT_EQ(find_setting("ddnnf+HE+SR").heterogeneous, true);
  EXPECT_THROW(find_setting("cnf+SR"), std::invalid_argument);
}

TEST(Experiment, RunIsDeterministicAndOrdered) {
  const auto data = gen_dataset(Tier::Low, 20, 8);
  ExperimentConfig cfg;
  cfg.embedder = tiny_embedder(3);
  cfg.mlp.epochs = 5;
  cfg.seed = 4;
  const Setting s = find_setting("ddnnf+SR");
  const RunResult a = run_entailment(data, s, cfg, 1);
  EXPECT_GE(a.accuracy, 0.0);
  EXPECT_LE(a.accuracy, 100.0);
  EXPECT_EQ(a.log.size(), 3u);
  EXPECT_FALSE(a.distances.empty());
  const auto runs = eval_runs(data, s, cfg, 3);
  ASSERT_EQ(runs.size(), 3u);
  EXPECT_EQ(runs[1].run, 1);
  EXPECT_EQ(runs[1].accuracy, a.accuracy);
  EXPECT_EQ(runs[1].sat_distance, a.sat_distance);
}

TEST(LogicLoss, ZeroWhenPredictionIsTheFormula) {
  EmbedderConfig c = tiny_embedder(0);
  const EmbedderParams e = init_params(c);
  const Formula f = parse_formula("x1 & !x2 & x3");
  const LogicLoss loss(e, f, 3);
  Tape t;
  EXPECT_NEAR(loss(t, t.constant(Matrix::from_rows({{1.0, 0.0, 1.0}}))).scalar(), 0.0, 1e-20);
  Tape u;
  EXPECT_GT(loss(u, u.constant(Matrix::from_rows({{0.0, 0.0, 1.0}}))).scalar(), 0.0);
}

TEST(LogicLoss, GradientThroughProbabilities) {
  for (bool he : {false, true}) {
    EmbedderConfig c = tiny_embedder(0);
    c.heterogeneous = he;
    const LogicLoss loss(init_params(c), parse_formula("(x1 -> x2) & x3 | !x1"), 3);
    Tensor probs("p", Matrix::from_rows({{0.3, 0.8, 0.55}}));
    const auto r = grad_check({&probs}, [&](Tape& t) { return loss(t, t.bind(probs)); });
    EXPECT_LT(r.max_rel_error, 1e-4);
  }
}

TEST(LogicLoss, SatisfyingOneHotBeatsUniformOnTrainedEmbedder) {
  const auto data = gen_dataset(Tier::Moderate, 60, 12);
  EmbedderConfig c;
  c.heterogeneous = true;
  c.semantic_reg = true;
  c.epochs = 40;
  const EmbedderParams e = train_embedder(data, c);
  const Formula f = parse_formula("(x1 -> x2) & x3");
  const LogicLoss loss(e, f, 3);
  Tape t;
  const double uniform = loss(t, t.constant(Matrix(1, 3, 0.5))).scalar();
  const double model = loss(t, t.constant(Matrix::from_rows({{1.0, 1.0, 1.0}}))).scalar();
  EXPECT_GE(uniform, model);
  EXPECT_THROW(loss(t, t.constant(Matrix(1, 2, 0.5))), ShapeError);
}

TEST(ToyTask, InstancesSatisfyConstraint) {
  ToyConfig cfg;
  cfg.num_train = 10;
  cfg.num_test = 30;
  const Formula f = parse_formula("x1 | x2");
  const ToyTask t = make_toy_task(f, 3, cfg, 2);
  ASSERT_EQ(t.truth.size(), 40u);
  EXPECT_EQ(t.features.rows(), 40u);
  for (const Assignment& a : t.truth) EXPECT_TRUE(eval(f, a));
  EXPECT_THROW(make_toy_task(parse_formula("x1 & !x1"), 1, cfg, 2), std::invalid_argument);
  EXPECT_THROW(make_toy_task(f, 1, cfg, 2), std::invalid_argument);
}

TEST(ToyTask, DeterministicMetricsInRange) {
  ToyConfig cfg;
  cfg.num_props = 3;
  cfg.num_train = 20;
  cfg.num_test = 50;
  cfg.epochs = 20;
  const Formula f = parse_formula("x1 | x2 | !x3");
  const ToyTask task = make_toy_task(f, 3, cfg, 9);
  const LogicLoss loss(init_params(tiny_embedder(0)), f, 3);
  for (double lambda : {0.0, 0.1}) {
    const ToyMetrics a = train_toy_task(task, loss, cfg, lambda, 4);
    const ToyMetrics b = train_toy_task(task, loss, cfg, lambda, 4);
    EXPECT_EQ(a.accuracy, b.accuracy);
    EXPECT_EQ(a.satisfaction, b.satisfaction);
    EXPECT_GE(a.accuracy, 0.0);
    EXPECT_LE(a.satisfaction, 100.0);
  }
  EXPECT_THROW(train_toy_task(task, loss, cfg, -1.0, 4), std::invalid_argument);
}

TEST(ToyTask, ConstraintEligibility) {
  const auto data = gen_dataset(Tier::High, 40, 11);
  const auto cs = toy_constraints(data, 6);
  EXPECT_FALSE(cs.empty());
  for (const Formula& f : cs) {
    std::uint64_t models = 0, on = 0, off = 0;
    for (std::uint64_t b = 0; b < 64; ++b)
      if (eval_bits(f, b)) ++models, on |= b, off |= ~b & 63U;
    EXPECT_EQ(on, 63u);
    EXPECT_EQ(off, 63u);
    EXPECT_GE(models, 32u);
    EXPECT_LT(models, 64u);
  }
}
