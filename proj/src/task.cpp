#include "lensr/task.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "lensr/compiler.hpp"
#include "lensr/random.hpp"

namespace lensr {

using ad::Tape;
using ad::Tensor;
using ad::Var;

namespace {

Matrix glorot(std::mt19937_64& rng, int in, int out) {
  Matrix w(static_cast<std::size_t>(in), static_cast<std::size_t>(out));
  const double a = std::sqrt(6.0 / (in + out));
  for (double& v : w.data()) v = a * (2.0 * uniform_real(rng) - 1.0);
  return w;
}

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = m.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

std::vector<std::size_t> shuffled(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
  return v;
}

}  // namespace

// --- entailment classifier --------------------------------------------------

std::vector<Tensor*> MlpParams::tensors() { return {&w1, &b1, &w2, &b2}; }

MlpParams init_mlp(int in, int hidden, int out, std::uint64_t seed) {
  if (in < 1 || hidden < 1 || out < 1) throw std::invalid_argument("init_mlp: dimensions must be > 0");
  std::mt19937_64 rng(seed);
  MlpParams p;
  p.w1 = Tensor("w1", glorot(rng, in, hidden));
  p.b1 = Tensor("b1", Matrix(1, static_cast<std::size_t>(hidden)));
  p.w2 = Tensor("w2", glorot(rng, hidden, out));
  p.b2 = Tensor("b2", Matrix(1, static_cast<std::size_t>(out)));
  return p;
}

Var mlp_forward(Tape& tape, MlpParams& p, Var x) {
  const Var h = ad::relu(ad::add_row_broadcast(ad::matmul(x, tape.bind(p.w1)), tape.bind(p.b1)));
  return ad::add_row_broadcast(ad::matmul(h, tape.bind(p.w2)), tape.bind(p.b2));
}

PairData make_pairs(const EmbedderParams& embedder, const std::vector<DatasetRecord>& records) {
  const std::size_t d = static_cast<std::size_t>(embedder.config.out_dim);
  std::size_t n = 0;
  for (const DatasetRecord& r : records) n += r.sat.size() + r.unsat.size();
  PairData out;
  out.x = Matrix(n, 2 * d);
  std::size_t row = 0;
  auto put = [&](const std::vector<double>& qf, const std::vector<double>& qt, int label, std::size_t f) {
    auto dst = out.x.row(row++);
    std::copy(qf.begin(), qf.end(), dst.begin());
    std::copy(qt.begin(), qt.end(), dst.begin() + static_cast<std::ptrdiff_t>(d));
    out.labels.push_back(label);
    out.formula.push_back(f);
  };
  for (std::size_t f = 0; f < records.size(); ++f) {
    const auto qf = embed_formula(embedder, records[f]);
    for (const Assignment& a : records[f].sat) put(qf, embed_assignment(embedder, a), 1, f);
    for (const Assignment& a : records[f].unsat) put(qf, embed_assignment(embedder, a), 0, f);
  }
  return out;
}

Standardizer Standardizer::fit(const Matrix& x) {
  if (x.rows() == 0) throw std::invalid_argument("Standardizer: no rows");
  Standardizer s;
  s.mean.assign(x.cols(), 0.0);
  s.scale.assign(x.cols(), 0.0);
  const double n = static_cast<double>(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) s.mean[j] += x(i, j);
  for (double& m : s.mean) m /= n;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) s.scale[j] += (x(i, j) - s.mean[j]) * (x(i, j) - s.mean[j]);
  for (double& v : s.scale) {
    const double sd = std::sqrt(v / n);
    v = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols() != mean.size()) throw ShapeError("Standardizer: column count mismatch");
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (x(i, j) - mean[j]) * scale[j];
  return out;
}

Split split_formulas(std::size_t n, std::uint64_t seed, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("split_formulas: train fraction must lie in (0, 1)");
  std::mt19937_64 rng(seed);
  const auto order = shuffled(n, rng);
  const auto cut = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

MlpParams train_entailment(const PairData& data, const MlpConfig& config, std::uint64_t seed) {
  if (data.labels.empty()) throw std::invalid_argument("train_entailment: empty dataset");
  const auto ones = std::count(data.labels.begin(), data.labels.end(), 1);
  if (ones == 0 || ones == static_cast<std::ptrdiff_t>(data.labels.size()))
    throw std::invalid_argument("train_entailment: only one class present");
  if (config.epochs < 0 || config.batch < 1) throw std::invalid_argument("train_entailment: bad epochs or batch");
  MlpParams p = init_mlp(static_cast<int>(data.x.cols()), config.hidden, 2, derive_seed(seed, 0));
  ad::Adam opt(p.tensors(), ad::AdamConfig{config.lr});
  std::mt19937_64 rng(derive_seed(seed, 1));
  const std::size_t n = data.labels.size();
  for (int e = 0; e < config.epochs; ++e) {
    const auto order = shuffled(n, rng);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch)) {
      const std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(
                                                              std::min(n, start + static_cast<std::size_t>(config.batch))));
      std::vector<int> labels;
      for (std::size_t r : rows) labels.push_back(data.labels[r]);
      opt.zero_grad();
      Tape tape;
      tape.backward(ad::cross_entropy(mlp_forward(tape, p, tape.constant(take_rows(data.x, rows))), labels));
      opt.step();
    }
  }
  return p;
}

double accuracy(MlpParams& p, const PairData& data) {
  if (data.labels.empty()) throw std::invalid_argument("accuracy: empty dataset");
  Tape tape;
  const Matrix& logits = mlp_forward(tape, p, tape.constant(data.x)).value();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    const int pred = logits(i, 1) > logits(i, 0) ? 1 : 0;
    hits += pred == data.labels[i];
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(data.labels.size());
}

MeanSe mean_se(const std::vector<double>& values) {
  if (values.size() < 2) throw std::invalid_argument("mean_se: need at least two runs");
  const double n = static_cast<double>(values.size());
  MeanSe r;
  for (double v : values) r.mean += v;
  r.mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return r;
}

// --- ablation experiment ----------------------------------------------------

std::vector<Setting> ablation_settings() {
  return {{"general", GraphForm::General, false, false}, {"cnf", GraphForm::Cnf, false, false},
          {"cnf+HE", GraphForm::Cnf, true, false},       {"ddnnf", GraphForm::Ddnnf, false, false},
          {"ddnnf+SR", GraphForm::Ddnnf, false, true},   {"ddnnf+HE", GraphForm::Ddnnf, true, false},
          {"ddnnf+HE+SR", GraphForm::Ddnnf, true, true}};
}

Setting find_setting(const std::string& name) {
  for (const Setting& s : ablation_settings())
    if (s.name == name) return s;
  throw std::invalid_argument("unknown setting '" + name + "'");
}

RunResult run_entailment(const std::vector<DatasetRecord>& records, const Setting& setting,
                         const ExperimentConfig& config, int run) {
  if (records.size() < 2) throw std::invalid_argument("run_entailment: need at least two formulas");
  const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(run));
  const Split split = split_formulas(records.size(), derive_seed(seed, 0));
  std::vector<DatasetRecord> train, test;
  for (std::size_t i : split.train) train.push_back(records[i]);
  for (std::size_t i : split.test) test.push_back(records[i]);

  EmbedderConfig ec = config.embedder;
  ec.form = setting.form;
  ec.heterogeneous = setting.heterogeneous;
  ec.semantic_reg = setting.semantic_reg;
  ec.seed = derive_seed(seed, 1);
  RunResult r;
  r.setting = setting;
  r.run = run;
  const EmbedderParams embedder = train_embedder(train, ec, &r.log);

  PairData tr = make_pairs(embedder, train);
  PairData te = make_pairs(embedder, test);
  const Standardizer st = Standardizer::fit(tr.x);
  tr.x = st.apply(tr.x);
  te.x = st.apply(te.x);
  MlpParams mlp = train_entailment(tr, config.mlp, derive_seed(seed, 2));
  r.accuracy = accuracy(mlp, te);

  std::size_t ns = 0, nu = 0;
  for (std::size_t f = 0; f < test.size(); ++f) {
    const auto qf = embed_formula(embedder, test[f]);
    for (int sat = 1; sat >= 0; --sat)
      for (const Assignment& a : sat ? test[f].sat : test[f].unsat) {
        const double d = sq_distance(qf, embed_assignment(embedder, a));
        r.distances.push_back({split.test[f], sat == 1, d});
        (sat ? r.sat_distance : r.unsat_distance) += d;
        ++(sat ? ns : nu);
      }
  }
  if (ns > 0) r.sat_distance /= static_cast<double>(ns);
  if (nu > 0) r.unsat_distance /= static_cast<double>(nu);
  return r;
}

std::vector<RunResult> eval_runs(const std::vector<DatasetRecord>& records, const Setting& setting,
                                 const ExperimentConfig& config, int runs) {
  if (runs < 1) throw std::invalid_argument("eval_runs: runs must be >= 1");
  std::vector<RunResult> out(static_cast<std::size_t>(runs));
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < runs; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = run_entailment(records, setting, config, i);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

// --- logic-loss toy task ----------------------------------------------------

ToyTask make_toy_task(const Formula& constraint, int num_props, const ToyConfig& config, std::uint64_t seed) {
  if (num_props < max_var(constraint) || num_props < 1 || num_props > 20)
    throw std::invalid_argument("make_toy_task: num_props must cover the constraint's variables (max 20)");
  if (config.num_train < 1 || config.num_test < 1) throw std::invalid_argument("make_toy_task: empty split");
  std::vector<std::uint64_t> models;
  for (std::uint64_t b = 0; b < (std::uint64_t{1} << num_props); ++b)
    if (eval_bits(constraint, b)) models.push_back(b);
  if (models.empty()) throw std::invalid_argument("make_toy_task: constraint is unsatisfiable");
  std::mt19937_64 rng(seed);
  ToyTask t;
  t.constraint = constraint;
  t.num_props = num_props;
  t.num_train = static_cast<std::size_t>(config.num_train);
  const std::size_t n = t.num_train + static_cast<std::size_t>(config.num_test);
  t.features = Matrix(n, static_cast<std::size_t>(num_props));
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t b = models[uniform_index(rng, models.size())];
    t.truth.push_back(Assignment::from_bits(b, num_props));
    for (int j = 0; j < num_props; ++j)
      t.features(i, static_cast<std::size_t>(j)) = static_cast<double>((b >> j) & 1U) + config.noise * standard_normal(rng);
  }
  return t;
}

namespace {

LogicGraph constraint_graph(const Formula& f, GraphForm form, int num_props) {
  switch (form) {
    case GraphForm::General: return build_graph_general(f);
    case GraphForm::Cnf: return build_graph_cnf(to_cnf_direct(f, num_props));
    case GraphForm::Ddnnf: return build_graph_ddnnf(compile_formula(f, num_props));
    case GraphForm::Assignment: break;
  }
  throw std::invalid_argument("constraint_graph: bad form");
}

BoundParams frozen(Tape& tape, const EmbedderParams& p) {
  BoundParams b;
  b.table = tape.constant(p.table.value);
  for (const auto& layer : p.weights) {
    std::vector<Var> vs;
    for (const auto& w : layer) vs.push_back(tape.constant(w.value));
    b.weights.push_back(std::move(vs));
  }
  return b;
}

}  // namespace

LogicLoss::LogicLoss(const EmbedderParams& embedder, const Formula& constraint, int num_props)
    : embedder_(embedder) {
  const FeatureLayout layout = embedder.layout();
  if (num_props < 1 || num_props > layout.max_vars)
    throw std::invalid_argument("LogicLoss: " + std::to_string(num_props) + " propositions, embedder covers " +
                                std::to_string(layout.max_vars));
  q_formula_ = embed(embedder_, prepare(constraint_graph(constraint, embedder.config.form, num_props), layout));

  std::vector<int> all;
  for (int v = 1; v <= num_props; ++v) all.push_back(v);
  conj_ = prepare(build_assignment_graph(Assignment::from_literals(all)), layout);
  const std::size_t nodes = conj_.graph.size();
  const std::size_t d = embedder.table.value.cols();
  leaf_select_ = Matrix(nodes, static_cast<std::size_t>(num_props));
  fixed_features_ = init_features(conj_.graph, layout, embedder.table.value);
  for (std::size_t i = 0; i < nodes; ++i) {
    const GraphNode& n = conj_.graph.nodes[i];
    if (n.type != NodeType::Leaf) continue;
    leaf_select_(i, static_cast<std::size_t>(n.literal - 1)) = 1.0;
    for (double& v : fixed_features_.row(i)) v = 0.0;
  }
  literal_rows_ = Matrix(2 * static_cast<std::size_t>(num_props), d);
  const auto& table = embedder.table.value;
  const auto neg = table.row(static_cast<std::size_t>(layout.negation_row()));
  for (int v = 1; v <= num_props; ++v) {
    const auto pos = table.row(static_cast<std::size_t>(layout.var_row(v)));
    auto p_row = literal_rows_.row(2 * static_cast<std::size_t>(v - 1));
    auto n_row = literal_rows_.row(2 * static_cast<std::size_t>(v - 1) + 1);
    for (std::size_t j = 0; j < d; ++j) {
      p_row[j] = pos[j];
      n_row[j] = 0.0 + pos[j] + neg[j];
    }
  }
}

Var LogicLoss::operator()(Tape& tape, Var probs) const {
  const std::size_t k = leaf_select_.cols();
  if (probs.rows() != 1 || probs.cols() != k)
    throw ShapeError("LogicLoss: probs must be 1 x " + std::to_string(k) + ", got " + probs.value().shape_string());
  const Var pt = ad::matmul_nt(tape.constant(Matrix::identity(k)), probs);  // k x 1
  const Var weights = ad::concat_cols(pt, ad::affine(pt, -1.0, 1.0));
  const Var leaves = ad::weighted_row_average(weights, tape.constant(literal_rows_));
  const Var x = ad::add(ad::matmul(tape.constant(leaf_select_), leaves), tape.constant(fixed_features_));
  const Var q = forward_features(frozen(tape, embedder_), embedder_.config, conj_, x).q;
  return ad::sq_euclidean(tape.constant(Matrix::row_vector(q_formula_)), q);
}

ToyMetrics train_toy_task(const ToyTask& task, const LogicLoss& logic, const ToyConfig& config, double lambda,
                          std::uint64_t seed) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("train_toy_task: lambda must be >= 0");
  const std::size_t k = static_cast<std::size_t>(task.num_props);
  std::vector<std::size_t> train_rows(task.num_train), test_rows;
  std::iota(train_rows.begin(), train_rows.end(), std::size_t{0});
  for (std::size_t i = task.num_train; i < task.truth.size(); ++i) test_rows.push_back(i);
  auto targets_of = [&](const std::vector<std::size_t>& rows) {
    Matrix t(rows.size(), k);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < k; ++j) t(i, j) = task.truth[rows[i]].value(static_cast<int>(j) + 1) ? 1.0 : 0.0;
    return t;
  };
  const Matrix x_train = take_rows(task.features, train_rows);
  const Matrix y_train = targets_of(train_rows);

  MlpParams head = init_mlp(task.num_props, config.hidden, task.num_props, seed);
  ad::Adam opt(head.tensors(), ad::AdamConfig{config.lr});
  for (int e = 0; e < config.epochs; ++e) {
    opt.zero_grad();
    Tape tape;
    const Var logits = mlp_forward(tape, head, tape.constant(x_train));
    Var loss = ad::bce_with_logits(logits, y_train);
    if (lambda > 0.0) {
      const Var probs = ad::sigmoid(logits);
      Var sum = tape.constant(Matrix(1, 1, 0.0));
      for (std::size_t i = 0; i < train_rows.size(); ++i) {
        const int row = static_cast<int>(i);
        sum = ad::add(sum, logic(tape, ad::gather_rows(probs, std::span<const int>(&row, 1))));
      }
      loss = ad::add(loss, ad::scalar_mul(sum, lambda / static_cast<double>(train_rows.size())));
    }
    tape.backward(loss);
    opt.step();
  }

  Tape tape;
  const Matrix& logits = mlp_forward(tape, head, tape.constant(take_rows(task.features, test_rows))).value();
  std::size_t bit_hits = 0, satisfied = 0;
  for (std::size_t i = 0; i < test_rows.size(); ++i) {
    std::vector<int> lits;
    for (std::size_t j = 0; j < k; ++j) {
      const bool on = logits(i, j) > 0.0;  // sigmoid > 0.5
      bit_hits += on == task.truth[test_rows[i]].value(static_cast<int>(j) + 1);
      lits.push_back(on ? static_cast<int>(j) + 1 : -static_cast<int>(j) - 1);
    }
    satisfied += eval(task.constraint, Assignment::from_literals(lits));
  }
  ToyMetrics m;
  m.accuracy = 100.0 * static_cast<double>(bit_hits) / static_cast<double>(test_rows.size() * k);
  m.satisfaction = 100.0 * static_cast<double>(satisfied) / static_cast<double>(test_rows.size());
  return m;
}

std::vector<Formula> toy_constraints(const std::vector<DatasetRecord>& records, int num_props) {
  if (num_props < 1 || num_props > 20) throw std::invalid_argument("toy_constraints: num_props must lie in 1..20");
  const std::uint64_t all = (std::uint64_t{1} << num_props) - 1;
  std::vector<Formula> out;
  for (const DatasetRecord& r : records) {
    if (max_var(r.formula) != num_props) continue;
    std::uint64_t models = 0, on = 0, off = 0;
    for (std::uint64_t b = 0; b <= all; ++b)
      if (eval_bits(r.formula, b)) {
        ++models;
        on |= b;
        off |= ~b & all;
      }
    if (on == all && off == all && 2 * models >= all + 1 && models <= all) out.push_back(r.formula);
  }
  return out;
}

std::vector<ToyRun> run_toy_experiment(const EmbedderParams& embedder, const std::vector<Formula>& constraints,
                                       const ToyConfig& config, int seeds, std::uint64_t base_seed) {
  if (constraints.empty()) throw std::invalid_argument("run_toy_experiment: no eligible constraint formulas");
  if (seeds < 1) throw std::invalid_argument("run_toy_experiment: seeds must be >= 1");
  std::vector<ToyRun> out(static_cast<std::size_t>(seeds));
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < seeds; ++i) {
    try {
      const Formula& f = constraints[static_cast<std::size_t>(i) % constraints.size()];
      const std::uint64_t seed = derive_seed(base_seed, static_cast<std::uint64_t>(i));
      const ToyTask task = make_toy_task(f, config.num_props, config, derive_seed(seed, 0));
      const LogicLoss logic(embedder, f, config.num_props);
      ToyRun& r = out[static_cast<std::size_t>(i)];
      r.seed = i;
      r.constraint = to_string(f);
      r.baseline = train_toy_task(task, logic, config, 0.0, derive_seed(seed, 1));
      r.logic = train_toy_task(task, logic, config, config.lambda, derive_seed(seed, 1));
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace lensr
