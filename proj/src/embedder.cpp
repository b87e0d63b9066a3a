#include "lensr/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "lensr/random.hpp"

namespace lensr {

using ad::Tape;
using ad::Tensor;
using ad::Var;

void EmbedderConfig::validate() const {
  if (form == GraphForm::Assignment) throw std::invalid_argument("embedder: form must be general, cnf or ddnnf");
  if (semantic_reg && form != GraphForm::Ddnnf)
    throw std::invalid_argument("embedder: semantic regularization requires the ddnnf form");
  if (layers < 1) throw std::invalid_argument("embedder: layers must be >= 1");
  if (in_dim < 1 || hidden < 1 || out_dim < 1) throw std::invalid_argument("embedder: dimensions must be > 0");
  if (max_vars < 1) throw std::invalid_argument("embedder: max_vars must be >= 1");
  if (!(margin >= 0.0) || !(lambda_r >= 0.0)) throw std::invalid_argument("embedder: margin and lambda_r must be >= 0");
  if (!(lr > 0.0)) throw std::invalid_argument("embedder: lr must be > 0");
  if (epochs < 0) throw std::invalid_argument("embedder: epochs must be >= 0");
  if (batch < 1) throw std::invalid_argument("embedder: batch must be >= 1");
}

namespace {

int layer_in(const EmbedderConfig& c, int l) { return l == 0 ? c.in_dim : c.hidden; }
int layer_out(const EmbedderConfig& c, int l) { return l == c.layers - 1 ? c.out_dim : c.hidden; }
int type_count(const EmbedderConfig& c) { return c.heterogeneous ? kNumNodeTypes : 1; }

std::string weight_name(int l, int t) { return "W" + std::to_string(l) + "_" + std::to_string(t); }

}  // namespace

std::vector<Tensor*> EmbedderParams::tensors() {
  std::vector<Tensor*> out{&table};
  for (auto& layer : weights)
    for (auto& w : layer) out.push_back(&w);
  return out;
}

std::size_t EmbedderParams::num_parameters() const {
  std::size_t n = table.value.size();
  for (const auto& layer : weights)
    for (const auto& w : layer) n += w.value.size();
  return n;
}

EmbedderParams init_params(const EmbedderConfig& config) {
  config.validate();
  EmbedderParams p;
  p.config = config;
  std::mt19937_64 rng(derive_seed(config.seed, 0));
  const FeatureLayout layout{config.max_vars};
  Matrix table(layout.rows(), static_cast<std::size_t>(config.in_dim));
  for (double& v : table.data()) v = standard_normal(rng);
  p.table = Tensor("table", std::move(table));
  for (int l = 0; l < config.layers; ++l) {
    const int fin = layer_in(config, l), fout = layer_out(config, l);
    const double a = std::sqrt(6.0 / (fin + fout));
    std::vector<Tensor> layer;
    for (int t = 0; t < type_count(config); ++t) {
      Matrix w(static_cast<std::size_t>(fin), static_cast<std::size_t>(fout));
      for (double& v : w.data()) v = a * (2.0 * uniform_real(rng) - 1.0);
      layer.emplace_back(weight_name(l, t), std::move(w));
    }
    p.weights.push_back(std::move(layer));
  }
  return p;
}

PreparedGraph prepare(LogicGraph g, const FeatureLayout& layout) {
  PreparedGraph p;
  p.adjacency = normalize_adjacency(g);
  p.feature_rows = feature_rows(g, layout);
  p.types = g.types();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const NodeType t = g.nodes[i].type;
    if (t != NodeType::And && t != NodeType::Or) continue;
    std::vector<int> ch = g.children(static_cast<int>(i));
    if (ch.size() < 2) continue;
    (t == NodeType::And ? p.and_children : p.or_children).push_back(std::move(ch));
  }
  p.graph = std::move(g);
  return p;
}

LogicGraph formula_graph(const DatasetRecord& r, GraphForm form) {
  switch (form) {
    case GraphForm::General: return build_graph_general(r.formula);
    case GraphForm::Cnf: return build_graph_cnf(r.cnf);
    case GraphForm::Ddnnf: return build_graph_ddnnf(r.ddnnf);
    case GraphForm::Assignment: break;
  }
  throw std::invalid_argument("formula_graph: assignment is not a formula form");
}

BoundParams bind(Tape& tape, EmbedderParams& p) {
  BoundParams b;
  b.table = tape.bind(p.table);
  for (auto& layer : p.weights) {
    std::vector<Var> vs;
    for (auto& w : layer) vs.push_back(tape.bind(w));
    b.weights.push_back(std::move(vs));
  }
  return b;
}

Embedding forward_features(const BoundParams& p, const EmbedderConfig& config, const PreparedGraph& g,
                           Var features) {
  if (features.rows() != g.graph.size())
    throw ShapeError("forward: " + std::to_string(features.rows()) + " feature rows for " +
                     std::to_string(g.graph.size()) + " nodes");
  Tape& tape = *features.tape();
  const Var adj = tape.constant(g.adjacency);
  Var z = features;
  for (int l = 0; l < config.layers; ++l) {
    const auto& w = p.weights[static_cast<std::size_t>(l)];
    const Var h = config.heterogeneous ? ad::grouped_matmul(z, w, g.types) : ad::matmul(z, w[0]);
    z = ad::matmul(adj, h);
    if (l + 1 < config.layers) z = ad::relu(z);
  }
  const int global = g.graph.global;
  return {ad::gather_rows(z, std::span<const int>(&global, 1)), z};
}

Embedding forward(const BoundParams& p, const EmbedderConfig& config, const PreparedGraph& g) {
  return forward_features(p, config, g, ad::embedding_sum(p.table, g.feature_rows));
}

Var semantic_reg_loss(Var latents, const PreparedGraph& g) {
  if (g.graph.form != GraphForm::Ddnnf)
    throw std::invalid_argument("semantic_reg_loss: graph form is " + graph_form_name(g.graph.form) +
                                ", expected ddnnf");
  Tape& tape = *latents.tape();
  Var total = tape.constant(Matrix(1, 1, 0.0));
  for (const auto& ch : g.or_children) {
    const Var s = ad::sum_rows(ad::gather_rows(latents, ch));
    total = ad::add(total, ad::frobenius_sq(ad::affine(s, 1.0, -1.0)));
  }
  for (const auto& ch : g.and_children) {
    const Var r = ad::gather_rows(latents, ch);
    Matrix mask(ch.size(), ch.size(), 1.0);
    for (std::size_t i = 0; i < ch.size(); ++i) mask(i, i) = 0.0;
    const Var off = ad::mul(ad::matmul_nt(r, r), tape.constant(std::move(mask)));
    total = ad::add(total, ad::frobenius_sq(off));
  }
  return total;
}

Var triplet_loss(Var q_formula, Var q_pos, Var q_neg, double margin) {
  return ad::hinge(ad::sub(ad::sq_euclidean(q_formula, q_pos), ad::sq_euclidean(q_formula, q_neg)), margin);
}

std::vector<PreparedRecord> prepare_records(const std::vector<DatasetRecord>& records,
                                            const EmbedderConfig& config) {
  const FeatureLayout layout{config.max_vars};
  std::vector<PreparedRecord> out;
  out.reserve(records.size());
  for (const DatasetRecord& r : records) {
    PreparedRecord p;
    p.formula = prepare(formula_graph(r, config.form), layout);
    for (const Assignment& a : r.sat) p.sat.push_back(prepare(build_assignment_graph(a), layout));
    for (const Assignment& a : r.unsat) p.unsat.push_back(prepare(build_assignment_graph(a), layout));
    out.push_back(std::move(p));
  }
  return out;
}

EmbedderParams train_embedder(const std::vector<DatasetRecord>& records, const EmbedderConfig& config,
                              std::vector<EpochLog>* log, const EpochCallback& on_epoch) {
  config.validate();
  if (records.empty()) throw std::invalid_argument("train_embedder: empty dataset");
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].sat.empty() || records[i].unsat.empty())
      throw std::invalid_argument("train_embedder: record " + std::to_string(i) +
                                  " needs at least one sat and one unsat assignment");
  const auto prepared = prepare_records(records, config);
  EmbedderParams params = init_params(config);
  ad::Adam opt(params.tensors(), ad::AdamConfig{config.lr});
  std::mt19937_64 rng(derive_seed(config.seed, 1));
  std::vector<std::size_t> order(prepared.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = static_cast<std::size_t>(config.batch);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    double sum_t = 0.0, sum_r = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      opt.zero_grad();
      Tape tape;
      const BoundParams bp = bind(tape, params);
      Var loss = tape.constant(Matrix(1, 1, 0.0));
      for (std::size_t k = start; k < end; ++k) {
        const PreparedRecord& r = prepared[order[k]];
        const PreparedGraph& pos = r.sat[uniform_index(rng, r.sat.size())];
        const PreparedGraph& neg = r.unsat[uniform_index(rng, r.unsat.size())];
        const Embedding ef = forward(bp, config, r.formula);
        const Var lt = triplet_loss(ef.q, forward(bp, config, pos).q, forward(bp, config, neg).q, config.margin);
        sum_t += lt.scalar();
        loss = ad::add(loss, lt);
        if (config.semantic_reg) {
          const Var lr = semantic_reg_loss(ef.latents, r.formula);
          sum_r += lr.scalar();
          loss = ad::add(loss, ad::scalar_mul(lr, config.lambda_r));
        }
      }
      tape.backward(loss);
      opt.step();
    }
    const double n = static_cast<double>(order.size());
    const EpochLog e{epoch, sum_t / n, sum_r / n, (sum_t + config.lambda_r * sum_r) / n};
    if (log) log->push_back(e);
    if (on_epoch) on_epoch(e);
  }
  return params;
}

std::vector<double> embed(const EmbedderParams& p, const PreparedGraph& g) {
  Tape tape;
  BoundParams bp;
  bp.table = tape.constant(p.table.value);
  for (const auto& layer : p.weights) {
    std::vector<Var> vs;
    for (const auto& w : layer) vs.push_back(tape.constant(w.value));
    bp.weights.push_back(std::move(vs));
  }
  const auto q = forward(bp, p.config, g).q.value().data();
  return {q.begin(), q.end()};
}

std::vector<double> embed_formula(const EmbedderParams& p, const DatasetRecord& r) {
  return embed(p, prepare(formula_graph(r, p.config.form), p.layout()));
}

std::vector<double> embed_assignment(const EmbedderParams& p, const Assignment& tau) {
  return embed(p, prepare(build_assignment_graph(tau), p.layout()));
}

double sq_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ShapeError("sq_distance: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

namespace {

constexpr int kCheckpointVersion = 1;

nlohmann::json config_json(const EmbedderConfig& c) {
  return {{"form", graph_form_name(c.form)},
          {"heterogeneous", c.heterogeneous},
          {"semantic_reg", c.semantic_reg},
          {"layers", c.layers},
          {"in_dim", c.in_dim},
          {"hidden", c.hidden},
          {"out_dim", c.out_dim},
          {"max_vars", c.max_vars},
          {"margin", c.margin},
          {"lambda_r", c.lambda_r},
          {"lr", c.lr},
          {"epochs", c.epochs},
          {"batch", c.batch},
          {"seed", c.seed}};
}

EmbedderConfig config_of(const nlohmann::json& j) {
  EmbedderConfig c;
  c.form = parse_graph_form(j.at("form").get<std::string>());
  c.heterogeneous = j.at("heterogeneous").get<bool>();
  c.semantic_reg = j.at("semantic_reg").get<bool>();
  c.layers = j.at("layers").get<int>();
  c.in_dim = j.at("in_dim").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.out_dim = j.at("out_dim").get<int>();
  c.max_vars = j.at("max_vars").get<int>();
  c.margin = j.at("margin").get<double>();
  c.lambda_r = j.at("lambda_r").get<double>();
  c.lr = j.at("lr").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.batch = j.at("batch").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

nlohmann::json tensor_json(const Tensor& t) {
  return {{"name", t.name},
          {"rows", t.value.rows()},
          {"cols", t.value.cols()},
          {"data", std::vector<double>(t.value.data().begin(), t.value.data().end())}};
}

void load_tensor(const nlohmann::json& j, Tensor& t) {
  if (j.at("name").get<std::string>() != t.name)
    throw std::invalid_argument("checkpoint: expected tensor " + t.name + ", found " +
                                j.at("name").get<std::string>());
  const auto rows = j.at("rows").get<std::size_t>(), cols = j.at("cols").get<std::size_t>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows != t.value.rows() || cols != t.value.cols() || data.size() != rows * cols)
    throw ShapeError("checkpoint: tensor " + t.name + " has shape " + std::to_string(rows) + "x" +
                     std::to_string(cols) + ", expected " + t.value.shape_string());
  std::copy(data.begin(), data.end(), t.value.data().begin());
  if (!t.value.all_finite()) throw std::invalid_argument("checkpoint: tensor " + t.name + " is not finite");
}

}  // namespace

std::string config_to_json(const EmbedderConfig& c) { return config_json(c).dump(2); }

EmbedderConfig config_from_json(const std::string& text) {
  try {
    return config_of(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("embedder config: ") + e.what());
  }
}

std::string checkpoint_to_json(const EmbedderParams& p) {
  nlohmann::json tensors = nlohmann::json::array();
  tensors.push_back(tensor_json(p.table));
  for (const auto& layer : p.weights)
    for (const auto& w : layer) tensors.push_back(tensor_json(w));
  return nlohmann::json{{"version", kCheckpointVersion}, {"config", config_json(p.config)}, {"tensors", tensors}}
      .dump();
}

EmbedderParams checkpoint_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw std::invalid_argument("checkpoint: unsupported version " + j.at("version").dump());
    EmbedderParams p = init_params(config_of(j.at("config")));
    const auto& ts = j.at("tensors");
    std::vector<Tensor*> slots = p.tensors();
    if (ts.size() != slots.size())
      throw std::invalid_argument("checkpoint: " + std::to_string(ts.size()) + " tensors, expected " +
                                  std::to_string(slots.size()));
    for (std::size_t i = 0; i < slots.size(); ++i) load_tensor(ts[i], *slots[i]);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace lensr
