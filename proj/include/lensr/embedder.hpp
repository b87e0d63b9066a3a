#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "lensr/adam.hpp"
#include "lensr/autodiff.hpp"
#include "lensr/dataset.hpp"
#include "lensr/logic_graph.hpp"

namespace lensr {

struct EmbedderConfig {
  GraphForm form = GraphForm::Ddnnf;
  bool heterogeneous = false;
  bool semantic_reg = false;
  int layers = 3;
  int in_dim = 50;
  int hidden = 50;
  int out_dim = 100;
  /// Variables covered by the feature table.
  int max_vars = 6;
  double margin = 1.0;
  double lambda_r = 0.1;
  double lr = 1e-3;
  int epochs = 100;
  /// Formulas per Adam update.
  int batch = 1;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument; semantic regularization needs the d-DNNF form.
  void validate() const;
  bool operator==(const EmbedderConfig&) const = default;
};

/// Feature table plus one weight matrix per layer (per node type when
/// heterogeneous).
struct EmbedderParams {
  EmbedderConfig config;
  ad::Tensor table;
  std::vector<std::vector<ad::Tensor>> weights;  // [layer][type or 0]

  FeatureLayout layout() const { return FeatureLayout{config.max_vars}; }
  std::vector<ad::Tensor*> tensors();
  std::size_t num_parameters() const;
};

/// Glorot-uniform weights and unit-normal feature rows.
EmbedderParams init_params(const EmbedderConfig& config);

/// Graph with its adjacency and feature lookups computed once.
struct PreparedGraph {
  LogicGraph graph;
  Matrix adjacency;
  std::vector<std::vector<int>> feature_rows;
  std::vector<int> types;
  /// Children lists of And / Or nodes with at least two children.
  std::vector<std::vector<int>> and_children;
  std::vector<std::vector<int>> or_children;
};

PreparedGraph prepare(LogicGraph g, const FeatureLayout& layout);
LogicGraph formula_graph(const DatasetRecord& r, GraphForm form);

/// Params bound to one tape.
struct BoundParams {
  ad::Var table;
  std::vector<std::vector<ad::Var>> weights;
};
BoundParams bind(ad::Tape& tape, EmbedderParams& p);

struct Embedding {
  ad::Var q;        // 1 x out_dim, the global node's final latent
  ad::Var latents;  // N x out_dim
};

/// Z(l+1) = act(A Z(l) W(l)), ReLU between layers and identity at the end.
Embedding forward(const BoundParams& p, const EmbedderConfig& config, const PreparedGraph& g);
/// Same with caller-supplied input features (N x in_dim).
Embedding forward_features(const BoundParams& p, const EmbedderConfig& config, const PreparedGraph& g,
                           ad::Var features);

/// Or nodes: |sum of children - 1|^2. And nodes: squared Frobenius norm of
/// the off-diagonal part of the children's Gram matrix. Children are final
/// layer latents; the global node never counts.
ad::Var semantic_reg_loss(ad::Var latents, const PreparedGraph& g);

/// max(d(f, pos) - d(f, neg) + margin, 0) with squared Euclidean d.
ad::Var triplet_loss(ad::Var q_formula, ad::Var q_pos, ad::Var q_neg, double margin);

struct EpochLog {
  int epoch = 0;
  double triplet = 0.0;  // mean over formulas
  double sr = 0.0;       // mean over formulas
  double total = 0.0;    // mean of triplet + lambda_r * sr
};

/// Records prepared for training in one graph form.
struct PreparedRecord {
  PreparedGraph formula;
  std::vector<PreparedGraph> sat;
  std::vector<PreparedGraph> unsat;
};
std::vector<PreparedRecord> prepare_records(const std::vector<DatasetRecord>& records,
                                            const EmbedderConfig& config);

using EpochCallback = std::function<void(const EpochLog&)>;

/// Each epoch visits the formulas in a shuffled order and draws one
/// (sat, unsat) pair per formula. Deterministic given config.seed.
EmbedderParams train_embedder(const std::vector<DatasetRecord>& records, const EmbedderConfig& config,
                              std::vector<EpochLog>* log = nullptr, const EpochCallback& on_epoch = {});

/// Embedding of a prepared graph without recording gradients.
std::vector<double> embed(const EmbedderParams& p, const PreparedGraph& g);
std::vector<double> embed_formula(const EmbedderParams& p, const DatasetRecord& r);
std::vector<double> embed_assignment(const EmbedderParams& p, const Assignment& tau);

double sq_distance(const std::vector<double>& a, const std::vector<double>& b);

/// JSON checkpoint holding the config and every named tensor.
std::string checkpoint_to_json(const EmbedderParams& p);
EmbedderParams checkpoint_from_json(const std::string& text);

std::string config_to_json(const EmbedderConfig& c);
EmbedderConfig config_from_json(const std::string& text);

}  // namespace lensr
