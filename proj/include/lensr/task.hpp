#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lensr/embedder.hpp"

namespace lensr {

// --- entailment classifier --------------------------------------------------

struct MlpConfig {
  int hidden = 150;
  double lr = 1e-3;
  int epochs = 60;
  int batch = 32;
  bool operator==(const MlpConfig&) const = default;
};

/// Two dense layers with a ReLU between them.
struct MlpParams {
  ad::Tensor w1, b1, w2, b2;
  std::vector<ad::Tensor*> tensors();
};

MlpParams init_mlp(int in, int hidden, int out, std::uint64_t seed);
ad::Var mlp_forward(ad::Tape& tape, MlpParams& p, ad::Var x);

/// Row i is [q(F) | q(tau)]; label 1 when tau satisfies F.
struct PairData {
  Matrix x;
  std::vector<int> labels;
  std::vector<std::size_t> formula;  // record index of each row
};

PairData make_pairs(const EmbedderParams& embedder, const std::vector<DatasetRecord>& records);

/// Column-wise standardization fitted on training rows.
struct Standardizer {
  std::vector<double> mean, scale;
  static Standardizer fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
};

/// Formula indices split 80/20 after a seeded shuffle; both sides sorted.
struct Split {
  std::vector<std::size_t> train, test;
};
Split split_formulas(std::size_t n, std::uint64_t seed, double train_fraction = 0.8);

/// Throws std::invalid_argument on empty or one-class data.
MlpParams train_entailment(const PairData& data, const MlpConfig& config, std::uint64_t seed);
/// Percentage of rows whose argmax logit equals the label.
double accuracy(MlpParams& p, const PairData& data);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // sample std / sqrt(n)
};
/// Throws std::invalid_argument for fewer than two values.
MeanSe mean_se(const std::vector<double>& values);

// --- ablation experiment ----------------------------------------------------

struct Setting {
  std::string name;
  GraphForm form = GraphForm::Ddnnf;
  bool heterogeneous = false;
  bool semantic_reg = false;
};

/// general, cnf, cnf+HE, ddnnf, ddnnf+SR, ddnnf+HE, ddnnf+HE+SR
std::vector<Setting> ablation_settings();
Setting find_setting(const std::string& name);

struct ExperimentConfig {
  EmbedderConfig embedder;  // form, HE and SR come from the setting
  MlpConfig mlp;
  std::uint64_t seed = 0;
};

struct DistanceSample {
  std::size_t formula = 0;
  bool satisfying = false;
  double distance = 0.0;
};

struct RunResult {
  Setting setting;
  int run = 0;
  double accuracy = 0.0;      // held-out formulas, percent
  double sat_distance = 0.0;  // mean over held-out satisfying assignments
  double unsat_distance = 0.0;
  std::vector<EpochLog> log;
  std::vector<DistanceSample> distances;
};

/// One run: split formulas, train the embedder on the training side, train
/// the classifier on frozen embeddings, score the held-out side.
RunResult run_entailment(const std::vector<DatasetRecord>& records, const Setting& setting,
                         const ExperimentConfig& config, int run);
/// Runs 0..runs-1, possibly in parallel; results ordered by run.
std::vector<RunResult> eval_runs(const std::vector<DatasetRecord>& records, const Setting& setting,
                                 const ExperimentConfig& config, int runs);

// --- logic-loss toy task ----------------------------------------------------

struct ToyTask {
  Formula constraint;
  int num_props = 0;
  Matrix features;  // instances x num_props
  std::vector<Assignment> truth;
  std::size_t num_train = 0;  // leading instances used for training
};

struct ToyConfig {
  int num_props = 6;
  int num_train = 60;
  int num_test = 200;
  double noise = 0.5;
  int hidden = 16;
  double lr = 1e-2;
  int epochs = 150;
  double lambda = 0.1;
};

/// Instances draw a uniform model of `constraint` over 1..num_props; the
/// features are its bits plus Gaussian noise.
ToyTask make_toy_task(const Formula& constraint, int num_props, const ToyConfig& config, std::uint64_t seed);

/// Squared distance between q(F) and the embedding of the conjunction whose
/// leaf i carries the probability-weighted average of the features of p_i and
/// not p_i. Differentiable through `probs` (1 x num_props).
class LogicLoss {
 public:
  LogicLoss(const EmbedderParams& embedder, const Formula& constraint, int num_props);
  ad::Var operator()(ad::Tape& tape, ad::Var probs) const;
  const std::vector<double>& formula_embedding() const { return q_formula_; }

 private:
  EmbedderParams embedder_;
  PreparedGraph conj_;
  Matrix leaf_select_;    // nodes x props
  Matrix fixed_features_; // non-leaf rows
  Matrix literal_rows_;   // 2*props x in_dim: p_i then not p_i
  std::vector<double> q_formula_;
};

struct ToyMetrics {
  double accuracy = 0.0;      // per-proposition, percent
  double satisfaction = 0.0;  // thresholded predictions satisfying F, percent
};

ToyMetrics train_toy_task(const ToyTask& task, const LogicLoss& logic, const ToyConfig& config, double lambda,
                          std::uint64_t seed);

/// Formulas over exactly 1..num_props that leave every proposition free
/// (each takes both values among the models) and exclude some but at most
/// half of the assignments.
std::vector<Formula> toy_constraints(const std::vector<DatasetRecord>& records, int num_props);

struct ToyRun {
  int seed = 0;
  std::string constraint;
  ToyMetrics baseline;  // lambda = 0
  ToyMetrics logic;     // lambda = config.lambda
};

/// Paired runs: seed i uses constraint i (cycling) and the same task and head
/// initialization for both lambda values.
std::vector<ToyRun> run_toy_experiment(const EmbedderParams& embedder, const std::vector<Formula>& constraints,
                                       const ToyConfig& config, int seeds, std::uint64_t base_seed);

}  // namespace lensr
