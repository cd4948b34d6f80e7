#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pgcn/dataset.hpp"
#include "pgcn/graph.hpp"
#include "pgcn/model.hpp"
#include "pgcn/split.hpp"

namespace pgcn {

struct TrainConfig {
  double lr = 0.01;
  double weight_decay = 0.0;
  std::int64_t max_epochs = 1000;
  std::int64_t patience = 100;  // evaluations without improvement
  std::int64_t eval_every = 1;
  std::uint64_t seed = 0;
  bool decoupled_weight_decay = false;  // default couples L2 into the gradient
  std::optional<double> theta_l2;       // defaults to weight_decay
  bool f32 = false;

  void validate() const;
};

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool decoupled = false;
};

struct AdamState {
  std::vector<Matrix> m, v;
  std::int64_t t = 0;
};

// One Adam update over a parameter list; weight_decay is per-parameter.
void adam_step(std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads, AdamState& state,
               const AdamConfig& cfg, const std::vector<double>& weight_decay);

// Fraction of masked rows whose argmax matches the label; ties go to the
// lowest class index.
double accuracy(const Matrix& logits, const LabelVector& y, const std::vector<std::int64_t>& mask);

struct RunResult {
  double best_val_acc = 0.0;
  double test_acc_at_best_val = 0.0;
  std::int64_t epochs_run = 0;
  std::vector<double> loss_curve;
  std::optional<double> learned_mu;
  std::optional<std::vector<double>> learned_theta;
  bool aborted = false;  // numeric failure (NaN/Inf); recorded, not fatal
  double wall_ms = 0.0;  // timing only; excluded from determinism guarantees
  ParameterSet best_params;
};

// Full-batch training with Adam, early stopping on validation accuracy, and
// test accuracy reported at the best-validation checkpoint.  Deterministic:
// identical inputs give a bit-identical result (wall_ms aside).
RunResult train(const GraphDataset& ds, const ModelConfig& mcfg, const TrainConfig& tcfg, const Split& split,
                SymmetrizeMode symmetrize = SymmetrizeMode::kAuto);

// One CSV row per (config, split) run.
struct ResultRow {
  std::string model, dataset;
  std::uint64_t seed = 0;
  SplitProtocol protocol = SplitProtocol::kPerClass602020;
  std::int64_t T = 0, L = 0, hidden = 0, epochs = 0;
  double gamma = 0.0, lr = 0.0, weight_decay = 0.0, dropout = 0.0;
  double best_val_acc = 0.0, test_acc = 0.0;
  std::optional<double> learned_mu;
  std::optional<std::vector<double>> learned_theta;
  double wall_ms = 0.0;
  bool aborted = false;
};

ResultRow make_result_row(const GraphDataset& ds, const ModelConfig& mcfg, const TrainConfig& tcfg,
                          const Split& split, const RunResult& run);

// `with_timing=false` drops the wall_ms column for byte-reproducible output.
std::string results_csv(const std::vector<ResultRow>& rows, bool with_timing = true);

// Axes of the hyperparameter product; an empty axis keeps the base value.
struct GridSpec {
  std::vector<std::int64_t> hidden, T, L;
  std::vector<double> lr, weight_decay, gamma, dropout;

  std::int64_t cells() const;
};

struct GridOutcome {
  std::vector<ResultRow> rows;  // cell-major, split-minor order
  ModelConfig best_model;
  TrainConfig best_train;
  double best_mean_val = 0.0;
  double best_mean_test = 0.0;
  double best_std_test = 0.0;
};

// Cartesian product over the grid, selection by mean validation accuracy
// across splits; aborted runs score -inf.  Cells train in parallel.
GridOutcome grid_search(const GraphDataset& ds, const ModelConfig& base_model, const TrainConfig& base_train,
                        const GridSpec& grid, const std::vector<Split>& splits, int jobs = 1,
                        SymmetrizeMode symmetrize = SymmetrizeMode::kAuto);

// One-factor-at-a-time sweep around a base configuration.
struct SweepSpec {
  std::vector<double> gamma;
  std::vector<std::int64_t> L;
  std::vector<double> dropout;
};

std::vector<ResultRow> ablation_sweep(const GraphDataset& ds, const ModelConfig& base_model,
                                      const TrainConfig& base_train, const SweepSpec& sweep,
                                      const std::vector<Split>& splits, int jobs = 1,
                                      SymmetrizeMode symmetrize = SymmetrizeMode::kAuto);

// Mean and sample standard deviation, the reporting convention for accuracy
// tables.
std::pair<double, double> mean_std(const std::vector<double>& xs);

}  // namespace pgcn
