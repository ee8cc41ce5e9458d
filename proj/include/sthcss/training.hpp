#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sthcss/data.hpp"
#include "sthcss/model.hpp"
#include "sthcss/tensor.hpp"

namespace sthcss {

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double lr = 0.001;
  std::uint64_t seed = 42;
  std::size_t patience = 0;  // 0 disables validation early stopping
};

struct MetricsReport {
  double nmae = 0.0;   // 100 * MAE / range(y)
  double nrmse = 0.0;  // 100 * RMSE / range(y)
  double mape = 0.0;   // 100 * mean(|err| / |y|); see mape_defined
  double r2 = 0.0;     // 1 - SSE/SST
  bool mape_defined = true;
  std::size_t n = 0;
  std::string target_name;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_mse = 0.0;
  double val_mse = 0.0;
};

struct TrainResult {
  ModelParams params;  // best-validation parameters
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;  // 0 = untrained parameters retained
  double best_val_mse = 0.0;
};

/// Differentiable mean squared error between predictions and targets.
Tensor mse_loss(const Tensor& predicted, const Tensor& actual, Tape* tape = nullptr);

/// Range-normalized error metrics (x100) plus MAPE and R^2. MAPE is flagged
/// undefined when any target is zero; a zero target range is an error.
MetricsReport compute_metrics(const std::vector<double>& predicted,
                              const std::vector<double>& actual,
                              std::string target_name = "");

/// Minibatch Adam over seeded epoch shuffles of the training windows.
/// Tracks per-epoch train/validation MSE and retains the best-validation
/// parameters. Fully deterministic given the seed.
TrainResult train(const Model& model, ModelParams initial, const WindowedDataset& data,
                  const TrainConfig& cfg);

/// Eval-mode predictions over one split, in standardized target units.
std::vector<double> predict(const Model& model, const ModelParams& params,
                            const WindowedSplit& split);

/// Test-style evaluation: predict, de-standardize, score against the
/// de-standardized targets.
MetricsReport evaluate(const Model& model, const ModelParams& params,
                       const WindowedSplit& split, const StandardizationStats& stats,
                       std::string target_name);

struct RidgeResult {
  std::vector<double> weights;  // flattened D*W coefficients + intercept last
  std::vector<double> test_predictions;  // de-standardized
  MetricsReport metrics;
};

/// Closed-form ridge regression on flattened windows; the intercept is not
/// penalized. Metrics are computed on the test split.
RidgeResult ridge_baseline(const WindowedDataset& data, const StandardizationStats& stats,
                           std::string target_name, double lambda = 1.0);

struct SweepPoint {
  std::size_t kernel_size = 0;
  std::size_t mixer_blocks = 0;
  MetricsReport metrics;
  bool ok = false;
  std::string error;
};

/// One full train/eval per (kernel, mixer) grid point at a fixed seed.
/// Failures are recorded in the row and the sweep continues.
std::vector<SweepPoint> hyperparameter_sweep(const ModelConfig& base, const Tensor& adjacency,
                                             const WindowedDataset& data,
                                             const TrainConfig& tcfg,
                                             const std::vector<std::size_t>& kernel_sizes,
                                             const std::vector<std::size_t>& mixer_counts,
                                             std::string target_name);

// --- report serialization ------------------------------------------------

std::string metrics_to_kv(const MetricsReport& m);
std::string history_to_csv(const std::vector<EpochStats>& history);
std::string sweep_to_csv(const std::vector<SweepPoint>& rows);

}  // namespace sthcss
