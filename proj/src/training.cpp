#include "sthcss/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "sthcss/matrix_io.hpp"
#include "sthcss/rng.hpp"

namespace sthcss {

Tensor mse_loss(const Tensor& predicted, const Tensor& actual, Tape* tape) {
  if (!predicted.same_shape(actual)) {
    throw DimensionError("mse_loss: predictions " + predicted.shape_str() + " vs targets " +
                         actual.shape_str());
  }
  if (predicted.size() == 0) throw InvalidArgumentError("mse_loss: empty inputs");
  Tensor diff = sub(predicted, actual, tape);
  return mean_all(mul(diff, diff, tape), tape);
}

MetricsReport compute_metrics(const std::vector<double>& predicted,
                              const std::vector<double>& actual, std::string target_name) {
  if (predicted.size() != actual.size()) {
    throw DimensionError("compute_metrics: " + std::to_string(predicted.size()) +
                         " predictions vs " + std::to_string(actual.size()) + " targets");
  }
  const std::size_t n = actual.size();
  if (n < 2) throw InvalidArgumentError("compute_metrics: need at least 2 samples");

  double lo = actual[0], hi = actual[0], mean = 0.0;
  for (double y : actual) {
    lo = std::min(lo, y);
    hi = std::max(hi, y);
    mean += y;
  }
  mean /= static_cast<double>(n);
  const double range = hi - lo;
  if (!(range > 0.0)) {
    throw DegenerateTargetError("compute_metrics: target range is zero");
  }

  double abs_sum = 0.0, sq_sum = 0.0, sst = 0.0, ape_sum = 0.0;
  bool mape_ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double err = predicted[i] - actual[i];
    abs_sum += std::abs(err);
    sq_sum += err * err;
    const double dev = actual[i] - mean;
    sst += dev * dev;
    if (actual[i] == 0.0) {
      mape_ok = false;
    } else {
      ape_sum += std::abs(err / actual[i]);
    }
  }

  MetricsReport m;
  m.n = n;
  m.target_name = std::move(target_name);
  m.nmae = 100.0 * (abs_sum / static_cast<double>(n)) / range;
  m.nrmse = 100.0 * std::sqrt(sq_sum / static_cast<double>(n)) / range;
  m.mape_defined = mape_ok;
  m.mape = mape_ok ? 100.0 * ape_sum / static_cast<double>(n)
                   : std::numeric_limits<double>::quiet_NaN();
  m.r2 = 1.0 - sq_sum / sst;
  return m;
}

namespace {

double split_mse(const Model& model, const ModelParams& params, const WindowedSplit& split) {
  double acc = 0.0;
  for (std::size_t i = 0; i < split.windows.size(); ++i) {
    const double pred = model.forward(split.windows[i], params).at(0);
    const double err = pred - split.targets[i];
    acc += err * err;
  }
  return acc / static_cast<double>(split.windows.size());
}

ModelParams clone_params(const ModelParams& src) {
  ModelParams copy = src;
  for (auto& e : copy.entries()) {
    e.tensor.set_tape_id(-1);
    e.tensor.clear_grad();
  }
  return copy;
}

}  // namespace

TrainResult train(const Model& model, ModelParams initial, const WindowedDataset& data,
                  const TrainConfig& cfg) {
  if (cfg.batch_size == 0) throw InvalidArgumentError("train: batch size must be positive");
  if (!(cfg.lr >= 0.0)) throw InvalidArgumentError("train: learning rate must be >= 0");
  if (data.train.windows.empty() || data.val.windows.empty()) {
    throw InsufficientDataError("train: empty train or validation split");
  }

  ModelParams params = std::move(initial);
  AdamOptimizer optimizer(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
  Rng dropout_rng(mix_seed(cfg.seed, 0xD509));

  TrainResult result{clone_params(params), {}, 0, std::numeric_limits<double>::infinity()};
  const std::size_t n_train = data.train.windows.size();
  std::vector<std::size_t> order(n_train);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(mix_seed(cfg.seed, 0x5F0000 + epoch));
    shuffle_rng.shuffle(order);

    double epoch_sq_sum = 0.0;
    for (std::size_t start = 0; start < n_train; start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, n_train);
      const std::size_t bsize = end - start;

      Tape tape;
      auto pointers = params.tensor_pointers();
      for (Tensor* p : pointers) tape.watch(*p);

      std::vector<Tensor> preds;
      preds.reserve(bsize);
      Tensor batch_targets({bsize});
      ForwardOptions opts{true, &dropout_rng};
      for (std::size_t i = start; i < end; ++i) {
        preds.push_back(model.forward(data.train.windows[order[i]], params, &tape, opts));
        batch_targets.at(i - start) = data.train.targets[order[i]];
      }
      Tensor stacked = stack_scalars(preds, &tape);
      Tensor loss = mse_loss(stacked, batch_targets, &tape);

      const double loss_value = loss.at(0);
      if (!std::isfinite(loss_value)) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                              std::to_string(start / cfg.batch_size) + " (lr=" +
                              format_double(cfg.lr) + ")");
      }
      epoch_sq_sum += loss_value * static_cast<double>(bsize);

      tape.backward(loss);
      optimizer.step(pointers);
      for (Tensor* p : pointers) p->set_tape_id(-1);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_mse = epoch_sq_sum / static_cast<double>(n_train);
    stats.val_mse = split_mse(model, params, data.val);
    result.history.push_back(stats);

    if (stats.val_mse < result.best_val_mse) {
      result.best_val_mse = stats.val_mse;
      result.best_epoch = epoch;
      result.params = clone_params(params);
    } else if (cfg.patience > 0 && epoch - result.best_epoch >= cfg.patience) {
      break;
    }
  }
  return result;
}

std::vector<double> predict(const Model& model, const ModelParams& params,
                            const WindowedSplit& split) {
  std::vector<double> out;
  out.reserve(split.windows.size());
  for (const auto& w : split.windows) out.push_back(model.forward(w, params).at(0));
  return out;
}

MetricsReport evaluate(const Model& model, const ModelParams& params, const WindowedSplit& split,
                       const StandardizationStats& stats, std::string target_name) {
  std::vector<double> predicted = predict(model, params, split);
  std::vector<double> actual = split.targets;
  for (double& v : predicted) v = destandardize_target(v, stats);
  for (double& v : actual) v = destandardize_target(v, stats);
  return compute_metrics(predicted, actual, std::move(target_name));
}

namespace {

// Cholesky solve of a symmetric positive definite system; the factor
// overwrites the lower triangle of a.
std::vector<double> cholesky_solve(std::vector<double>& a, std::vector<double> rhs,
                                   std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * n + k] * a[j * n + k];
    if (!(diag > 0.0)) {
      throw NumericError(
          "ridge: normal matrix is not positive definite; increase lambda (> 0)");
    }
    const double root = std::sqrt(diag);
    a[j * n + j] = root;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = v / root;
    }
  }
  // forward then backward substitution
  for (std::size_t i = 0; i < n; ++i) {
    double v = rhs[i];
    for (std::size_t k = 0; k < i; ++k) v -= a[i * n + k] * rhs[k];
    rhs[i] = v / a[i * n + i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double v = rhs[ii];
    for (std::size_t k = ii + 1; k < n; ++k) v -= a[k * n + ii] * rhs[k];
    rhs[ii] = v / a[ii * n + ii];
  }
  return rhs;
}

}  // namespace

RidgeResult ridge_baseline(const WindowedDataset& data, const StandardizationStats& stats,
                           std::string target_name, double lambda) {
  if (lambda < 0.0) throw InvalidArgumentError("ridge: lambda must be >= 0");
  const auto& train = data.train;
  if (train.windows.empty()) throw InsufficientDataError("ridge: empty training split");
  const std::size_t p = train.windows.front().size();
  const std::size_t n_feat = p + 1;  // flattened window plus intercept

  // normal equations G = A^T A + lambda*I (intercept unpenalized), b = A^T y
  std::vector<double> g(n_feat * n_feat, 0.0);
  std::vector<double> b(n_feat, 0.0);
  std::vector<double> row(n_feat, 1.0);
  for (std::size_t s = 0; s < train.windows.size(); ++s) {
    const auto& w = train.windows[s].data();
    std::copy(w.begin(), w.end(), row.begin());
    row[p] = 1.0;
    const double y = train.targets[s];
    for (std::size_t i = 0; i < n_feat; ++i) {
      const double ri = row[i];
      if (ri == 0.0) continue;
      double* grow = g.data() + i * n_feat;
      for (std::size_t j = i; j < n_feat; ++j) grow[j] += ri * row[j];
      b[i] += ri * y;
    }
  }
  for (std::size_t i = 0; i < n_feat; ++i) {
    for (std::size_t j = 0; j < i; ++j) g[i * n_feat + j] = g[j * n_feat + i];
  }
  for (std::size_t i = 0; i < p; ++i) g[i * n_feat + i] += lambda;

  RidgeResult result;
  result.weights = cholesky_solve(g, std::move(b), n_feat);

  std::vector<double> predicted, actual;
  predicted.reserve(data.test.windows.size());
  actual.reserve(data.test.windows.size());
  for (std::size_t s = 0; s < data.test.windows.size(); ++s) {
    const auto& w = data.test.windows[s].data();
    double acc = result.weights[p];
    for (std::size_t i = 0; i < p; ++i) acc += result.weights[i] * w[i];
    predicted.push_back(destandardize_target(acc, stats));
    actual.push_back(destandardize_target(data.test.targets[s], stats));
  }
  result.test_predictions = predicted;
  result.metrics = compute_metrics(predicted, actual, std::move(target_name));
  return result;
}

std::vector<SweepPoint> hyperparameter_sweep(const ModelConfig& base, const Tensor& adjacency,
                                             const WindowedDataset& data,
                                             const TrainConfig& tcfg,
                                             const std::vector<std::size_t>& kernel_sizes,
                                             const std::vector<std::size_t>& mixer_counts,
                                             std::string target_name) {
  if (kernel_sizes.empty() || mixer_counts.empty()) {
    throw InvalidArgumentError("sweep: empty grid");
  }
  std::vector<SweepPoint> rows;
  for (std::size_t kernel : kernel_sizes) {
    for (std::size_t mixers : mixer_counts) {
      SweepPoint point;
      point.kernel_size = kernel;
      point.mixer_blocks = mixers;
      try {
        ModelConfig cfg = base;
        cfg.kernel_size = kernel;
        cfg.mixer_blocks = mixers;
        Model model(cfg, adjacency);
        TrainResult trained = train(model, ModelParams::init(cfg, tcfg.seed), data, tcfg);
        point.metrics = evaluate(model, trained.params, data.test, data.stats, target_name);
        point.ok = true;
      } catch (const std::exception& e) {
        point.ok = false;
        point.error = e.what();
      }
      rows.push_back(std::move(point));
    }
  }
  return rows;
}

// --- report serialization ------------------------------------------------

std::string metrics_to_kv(const MetricsReport& m) {
  std::ostringstream os;
  os << "target=" << m.target_name << '\n';
  os << "n=" << m.n << '\n';
  os << "nmae=" << format_double(m.nmae) << '\n';
  os << "nrmse=" << format_double(m.nrmse) << '\n';
  os << "mape=" << (m.mape_defined ? format_double(m.mape) : std::string("undefined")) << '\n';
  os << "r2=" << format_double(m.r2) << '\n';
  os << "normalization=range*100\n";
  return os.str();
}

std::string history_to_csv(const std::vector<EpochStats>& history) {
  std::ostringstream os;
  os << "epoch,train_mse,val_mse\n";
  for (const auto& h : history) {
    os << h.epoch << ',' << format_double(h.train_mse) << ',' << format_double(h.val_mse)
       << '\n';
  }
  return os.str();
}

std::string sweep_to_csv(const std::vector<SweepPoint>& rows) {
  std::ostringstream os;
  os << "kernel_size,mixer_blocks,nmae,nrmse,mape,r2,status\n";
  for (const auto& r : rows) {
    os << r.kernel_size << ',' << r.mixer_blocks << ',';
    if (r.ok) {
      os << format_double(r.metrics.nmae) << ',' << format_double(r.metrics.nrmse) << ','
         << (r.metrics.mape_defined ? format_double(r.metrics.mape) : std::string("undefined"))
         << ',' << format_double(r.metrics.r2) << ",ok";
    } else {
      std::string msg = r.error;
      for (char& ch : msg) {
        if (ch == ',' || ch == '\n') ch = ';';
      }
      os << ",,,,failed: " << msg;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace sthcss
