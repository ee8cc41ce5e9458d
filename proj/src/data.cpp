#include "sthcss/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <system_error>

#include "sthcss/matrix_io.hpp"
#include "sthcss/rng.hpp"

namespace sthcss {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    const std::size_t next = std::min(line.find(',', pos), line.size());
    cells.emplace_back(line.substr(pos, next - pos));
    if (next == line.size()) break;
    pos = next + 1;
  }
  return cells;
}

SensorSeries slice_series(const SensorSeries& s, std::size_t begin, std::size_t end) {
  SensorSeries out;
  out.names = s.names;
  out.target_name = s.target_name;
  out.sample_rate_hz = s.sample_rate_hz;
  const std::size_t d = s.sensors();
  out.values = Tensor({end - begin, d});
  out.target.assign(s.target.begin() + static_cast<std::ptrdiff_t>(begin),
                    s.target.begin() + static_cast<std::ptrdiff_t>(end));
  std::copy(s.values.data().begin() + static_cast<std::ptrdiff_t>(begin * d),
            s.values.data().begin() + static_cast<std::ptrdiff_t>(end * d),
            out.values.data().begin());
  return out;
}

void standardize_segment(SensorSeries& seg, const StandardizationStats& stats) {
  const std::size_t d = seg.sensors();
  for (std::size_t t = 0; t < seg.length(); ++t) {
    for (std::size_t c = 0; c < d; ++c) {
      seg.values.at(t, c) = (seg.values.at(t, c) - stats.mean[c]) / stats.stddev[c];
    }
    seg.target[t] = (seg.target[t] - stats.target_mean) / stats.target_stddev;
  }
}

}  // namespace

SensorSeries load_csv(const std::filesystem::path& path, const std::string& target_column) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty file " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = split_line(line);
  std::size_t target_ix = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == target_column) {
      target_ix = i;
      break;
    }
  }
  if (target_ix == header.size()) {
    throw SchemaError("target column '" + target_column + "' not found in " + path.string());
  }
  for (std::size_t i = 0; i < header.size(); ++i) {
    for (std::size_t j = i + 1; j < header.size(); ++j) {
      if (header[i] == header[j]) {
        throw SchemaError("duplicate column name '" + header[i] + "' in " + path.string());
      }
    }
  }

  SensorSeries series;
  series.target_name = header[target_ix];
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i != target_ix) series.names.push_back(header[i]);
  }
  const std::size_t d = series.names.size();
  if (d == 0) throw SchemaError("no sensor columns besides the target in " + path.string());

  std::vector<double> flat;
  std::size_t row_number = 1;  // header was row 1
  while (std::getline(in, line)) {
    ++row_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw FormatError(path.string() + " row " + std::to_string(row_number) + ": expected " +
                        std::to_string(header.size()) + " cells, got " +
                        std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      const auto res =
          std::from_chars(cells[c].data(), cells[c].data() + cells[c].size(), v);
      if (res.ec != std::errc() || res.ptr != cells[c].data() + cells[c].size()) {
        throw FormatError(path.string() + " row " + std::to_string(row_number) + " column " +
                          std::to_string(c + 1) + ": non-numeric cell '" + cells[c] + "'");
      }
      if (c == target_ix) {
        series.target.push_back(v);
      } else {
        flat.push_back(v);
      }
    }
  }
  if (series.target.empty()) throw FormatError("no data rows in " + path.string());
  series.values = Tensor({series.target.size(), d}, std::move(flat));
  return series;
}

void write_csv(const std::filesystem::path& path, const SensorSeries& series) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& n : series.names) out << n << ',';
  out << series.target_name << '\n';
  const std::size_t d = series.sensors();
  for (std::size_t t = 0; t < series.length(); ++t) {
    for (std::size_t c = 0; c < d; ++c) out << format_double(series.values.at(t, c)) << ',';
    out << format_double(series.target[t]) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

SplitSeries split_chronological(const SensorSeries& series, std::array<double, 3> ratios,
                                std::size_t min_segment) {
  for (double r : ratios) {
    if (!(r > 0.0)) throw InvalidArgumentError("split ratios must be positive");
  }
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9) {
    throw InvalidArgumentError("split ratios must sum to 1, got " + std::to_string(sum));
  }
  const std::size_t t = series.length();
  const std::size_t b1 = static_cast<std::size_t>(std::floor(ratios[0] * static_cast<double>(t)));
  const std::size_t b2 = static_cast<std::size_t>(
      std::floor((ratios[0] + ratios[1]) * static_cast<double>(t)));

  const std::size_t lens[3] = {b1, b2 - b1, t - b2};
  const char* tags[3] = {"train", "val", "test"};
  for (int i = 0; i < 3; ++i) {
    if (lens[i] < min_segment) {
      throw InsufficientDataError(std::string(tags[i]) + " segment has " +
                                  std::to_string(lens[i]) + " rows, need at least " +
                                  std::to_string(min_segment));
    }
  }
  SplitSeries out;
  out.train = slice_series(series, 0, b1);
  out.val = slice_series(series, b1, b2);
  out.test = slice_series(series, b2, t);
  return out;
}

StandardizationStats standardize(SplitSeries& splits) {
  const SensorSeries& train = splits.train;
  const std::size_t d = train.sensors();
  const std::size_t t = train.length();
  if (t == 0) throw InsufficientDataError("empty training split");

  StandardizationStats stats;
  stats.mean.assign(d, 0.0);
  stats.stddev.assign(d, 0.0);
  constexpr double kStdFloor = 1e-8;

  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < t; ++r) mean += train.values.at(r, c);
    mean /= static_cast<double>(t);
    double var = 0.0;
    for (std::size_t r = 0; r < t; ++r) {
      const double dv = train.values.at(r, c) - mean;
      var += dv * dv;
    }
    var /= static_cast<double>(t);
    stats.mean[c] = mean;
    const double sd = std::sqrt(var);
    if (sd < kStdFloor) {
      stats.constant_sensors.push_back(train.names[c]);
      stats.stddev[c] = kStdFloor;
    } else {
      stats.stddev[c] = sd;
    }
  }

  double tmean = 0.0;
  for (double y : train.target) tmean += y;
  tmean /= static_cast<double>(t);
  double tvar = 0.0;
  for (double y : train.target) {
    const double dv = y - tmean;
    tvar += dv * dv;
  }
  tvar /= static_cast<double>(t);
  stats.target_mean = tmean;
  stats.target_stddev = std::max(std::sqrt(tvar), kStdFloor);

  standardize_segment(splits.train, stats);
  standardize_segment(splits.val, stats);
  standardize_segment(splits.test, stats);
  return stats;
}

WindowedSplit make_windows(const SensorSeries& segment, std::size_t window, std::size_t stride,
                           std::string tag) {
  if (window == 0) throw InvalidArgumentError("window size must be positive");
  if (stride == 0) throw InvalidArgumentError("stride must be positive");
  const std::size_t t = segment.length();
  if (t < window) {
    throw InsufficientDataError("segment of length " + std::to_string(t) +
                                " is shorter than window " + std::to_string(window));
  }
  const std::size_t d = segment.sensors();
  WindowedSplit out;
  out.tag = std::move(tag);
  for (std::size_t start = 0; start + window <= t; start += stride) {
    Tensor w({d, window});
    for (std::size_t c = 0; c < window; ++c) {
      for (std::size_t s = 0; s < d; ++s) w.at(s, c) = segment.values.at(start + c, s);
    }
    out.windows.push_back(std::move(w));
    out.targets.push_back(segment.target[start + window - 1]);
  }
  return out;
}

WindowedDataset build_windows(const SplitSeries& standardized, StandardizationStats stats,
                              std::size_t window, std::size_t stride) {
  WindowedDataset ds;
  ds.window = window;
  ds.stats = std::move(stats);
  ds.train = make_windows(standardized.train, window, stride, "train");
  ds.val = make_windows(standardized.val, window, stride, "val");
  ds.test = make_windows(standardized.test, window, stride, "test");
  return ds;
}

double destandardize_target(double standardized, const StandardizationStats& stats) {
  return standardized * stats.target_stddev + stats.target_mean;
}

void SynthConfig::validate() const {
  if (sensors == 0) throw InvalidArgumentError("synthetic config: sensors must be positive");
  if (length == 0) throw InvalidArgumentError("synthetic config: length must be positive");
  if (group_sizes.empty()) throw InvalidArgumentError("synthetic config: no groups given");
  std::size_t total = 0;
  for (std::size_t g : group_sizes) {
    if (g == 0) throw InvalidArgumentError("synthetic config: group sizes must be positive");
    total += g;
  }
  if (total != sensors) {
    throw InvalidArgumentError("synthetic config: group sizes sum to " + std::to_string(total) +
                               " but there are " + std::to_string(sensors) + " sensors");
  }
  if (noise_std < 0.0 || target_noise_std < 0.0) {
    throw InvalidArgumentError("synthetic config: noise levels must be >= 0");
  }
  if (segments == 0) throw InvalidArgumentError("synthetic config: segments must be positive");
}

SensorSeries synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t groups = cfg.group_sizes.size();
  const std::size_t t_len = cfg.length;

  // Independent streams so toggling one knob (e.g. noise) leaves the others
  // bit-identical.
  Rng driver_rng(mix_seed(cfg.seed, 0xD1));
  Rng coef_rng(mix_seed(cfg.seed, 0xC0));
  Rng noise_rng(mix_seed(cfg.seed, 0x11));
  Rng target_rng(mix_seed(cfg.seed, 0x7A));

  // Per-group latent drivers: three incommensurate sinusoids plus a slow
  // AR(1) component. Phases redraw at segment boundaries in multi-segment
  // mode (setpoint-change analog); the AR stream stays continuous.
  std::vector<std::vector<double>> drivers(groups, std::vector<double>(t_len, 0.0));
  const double base_amp[3] = {0.7, 0.35, 0.2};
  for (std::size_t g = 0; g < groups; ++g) {
    double periods[3];
    for (int h = 0; h < 3; ++h) {
      periods[h] = driver_rng.uniform(700.0, 1900.0) / static_cast<double>(h + 1);
    }
    std::vector<double> phases(3 * cfg.segments);
    for (double& p : phases) p = driver_rng.uniform(0.0, 6.283185307179586);

    double ar = 0.0;
    for (int burn = 0; burn < 200; ++burn) ar = 0.97 * ar + 0.10 * driver_rng.normal();

    const std::size_t seg_len = (t_len + cfg.segments - 1) / cfg.segments;
    for (std::size_t t = 0; t < t_len; ++t) {
      const std::size_t seg = std::min(t / seg_len, cfg.segments - 1);
      double v = 0.0;
      for (int h = 0; h < 3; ++h) {
        v += base_amp[h] * std::sin(6.283185307179586 * static_cast<double>(t) / periods[h] +
                                    phases[seg * 3 + static_cast<std::size_t>(h)]);
      }
      ar = 0.97 * ar + 0.10 * driver_rng.normal();
      drivers[g][t] = v + ar;
    }
  }

  SensorSeries series;
  series.target_name = cfg.target_name;
  series.sample_rate_hz = 1.0;
  series.values = Tensor({t_len, cfg.sensors});
  series.target.assign(t_len, 0.0);

  std::size_t sensor_ix = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t m = 0; m < cfg.group_sizes[g]; ++m, ++sensor_ix) {
      series.names.push_back("s" + std::to_string(sensor_ix + 1));
      double offset = 0.0, slope = 1.0, bend = 0.0;
      if (!cfg.identity_sensors) {
        offset = coef_rng.uniform(-0.5, 0.5);
        slope = coef_rng.uniform(0.8, 1.2);
        bend = cfg.nonlinear_sensors ? coef_rng.uniform(0.1, 0.3) : 0.0;
      }
      for (std::size_t t = 0; t < t_len; ++t) {
        const double drv = drivers[g][t];
        double v = offset + slope * drv + bend * std::tanh(drv);
        if (cfg.noise_std > 0.0) v += cfg.noise_std * noise_rng.normal();
        series.values.at(t, sensor_ix) = v;
      }
    }
  }

  const auto driver_at = [&](std::size_t g, std::ptrdiff_t t) {
    const std::ptrdiff_t clamped = std::max<std::ptrdiff_t>(t, 0);
    return drivers[g % groups][static_cast<std::size_t>(clamped)];
  };
  const auto lag = static_cast<std::ptrdiff_t>(cfg.target_lag);
  for (std::size_t t = 0; t < t_len; ++t) {
    const auto ts = static_cast<std::ptrdiff_t>(t);
    double y = 0.0;
    if (cfg.target_recipe == SynthConfig::TargetRecipe::linear) {
      for (std::size_t g = 0; g < groups; ++g) {
        y += (1.0 - 0.3 * static_cast<double>(g)) * driver_at(g, ts - lag);
      }
    } else {
      const double d0_lag = driver_at(0, ts - lag);
      const double d1 = driver_at(1, ts);
      const double d2 = driver_at(2, ts);
      y = 1.0 * d0_lag + 0.8 * std::tanh(1.5 * d1) + 0.6 * d2 * d2 +
          0.5 * driver_at(0, ts) * d1;
    }
    if (cfg.target_noise_std > 0.0) y += cfg.target_noise_std * target_rng.normal();
    series.target[t] = y;
  }
  return series;
}

}  // namespace sthcss
