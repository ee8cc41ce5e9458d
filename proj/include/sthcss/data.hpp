#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sthcss/tensor.hpp"

namespace sthcss {

/// Multivariate sensor recording with one regression target, no gaps.
struct SensorSeries {
  std::vector<std::string> names;  // D sensor identifiers
  Tensor values;                   // T x D readings
  std::string target_name;
  std::vector<double> target;      // length T
  double sample_rate_hz = 1.0;

  std::size_t length() const { return target.size(); }
  std::size_t sensors() const { return names.size(); }
};

struct SplitSeries {
  SensorSeries train, val, test;
};

/// Per-sensor training-split statistics; stddev entries for constant sensors
/// are floored at 1e-8 and the offenders recorded as warnings.
struct StandardizationStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  double target_mean = 0.0;
  double target_stddev = 1.0;
  std::vector<std::string> constant_sensors;
};

/// One split's sliding windows. Window i holds timesteps i..i+W-1 as a D x W
/// matrix whose last column is the step the (standardized) target aligns to.
struct WindowedSplit {
  std::vector<Tensor> windows;
  std::vector<double> targets;
  std::string tag;
};

struct WindowedDataset {
  WindowedSplit train, val, test;
  StandardizationStats stats;
  std::size_t window = 0;
};

/// Synthetic multiphase-process stand-in: groups of sensors share a smooth
/// latent driver; the target mixes lagged and nonlinear driver terms so both
/// temporal context and cross-group interactions matter.
struct SynthConfig {
  std::size_t sensors = 12;
  std::vector<std::size_t> group_sizes = {4, 4, 4};
  std::size_t length = 6000;
  double noise_std = 0.05;
  bool nonlinear_sensors = true;
  bool identity_sensors = false;  // every sensor equals its group driver
  enum class TargetRecipe { nonlinear, linear };
  TargetRecipe target_recipe = TargetRecipe::nonlinear;
  double target_noise_std = 0.0;
  std::size_t target_lag = 4;
  std::size_t segments = 1;  // >1 redraws driver phases per segment
  std::uint64_t seed = 42;
  std::string target_name = "target";

  void validate() const;
};

SensorSeries load_csv(const std::filesystem::path& path, const std::string& target_column);
void write_csv(const std::filesystem::path& path, const SensorSeries& series);

/// Contiguous chronological segments with boundaries at floor(r1*T) and
/// floor((r1+r2)*T); every segment must be at least min_segment long.
SplitSeries split_chronological(const SensorSeries& series,
                                std::array<double, 3> ratios = {0.6, 0.2, 0.2},
                                std::size_t min_segment = 1);

/// Standardizes all splits in place with training-split statistics.
StandardizationStats standardize(SplitSeries& splits);

WindowedSplit make_windows(const SensorSeries& segment, std::size_t window,
                           std::size_t stride = 1, std::string tag = "");

WindowedDataset build_windows(const SplitSeries& standardized, StandardizationStats stats,
                              std::size_t window, std::size_t stride = 1);

double destandardize_target(double standardized, const StandardizationStats& stats);

SensorSeries synth_generate(const SynthConfig& cfg);

}  // namespace sthcss
