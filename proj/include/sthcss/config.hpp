#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sthcss/data.hpp"
#include "sthcss/model.hpp"
#include "sthcss/training.hpp"

namespace sthcss {

/// Effective settings of one CLI run: model + training + synthetic-data
/// options plus the graph construction knobs. Defaults follow the reference
/// protocol (window 85, batch 64, lr 0.001, 2 mixers, kernel 7, dilation 1,
/// dropout 0.2, 200 epochs, 60-20-20 split).
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  SynthConfig synth;
  std::size_t knn_k = 4;
  bool weighted_degrees = false;
  std::string target_column = "target";
  std::array<double, 3> ratios{0.6, 0.2, 0.2};
  double ridge_lambda = 1.0;
  bool baseline = true;

  /// Applies `seed` to every component that consumes randomness.
  void apply_seed(std::uint64_t seed);

  /// Sets one key=value pair; unknown keys or bad values raise ConfigError.
  void set(const std::string& key, const std::string& value);

  /// Every effective key=value pair, in a fixed order (the run log).
  std::vector<std::pair<std::string, std::string>> items() const;
};

/// key=value file, one pair per line, '#' comments. Unknown keys reject.
RunConfig load_config_file(const std::filesystem::path& path, RunConfig base);

void echo_config(const RunConfig& cfg, std::ostream& out);

std::vector<std::size_t> parse_size_list(const std::string& csv, const std::string& what);

}  // namespace sthcss
