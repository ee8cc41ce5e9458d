#include "sthcss/pipeline.hpp"

namespace sthcss {

PreparedData prepare(const SensorSeries& series, std::size_t window,
                     std::array<double, 3> ratios, std::size_t knn_k, DegreeMode mode) {
  SplitSeries splits = split_chronological(series, ratios, window);
  StandardizationStats stats = standardize(splits);

  // Node features for structure learning: each sensor's standardized
  // training series, one row per sensor.
  const std::size_t d = splits.train.sensors();
  const std::size_t t = splits.train.length();
  Tensor features({d, t});
  for (std::size_t s = 0; s < d; ++s) {
    for (std::size_t r = 0; r < t; ++r) features.at(s, r) = splits.train.values.at(r, s);
  }

  PreparedData out;
  out.hypergraph = build_hypergraph(features, knn_k, mode);
  out.operators = normalized_adjacency(out.hypergraph);
  out.correlation = absolute_row_correlation(features);
  out.sensor_names = series.names;
  out.target_name = series.target_name;
  out.dataset = build_windows(splits, std::move(stats), window);
  return out;
}

}  // namespace sthcss
