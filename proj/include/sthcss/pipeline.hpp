#pragma once

#include "sthcss/config.hpp"
#include "sthcss/data.hpp"
#include "sthcss/hypergraph.hpp"
#include "sthcss/model.hpp"

namespace sthcss {

/// Everything derived from one series ahead of training: chronological
/// splits, training-split standardization, windows, the hypergraph built
/// from the standardized training series (one node per sensor), its spectral
/// operators, and the training-split correlation matrix.
struct PreparedData {
  WindowedDataset dataset;
  Hypergraph hypergraph;
  SpectralOperators operators;
  Tensor correlation;  // |V| x |V| absolute Pearson, training split
  std::vector<std::string> sensor_names;
  std::string target_name;
};

PreparedData prepare(const SensorSeries& series, std::size_t window,
                     std::array<double, 3> ratios, std::size_t knn_k, DegreeMode mode);

}  // namespace sthcss
