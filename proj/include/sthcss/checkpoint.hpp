#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sthcss/model.hpp"

namespace sthcss {

/// Everything needed to rebuild the evaluation pipeline around the saved
/// parameters: the model configuration plus the graph/data settings.
struct CheckpointHeader {
  ModelConfig model;
  std::size_t knn_k = 4;
  bool weighted_degrees = false;
  std::string target_name = "target";
  std::uint64_t seed = 42;
};

struct Checkpoint {
  CheckpointHeader header;
  ModelParams params;
};

/// Binary checkpoint: the magic line "STHCSS1", a key=value header, then one
/// record per parameter (name, shape, raw row-major 64-bit floats).
void save_checkpoint(const std::filesystem::path& path, const CheckpointHeader& header,
                     const ModelParams& params);

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sthcss
