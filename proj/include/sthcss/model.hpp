#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sthcss/tensor.hpp"

namespace sthcss {

struct ModelConfig {
  std::size_t sensors = 12;        // D
  std::size_t window = 85;         // W
  std::size_t mixer_blocks = 2;
  std::size_t kernel_size = 7;
  std::size_t dilation = 1;
  std::size_t st_blocks = 2;       // stacked GTC + hypergraph-conv pairs
  std::size_t channels = 16;       // per-node width after the lift
  double dropout_p = 0.2;
  std::size_t readout_hidden = 64;

  void validate() const;
};

/// Flat, name-addressable list of every learnable tensor. Enumeration order
/// is fixed by the config, so checkpoints and optimizer slots stay aligned.
class ModelParams {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
  };

  /// Seeded uniform(-a, a) init with a = sqrt(1/fan_in); LayerNorm affines
  /// start at gamma=1, beta=0.
  static ModelParams init(const ModelConfig& cfg, std::uint64_t seed);
  static ModelParams zeros(const ModelConfig& cfg);

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;
  bool has(std::string_view name) const;

  std::size_t tensor_count() const { return entries_.size(); }
  std::size_t value_count() const;

  std::vector<Tensor*> tensor_pointers();

 private:
  std::vector<Entry> entries_;
};

/// Per-forward options; dropout draws from the caller's RNG only when
/// training is set, so eval-mode forwards consume no randomness.
struct ForwardOptions {
  bool training = false;
  Rng* dropout_rng = nullptr;
};

/// The soft-sensing network: mixer blocks on the D x W window, a per-node
/// width lift to D x C, stacked gated-temporal + hypergraph convolutions,
/// then a flatten + two-layer readout to one scalar.
class Model {
 public:
  Model(ModelConfig cfg, Tensor normalized_adjacency);

  const ModelConfig& config() const { return cfg_; }
  const Tensor& adjacency() const { return adjacency_; }

  /// One multi-view mixer block: row-wise time mixing then column-wise
  /// feature mixing, both with pre-LayerNorm and skip connections.
  Tensor mixer_forward(const Tensor& x, const ModelParams& params, std::size_t block,
                       Tape* tape = nullptr) const;

  /// Gated temporal convolution: causal filter conv gated by the sigmoid of
  /// a causal gate conv, applied per node row.
  Tensor gtc_forward(const Tensor& x, const ModelParams& params, std::size_t block,
                     Tape* tape = nullptr) const;

  /// Spectral hypergraph convolution relu(N * X * Theta).
  Tensor hgconv_forward(const Tensor& x, const ModelParams& params, std::size_t block,
                        Tape* tape = nullptr) const;

  /// Node features after the last ST block (pre-flatten, D x channels).
  Tensor node_features(const Tensor& window, const ModelParams& params, Tape* tape = nullptr,
                       const ForwardOptions& opts = {}) const;

  /// Full forward pass to a scalar prediction (shape {1}).
  Tensor forward(const Tensor& window, const ModelParams& params, Tape* tape = nullptr,
                 const ForwardOptions& opts = {}) const;

 private:
  ModelConfig cfg_;
  Tensor adjacency_;
};

/// relu(N * x * theta) as a free operation (the Model method delegates here).
Tensor hypergraph_conv(const Tensor& x, const Tensor& adjacency, const Tensor& theta,
                       Tape* tape = nullptr);

}  // namespace sthcss
