#include "sthcss/model.hpp"

#include <cmath>
#include <utility>

namespace sthcss {

namespace {

std::string block_key(const char* prefix, std::size_t block, const char* suffix) {
  return std::string(prefix) + std::to_string(block) + "." + suffix;
}

}  // namespace

void ModelConfig::validate() const {
  if (sensors == 0 || window == 0 || mixer_blocks == 0 || kernel_size == 0 || dilation == 0 ||
      st_blocks == 0 || channels == 0 || readout_hidden == 0) {
    throw InvalidArgumentError("model config: all sizes must be positive");
  }
  if (kernel_size > window) {
    throw InvalidArgumentError("model config: kernel size " + std::to_string(kernel_size) +
                               " exceeds window " + std::to_string(window));
  }
  if (kernel_size > channels) {
    throw InvalidArgumentError("model config: kernel size " + std::to_string(kernel_size) +
                               " exceeds channel width " + std::to_string(channels) +
                               " that the temporal convolution runs over after the lift");
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) {
    throw InvalidArgumentError("model config: dropout must lie in [0,1)");
  }
}

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t d = cfg.sensors, w = cfg.window, c = cfg.channels;
  const std::size_t h = cfg.readout_hidden, k = cfg.kernel_size;

  ModelParams p;
  auto push = [&p](std::string name, Tensor t) {
    p.entries_.push_back({std::move(name), std::move(t)});
  };

  for (std::size_t b = 0; b < cfg.mixer_blocks; ++b) {
    push(block_key("mixer", b, "time_norm.gamma"), Tensor({w}));
    push(block_key("mixer", b, "time_norm.beta"), Tensor({w}));
    push(block_key("mixer", b, "time.weight"), Tensor({w, w}));
    push(block_key("mixer", b, "time.bias"), Tensor({w}));
    push(block_key("mixer", b, "feat_norm.gamma"), Tensor({w}));
    push(block_key("mixer", b, "feat_norm.beta"), Tensor({w}));
    push(block_key("mixer", b, "feat.hidden.weight"), Tensor({d, d}));
    push(block_key("mixer", b, "feat.hidden.bias"), Tensor({d}));
    push(block_key("mixer", b, "feat.out.weight"), Tensor({d, d}));
    push(block_key("mixer", b, "feat.out.bias"), Tensor({d}));
  }
  push("lift.weight", Tensor({w, c}));
  push("lift.bias", Tensor({c}));
  for (std::size_t b = 0; b < cfg.st_blocks; ++b) {
    push(block_key("st", b, "filter.kernel"), Tensor({k}));
    push(block_key("st", b, "filter.bias"), Tensor({1}));
    push(block_key("st", b, "gate.kernel"), Tensor({k}));
    push(block_key("st", b, "gate.bias"), Tensor({1}));
    push(block_key("st", b, "theta"), Tensor({c, c}));
  }
  push("readout.hidden.weight", Tensor({h, d * c}));
  push("readout.hidden.bias", Tensor({h}));
  push("readout.out.weight", Tensor({1, h}));
  push("readout.out.bias", Tensor({1}));
  return p;
}

ModelParams ModelParams::init(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams p = zeros(cfg);
  Rng rng(mix_seed(seed, 0x1712));

  for (auto& entry : p.entries_) {
    const auto& name = entry.name;
    Tensor& t = entry.tensor;
    if (name.find("norm.gamma") != std::string::npos) {
      std::fill(t.data().begin(), t.data().end(), 1.0);
      continue;
    }
    if (name.find("norm.beta") != std::string::npos) continue;  // stays zero

    std::size_t fan_in = 1;
    if (t.ndim() == 2) {
      // weight matrices: time/lift act on the right (rows * W), the rest on
      // the left (W * columns); fan-in is the contracted dimension
      const bool right_applied =
          name.find("time.weight") != std::string::npos || name == "lift.weight";
      fan_in = right_applied ? t.rows() : t.cols();
    } else if (name.find("kernel") != std::string::npos) {
      fan_in = t.size();
    } else if (name.find("time.bias") != std::string::npos) {
      fan_in = cfg.window;
    } else if (name.find("feat.") != std::string::npos) {
      fan_in = cfg.sensors;
    } else if (name == "lift.bias") {
      fan_in = cfg.window;
    } else if (name.find("st") == 0) {
      fan_in = cfg.kernel_size;
    } else if (name == "readout.hidden.bias") {
      fan_in = cfg.sensors * cfg.channels;
    } else if (name == "readout.out.bias") {
      fan_in = cfg.readout_hidden;
    }
    const double a = std::sqrt(1.0 / static_cast<double>(fan_in));
    for (double& v : t.data()) v = rng.uniform(-a, a);
  }
  return p;
}

Tensor& ModelParams::at(std::string_view name) {
  for (auto& e : entries_) {
    if (e.name == name) return e.tensor;
  }
  throw InvalidArgumentError("unknown parameter '" + std::string(name) + "'");
}

const Tensor& ModelParams::at(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.tensor;
  }
  throw InvalidArgumentError("unknown parameter '" + std::string(name) + "'");
}

bool ModelParams::has(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return true;
  }
  return false;
}

std::size_t ModelParams::value_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.size();
  return n;
}

std::vector<Tensor*> ModelParams::tensor_pointers() {
  std::vector<Tensor*> out;
  out.reserve(entries_.size());
  for (auto& e : entries_) out.push_back(&e.tensor);
  return out;
}

// --- Model -------------------------------------------------------------

Model::Model(ModelConfig cfg, Tensor normalized_adjacency)
    : cfg_(cfg), adjacency_(std::move(normalized_adjacency)) {
  cfg_.validate();
  if (adjacency_.ndim() != 2 || adjacency_.rows() != cfg_.sensors ||
      adjacency_.cols() != cfg_.sensors) {
    throw DimensionError("model: adjacency " + adjacency_.shape_str() + " does not match D=" +
                         std::to_string(cfg_.sensors));
  }
}

Tensor Model::mixer_forward(const Tensor& x, const ModelParams& params, std::size_t block,
                            Tape* tape) const {
  if (x.ndim() != 2 || x.rows() != cfg_.sensors || x.cols() != cfg_.window) {
    throw DimensionError("mixer input " + x.shape_str() + " does not match DxW = " +
                         std::to_string(cfg_.sensors) + "x" + std::to_string(cfg_.window));
  }
  // time mixing, row-wise: u_i = x_i + relu(ln(x)_i * Wt + bt)
  Tensor ln_x = layer_norm(x, params.at(block_key("mixer", block, "time_norm.gamma")),
                           params.at(block_key("mixer", block, "time_norm.beta")), tape);
  Tensor mixed = matmul(ln_x, params.at(block_key("mixer", block, "time.weight")), tape);
  mixed = add_row_vector(mixed, params.at(block_key("mixer", block, "time.bias")), tape);
  mixed = relu(mixed, tape);
  Tensor u = add(x, mixed, tape);

  // feature mixing, column-wise: y_j = u_j + Wo * relu(Wh * ln(u)_j + bh) + bo
  Tensor ln_u = layer_norm(u, params.at(block_key("mixer", block, "feat_norm.gamma")),
                           params.at(block_key("mixer", block, "feat_norm.beta")), tape);
  Tensor hidden = matmul(params.at(block_key("mixer", block, "feat.hidden.weight")), ln_u, tape);
  hidden = add_col_vector(hidden, params.at(block_key("mixer", block, "feat.hidden.bias")), tape);
  hidden = relu(hidden, tape);
  Tensor out = matmul(params.at(block_key("mixer", block, "feat.out.weight")), hidden, tape);
  out = add_col_vector(out, params.at(block_key("mixer", block, "feat.out.bias")), tape);
  return add(u, out, tape);
}

Tensor Model::gtc_forward(const Tensor& x, const ModelParams& params, std::size_t block,
                          Tape* tape) const {
  if (x.ndim() != 2) {
    throw DimensionError("gtc input must be 2-D, got " + x.shape_str());
  }
  if (cfg_.kernel_size > x.cols()) {
    throw InvalidArgumentError("gtc: kernel size " + std::to_string(cfg_.kernel_size) +
                               " exceeds sequence length " + std::to_string(x.cols()));
  }
  Tensor filtered = causal_conv1d(x, params.at(block_key("st", block, "filter.kernel")),
                                  params.at(block_key("st", block, "filter.bias")),
                                  cfg_.dilation, tape);
  Tensor gate = causal_conv1d(x, params.at(block_key("st", block, "gate.kernel")),
                              params.at(block_key("st", block, "gate.bias")), cfg_.dilation,
                              tape);
  return mul(filtered, sigmoid(gate, tape), tape);
}

Tensor hypergraph_conv(const Tensor& x, const Tensor& adjacency, const Tensor& theta,
                       Tape* tape) {
  return relu(matmul(matmul(adjacency, x, tape), theta, tape), tape);
}

Tensor Model::hgconv_forward(const Tensor& x, const ModelParams& params, std::size_t block,
                             Tape* tape) const {
  return hypergraph_conv(x, adjacency_, params.at(block_key("st", block, "theta")), tape);
}

Tensor Model::node_features(const Tensor& window, const ModelParams& params, Tape* tape,
                            const ForwardOptions& opts) const {
  const bool drop = opts.training && cfg_.dropout_p > 0.0;
  if (drop && opts.dropout_rng == nullptr) {
    throw InvalidArgumentError("training forward needs a dropout RNG");
  }

  Tensor x = window;
  for (std::size_t b = 0; b < cfg_.mixer_blocks; ++b) {
    x = mixer_forward(x, params, b, tape);
    if (drop) x = dropout(x, cfg_.dropout_p, *opts.dropout_rng, true, tape);
  }

  // per-node width lift: D x W -> D x C
  x = matmul(x, params.at("lift.weight"), tape);
  x = add_row_vector(x, params.at("lift.bias"), tape);

  for (std::size_t b = 0; b < cfg_.st_blocks; ++b) {
    x = gtc_forward(x, params, b, tape);
    x = hgconv_forward(x, params, b, tape);
    if (drop) x = dropout(x, cfg_.dropout_p, *opts.dropout_rng, true, tape);
  }
  return x;
}

Tensor Model::forward(const Tensor& window, const ModelParams& params, Tape* tape,
                      const ForwardOptions& opts) const {
  Tensor features = node_features(window, params, tape, opts);
  Tensor flat = reshape(features, {cfg_.sensors * cfg_.channels}, tape);
  Tensor hidden = relu(linear(params.at("readout.hidden.weight"), flat,
                              params.at("readout.hidden.bias"), tape),
                       tape);
  Tensor out = linear(params.at("readout.out.weight"), hidden, params.at("readout.out.bias"),
                      tape);
  if (!std::isfinite(out.at(0))) {
    throw NumericError("forward produced a non-finite prediction");
  }
  return out;
}

}  // namespace sthcss
