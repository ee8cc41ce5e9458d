#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sthcss/errors.hpp"
#include "sthcss/rng.hpp"

namespace sthcss {

class Tape;

/// Dense row-major tensor of 64-bit floats.
///
/// Tensors are plain values. Gradient buffers are filled in by
/// Tape::backward for watched leaves; tape_id links a tensor to the most
/// recent tape that produced or watched it (-1 = untracked). A tensor must
/// only be used with the tape that assigned its id.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<std::size_t> shape, double v);
  static Tensor identity(std::size_t n);
  static Tensor uniform(std::vector<std::size_t> shape, Rng& rng, double lo, double hi);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  double& at(std::size_t i) { return data_[i]; }
  double at(std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool has_grad() const { return !grad_.empty(); }
  std::vector<double>& grad() { return grad_; }
  const std::vector<double>& grad() const { return grad_; }
  void set_grad(std::vector<double> g);
  void clear_grad() { grad_.clear(); }

  int tape_id() const { return tape_id_; }
  void set_tape_id(int id) { tape_id_ = id; }

  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_str() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
  std::vector<double> grad_;
  int tape_id_ = -1;
};

/// Reverse-mode record of one differentiable computation.
///
/// Operations append nodes in execution order, so every node's inputs
/// precede it; backward() replays the rules in reverse and accumulates each
/// reachable node's gradient exactly once (by summation). One backward pass
/// per tape.
class Tape {
 public:
  using BackwardFn = std::function<void(const std::vector<double>& dy, Tape& tape)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers a leaf (trainable parameter). Its gradient is written back to
  /// the tensor by backward(). The tensor must outlive the tape.
  int watch(Tensor& leaf);

  /// Reverse pass from a scalar loss recorded on this tape. Every watched
  /// leaf receives its total derivative; unreachable leaves receive zeros.
  void backward(const Tensor& loss);

  /// Gradient of a tracked tensor after backward (zeros if unreachable).
  const std::vector<double>& grad(const Tensor& t);

  std::size_t node_count() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

  // --- operation support ---------------------------------------------------
  int record(std::vector<int> parents, std::size_t output_size, BackwardFn fn);
  std::vector<double>& grad_buffer(int id);

 private:
  struct Node {
    std::vector<int> parents;
    std::size_t size = 0;
    BackwardFn backward;   // empty for leaves
    Tensor* leaf = nullptr;  // set for watched leaves
  };

  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  bool backward_done_ = false;
};

// --- tensor operations -------------------------------------------------
//
// Every operation computes its value eagerly. When `tape` is non-null and at
// least one input is tracked on it, a backward rule is recorded and the
// output becomes tracked; untracked inputs act as constants.

Tensor matmul(const Tensor& a, const Tensor& b, Tape* tape = nullptr);

Tensor add(const Tensor& a, const Tensor& b, Tape* tape = nullptr);
Tensor sub(const Tensor& a, const Tensor& b, Tape* tape = nullptr);
Tensor mul(const Tensor& a, const Tensor& b, Tape* tape = nullptr);

/// Adds a length-cols vector to every row of a matrix.
Tensor add_row_vector(const Tensor& m, const Tensor& v, Tape* tape = nullptr);
/// Adds a length-rows vector to every column of a matrix.
Tensor add_col_vector(const Tensor& m, const Tensor& v, Tape* tape = nullptr);

Tensor relu(const Tensor& x, Tape* tape = nullptr);
Tensor sigmoid(const Tensor& x, Tape* tape = nullptr);

/// Inverted dropout: in training mode zeroes entries with probability p and
/// scales survivors by 1/(1-p); identity in eval mode.
Tensor dropout(const Tensor& x, double p, Rng& rng, bool training, Tape* tape = nullptr);

/// Per-row normalization over the last axis with variance floor 1e-5,
/// followed by the affine map gamma * xhat + beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  Tape* tape = nullptr);

/// Causal 1-D convolution with zero left-padding of length (K-1)*dilation.
/// x may be 1-D (single series) or 2-D (applied to every row); w is the
/// kernel, b a scalar bias. out_t = sum_tau w[tau] * x[t - tau*d] + b.
Tensor causal_conv1d(const Tensor& x, const Tensor& w, const Tensor& b,
                     std::size_t dilation, Tape* tape = nullptr);

/// Dense affine map: w is [out x in], x is [in], b is [out].
Tensor linear(const Tensor& w, const Tensor& x, const Tensor& b, Tape* tape = nullptr);

Tensor reshape(const Tensor& x, std::vector<std::size_t> shape, Tape* tape = nullptr);

Tensor mean_all(const Tensor& x, Tape* tape = nullptr);

/// Stacks scalar tensors into a 1-D tensor (used to batch predictions).
Tensor stack_scalars(const std::vector<Tensor>& xs, Tape* tape = nullptr);

// --- Adam ----------------------------------------------------------------

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam over a fixed list of parameter tensors. Slots are
/// created on the first step; later steps must pass the same tensors in the
/// same order. Gradients are read from each tensor's grad buffer.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(const std::vector<Tensor*>& params);

  std::uint64_t step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  const std::vector<double>& first_moment(std::size_t slot) const { return slots_[slot].m; }
  const std::vector<double>& second_moment(std::size_t slot) const { return slots_[slot].v; }

 private:
  struct Slot {
    std::vector<double> m, v;
  };
  AdamConfig cfg_;
  std::vector<Slot> slots_;
  std::uint64_t t_ = 0;
};

}  // namespace sthcss
