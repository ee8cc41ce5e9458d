#include "sthcss/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sthcss {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

void require_2d(const Tensor& t, const char* what) {
  if (t.ndim() != 2) {
    throw DimensionError(std::string(what) + " must be 2-D, got shape " + t.shape_str());
  }
}

void require_1d(const Tensor& t, const char* what) {
  if (t.ndim() != 1) {
    throw DimensionError(std::string(what) + " must be 1-D, got shape " + t.shape_str());
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
  }
}

bool tracked(const Tensor& t) { return t.tape_id() >= 0; }

}  // namespace

// --- Tensor ----------------------------------------------------------------

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {
  for (std::size_t d : shape_) {
    if (d == 0) throw InvalidArgumentError("tensor dimensions must be positive");
  }
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (std::size_t d : shape_) {
    if (d == 0) throw InvalidArgumentError("tensor dimensions must be positive");
  }
  if (shape_product(shape_) != data_.size()) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str());
  }
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), v);
  return t;
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

Tensor Tensor::uniform(std::vector<std::size_t> shape, Rng& rng, double lo, double hi) {
  Tensor t(std::move(shape));
  for (double& v : t.data_) v = rng.uniform(lo, hi);
  return t;
}

std::size_t Tensor::rows() const {
  if (ndim() != 2) throw DimensionError("rows() on non-matrix of shape " + shape_str());
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (ndim() != 2) throw DimensionError("cols() on non-matrix of shape " + shape_str());
  return shape_[1];
}

void Tensor::set_grad(std::vector<double> g) {
  if (g.size() != data_.size()) {
    throw DimensionError("gradient length " + std::to_string(g.size()) +
                         " does not match tensor of shape " + shape_str());
  }
  grad_ = std::move(g);
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << 'x';
    os << shape_[i];
  }
  os << ')';
  return os.str();
}

// --- Tape --------------------------------------------------------------

int Tape::watch(Tensor& leaf) {
  const int id = leaf.tape_id();
  if (id >= 0 && static_cast<std::size_t>(id) < nodes_.size() && nodes_[id].leaf == &leaf) {
    return id;  // already watched on this tape
  }
  Node node;
  node.size = leaf.size();
  node.leaf = &leaf;
  nodes_.push_back(std::move(node));
  const int new_id = static_cast<int>(nodes_.size()) - 1;
  leaf.set_tape_id(new_id);
  return new_id;
}

int Tape::record(std::vector<int> parents, std::size_t output_size, BackwardFn fn) {
  Node node;
  node.parents = std::move(parents);
  node.size = output_size;
  node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

std::vector<double>& Tape::grad_buffer(int id) {
  auto& buf = grads_[static_cast<std::size_t>(id)];
  if (buf.empty()) buf.assign(nodes_[static_cast<std::size_t>(id)].size, 0.0);
  return buf;
}

void Tape::backward(const Tensor& loss) {
  if (backward_done_) throw InvalidArgumentError("tape already replayed backward");
  if (loss.size() != 1) {
    throw InvalidArgumentError("backward requires a scalar loss, got shape " + loss.shape_str());
  }
  const int loss_id = loss.tape_id();
  if (loss_id < 0 || static_cast<std::size_t>(loss_id) >= nodes_.size()) {
    throw InvalidArgumentError("loss tensor is not recorded on this tape");
  }
  grads_.assign(nodes_.size(), {});
  grad_buffer(loss_id)[0] = 1.0;

  for (int id = loss_id; id >= 0; --id) {
    auto& node = nodes_[static_cast<std::size_t>(id)];
    auto& dy = grads_[static_cast<std::size_t>(id)];
    if (dy.empty() || !node.backward) continue;
    node.backward(dy, *this);
  }

  for (auto& node : nodes_) {
    if (node.leaf == nullptr) continue;
    const int id = node.leaf->tape_id();
    auto& buf = grads_[static_cast<std::size_t>(id)];
    if (buf.empty()) buf.assign(node.size, 0.0);
    node.leaf->set_grad(buf);
  }
  backward_done_ = true;
}

const std::vector<double>& Tape::grad(const Tensor& t) {
  if (!backward_done_) throw InvalidArgumentError("backward has not run on this tape");
  const int id = t.tape_id();
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    throw InvalidArgumentError("tensor is not tracked on this tape");
  }
  auto& buf = grads_[static_cast<std::size_t>(id)];
  if (buf.empty()) buf.assign(nodes_[static_cast<std::size_t>(id)].size, 0.0);
  return buf;
}

// --- operations --------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b, Tape* tape) {
  require_2d(a, "matmul lhs");
  require_2d(b, "matmul rhs");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree, " + a.shape_str() + " vs " +
                         b.shape_str());
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out({m, n});
  {
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* pc = out.data().data();
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = pa + i * k;
      double* crow = pc + i * n;
      for (std::size_t kk = 0; kk < k; ++kk) {
        const double av = arow[kk];
        if (av == 0.0) continue;
        const double* brow = pb + kk * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  }

  if (tape && (tracked(a) || tracked(b))) {
    const int pa_id = a.tape_id(), pb_id = b.tape_id();
    std::vector<double> adata, bdata;
    if (pb_id >= 0) adata = a.data();  // dB needs A
    if (pa_id >= 0) bdata = b.data();  // dA needs B
    const int id = tape->record(
        {pa_id, pb_id}, out.size(),
        [pa_id, pb_id, adata = std::move(adata), bdata = std::move(bdata), m, k,
         n](const std::vector<double>& dy, Tape& t) {
          if (pa_id >= 0) {
            auto& da = t.grad_buffer(pa_id);
            // dA += dY * B^T
            for (std::size_t i = 0; i < m; ++i) {
              const double* dyrow = dy.data() + i * n;
              double* darow = da.data() + i * k;
              for (std::size_t kk = 0; kk < k; ++kk) {
                const double* brow = bdata.data() + kk * n;
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) acc += dyrow[j] * brow[j];
                darow[kk] += acc;
              }
            }
          }
          if (pb_id >= 0) {
            auto& db = t.grad_buffer(pb_id);
            // dB += A^T * dY
            for (std::size_t i = 0; i < m; ++i) {
              const double* arow = adata.data() + i * k;
              const double* dyrow = dy.data() + i * n;
              for (std::size_t kk = 0; kk < k; ++kk) {
                const double av = arow[kk];
                if (av == 0.0) continue;
                double* dbrow = db.data() + kk * n;
                for (std::size_t j = 0; j < n; ++j) dbrow[j] += av * dyrow[j];
              }
            }
          }
        });
    out.set_tape_id(id);
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b, Tape* tape) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape(), a.data());
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) += b.at(i);
  if (tape && (tracked(a) || tracked(b))) {
    const int pa = a.tape_id(), pb = b.tape_id();
    const int id = tape->record({pa, pb}, out.size(),
                                [pa, pb](const std::vector<double>& dy, Tape& t) {
                                  if (pa >= 0) {
                                    auto& da = t.grad_buffer(pa);
                                    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
                                  }
                                  if (pb >= 0) {
                                    auto& db = t.grad_buffer(pb);
                                    for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i];
                                  }
                                });
    out.set_tape_id(id);
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b, Tape* tape) {
  require_same_shape(a, b, "sub");
  Tensor out(a.shape(), a.data());
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) -= b.at(i);
  if (tape && (tracked(a) || tracked(b))) {
    const int pa = a.tape_id(), pb = b.tape_id();
    const int id = tape->record({pa, pb}, out.size(),
                                [pa, pb](const std::vector<double>& dy, Tape& t) {
                                  if (pa >= 0) {
                                    auto& da = t.grad_buffer(pa);
                                    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
                                  }
                                  if (pb >= 0) {
                                    auto& db = t.grad_buffer(pb);
                                    for (std::size_t i = 0; i < dy.size(); ++i) db[i] -= dy[i];
                                  }
                                });
    out.set_tape_id(id);
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b, Tape* tape) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape(), a.data());
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) *= b.at(i);
  if (tape && (tracked(a) || tracked(b))) {
    const int pa = a.tape_id(), pb = b.tape_id();
    std::vector<double> adata, bdata;
    if (pb >= 0) adata = a.data();
    if (pa >= 0) bdata = b.data();
    const int id = tape->record(
        {pa, pb}, out.size(),
        [pa, pb, adata = std::move(adata), bdata = std::move(bdata)](
            const std::vector<double>& dy, Tape& t) {
          if (pa >= 0) {
            auto& da = t.grad_buffer(pa);
            for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * bdata[i];
          }
          if (pb >= 0) {
            auto& db = t.grad_buffer(pb);
            for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i] * adata[i];
          }
        });
    out.set_tape_id(id);
  }
  return out;
}

Tensor add_row_vector(const Tensor& m, const Tensor& v, Tape* tape) {
  require_2d(m, "add_row_vector matrix");
  require_1d(v, "add_row_vector vector");
  if (v.size() != m.cols()) {
    throw DimensionError("add_row_vector: vector " + v.shape_str() + " vs matrix " +
                         m.shape_str());
  }
  const std::size_t r = m.rows(), c = m.cols();
  Tensor out(m.shape(), m.data());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) += v.at(j);
  if (tape && (tracked(m) || tracked(v))) {
    const int pm = m.tape_id(), pv = v.tape_id();
    const int id = tape->record(
        {pm, pv}, out.size(), [pm, pv, r, c](const std::vector<double>& dy, Tape& t) {
          if (pm >= 0) {
            auto& dm = t.grad_buffer(pm);
            for (std::size_t i = 0; i < dy.size(); ++i) dm[i] += dy[i];
          }
          if (pv >= 0) {
            auto& dv = t.grad_buffer(pv);
            for (std::size_t i = 0; i < r; ++i)
              for (std::size_t j = 0; j < c; ++j) dv[j] += dy[i * c + j];
          }
        });
    out.set_tape_id(id);
  }
  return out;
}

Tensor add_col_vector(const Tensor& m, const Tensor& v, Tape* tape) {
  require_2d(m, "add_col_vector matrix");
  require_1d(v, "add_col_vector vector");
  if (v.size() != m.rows()) {
    throw DimensionError("add_col_vector: vector " + v.shape_str() + " vs matrix " +
                         m.shape_str());
  }
  const std::size_t r = m.rows(), c = m.cols();
  Tensor out(m.shape(), m.data());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) += v.at(i);
  if (tape && (tracked(m) || tracked(v))) {
    const int pm = m.tape_id(), pv = v.tape_id();
    const int id = tape->record(
        {pm, pv}, out.size(), [pm, pv, r, c](const std::vector<double>& dy, Tape& t) {
          if (pm >= 0) {
            auto& dm = t.grad_buffer(pm);
            for (std::size_t i = 0; i < dy.size(); ++i) dm[i] += dy[i];
          }
          if (pv >= 0) {
            auto& dv = t.grad_buffer(pv);
            for (std::size_t i = 0; i < r; ++i) {
              double acc = 0.0;
              for (std::size_t j = 0; j < c; ++j) acc += dy[i * c + j];
              dv[i] += acc;
            }
          }
        });
    out.set_tape_id(id);
  }
  return out;
}

Tensor relu(const Tensor& x, Tape* tape) {
  Tensor out(x.shape(), x.data());
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  if (tape && tracked(x)) {
    const int px = x.tape_id();
    std::vector<double> xdata = x.data();
    const int id = tape->record(
        {px}, out.size(),
        [px, xdata = std::move(xdata)](const std::vector<double>& dy, Tape& t) {
          auto& dx = t.grad_buffer(px);
          for (std::size_t i = 0; i < dy.size(); ++i) {
            if (xdata[i] > 0.0) dx[i] += dy[i];
          }
        });
    out.set_tape_id(id);
  }
  return out;
}

Tensor sigmoid(const Tensor& x, Tape* tape) {
  Tensor out(x.shape(), x.data());
  for (double& v : out.data()) v = 1.0 / (1.0 + std::exp(-v));
  if (tape && tracked(x)) {
    const int px = x.tape_id();
    std::vector<double> s = out.data();
    const int id = tape->record(
        {px}, out.size(), [px, s = std::move(s)](const std::vector<double>& dy, Tape& t) {
          auto& dx = t.grad_buffer(px);
          for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * s[i] * (1.0 - s[i]);
        });
    out.set_tape_id(id);
  }
  return out;
}

Tensor dropout(const Tensor& x, double p, Rng& rng, bool training, Tape* tape) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw InvalidArgumentError("dropout probability must lie in [0,1), got " + std::to_string(p));
  }
  if (!training || p == 0.0) return x;  // identity, keeps the input's tape id

  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(x.size());
  for (double& mv : mask) mv = rng.uniform() < p ? 0.0 : keep_scale;

  Tensor out(x.shape(), x.data());
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) *= mask[i];
  if (tape && tracked(x)) {
    const int px = x.tape_id();
    const int id = tape->record(
        {px}, out.size(),
        [px, mask = std::move(mask)](const std::vector<double>& dy, Tape& t) {
          auto& dx = t.grad_buffer(px);
          for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * mask[i];
        });
    out.set_tape_id(id);
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tape* tape) {
  require_2d(x, "layer_norm input");
  require_1d(gamma, "layer_norm gamma");
  require_1d(beta, "layer_norm beta");
  const std::size_t r = x.rows(), c = x.cols();
  if (c == 0) throw InvalidArgumentError("layer_norm: normalized axis has length 0");
  if (gamma.size() != c || beta.size() != c) {
    throw DimensionError("layer_norm: affine length " + gamma.shape_str() + "/" +
                         beta.shape_str() + " vs row length " + std::to_string(c));
  }
  constexpr double kVarFloor = 1e-5;

  Tensor out({r, c});
  std::vector<double> xhat(r * c);
  std::vector<double> inv_std(r);
  std::vector<char> floored(r);
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = x.data().data() + i * c;
    double mean = 0.0;
    for (std::size_t j = 0; j < c; ++j) mean += row[j];
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double d = row[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(c);
    floored[i] = var <= kVarFloor ? 1 : 0;
    const double s = std::sqrt(floored[i] ? kVarFloor : var);
    inv_std[i] = 1.0 / s;
    for (std::size_t j = 0; j < c; ++j) {
      const double xh = (row[j] - mean) * inv_std[i];
      xhat[i * c + j] = xh;
      out.at(i, j) = gamma.at(j) * xh + beta.at(j);
    }
  }

  if (tape && (tracked(x) || tracked(gamma) || tracked(beta))) {
    const int px = x.tape_id(), pg = gamma.tape_id(), pb = beta.tape_id();
    std::vector<double> gdata = gamma.data();
    const int id = tape->record(
        {px, pg, pb}, out.size(),
        [px, pg, pb, r, c, xhat = std::move(xhat), inv_std = std::move(inv_std),
         floored = std::move(floored),
         gdata = std::move(gdata)](const std::vector<double>& dy, Tape& t) {
          if (pg >= 0) {
            auto& dgamma = t.grad_buffer(pg);
            for (std::size_t i = 0; i < r; ++i)
              for (std::size_t j = 0; j < c; ++j) dgamma[j] += dy[i * c + j] * xhat[i * c + j];
          }
          if (pb >= 0) {
            auto& dbeta = t.grad_buffer(pb);
            for (std::size_t i = 0; i < r; ++i)
              for (std::size_t j = 0; j < c; ++j) dbeta[j] += dy[i * c + j];
          }
          if (px >= 0) {
            auto& dx = t.grad_buffer(px);
            std::vector<double> g(c);
            for (std::size_t i = 0; i < r; ++i) {
              const double* dyrow = dy.data() + i * c;
              const double* xhrow = xhat.data() + i * c;
              double g_mean = 0.0, gx_mean = 0.0;
              for (std::size_t j = 0; j < c; ++j) {
                g[j] = dyrow[j] * gdata[j];
                g_mean += g[j];
                gx_mean += g[j] * xhrow[j];
              }
              g_mean /= static_cast<double>(c);
              gx_mean /= static_cast<double>(c);
              double* dxrow = dx.data() + i * c;
              if (floored[i]) {
                // variance floor active: the scale is a constant, only the
                // mean subtraction couples the entries
                for (std::size_t j = 0; j < c; ++j)
                  dxrow[j] += (g[j] - g_mean) * inv_std[i];
              } else {
                for (std::size_t j = 0; j < c; ++j)
                  dxrow[j] += (g[j] - g_mean - xhrow[j] * gx_mean) * inv_std[i];
              }
            }
          }
        });
    out.set_tape_id(id);
  }
  return out;
}

Tensor causal_conv1d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t dilation,
                     Tape* tape) {
  require_1d(w, "causal_conv1d kernel");
  if (w.size() == 0) throw InvalidArgumentError("causal_conv1d: kernel size must be >= 1");
  if (dilation == 0) throw InvalidArgumentError("causal_conv1d: dilation must be >= 1");
  if (b.size() != 1) {
    throw DimensionError("causal_conv1d: bias must be a scalar, got shape " + b.shape_str());
  }
  if (x.ndim() != 1 && x.ndim() != 2) {
    throw DimensionError("causal_conv1d input must be 1-D or 2-D, got shape " + x.shape_str());
  }
  const std::size_t rows = x.ndim() == 2 ? x.rows() : 1;
  const std::size_t len = x.ndim() == 2 ? x.cols() : x.size();
  const std::size_t ksize = w.size();
  const double bias = b.at(0);

  Tensor out(x.shape());
  for (std::size_t rix = 0; rix < rows; ++rix) {
    const double* row = x.data().data() + rix * len;
    double* orow = out.data().data() + rix * len;
    for (std::size_t tpos = 0; tpos < len; ++tpos) {
      double acc = bias;
      for (std::size_t tau = 0; tau < ksize; ++tau) {
        const std::size_t offset = tau * dilation;
        if (offset > tpos) break;  // zero left-padding
        acc += w.at(tau) * row[tpos - offset];
      }
      orow[tpos] = acc;
    }
  }

  if (tape && (tracked(x) || tracked(w) || tracked(b))) {
    const int px = x.tape_id(), pw = w.tape_id(), pb = b.tape_id();
    std::vector<double> xdata, wdata;
    if (pw >= 0) xdata = x.data();
    if (px >= 0) wdata = w.data();
    const int id = tape->record(
        {px, pw, pb}, out.size(),
        [px, pw, pb, rows, len, ksize, dilation, xdata = std::move(xdata),
         wdata = std::move(wdata)](const std::vector<double>& dy, Tape& t) {
          if (px >= 0) {
            auto& dx = t.grad_buffer(px);
            for (std::size_t rix = 0; rix < rows; ++rix) {
              const double* dyrow = dy.data() + rix * len;
              double* dxrow = dx.data() + rix * len;
              for (std::size_t tpos = 0; tpos < len; ++tpos) {
                const double g = dyrow[tpos];
                if (g == 0.0) continue;
                for (std::size_t tau = 0; tau < ksize; ++tau) {
                  const std::size_t offset = tau * dilation;
                  if (offset > tpos) break;
                  dxrow[tpos - offset] += g * wdata[tau];
                }
              }
            }
          }
          if (pw >= 0) {
            auto& dw = t.grad_buffer(pw);
            for (std::size_t rix = 0; rix < rows; ++rix) {
              const double* xrow = xdata.data() + rix * len;
              const double* dyrow = dy.data() + rix * len;
              for (std::size_t tau = 0; tau < ksize; ++tau) {
                const std::size_t offset = tau * dilation;
                double acc = 0.0;
                for (std::size_t tpos = offset; tpos < len; ++tpos)
                  acc += dyrow[tpos] * xrow[tpos - offset];
                dw[tau] += acc;
              }
            }
          }
          if (pb >= 0) {
            auto& db = t.grad_buffer(pb);
            double acc = 0.0;
            for (double g : dy) acc += g;
            db[0] += acc;
          }
        });
    out.set_tape_id(id);
  }
  return out;
}

Tensor linear(const Tensor& w, const Tensor& x, const Tensor& b, Tape* tape) {
  require_2d(w, "linear weight");
  require_1d(x, "linear input");
  require_1d(b, "linear bias");
  const std::size_t out_dim = w.rows(), in_dim = w.cols();
  if (x.size() != in_dim || b.size() != out_dim) {
    throw DimensionError("linear: weight " + w.shape_str() + " vs input " + x.shape_str() +
                         " and bias " + b.shape_str());
  }
  Tensor out({out_dim});
  for (std::size_t o = 0; o < out_dim; ++o) {
    const double* wrow = w.data().data() + o * in_dim;
    double acc = b.at(o);
    for (std::size_t i = 0; i < in_dim; ++i) acc += wrow[i] * x.at(i);
    out.at(o) = acc;
  }
  if (tape && (tracked(w) || tracked(x) || tracked(b))) {
    const int pw = w.tape_id(), px = x.tape_id(), pb = b.tape_id();
    std::vector<double> wdata, xdata;
    if (px >= 0) wdata = w.data();
    if (pw >= 0) xdata = x.data();
    const int id = tape->record(
        {pw, px, pb}, out.size(),
        [pw, px, pb, out_dim, in_dim, wdata = std::move(wdata),
         xdata = std::move(xdata)](const std::vector<double>& dy, Tape& t) {
          if (pw >= 0) {
            auto& dw = t.grad_buffer(pw);
            for (std::size_t o = 0; o < out_dim; ++o) {
              const double g = dy[o];
              if (g == 0.0) continue;
              double* dwrow = dw.data() + o * in_dim;
              for (std::size_t i = 0; i < in_dim; ++i) dwrow[i] += g * xdata[i];
            }
          }
          if (px >= 0) {
            auto& dx = t.grad_buffer(px);
            for (std::size_t o = 0; o < out_dim; ++o) {
              const double g = dy[o];
              if (g == 0.0) continue;
              const double* wrow = wdata.data() + o * in_dim;
              for (std::size_t i = 0; i < in_dim; ++i) dx[i] += g * wrow[i];
            }
          }
          if (pb >= 0) {
            auto& db = t.grad_buffer(pb);
            for (std::size_t o = 0; o < out_dim; ++o) db[o] += dy[o];
          }
        });
    out.set_tape_id(id);
  }
  return out;
}

Tensor reshape(const Tensor& x, std::vector<std::size_t> shape, Tape* tape) {
  if (shape_product(shape) != x.size()) {
    throw DimensionError("reshape: " + x.shape_str() + " has " + std::to_string(x.size()) +
                         " elements, target shape disagrees");
  }
  Tensor out(std::move(shape), x.data());
  if (tape && tracked(x)) {
    const int px = x.tape_id();
    const int id =
        tape->record({px}, out.size(), [px](const std::vector<double>& dy, Tape& t) {
          auto& dx = t.grad_buffer(px);
          for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
        });
    out.set_tape_id(id);
  }
  return out;
}

Tensor mean_all(const Tensor& x, Tape* tape) {
  if (x.size() == 0) throw InvalidArgumentError("mean of an empty tensor");
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  const double n = static_cast<double>(x.size());
  Tensor out = Tensor::scalar(acc / n);
  if (tape && tracked(x)) {
    const int px = x.tape_id();
    const std::size_t count = x.size();
    const int id = tape->record(
        {px}, 1, [px, count](const std::vector<double>& dy, Tape& t) {
          auto& dx = t.grad_buffer(px);
          const double g = dy[0] / static_cast<double>(count);
          for (std::size_t i = 0; i < count; ++i) dx[i] += g;
        });
    out.set_tape_id(id);
  }
  return out;
}

Tensor stack_scalars(const std::vector<Tensor>& xs, Tape* tape) {
  if (xs.empty()) throw InvalidArgumentError("stack_scalars: empty input");
  Tensor out({xs.size()});
  bool any_tracked = false;
  std::vector<int> parents(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != 1) {
      throw DimensionError("stack_scalars: element " + std::to_string(i) + " has shape " +
                           xs[i].shape_str());
    }
    out.at(i) = xs[i].at(0);
    parents[i] = xs[i].tape_id();
    any_tracked = any_tracked || parents[i] >= 0;
  }
  if (tape && any_tracked) {
    std::vector<int> ps = parents;
    const int id = tape->record(
        std::move(parents), out.size(),
        [ps = std::move(ps)](const std::vector<double>& dy, Tape& t) {
          for (std::size_t i = 0; i < ps.size(); ++i) {
            if (ps[i] >= 0) t.grad_buffer(ps[i])[0] += dy[i];
          }
        });
    out.set_tape_id(id);
  }
  return out;
}

// --- Adam ------------------------------------------------------------------

void AdamOptimizer::step(const std::vector<Tensor*>& params) {
  if (slots_.empty()) {
    slots_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      slots_[i].m.assign(params[i]->size(), 0.0);
      slots_[i].v.assign(params[i]->size(), 0.0);
    }
  }
  if (slots_.size() != params.size()) {
    throw DimensionError("adam: parameter count changed between steps");
  }
  ++t_;
  const double bias1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    auto& slot = slots_[i];
    if (slot.m.size() != p.size()) {
      throw DimensionError("adam: parameter " + std::to_string(i) + " changed shape");
    }
    if (!p.has_grad()) {
      throw InvalidArgumentError("adam: parameter " + std::to_string(i) + " has no gradient");
    }
    const auto& g = p.grad();
    for (std::size_t j = 0; j < p.size(); ++j) {
      slot.m[j] = cfg_.beta1 * slot.m[j] + (1.0 - cfg_.beta1) * g[j];
      slot.v[j] = cfg_.beta2 * slot.v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      const double mhat = slot.m[j] / bias1;
      const double vhat = slot.v[j] / bias2;
      p.at(j) -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }
}

}  // namespace sthcss
