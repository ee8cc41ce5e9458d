#include "sthcss/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace sthcss {

Tensor pairwise_distances(const Tensor& node_features) {
  if (node_features.ndim() != 2) {
    throw DimensionError("pairwise_distances expects |V|xF features, got " +
                         node_features.shape_str());
  }
  const std::size_t n = node_features.rows();
  const std::size_t f = node_features.cols();
  if (n == 0) throw InvalidArgumentError("pairwise_distances: empty node set");

  Tensor dist({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    const double* ri = node_features.data().data() + i * f;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double* rj = node_features.data().data() + j * f;
      double acc = 0.0;
      for (std::size_t c = 0; c < f; ++c) {
        const double d = ri[c] - rj[c];
        acc += d * d;
      }
      const double d = std::sqrt(acc);
      dist.at(i, j) = d;
      dist.at(j, i) = d;
    }
  }
  return dist;
}

Hypergraph build_hypergraph(const Tensor& node_features, std::size_t k, DegreeMode mode) {
  const Tensor dist = pairwise_distances(node_features);
  const std::size_t n = dist.rows();
  if (!node_features.all_finite()) {
    throw InvalidArgumentError("build_hypergraph: node features must be finite");
  }
  if (k < 1 || k > n) {
    throw InvalidArgumentError("build_hypergraph: k=" + std::to_string(k) +
                               " outside [1, " + std::to_string(n) + "]");
  }

  // Mean distance over ordered pairs i != j. Only needed for non-self
  // weights, so k=1 tolerates identical features (self weight is exp(0)=1).
  double delta = 0.0;
  if (n > 1) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) acc += dist.at(i, j);
    delta = acc / static_cast<double>(n * (n - 1));
  }
  if (k > 1 && delta == 0.0) {
    throw DegenerateScaleError(
        "build_hypergraph: all node features identical (mean pairwise distance is 0)");
  }

  Hypergraph hg;
  hg.incidence = Tensor({n, n});
  hg.weights = Tensor({n, n});
  hg.k = k;
  hg.degree_mode = mode;

  std::vector<std::size_t> order(n);
  for (std::size_t anchor = 0; anchor < n; ++anchor) {
    // hyperedge `anchor`: the anchor itself plus its k-1 nearest others,
    // equal distances broken by lower node index
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double da = dist.at(a, anchor);
      const double db = dist.at(b, anchor);
      if (da != db) return da < db;
      return a < b;
    });

    hg.incidence.at(anchor, anchor) = 1.0;
    hg.weights.at(anchor, anchor) = 1.0;  // exp(0)
    std::size_t taken = 1;
    for (std::size_t cand : order) {
      if (taken >= k) break;
      if (cand == anchor) continue;
      const double d = dist.at(cand, anchor);
      hg.incidence.at(cand, anchor) = 1.0;
      hg.weights.at(cand, anchor) = std::exp(-(d * d) / delta);
      ++taken;
    }
  }

  auto degrees = degree_matrices(hg.incidence, hg.weights, mode);
  hg.vertex_degree = std::move(degrees.first);
  hg.edge_degree = std::move(degrees.second);
  return hg;
}

std::pair<std::vector<double>, std::vector<double>> degree_matrices(const Tensor& incidence,
                                                                    const Tensor& weights,
                                                                    DegreeMode mode) {
  const std::size_t n = incidence.rows();
  const std::size_t e = incidence.cols();
  if (!weights.same_shape(incidence)) {
    throw DimensionError("degree_matrices: weights " + weights.shape_str() +
                         " vs incidence " + incidence.shape_str());
  }
  std::vector<double> dv(n, 0.0), de(e, 0.0);
  const Tensor& vertex_source = mode == DegreeMode::weight_sum ? weights : incidence;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < e; ++j) {
      dv[i] += vertex_source.at(i, j);
      de[j] += incidence.at(i, j);  // d(e) counts member vertices
    }
  }
  return {std::move(dv), std::move(de)};
}

SpectralOperators normalized_adjacency(const Hypergraph& hg) {
  const std::size_t n = hg.node_count();
  const std::size_t e = hg.edge_count();

  for (std::size_t i = 0; i < n; ++i) {
    if (!(hg.vertex_degree[i] > 0.0)) {
      throw NumericError("normalized_adjacency: vertex " + std::to_string(i) +
                         " has degree 0");
    }
  }

  // Per-hyperedge scalar weight: arithmetic mean of the member weights.
  std::vector<double> edge_weight(e, 0.0);
  for (std::size_t j = 0; j < e; ++j) {
    double acc = 0.0;
    double members = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (hg.incidence.at(i, j) != 0.0) {
        acc += hg.weights.at(i, j);
        members += 1.0;
      }
    }
    edge_weight[j] = members > 0.0 ? acc / members : 0.0;
  }

  // N = Dv^{-1/2} H (W_e De^{-1}) H^T Dv^{-1/2}; the bracketed factor is
  // diagonal, so N = M diag(s) M^T with M = Dv^{-1/2} H.
  std::vector<double> scale(e);
  for (std::size_t j = 0; j < e; ++j) scale[j] = edge_weight[j] / hg.edge_degree[j];

  std::vector<double> inv_sqrt_dv(n);
  for (std::size_t i = 0; i < n; ++i) inv_sqrt_dv[i] = 1.0 / std::sqrt(hg.vertex_degree[i]);

  SpectralOperators ops;
  ops.adjacency = Tensor({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t ed = 0; ed < e; ++ed) {
        const double hi = hg.incidence.at(i, ed);
        if (hi == 0.0) continue;
        const double hj = hg.incidence.at(j, ed);
        if (hj == 0.0) continue;
        acc += hi * hj * scale[ed];
      }
      const double v = acc * inv_sqrt_dv[i] * inv_sqrt_dv[j];
      ops.adjacency.at(i, j) = v;
      ops.adjacency.at(j, i) = v;
    }
  }

  ops.laplacian = Tensor({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      ops.laplacian.at(i, j) = (i == j ? 1.0 : 0.0) - ops.adjacency.at(i, j);
  return ops;
}

EigenSystem eigensystem(const Tensor& symmetric) {
  if (symmetric.ndim() != 2 || symmetric.rows() != symmetric.cols()) {
    throw DimensionError("eigensystem expects a square matrix, got " + symmetric.shape_str());
  }
  const std::size_t n = symmetric.rows();

  Tensor a(symmetric.shape(), symmetric.data());
  Tensor v = Tensor::identity(n);

  auto offdiag_norm = [&]() {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) acc += a.at(i, j) * a.at(i, j);
    return std::sqrt(2.0 * acc);
  };

  double scale = 0.0;
  for (double x : a.data()) scale = std::max(scale, std::abs(x));
  const double tol = std::max(scale, 1.0) * 1e-14;

  constexpr int kMaxSweeps = 64;
  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    if (offdiag_norm() <= tol) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a.at(p, q);
        if (std::abs(apq) <= tol * 1e-3) continue;
        const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a.at(i, p);
          const double aiq = a.at(i, q);
          a.at(i, p) = c * aip - s * aiq;
          a.at(i, q) = s * aip + c * aiq;
        }
        for (std::size_t j = 0; j < n; ++j) {
          const double apj = a.at(p, j);
          const double aqj = a.at(q, j);
          a.at(p, j) = c * apj - s * aqj;
          a.at(q, j) = s * apj + c * aqj;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v.at(i, p);
          const double viq = v.at(i, q);
          v.at(i, p) = c * vip - s * viq;
          v.at(i, q) = s * vip + c * viq;
        }
      }
    }
  }
  if (sweep == kMaxSweeps && offdiag_norm() > tol) {
    throw NumericError("eigensystem: Jacobi failed to converge on a " + std::to_string(n) +
                       "x" + std::to_string(n) + " matrix; residual off-diagonal norm " +
                       std::to_string(offdiag_norm()));
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return a.at(x, x) < a.at(y, y); });

  EigenSystem eig;
  eig.values.resize(n);
  eig.vectors = Tensor({n, n});
  for (std::size_t col = 0; col < n; ++col) {
    eig.values[col] = a.at(order[col], order[col]);
    for (std::size_t row = 0; row < n; ++row) eig.vectors.at(row, col) = v.at(row, order[col]);
  }
  return eig;
}

Tensor spectral_filter(const Tensor& x, const std::function<double(double)>& filter,
                       const EigenSystem& eig) {
  const std::size_t n = eig.values.size();
  if (x.size() != n) {
    throw DimensionError("spectral_filter: signal " + x.shape_str() + " vs " +
                         std::to_string(n) + " eigenvalues");
  }
  // V g(Lambda) V^T x
  std::vector<double> projected(n, 0.0);
  for (std::size_t col = 0; col < n; ++col) {
    double acc = 0.0;
    for (std::size_t row = 0; row < n; ++row) acc += eig.vectors.at(row, col) * x.at(row);
    projected[col] = acc * filter(eig.values[col]);
  }
  Tensor out(x.shape());
  for (std::size_t row = 0; row < n; ++row) {
    double acc = 0.0;
    for (std::size_t col = 0; col < n; ++col) acc += eig.vectors.at(row, col) * projected[col];
    out.at(row) = acc;
  }
  return out;
}

Tensor absolute_row_correlation(const Tensor& node_features) {
  if (node_features.ndim() != 2) {
    throw DimensionError("absolute_row_correlation expects |V|xF features, got " +
                         node_features.shape_str());
  }
  const std::size_t n = node_features.rows();
  const std::size_t f = node_features.cols();

  std::vector<double> mean(n, 0.0), norm(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = node_features.data().data() + i * f;
    for (std::size_t c = 0; c < f; ++c) mean[i] += row[c];
    mean[i] /= static_cast<double>(f);
    for (std::size_t c = 0; c < f; ++c) {
      const double d = row[c] - mean[i];
      norm[i] += d * d;
    }
    norm[i] = std::sqrt(norm[i]);
  }

  Tensor corr({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    corr.at(i, i) = 1.0;
    const double* ri = node_features.data().data() + i * f;
    for (std::size_t j = i + 1; j < n; ++j) {
      double value = 0.0;
      if (norm[i] > 0.0 && norm[j] > 0.0) {
        const double* rj = node_features.data().data() + j * f;
        double acc = 0.0;
        for (std::size_t c = 0; c < f; ++c) acc += (ri[c] - mean[i]) * (rj[c] - mean[j]);
        value = std::abs(acc / (norm[i] * norm[j]));
      }
      corr.at(i, j) = value;
      corr.at(j, i) = value;
    }
  }
  return corr;
}

std::optional<double> offdiagonal_alignment(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b) || a.ndim() != 2 || a.rows() != a.cols()) {
    throw DimensionError("offdiagonal_alignment: need equal square matrices, got " +
                         a.shape_str() + " vs " + b.shape_str());
  }
  const std::size_t n = a.rows();
  if (n < 2) return std::nullopt;

  std::vector<double> u, w;
  u.reserve(n * (n - 1));
  w.reserve(n * (n - 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      u.push_back(a.at(i, j));
      w.push_back(b.at(i, j));
    }
  }
  const double m = static_cast<double>(u.size());
  double mu = 0.0, mw = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    mu += u[i];
    mw += w[i];
  }
  mu /= m;
  mw /= m;
  double suu = 0.0, sww = 0.0, suw = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double du = u[i] - mu;
    const double dw = w[i] - mw;
    suu += du * du;
    sww += dw * dw;
    suw += du * dw;
  }
  if (suu <= 0.0 || sww <= 0.0) return std::nullopt;
  return suw / std::sqrt(suu * sww);
}

}  // namespace sthcss
