#pragma once

// Test-only oracles, independent of the implementation paths they check:
// central finite differences for gradients, exhaustive KNN by sorting, and
// plain-loop statistics.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "sthcss/tensor.hpp"

namespace sthcss::testing {

// Central finite differences of a scalar-valued function with respect to
// every entry of x (x is restored afterwards).
inline std::vector<double> fd_gradient(const std::function<double()>& f, std::vector<double>& x,
                                       double eps = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double fp = f();
    x[i] = saved - eps;
    const double fm = f();
    x[i] = saved;
    g[i] = (fp - fm) / (2.0 * eps);
  }
  return g;
}

// Worst-case relative error with an absolute floor of 1 so near-zero pairs
// compare absolutely.
inline double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

// Checks analytic gradients of `build_loss` against finite differences for
// every tensor in `inputs`. build_loss must read the inputs' current values
// and return a scalar tensor; when given a tape the inputs are watched on it
// beforehand. Returns the worst relative error over all inputs.
inline double gradient_check(std::vector<Tensor*> inputs,
                             const std::function<Tensor(Tape*)>& build_loss,
                             double eps = 1e-5) {
  Tape tape;
  for (Tensor* t : inputs) tape.watch(*t);
  Tensor loss = build_loss(&tape);
  tape.backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (Tensor* t : inputs) analytic.push_back(t->grad());
  for (Tensor* t : inputs) {
    t->set_tape_id(-1);
    t->clear_grad();
  }

  const auto eval = [&]() { return build_loss(nullptr).at(0); };
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::vector<double> fd = fd_gradient(eval, inputs[i]->data(), eps);
    worst = std::max(worst, max_rel_err(analytic[i], fd));
  }
  return worst;
}

// Exhaustive KNN membership for one anchor: all nodes sorted by (distance to
// the anchor, index), the anchor itself first. Distances are recomputed from
// the raw features here, independent of pairwise_distances.
inline std::vector<std::size_t> knn_by_sorting(const Tensor& features, std::size_t anchor,
                                               std::size_t k) {
  const std::size_t n = features.rows();
  const std::size_t f = features.cols();
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == anchor) continue;
    double acc = 0.0;
    for (std::size_t c = 0; c < f; ++c) {
      const double d = features.at(i, c) - features.at(anchor, c);
      acc += d * d;
    }
    ranked.emplace_back(std::sqrt(acc), i);
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<std::size_t> members{anchor};
  for (std::size_t i = 0; i + 1 < k; ++i) members.push_back(ranked[i].second);
  std::sort(members.begin(), members.end());
  return members;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double frobenius_distance(const Tensor& a, const Tensor& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.at(i) - b.at(i);
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace sthcss::testing
