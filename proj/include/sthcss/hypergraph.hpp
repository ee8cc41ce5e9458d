#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "sthcss/tensor.hpp"

namespace sthcss {

/// Which sums fill the vertex-degree diagonal. The printed degree formula
/// sums incidences; the weighted variant sums hyperedge weights instead and
/// is kept behind this switch for comparison.
enum class DegreeMode { incidence_count, weight_sum };

/// Weighted hypergraph over sensor nodes, one hyperedge per node: hyperedge
/// j contains node j plus its k-1 nearest neighbours. Weights follow the
/// Gaussian kernel exp(-D(v_i,v_j)^2 / delta) with delta the mean pairwise
/// distance over ordered pairs.
struct Hypergraph {
  Tensor incidence;                   // |V| x |E|, entries in {0,1}
  Tensor weights;                     // |V| x |E|, nonzero exactly where incident
  std::vector<double> vertex_degree;  // diagonal of Dv
  std::vector<double> edge_degree;    // diagonal of De
  std::size_t k = 0;
  DegreeMode degree_mode = DegreeMode::incidence_count;

  std::size_t node_count() const { return incidence.rows(); }
  std::size_t edge_count() const { return incidence.cols(); }
};

/// Propagation operator N = Dv^{-1/2} H W_e De^{-1} H^T Dv^{-1/2} (W_e the
/// per-hyperedge diagonal) and Laplacian L = I - N.
struct SpectralOperators {
  Tensor adjacency;  // N, symmetric PSD
  Tensor laplacian;  // L = I - N
};

/// Eigendecomposition A = V diag(values) V^T, eigenvalues ascending.
struct EigenSystem {
  Tensor vectors;              // columns are eigenvectors
  std::vector<double> values;
};

/// Euclidean distances between the rows of node_features.
Tensor pairwise_distances(const Tensor& node_features);

/// KNN hypergraph construction. Ties in distance break toward the lower
/// node index; each hyperedge includes its anchor. k must lie in [1, |V|].
Hypergraph build_hypergraph(const Tensor& node_features, std::size_t k,
                            DegreeMode mode = DegreeMode::incidence_count);

/// Vertex and hyperedge degree diagonals of an incidence/weight pair.
std::pair<std::vector<double>, std::vector<double>> degree_matrices(
    const Tensor& incidence, const Tensor& weights, DegreeMode mode);

SpectralOperators normalized_adjacency(const Hypergraph& hg);

/// Cyclic Jacobi rotation eigensolver for small dense symmetric matrices.
EigenSystem eigensystem(const Tensor& symmetric);

/// Spectral filtering: V g(Lambda) V^T x.
Tensor spectral_filter(const Tensor& x, const std::function<double(double)>& filter,
                       const EigenSystem& eig);

/// Absolute Pearson correlation between the rows of a features matrix.
/// Rows with zero variance correlate as 0 against everything (diagonal 1).
Tensor absolute_row_correlation(const Tensor& node_features);

/// Pearson correlation between the off-diagonal entries of two square
/// matrices; nullopt when either off-diagonal part is constant.
std::optional<double> offdiagonal_alignment(const Tensor& a, const Tensor& b);

}  // namespace sthcss
