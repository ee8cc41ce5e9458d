#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "sthcss/hypergraph.hpp"
#include "sthcss/matrix_io.hpp"

using namespace sthcss;
using namespace sthcss::testing;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Independent PSD-factorization oracle: N must equal M M^T with
// M = Dv^{-1/2} H (W_e De^{-1})^{1/2}.
Tensor psd_factor_product(const Hypergraph& hg) {
  const std::size_t n = hg.node_count();
  const std::size_t e = hg.edge_count();
  std::vector<double> edge_weight(e, 0.0);
  for (std::size_t j = 0; j < e; ++j) {
    double acc = 0.0, members = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (hg.incidence.at(i, j) != 0.0) {
        acc += hg.weights.at(i, j);
        members += 1.0;
      }
    }
    edge_weight[j] = acc / members;
  }
  Tensor m({n, e});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < e; ++j) {
      m.at(i, j) = hg.incidence.at(i, j) / std::sqrt(hg.vertex_degree[i]) *
                   std::sqrt(edge_weight[j] / hg.edge_degree[j]);
    }
  }
  Tensor prod({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t col = 0; col < e; ++col) acc += m.at(i, col) * m.at(j, col);
      prod.at(i, j) = acc;
    }
  return prod;
}

}  // namespace

TEST_CASE("pairwise distances: 3-4-5 triangle and single node") {
  Tensor f({2, 2}, {0, 0, 3, 4});
  Tensor d = pairwise_distances(f);
  CHECK(d.at(0, 0) == 0.0);
  CHECK(d.at(0, 1) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(d.at(1, 0) == doctest::Approx(5.0).epsilon(1e-15));

  Tensor single({1, 1}, {42.0});
  Tensor ds = pairwise_distances(single);
  CHECK(ds.size() == 1);
  CHECK(ds.at(0) == 0.0);
}

TEST_CASE("pairwise distances on scalar features are absolute differences") {
  Tensor f({3, 1}, {0, 1, 5});
  Tensor d = pairwise_distances(f);
  const double expected[3][3] = {{0, 1, 5}, {1, 0, 4}, {5, 4, 0}};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(d.at(i, j) == doctest::Approx(expected[i][j]).epsilon(1e-14));
}

TEST_CASE("pairwise distances satisfy metric properties") {
  Rng rng(11);
  Tensor f = Tensor::uniform({7, 3}, rng, -2.0, 2.0);
  Tensor d = pairwise_distances(f);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(d.at(i, i) == 0.0);
    for (std::size_t j = 0; j < 7; ++j) {
      CHECK(d.at(i, j) == d.at(j, i));
      CHECK(d.at(i, j) >= 0.0);
      for (std::size_t k = 0; k < 7; ++k) {
        CHECK(d.at(i, j) <= d.at(i, k) + d.at(k, j) + 1e-12);
      }
    }
  }
  CHECK_THROWS_AS(pairwise_distances(Tensor({1}, {0.0})), DimensionError);
}

TEST_CASE("k=1 builds the identity hypergraph for any features") {
  Rng rng(13);
  Tensor f = Tensor::uniform({5, 2}, rng, -1.0, 1.0);
  Hypergraph hg = build_hypergraph(f, 1);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(hg.incidence.at(i, j) == (i == j ? 1.0 : 0.0));
      CHECK(hg.weights.at(i, j) == (i == j ? 1.0 : 0.0));
    }
  }
  // identical features are fine at k=1: no non-self weight is ever needed
  Tensor same = Tensor::full({4, 2}, 3.0);
  Hypergraph hg1 = build_hypergraph(same, 1);
  CHECK(hg1.weights.at(0, 0) == 1.0);
  CHECK_THROWS_AS(build_hypergraph(same, 2), DegenerateScaleError);
}

TEST_CASE("hand-evaluated construction on features 0,1,5 with k=2") {
  Tensor f({3, 1}, {0, 1, 5});
  Hypergraph hg = build_hypergraph(f, 2);
  // delta = (1+5+1+4+5+4)/6 = 10/3
  // hyperedge 0 = {0,1}; w(1,e0) = exp(-1/(10/3)) = exp(-0.3)
  CHECK(hg.incidence.at(0, 0) == 1.0);
  CHECK(hg.incidence.at(1, 0) == 1.0);
  CHECK(hg.incidence.at(2, 0) == 0.0);
  CHECK(hg.weights.at(1, 0) == doctest::Approx(std::exp(-0.3)).epsilon(1e-14));
  CHECK(hg.weights.at(1, 0) == doctest::Approx(0.7408182206817179).epsilon(1e-12));
  // hyperedge 1 = {0,1}, hyperedge 2 = {1,2}
  CHECK(hg.incidence.at(0, 1) == 1.0);
  CHECK(hg.incidence.at(2, 2) == 1.0);
  CHECK(hg.incidence.at(1, 2) == 1.0);
  CHECK(hg.weights.at(1, 2) == doctest::Approx(std::exp(-16.0 / (10.0 / 3.0))).epsilon(1e-14));
}

TEST_CASE("build validates k and rejects non-finite features") {
  Tensor f({3, 1}, {0, 1, 5});
  CHECK_THROWS_AS(build_hypergraph(f, 0), InvalidArgumentError);
  CHECK_THROWS_AS(build_hypergraph(f, 4), InvalidArgumentError);
  Tensor bad({2, 1}, {0.0, std::numeric_limits<double>::quiet_NaN()});
  CHECK_THROWS_AS(build_hypergraph(bad, 1), InvalidArgumentError);
}

TEST_CASE("membership matches the exhaustive sorting oracle, all |V| <= 12") {
  Rng rng(17);
  for (std::size_t n = 3; n <= 12; ++n) {
    Tensor f = Tensor::uniform({n, 4}, rng, -1.0, 1.0);
    for (std::size_t k = 1; k <= n; ++k) {
      Hypergraph hg = build_hypergraph(f, k);
      for (std::size_t anchor = 0; anchor < n; ++anchor) {
        // column sum equals k
        double colsum = 0.0;
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i) {
          colsum += hg.incidence.at(i, anchor);
          if (hg.incidence.at(i, anchor) != 0.0) members.push_back(i);
        }
        CHECK(colsum == static_cast<double>(k));
        CHECK(members == knn_by_sorting(f, anchor, k));
        // self-incidence with weight exactly 1
        CHECK(hg.incidence.at(anchor, anchor) == 1.0);
        CHECK(hg.weights.at(anchor, anchor) == 1.0);
      }
    }
  }
}

TEST_CASE("ties break toward the lower node index") {
  // nodes 1 and 2 are equidistant from node 0
  Tensor f({4, 1}, {0.0, 1.0, -1.0, 5.0});
  Hypergraph hg = build_hypergraph(f, 2);
  CHECK(hg.incidence.at(1, 0) == 1.0);
  CHECK(hg.incidence.at(2, 0) == 0.0);
}

TEST_CASE("incidence/weight consistency and weight monotonicity") {
  Rng rng(23);
  Tensor f = Tensor::uniform({8, 3}, rng, -1.0, 1.0);
  Hypergraph hg = build_hypergraph(f, 5);
  Tensor dist = pairwise_distances(f);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = 0; j < 8; ++j) {
      const bool incident = hg.incidence.at(i, j) != 0.0;
      CHECK((hg.weights.at(i, j) != 0.0) == incident);
      if (incident) {
        CHECK(hg.weights.at(i, j) > 0.0);
        CHECK(hg.weights.at(i, j) <= 1.0);
      }
    }
  }
  // within one delta, a strictly larger distance gives a strictly smaller weight
  for (std::size_t j = 0; j < 8; ++j) {
    for (std::size_t a = 0; a < 8; ++a) {
      for (std::size_t b = 0; b < 8; ++b) {
        if (hg.incidence.at(a, j) != 0.0 && hg.incidence.at(b, j) != 0.0 &&
            dist.at(a, j) > dist.at(b, j)) {
          CHECK(hg.weights.at(a, j) < hg.weights.at(b, j));
        }
      }
    }
  }
}

TEST_CASE("degree matrices follow the incidence sums") {
  // identity incidence
  Hypergraph hg;
  hg.incidence = Tensor::identity(3);
  hg.weights = Tensor::identity(3);
  auto [dv, de] = degree_matrices(hg.incidence, hg.weights, DegreeMode::incidence_count);
  for (double v : dv) CHECK(v == 1.0);
  for (double v : de) CHECK(v == 1.0);

  // complete 2x2 incidence
  auto [dv2, de2] = degree_matrices(Tensor::full({2, 2}, 1.0), Tensor::full({2, 2}, 0.5),
                                    DegreeMode::incidence_count);
  for (double v : dv2) CHECK(v == 2.0);
  for (double v : de2) CHECK(v == 2.0);

  // random build at k=3: every hyperedge degree is exactly 3
  Rng rng(29);
  Tensor f = Tensor::uniform({6, 2}, rng, -1.0, 1.0);
  Hypergraph hg3 = build_hypergraph(f, 3);
  for (double v : hg3.edge_degree) CHECK(v == 3.0);
  for (double v : hg3.vertex_degree) CHECK(v >= 1.0);
}

TEST_CASE("weighted vertex degrees sum hyperedge weights instead of counts") {
  Tensor f({3, 1}, {0, 1, 5});
  Hypergraph hg = build_hypergraph(f, 2, DegreeMode::weight_sum);
  double expected = 0.0;
  for (std::size_t j = 0; j < 3; ++j) expected += hg.weights.at(0, j);
  CHECK(hg.vertex_degree[0] == doctest::Approx(expected).epsilon(1e-15));
  // edge degrees still count members
  for (double v : hg.edge_degree) CHECK(v == 2.0);
}

TEST_CASE("decoupled nodes give N = I and L = 0") {
  Rng rng(31);
  Tensor f = Tensor::uniform({4, 2}, rng, -1.0, 1.0);
  Hypergraph hg = build_hypergraph(f, 1);
  SpectralOperators ops = normalized_adjacency(hg);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(ops.adjacency.at(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-15));
      CHECK(ops.laplacian.at(i, j) == doctest::Approx(0.0).epsilon(1e-15));
    }
}

TEST_CASE("N is symmetric, PSD, and L = I - N on randomized graphs up to 24 nodes") {
  Rng rng(37);
  for (std::size_t n : {3, 8, 12, 24}) {
    Tensor f = Tensor::uniform({n, 5}, rng, -1.0, 1.0);
    const std::size_t k = std::min<std::size_t>(n, 1 + n / 3);
    Hypergraph hg = build_hypergraph(f, k);
    SpectralOperators ops = normalized_adjacency(hg);

    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(std::abs(ops.adjacency.at(i, j) - ops.adjacency.at(j, i)) < 1e-10);
        CHECK(std::abs(ops.laplacian.at(i, j) - ((i == j ? 1.0 : 0.0) - ops.adjacency.at(i, j))) <
              1e-15);
      }

    // PSD oracle: N equals its M M^T factorization
    Tensor factored = psd_factor_product(hg);
    CHECK(frobenius_distance(ops.adjacency, factored) < 1e-12);

    // and the smallest eigenvalue clears -1e-8
    EigenSystem eig = eigensystem(ops.adjacency);
    CHECK(eig.values.front() >= -1e-8);
  }
}

TEST_CASE("zero vertex degree is rejected") {
  Hypergraph hg;
  hg.incidence = Tensor({2, 2}, {1, 1, 0, 0});
  hg.weights = Tensor({2, 2}, {1, 1, 0, 0});
  hg.vertex_degree = {2.0, 0.0};
  hg.edge_degree = {1.0, 1.0};
  hg.k = 1;
  CHECK_THROWS_AS(normalized_adjacency(hg), NumericError);
}

TEST_CASE("eigendecomposition reconstructs the Laplacian") {
  Rng rng(41);
  Tensor f = Tensor::uniform({9, 4}, rng, -1.0, 1.0);
  Hypergraph hg = build_hypergraph(f, 4);
  SpectralOperators ops = normalized_adjacency(hg);
  EigenSystem eig = eigensystem(ops.laplacian);

  const std::size_t n = 9;
  Tensor rebuilt({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < n; ++c)
        acc += eig.vectors.at(i, c) * eig.values[c] * eig.vectors.at(j, c);
      rebuilt.at(i, j) = acc;
    }
  CHECK(frobenius_distance(ops.laplacian, rebuilt) < 1e-8);

  // eigenvalues of L are real and ascending; eigenvectors orthonormal
  for (std::size_t c = 1; c < n; ++c) CHECK(eig.values[c] >= eig.values[c - 1]);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += eig.vectors.at(i, a) * eig.vectors.at(i, b);
      CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-10);
    }
}

TEST_CASE("spectral filter identities") {
  Rng rng(43);
  Tensor f = Tensor::uniform({6, 3}, rng, -1.0, 1.0);
  Hypergraph hg = build_hypergraph(f, 3);
  SpectralOperators ops = normalized_adjacency(hg);
  EigenSystem eig = eigensystem(ops.laplacian);
  Tensor x = Tensor::uniform({6}, rng, -1.0, 1.0);

  Tensor same = spectral_filter(x, [](double) { return 1.0; }, eig);
  for (std::size_t i = 0; i < 6; ++i) CHECK(same.at(i) == doctest::Approx(x.at(i)).epsilon(1e-10));

  Tensor zero = spectral_filter(x, [](double) { return 0.0; }, eig);
  for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(zero.at(i)) < 1e-12);
}

TEST_CASE("g(lambda)=1-lambda realizes multiplication by N") {
  Rng rng(47);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 3 + rng.below(8);  // up to 10
    Tensor f = Tensor::uniform({n, 3}, rng, -1.0, 1.0);
    Hypergraph hg = build_hypergraph(f, 1 + rng.below(n));
    SpectralOperators ops = normalized_adjacency(hg);
    EigenSystem eig = eigensystem(ops.laplacian);
    Tensor x = Tensor::uniform({n}, rng, -1.0, 1.0);

    Tensor filtered = spectral_filter(x, [](double l) { return 1.0 - l; }, eig);
    for (std::size_t i = 0; i < n; ++i) {
      double direct = 0.0;
      for (std::size_t j = 0; j < n; ++j) direct += ops.adjacency.at(i, j) * x.at(j);
      CHECK(std::abs(filtered.at(i) - direct) < 1e-8);
    }
  }
}

TEST_CASE("CSV export of the identity and exact round trip") {
  const auto path = std::filesystem::temp_directory_path() / "sthcss_test_identity.csv";
  write_matrix_csv(path, Tensor::identity(2));
  CHECK(slurp(path) == "1,0\n0,1\n");

  Rng rng(53);
  Tensor m = Tensor::uniform({5, 7}, rng, -1e3, 1e3);
  const auto path2 = std::filesystem::temp_directory_path() / "sthcss_test_roundtrip.csv";
  write_matrix_csv(path2, m);
  Tensor back = read_matrix_csv(path2);
  REQUIRE(back.shape() == m.shape());
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(back.at(i) == m.at(i));
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("PGM export header and degenerate-range rule") {
  const auto dir = std::filesystem::temp_directory_path();
  Rng rng(59);
  Tensor f = Tensor::uniform({24, 6}, rng, -1.0, 1.0);
  Hypergraph hg = build_hypergraph(f, 5);
  SpectralOperators ops = normalized_adjacency(hg);
  const auto path = dir / "sthcss_test_adj.pgm";
  write_matrix_pgm(path, ops.adjacency);
  std::ifstream in(path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  CHECK(magic == "P2");
  CHECK(w == 24);
  CHECK(h == 24);
  CHECK(maxval == 255);
  int first_pixel = -1;
  in >> first_pixel;
  CHECK(first_pixel >= 0);
  CHECK(first_pixel <= 255);

  const auto flat_path = dir / "sthcss_test_flat.pgm";
  write_matrix_pgm(flat_path, Tensor::full({3, 3}, 2.5));
  std::ifstream fin(flat_path);
  fin >> magic >> w >> h >> maxval;
  for (int i = 0; i < 9; ++i) {
    int px = -1;
    fin >> px;
    CHECK(px == 128);
  }
  std::filesystem::remove(path);
  std::filesystem::remove(flat_path);
}

TEST_CASE("export fails with an I/O error on an unwritable path") {
  CHECK_THROWS_AS(write_matrix_csv("/nonexistent_dir_xyz/a.csv", Tensor::identity(2)), IoError);
}

TEST_CASE("offdiagonal alignment detects constant off-diagonals") {
  CHECK(!offdiagonal_alignment(Tensor::identity(4), Tensor::identity(4)).has_value());

  Rng rng(61);
  Tensor a = Tensor::uniform({5, 5}, rng, 0.0, 1.0);
  Tensor b = a;  // perfectly aligned
  auto score = offdiagonal_alignment(a, b);
  REQUIRE(score.has_value());
  CHECK(*score == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("correlation of identical rows is 1, constant rows correlate as 0") {
  Tensor f({3, 4}, {1, 2, 3, 4, 1, 2, 3, 4, 7, 7, 7, 7});
  Tensor corr = absolute_row_correlation(f);
  CHECK(corr.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(corr.at(0, 2) == 0.0);
  CHECK(corr.at(2, 2) == 1.0);
}
