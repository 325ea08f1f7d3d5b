#include "tigranet/spectral.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "support/test_util.hpp"
#include "tigranet/graph.hpp"
#include "tigranet/spectral_oracle.hpp"

namespace tigranet {
namespace {

TEST(FilterMatvec, IdentityFilter) {
  const NormalizedLaplacian lap = normalized_laplacian(build_grid_graph(3, 3));
  SplitMix64 rng(1);
  const GraphSignal y = testing::random_signal(9, rng);
  EXPECT_EQ(filter_matvec(lap, PolynomialFilter{{1.0}}, y), y);
}

TEST(FilterMatvec, LaplacianAnnihilatesSqrtDegrees) {
  const GridGraph g = build_grid_graph(4, 4);
  const NormalizedLaplacian lap = normalized_laplacian(g);
  GraphSignal sqrt_deg(g.degrees.size());
  for (std::size_t i = 0; i < sqrt_deg.size(); ++i) {
    sqrt_deg[i] = std::sqrt(g.degrees[i]);
  }
  const GraphSignal out = filter_matvec(lap, PolynomialFilter{{0.0, 1.0}}, sqrt_deg);
  for (double v : out) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(FilterMatvec, MatchesOracleOnRandomCubic) {
  const NormalizedLaplacian lap = normalized_laplacian(build_grid_graph(4, 4));
  const SpectralOracle oracle(lap);
  SplitMix64 rng(2);
  const PolynomialFilter f = testing::random_filter(3, rng);
  const GraphSignal y = testing::random_signal(16, rng);
  EXPECT_LE(testing::max_abs_diff(filter_matvec(lap, f, y), oracle_filter(oracle, f, y)),
            1e-8);
}

TEST(FilterMatvec, RejectsLengthMismatch) {
  const NormalizedLaplacian lap = normalized_laplacian(build_grid_graph(3, 3));
  EXPECT_THROW(filter_matvec(lap, PolynomialFilter{{1.0}}, GraphSignal(4, 0.0)),
               std::invalid_argument);
}

TEST(FilterMatvec, IsLinear) {
  const NormalizedLaplacian lap = normalized_laplacian(build_grid_graph(4, 4));
  SplitMix64 rng(3);
  const PolynomialFilter f = testing::random_filter(4, rng);
  const GraphSignal y1 = testing::random_signal(16, rng);
  const GraphSignal y2 = testing::random_signal(16, rng);
  const double a = 0.7;
  const double b = -1.3;
  GraphSignal combo(16);
  for (std::size_t i = 0; i < combo.size(); ++i) combo[i] = a * y1[i] + b * y2[i];
  const GraphSignal lhs = filter_matvec(lap, f, combo);
  const GraphSignal f1 = filter_matvec(lap, f, y1);
  const GraphSignal f2 = filter_matvec(lap, f, y2);
  for (std::size_t i = 0; i < combo.size(); ++i) {
    EXPECT_NEAR(lhs[i], a * f1[i] + b * f2[i], 1e-12);
  }
}

TEST(FilterMatvec, CommutesWithDihedralPermutations) {
  const int side = 5;
  const NormalizedLaplacian lap =
      normalized_laplacian(build_grid_graph(side, side));
  SplitMix64 rng(4);
  const PolynomialFilter f = testing::random_filter(3, rng);
  const GraphSignal y = testing::random_signal(25, rng);
  const GraphSignal filtered = filter_matvec(lap, f, y);
  for (const GridAutomorphism& p : all_dihedral(side)) {
    const GraphSignal lhs = filter_matvec(lap, f, apply_automorphism(p, y));
    const GraphSignal rhs = apply_automorphism(p, filtered);
    EXPECT_LE(testing::max_abs_diff(lhs, rhs), 1e-12);
  }
}

// Output at v depends only on values within degree() hops: re-randomizing a
// far corner leaves the output near the opposite corner bitwise unchanged.
TEST(FilterMatvec, OutputIsLocal) {
  const int side = 9;
  const NormalizedLaplacian lap =
      normalized_laplacian(build_grid_graph(side, side));
  SplitMix64 rng(5);
  const int degree = 2;
  const PolynomialFilter f = testing::random_filter(degree, rng);
  GraphSignal y = testing::random_signal(81, rng);
  const GraphSignal before = filter_matvec(lap, f, y);

  for (int r = 6; r < side; ++r) {
    for (int c = 6; c < side; ++c) {
      y[static_cast<std::size_t>(vertex_index(r, c, side))] = rng.uniform(5.0, 9.0);
    }
  }
  const GraphSignal after = filter_matvec(lap, f, y);
  // Chebyshev-distance > degree from the modified block.
  for (int r = 0; r <= 3; ++r) {
    for (int c = 0; c <= 3; ++c) {
      const std::size_t v = static_cast<std::size_t>(vertex_index(r, c, side));
      EXPECT_EQ(before[v], after[v]);
    }
  }
}

TEST(OracleFilter, UnitResponseReproducesSignal) {
  const NormalizedLaplacian lap = normalized_laplacian(build_grid_graph(3, 3));
  const SpectralOracle oracle(lap);
  SplitMix64 rng(6);
  const GraphSignal y = testing::random_signal(9, rng);
  const GraphSignal out =
      oracle.apply_response([](double) { return 1.0; }, y);
  EXPECT_LE(testing::max_abs_diff(out, y), 1e-10);
}

TEST(OracleFilter, ScalesEigenvectors) {
  const NormalizedLaplacian lap = normalized_laplacian(build_grid_graph(3, 3));
  const SpectralOracle oracle(lap);
  const int k = 4;
  GraphSignal chi_k(9);
  for (int v = 0; v < 9; ++v) chi_k[static_cast<std::size_t>(v)] = oracle.eigenvector(k, v);
  const GraphSignal out = oracle_filter(oracle, PolynomialFilter{{0.0, 1.0}}, chi_k);
  const double lambda = oracle.eigenvalues()[static_cast<std::size_t>(k)];
  for (int v = 0; v < 9; ++v) {
    EXPECT_NEAR(out[static_cast<std::size_t>(v)], lambda * chi_k[static_cast<std::size_t>(v)], 1e-10);
  }
}

TEST(OracleFilter, AgreesWithSparsePathOnRandomInput) {
  const NormalizedLaplacian lap = normalized_laplacian(build_grid_graph(3, 3));
  const SpectralOracle oracle(lap);
  SplitMix64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const PolynomialFilter f = testing::random_filter(1 + static_cast<int>(rng.below(5)), rng);
    const GraphSignal y = testing::random_signal(9, rng);
    EXPECT_LE(testing::max_abs_diff(oracle_filter(oracle, f, y),
                                    filter_matvec(lap, f, y)),
              1e-8);
  }
}

TEST(OracleFilter, RefusesLargeGraphs) {
  EXPECT_THROW(SpectralOracle(normalized_laplacian(build_grid_graph(65, 65))),
               std::invalid_argument);
}

TEST(TranslateSignal, ZeroSignalStaysZero) {
  const NormalizedLaplacian lap = normalized_laplacian(build_grid_graph(3, 3));
  const SpectralOracle oracle(lap);
  const GraphSignal out = translate_signal(oracle, GraphSignal(9, 0.0), 4);
  for (double v : out) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(TranslateSignal, TwoVertexPathMatchesHandExpansion) {
  // Eigenbasis: (1,1)/sqrt(2) at 0 and (1,-1)/sqrt(2) at 2, so translation to
  // vertex 0 is the identity and translation to vertex 1 swaps components.
  const NormalizedLaplacian lap = normalized_laplacian(build_grid_graph(1, 2));
  const SpectralOracle oracle(lap);
  const GraphSignal y = {0.3, -1.7};
  const GraphSignal at0 = translate_signal(oracle, y, 0);
  EXPECT_NEAR(at0[0], 0.3, 1e-12);
  EXPECT_NEAR(at0[1], -1.7, 1e-12);
  const GraphSignal at1 = translate_signal(oracle, y, 1);
  EXPECT_NEAR(at1[0], -1.7, 1e-12);
  EXPECT_NEAR(at1[1], 0.3, 1e-12);
}

// On a translation-symmetric graph (a cycle), translating a delta centers
// the bump at the requested vertex.
TEST(TranslateSignal, LocalizesOnCycle) {
  const int n = 9;
  GridGraph cycle;
  cycle.height = 1;
  cycle.width = n;
  cycle.num_vertices = n;
  cycle.adjacency.rows = cycle.adjacency.cols = n;
  cycle.adjacency.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  cycle.degrees.assign(static_cast<std::size_t>(n), 2.0);
  for (int v = 0; v < n; ++v) {
    int a = (v + n - 1) % n;
    int b = (v + 1) % n;
    if (a > b) std::swap(a, b);
    cycle.adjacency.col_idx.push_back(a);
    cycle.adjacency.col_idx.push_back(b);
    cycle.adjacency.values.push_back(1.0);
    cycle.adjacency.values.push_back(1.0);
    cycle.adjacency.row_ptr[static_cast<std::size_t>(v) + 1] = 2 * (v + 1);
  }
  const SpectralOracle oracle(normalized_laplacian(cycle));
  GraphSignal delta(static_cast<std::size_t>(n), 0.0);
  delta[0] = 1.0;
  const int center = 4;
  const GraphSignal out = translate_signal(oracle, delta, center);
  int argmax = 0;
  for (int v = 1; v < n; ++v) {
    if (std::abs(out[static_cast<std::size_t>(v)]) >
        std::abs(out[static_cast<std::size_t>(argmax)])) {
      argmax = v;
    }
  }
  EXPECT_EQ(argmax, center);
}

TEST(TranslateSignal, RejectsBadCenter) {
  const SpectralOracle oracle(normalized_laplacian(build_grid_graph(2, 2)));
  EXPECT_THROW(translate_signal(oracle, GraphSignal(4, 0.0), 4),
               std::invalid_argument);
}

TEST(ChebyshevSequence, OrderZeroIsInput) {
  const NormalizedLaplacian lap = normalized_laplacian(build_grid_graph(3, 3));
  SplitMix64 rng(8);
  const GraphSignal z = testing::random_signal(9, rng);
  const auto t = chebyshev_sequence(lap, z, 0);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0], z);
}

TEST(ChebyshevSequence, OrderTwoMatchesExpandedRecursion) {
  const NormalizedLaplacian lap = normalized_laplacian(build_grid_graph(3, 3));
  SplitMix64 rng(9);
  const GraphSignal z = testing::random_signal(9, rng);
  const auto t = chebyshev_sequence(lap, z, 2);
  ASSERT_EQ(t.size(), 3u);

  auto shifted = [&lap](const GraphSignal& x) {
    GraphSignal out = lap.apply(x);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] -= x[i];
    return out;
  };
  const GraphSignal lz = shifted(z);
  const GraphSignal llz = shifted(lz);
  for (std::size_t i = 0; i < z.size(); ++i) {
    EXPECT_NEAR(t[2][i], 2.0 * llz[i] - z[i], 1e-12);
  }
}

// The sparse recursion must match the classical polynomials evaluated on the
// shifted spectrum: chi T_k(lambda - 1) chi^T z with T_k(x) = cos(k acos x).
TEST(ChebyshevSequence, MatchesOracleUpToOrderFive) {
  const NormalizedLaplacian lap = normalized_laplacian(build_grid_graph(3, 3));
  const SpectralOracle oracle(lap);
  SplitMix64 rng(10);
  const GraphSignal z = testing::random_signal(9, rng);
  const auto t = chebyshev_sequence(lap, z, 5);
  for (int k = 0; k <= 5; ++k) {
    const GraphSignal reference = oracle.apply_response(
        [k](double lambda) {
          const double x = std::clamp(lambda - 1.0, -1.0, 1.0);
          return std::cos(k * std::acos(x));
        },
        z);
    EXPECT_LE(testing::max_abs_diff(t[static_cast<std::size_t>(k)], reference), 1e-8)
        << "order " << k;
  }
}

TEST(ChebyshevSequence, StaysBoundedByInputNorm) {
  const NormalizedLaplacian lap = normalized_laplacian(build_grid_graph(5, 5));
  SplitMix64 rng(11);
  const GraphSignal z = testing::random_signal(25, rng);
  double z_norm = 0.0;
  for (double v : z) z_norm += v * v;
  z_norm = std::sqrt(z_norm);
  for (const GraphSignal& tk : chebyshev_sequence(lap, z, 8)) {
    double norm = 0.0;
    for (double v : tk) norm += v * v;
    EXPECT_LE(std::sqrt(norm), z_norm + 1e-9);
  }
}

TEST(FilterBank, SingleWindowIsAllPass) {
  const auto bank = init_filter_bank(1, 3);
  ASSERT_EQ(bank.size(), 1u);
  for (double lambda = 0.1; lambda <= 1.91; lambda += 0.05) {
    EXPECT_NEAR(bank[0].response_at(lambda), 1.0, 0.15);
  }
}

// With width 4/(Z+1) and 50% overlap the outermost ~0.4 of the spectrum is
// covered by a single window, whose cubic fit bottoms out near 0.80 at
// lambda = 0.1; the doubly covered interior sums to ~2.
TEST(FilterBank, ThreeWindowsCoverSpectrum) {
  const auto bank = init_filter_bank(3, 3);
  ASSERT_EQ(bank.size(), 3u);
  for (double lambda = 0.1; lambda <= 1.91; lambda += 2.0 / 255.0) {
    double total = 0.0;
    for (const PolynomialFilter& f : bank) total += f.response_at(lambda);
    EXPECT_GE(total, 0.75) << "lambda " << lambda;
    if (lambda >= 0.5 && lambda <= 1.5) {
      EXPECT_GE(total, 0.9) << "lambda " << lambda;
    }
  }
}

TEST(FilterBank, TenFiltersAreDistinct) {
  const auto bank = init_filter_bank(10, 4);
  ASSERT_EQ(bank.size(), 10u);
  for (std::size_t i = 0; i < bank.size(); ++i) {
    for (std::size_t j = i + 1; j < bank.size(); ++j) {
      double dist = 0.0;
      for (int s = 0; s < 256; ++s) {
        const double lambda = 2.0 * s / 255.0;
        const double d = bank[i].response_at(lambda) - bank[j].response_at(lambda);
        dist += d * d;
      }
      EXPECT_GT(std::sqrt(dist), 1e-6);
    }
  }
}

TEST(FilterBank, WindowLayout) {
  const auto windows = filter_bank_windows(4);
  ASSERT_EQ(windows.size(), 4u);
  const double step = 2.0 / 5.0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    EXPECT_NEAR(windows[i].a, i * step, 1e-12);
    EXPECT_NEAR(windows[i].b - windows[i].a, 2.0 * step, 1e-12);
  }
  EXPECT_NEAR(windows.front().a, 0.0, 1e-12);
  EXPECT_NEAR(windows.back().b, 2.0, 1e-12);
}

TEST(SpectralResponse, ConstantAndLinearAndQuadratic) {
  const auto flat = spectral_response(PolynomialFilter{{1.0}}, 32);
  ASSERT_EQ(flat.size(), 32u);
  for (const auto& [lambda, value] : flat) EXPECT_DOUBLE_EQ(value, 1.0);

  const auto ramp = spectral_response(PolynomialFilter{{0.0, 1.0}}, 64);
  for (const auto& [lambda, value] : ramp) EXPECT_DOUBLE_EQ(value, lambda);

  const auto square = spectral_response(PolynomialFilter{{0.0, 0.0, 1.0}}, 5);
  EXPECT_DOUBLE_EQ(square.front().first, 0.0);
  EXPECT_DOUBLE_EQ(square.back().first, 2.0);
  EXPECT_DOUBLE_EQ(square.back().second, 4.0);
}

TEST(SpectralResponse, RejectsTooFewSamples) {
  EXPECT_THROW(spectral_response(PolynomialFilter{{1.0}}, 1),
               std::invalid_argument);
}

// Informal scaling smoke test: Horner filtering must behave like O(nnz)
// per application, so quadrupling the vertex count may not cost anything
// near the 16x of a dense path. Min-of-reps timing with a generous bound.
TEST(FilterMatvec, ScalesRoughlyLinearlyInVertexCount) {
  SplitMix64 rng(12);
  const PolynomialFilter f = testing::random_filter(4, rng);
  auto min_time = [&](int side) {
    const NormalizedLaplacian lap =
        normalized_laplacian(build_grid_graph(side, side));
    GraphSignal y = testing::random_signal(
        static_cast<std::size_t>(side) * side, rng);
    double best = 1e9;
    for (int rep = 0; rep < 20; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      const GraphSignal out = filter_matvec(lap, f, y);
      const auto t1 = std::chrono::steady_clock::now();
      best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
      y[0] += out[0] * 1e-12;  // keep the call observable
    }
    return best;
  };
  const double small = min_time(32);   // 1024 vertices
  const double large = min_time(64);   // 4096 vertices
  EXPECT_LT(large, 12.0 * std::max(small, 1e-9));
}

}  // namespace
}  // namespace tigranet
