#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "olstec/tensor_core.hpp"
#include "support/oracles.hpp"

using namespace olstec;
using olstec::testing::naive_reconstruct;
using olstec::testing::random_factors;
using olstec::testing::random_mask;
using olstec::testing::random_matrix;

TEST_CASE("reconstruct_slice on hand-computed factors", "[tensor_core]") {
  SECTION("identity case") {
    const CpFactors f({{1.0}}, {{1.0}}, {1.0});
    CHECK(reconstruct_slice(f) == RealMatrix{{1.0}});
  }
  SECTION("diagonal case") {
    const CpFactors f({{1, 0}, {0, 1}}, {{1, 0}, {0, 1}}, {2, 3});
    CHECK(reconstruct_slice(f) == RealMatrix{{2, 0}, {0, 3}});
  }
}

TEST_CASE("reconstruct_slice matches the triple-loop oracle", "[tensor_core]") {
  std::mt19937_64 rng(11);
  const CpFactors f = random_factors(4, 3, 2, rng);
  const RealMatrix x = reconstruct_slice(f);
  const RealMatrix want = naive_reconstruct(f);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(x.values()[i] == Catch::Approx(want.values()[i]).epsilon(1e-14));
}

TEST_CASE("reconstruct_slice rejects mismatched ranks", "[tensor_core]") {
  CHECK_THROWS_AS(CpFactors(RealMatrix(2, 2), RealMatrix(2, 3), RealVector(2)), DimensionError);
  CHECK_THROWS_AS(reconstruct_slice(RealMatrix(2, 2), RealVector(3), RealMatrix(2, 2)),
                  DimensionError);
}

TEST_CASE("entry_product_g is the Hadamard product of the two rows", "[tensor_core]") {
  SECTION("direct") {
    const CpFactors f({{1, 2}}, {{3, 4}}, {1, 1});
    CHECK(entry_product_g(f, 0, 0) == RealVector{3, 8});
  }
  SECTION("zero row annihilates") {
    const CpFactors f({{0, 0}}, {{3, 4}}, {1, 1});
    CHECK(entry_product_g(f, 0, 0) == RealVector{0, 0});
  }
  SECTION("matches a per-component loop") {
    std::mt19937_64 rng(5);
    const CpFactors f = random_factors(3, 4, 5, rng);
    const RealVector g = entry_product_g(f, 2, 1);
    for (std::size_t r = 0; r < 5; ++r) CHECK(g[r] == f.a(2, r) * f.c(1, r));
  }
  SECTION("out of range index") {
    const CpFactors f({{1, 2}}, {{3, 4}}, {1, 1});
    CHECK_THROWS_AS(entry_product_g(f, 1, 0), DimensionError);
    CHECK_THROWS_AS(entry_product_g(f, 0, 1), DimensionError);
  }
}

TEST_CASE("masked_frobenius_sq", "[tensor_core]") {
  SECTION("identical inputs give zero") {
    std::mt19937_64 rng(2);
    const RealMatrix x = random_matrix(3, 3, rng);
    CHECK(masked_frobenius_sq(x, x, random_mask(3, 3, 0.5, rng)) == 0.0);
  }
  SECTION("single observed entry") {
    CHECK(masked_frobenius_sq({{1, 2}}, {{0, 0}}, MaskMatrix{{1, 0}}) == 1.0);
  }
  SECTION("matches loop accumulation on a 40% mask") {
    std::mt19937_64 rng(3);
    const RealMatrix x = random_matrix(5, 5, rng);
    const RealMatrix y = random_matrix(5, 5, rng);
    const MaskMatrix m = random_mask(5, 5, 0.4, rng);
    double want = 0.0;
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j)
        if (m(i, j)) want += (x(i, j) - y(i, j)) * (x(i, j) - y(i, j));
    CHECK(masked_frobenius_sq(x, y, m) == Catch::Approx(want).epsilon(1e-14));
  }
  SECTION("shape mismatch") {
    CHECK_THROWS_AS(masked_frobenius_sq(RealMatrix(2, 2), RealMatrix(2, 3), MaskMatrix(2, 2)),
                    DimensionError);
  }
}

TEST_CASE("SliceObservation requires matching mask", "[tensor_core]") {
  CHECK_THROWS_AS(SliceObservation(1, RealMatrix(2, 2), MaskMatrix(2, 3)), DimensionError);
}

TEST_CASE("Dims flags over-parameterized rank", "[tensor_core]") {
  CHECK_FALSE(Dims{5, 4, 3}.rank_exceeds_slice());
  CHECK(Dims{5, 4, 6}.rank_exceeds_slice());
  CHECK_THROWS_AS((Dims{0, 4, 1}.validate()), ConfigError);
}

TEST_CASE("slice model properties on random factors", "[tensor_core][property]") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows = 1 + rng() % 7;
    const std::size_t cols = 1 + rng() % 7;
    const std::size_t rank = 1 + rng() % 4;
    CpFactors f = random_factors(rows, cols, rank, rng);

    // linear in b
    const RealVector b1 = testing::random_vector(rank, rng);
    const RealVector b2 = testing::random_vector(rank, rng);
    RealVector sum(rank);
    for (std::size_t r = 0; r < rank; ++r) sum[r] = b1[r] + b2[r];
    const RealMatrix x12 = reconstruct_slice(f.a, sum, f.c);
    const RealMatrix x1 = reconstruct_slice(f.a, b1, f.c);
    const RealMatrix x2 = reconstruct_slice(f.a, b2, f.c);
    double scale = 0.0;
    for (double v : x12.values()) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < x12.size(); ++i)
      CHECK(std::abs(x12.values()[i] - x1.values()[i] - x2.values()[i]) <= 1e-12 * (1.0 + scale));

    // entry (l, w) equals g_{l,w} . b
    const RealMatrix x = reconstruct_slice(f);
    for (std::size_t l = 0; l < rows; ++l)
      for (std::size_t w = 0; w < cols; ++w) {
        const double via_g = dot(entry_product_g(f, l, w), f.b);
        CHECK(std::abs(x(l, w) - via_g) <= 1e-12 * (1.0 + std::abs(via_g)));
      }
  }
}
