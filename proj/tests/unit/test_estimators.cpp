#include <gtest/gtest.h>

#include "radvae/estimators.hpp"
#include "radvae/scenario.hpp"

using namespace radvae;

namespace {
std::vector<ComplexVec> gaussian(std::size_t m, std::size_t K, double rho, std::uint64_t seed) {
  const Cholesky c(toeplitz(rho, m));
  Rng rng(seed);
  std::vector<ComplexVec> out;
  for (std::size_t k = 0; k < K; ++k) out.push_back(sample_complex_gaussian(c, rng));
  return out;
}

double max_entry_error(const HermitianMat& a, const HermitianMat& b) {
  double e = 0;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) e = std::max(e, std::abs(a(i, j) - b(i, j)));
  return e;
}

// Residual of the fixed-point equation, computed independently through
// explicit solves.
double fp_residual(const std::vector<ComplexVec>& data, const HermitianMat& s) {
  const std::size_t m = s.dim();
  std::vector<cdouble> acc(m * m);
  for (const auto& z : data) {
    const double q = quad_form(s, z, z).real();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        acc[i * m + j] += double(m) / double(data.size()) * z[i] * std::conj(z[j]) / q;
  }
  return frobenius_distance(HermitianMat::from_rows(m, acc), s) / s.frobenius_norm();
}
}  // namespace

TEST(Scm, TwoBasisVectors) {
  const std::vector<ComplexVec> d{{1.0, 0.0}, {0.0, 1.0}};
  EXPECT_EQ(frobenius_distance(scm(d), HermitianMat::identity(2).scaled(0.5)), 0.0);
}

TEST(Scm, RankOneForRepeatedVector) {
  const std::vector<ComplexVec> d(5, ComplexVec{1.0, 0.0, 0.0});
  const auto s = scm(d);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(s(i, j), cdouble(i == 0 && j == 0 ? 1.0 : 0.0));
}

TEST(Scm, ConsistentAtLargeK) {
  EXPECT_LT(max_entry_error(scm(gaussian(8, 10000, 0.5, 1)), toeplitz(0.5, 8)), 0.05);
}

TEST(Scm, HermitianAndPsd) {
  const auto s = scm(gaussian(6, 4, 0.3, 2));  // rank deficient on purpose
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(s(i, j), std::conj(s(j, i)));
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    ComplexVec x(6);
    for (auto& v : x) v = rng.complex_normal();
    cdouble q{};
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) q += std::conj(x[i]) * s(i, j) * x[j];
    EXPECT_GE(q.real(), -1e-12);
  }
}

TEST(Scm, RejectsEmptyAndRagged) {
  EXPECT_THROW(scm(std::vector<ComplexVec>{}), std::invalid_argument);
  EXPECT_THROW(scm(std::vector<ComplexVec>{{1.0, 0.0}, {1.0}}), std::invalid_argument);
}

TEST(Tyler, BasisVectorsGiveIdentity) {
  const std::vector<ComplexVec> d{{1.0, 0.0}, {0.0, 1.0}};
  EXPECT_LT(frobenius_distance(tyler_fp(d), HermitianMat::identity(2)), 1e-15);
}

TEST(Tyler, ResidualBelowTolAndTraceM) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto d = gaussian(16, 32, 0.5, 100 + seed);
    const auto r = tyler_fp_detailed(d);
    EXPECT_LT(r.residual, 1e-8);
    EXPECT_LT(fp_residual(d, r.sigma), 1e-8);
    EXPECT_NEAR(r.sigma.trace(), 16.0, 1e-9);
    EXPECT_LE(r.iterations, 100);
  }
}

TEST(Tyler, PerSampleScaleInvariance) {
  auto d = gaussian(16, 32, 0.5, 7);
  const auto s0 = tyler_fp(d);
  Rng rng(8);
  for (auto& z : d) {
    const double c = 0.01 + 100.0 * rng.uniform();
    for (auto& v : z) v *= c;
  }
  EXPECT_LT(frobenius_distance(tyler_fp(d), s0), 1e-10);
}

TEST(Tyler, CommonScaleInvariance) {
  auto d = gaussian(16, 40, 0.5, 9);
  const auto s0 = tyler_fp(d);
  for (auto& z : d)
    for (auto& v : z) v *= cdouble(-3.0, 2.0);
  EXPECT_LT(frobenius_distance(tyler_fp(d), s0), 1e-10);
}

TEST(Tyler, EnsembleConsistentAtK320) {
  // Averaged over realizations the estimate approaches toeplitz(0.5, 16).
  HermitianMat mean = HermitianMat::zeros(16);
  std::vector<cdouble> acc(256);
  const int runs = 40;
  for (int r = 0; r < runs; ++r) {
    const auto s = tyler_fp(gaussian(16, 320, 0.5, 1000 + r));
    for (std::size_t i = 0; i < 16; ++i)
      for (std::size_t j = 0; j < 16; ++j) acc[i * 16 + j] += s(i, j) / double(runs);
  }
  EXPECT_LT(max_entry_error(HermitianMat::from_rows(16, acc), toeplitz(0.5, 16)), 0.05);
}

TEST(Tyler, Errors) {
  auto d = gaussian(4, 8, 0.5, 11);
  d[3] = ComplexVec(4);
  EXPECT_THROW(tyler_fp(d), std::invalid_argument);
  EstimatorConfig cfg;
  cfg.max_iter = 2;
  EXPECT_THROW(tyler_fp(gaussian(16, 32, 0.5, 12), cfg), NoConvergence);
  cfg.max_iter = 0;
  EXPECT_THROW(tyler_fp(gaussian(16, 32, 0.5, 12), cfg), std::invalid_argument);
  cfg = {};
  cfg.tol = 0;
  EXPECT_THROW(tyler_fp(gaussian(16, 32, 0.5, 12), cfg), std::invalid_argument);
}

TEST(Tyler, UnnormalizedSatisfiesFixedPoint) {
  EstimatorConfig cfg;
  cfg.normalize_trace = false;
  const auto d = gaussian(8, 24, 0.5, 13);
  EXPECT_LT(fp_residual(d, tyler_fp(d, cfg)), 1e-8);
}
