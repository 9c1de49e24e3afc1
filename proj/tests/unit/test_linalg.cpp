#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "radvae/linalg.hpp"
#include "radvae/rng.hpp"
#include "radvae/scenario.hpp"

using namespace radvae;

namespace {

// Independent oracle: Eigen dense complex arithmetic.
Eigen::MatrixXcd to_eigen(const HermitianMat& a) {
  Eigen::MatrixXcd e(a.dim(), a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) e(i, j) = a(i, j);
  return e;
}

Eigen::VectorXcd to_eigen(const ComplexVec& v) {
  Eigen::VectorXcd e(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) e(i) = v[i];
  return e;
}

HermitianMat random_hpd(std::size_t m, Rng& rng) {
  std::vector<cdouble> g(m * m);
  for (auto& v : g) v = rng.complex_normal();
  std::vector<cdouble> a(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      cdouble s{};
      for (std::size_t k = 0; k < m; ++k) s += g[i * m + k] * std::conj(g[j * m + k]);
      a[i * m + j] = s + (i == j ? cdouble(0.5) : cdouble(0));
    }
  return HermitianMat::from_rows(m, a);
}

ComplexVec random_vec(std::size_t m, Rng& rng) {
  ComplexVec v(m);
  for (auto& x : v) x = rng.complex_normal();
  return v;
}

}  // namespace

TEST(Toeplitz, RhoZeroIsIdentity) {
  const auto t = toeplitz(0.0, 4);
  EXPECT_EQ(frobenius_distance(t, HermitianMat::identity(4)), 0.0);
}

TEST(Toeplitz, HalfCorrelationM3) {
  const auto t = toeplitz(0.5, 3);
  const double want[3][3] = {{1, .5, .25}, {.5, 1, .5}, {.25, .5, 1}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_EQ(t(i, j), cdouble(want[i][j]));
}

TEST(Toeplitz, TraceEqualsM) { EXPECT_DOUBLE_EQ(toeplitz(0.5, 16).trace(), 16.0); }

TEST(Toeplitz, RejectsRhoOutOfRange) {
  EXPECT_THROW(toeplitz(1.0, 4), std::invalid_argument);
  EXPECT_THROW(toeplitz(-0.1, 4), std::invalid_argument);
}

TEST(Toeplitz, PositiveDefiniteOverRange) {
  for (double rho = 0.0; rho <= 0.95 + 1e-12; rho += 0.05)
    for (std::size_t m : {2u, 8u, 16u, 33u, 64u}) {
      const auto t = toeplitz(rho, m);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(to_eigen(t));
      EXPECT_GT(es.eigenvalues().minCoeff(), 0.0) << "rho=" << rho << " m=" << m;
      EXPECT_NO_THROW(Cholesky{t});
    }
}

TEST(HermitianMat, FromRowsSymmetrizes) {
  const auto a = HermitianMat::from_rows(2, {2.0, cdouble(1, 1), cdouble(3, -1), 4.0});
  EXPECT_EQ(a(0, 1), std::conj(a(1, 0)));
  EXPECT_EQ(a(0, 1), cdouble(2, 1));
}

TEST(Cholesky, IdentityAndDiagonal) {
  const Cholesky li(HermitianMat::identity(3));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(li(i, j), cdouble(i == j ? 1.0 : 0.0));
  const Cholesky ld(HermitianMat::from_rows(2, {4.0, 0.0, 0.0, 9.0}));
  EXPECT_EQ(ld(0, 0), cdouble(2.0));
  EXPECT_EQ(ld(1, 1), cdouble(3.0));
  EXPECT_EQ(ld(1, 0), cdouble(0.0));
}

TEST(Cholesky, ReconstructsToeplitz) {
  const auto t = toeplitz(0.5, 3);
  EXPECT_LT(frobenius_distance(Cholesky(t).reconstruct(), t), 1e-12);
}

TEST(Cholesky, ReconstructsRandomHpd) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_hpd(16, rng);
    EXPECT_LT(frobenius_distance(Cholesky(a).reconstruct(), a) / a.frobenius_norm(), 1e-10);
  }
}

TEST(Cholesky, RejectsIndefinite) {
  EXPECT_THROW(Cholesky(HermitianMat::from_rows(2, {1.0, 2.0, 2.0, 1.0})), NotPositiveDefinite);
  EXPECT_THROW(Cholesky(HermitianMat::zeros(3)), NotPositiveDefinite);
}

TEST(SolveHpd, IdentityAndScaledIdentity) {
  const ComplexVec b{cdouble(1, 2), cdouble(-3, 0.5)};
  EXPECT_EQ(solve_hpd(HermitianMat::identity(2), b), b);
  const auto x = solve_hpd(HermitianMat::identity(2).scaled(2.0), ComplexVec{1.0, 1.0});
  EXPECT_NEAR(std::abs(x[0] - 0.5), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(x[1] - 0.5), 0.0, 1e-15);
}

TEST(SolveHpd, ToeplitzResidual) {
  const auto t = toeplitz(0.5, 3);
  const ComplexVec b{1.0, 0.0, 0.0};
  const auto x = solve_hpd(t, b);
  const Eigen::VectorXcd r = to_eigen(t) * to_eigen(x) - to_eigen(b);
  EXPECT_LT(r.norm(), 1e-9);
}

TEST(SolveHpd, MatchesEigenOnRandomSystems) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_hpd(16, rng);
    const auto b = random_vec(16, rng);
    const Eigen::VectorXcd want = to_eigen(a).ldlt().solve(to_eigen(b));
    EXPECT_LT((to_eigen(solve_hpd(a, b)) - want).norm() / want.norm(), 1e-9);
  }
}

TEST(QuadForm, SimpleValues) {
  const ComplexVec ones{1.0, 1.0, 1.0, 1.0};
  EXPECT_NEAR(quad_form(HermitianMat::identity(4), ones, ones).real(), 4.0, 1e-15);
  EXPECT_NEAR(quad_form(HermitianMat::identity(4).scaled(2.0), ones, ones).real(), 2.0, 1e-15);
}

TEST(QuadForm, MatchesExplicitInverse) {
  const auto t = toeplitz(0.5, 16);
  const auto p = steering_vector(0, 16);
  const Eigen::VectorXcd pe = to_eigen(p);
  const cdouble want = pe.dot(to_eigen(t).inverse() * pe);  // dot conjugates the left operand
  const cdouble got = quad_form(t, p, p);
  EXPECT_LT(std::abs(got - want), 1e-9 * std::abs(want));
}

TEST(QuadForm, RealPositiveOnDiagonal) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_hpd(8, rng);
    const auto x = random_vec(8, rng);
    const cdouble q = quad_form(a, x, x);
    EXPECT_GT(q.real(), 0.0);
    EXPECT_LT(std::abs(q.imag()), 1e-10 * q.real());
    const auto y = random_vec(8, rng);
    const cdouble want = to_eigen(x).dot(to_eigen(a).inverse() * to_eigen(y));
    EXPECT_LT(std::abs(quad_form(a, x, y) - want), 1e-9 * std::abs(want));
  }
}

TEST(ComplexVec, RejectsNonFinite) {
  EXPECT_THROW(ComplexVec({cdouble(1.0, NAN)}), std::invalid_argument);
  EXPECT_THROW(ComplexVec(std::vector<cdouble>{}), std::invalid_argument);
}
