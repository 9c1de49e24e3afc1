#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "radvae/linalg.hpp"

namespace radvae {

struct NoConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EstimatorConfig {
  double tol = 1e-8;
  int max_iter = 200;
  bool normalize_trace = true;

  void validate() const {
    if (!(tol > 0.0)) throw std::invalid_argument("estimator: tol must be > 0");
    if (max_iter < 1) throw std::invalid_argument("estimator: max_iter must be >= 1");
  }
};

namespace detail {

inline std::size_t common_dim(std::span<const ComplexVec> data) {
  if (data.empty()) throw std::invalid_argument("estimator: empty data set");
  const std::size_t m = data.front().size();
  for (const auto& z : data)
    if (z.size() != m) throw std::invalid_argument("estimator: ragged data set");
  return m;
}

// acc += w * z z^H on the lower triangle.
inline void accumulate_outer(std::vector<cdouble>& acc, const ComplexVec& z,
                             double w) {
  const std::size_t m = z.size();
  for (std::size_t i = 0; i < m; ++i) {
    const cdouble zi = w * z[i];
    cdouble* row = &acc[i * m];
    for (std::size_t j = 0; j <= i; ++j) row[j] += zi * std::conj(z[j]);
  }
}

inline HermitianMat from_lower(std::size_t m, std::vector<cdouble> acc) {
  for (std::size_t i = 0; i < m; ++i) {
    acc[i * m + i] = acc[i * m + i].real();
    for (std::size_t j = 0; j < i; ++j) acc[j * m + i] = std::conj(acc[i * m + j]);
  }
  return HermitianMat::from_rows(m, std::move(acc));
}

}  // namespace detail

/// Sample covariance (1/K) sum z_k z_k^H.
inline HermitianMat scm(std::span<const ComplexVec> data) {
  const std::size_t m = detail::common_dim(data);
  std::vector<cdouble> acc(m * m);
  const double w = 1.0 / static_cast<double>(data.size());
  for (const auto& z : data) detail::accumulate_outer(acc, z, w);
  return detail::from_lower(m, std::move(acc));
}

struct TylerResult {
  HermitianMat sigma;
  int iterations = 0;
  double residual = 0.0;  // ||S - F(S)||_F / ||S||_F at the returned S
};

/// Tyler's fixed-point scatter estimator
///   S = (m/K) sum_k z_k z_k^H / (z_k^H S^{-1} z_k),
/// iterated from S = I. The returned S satisfies the fixed-point equation
/// with relative Frobenius residual below cfg.tol.
inline TylerResult tyler_fp_detailed(std::span<const ComplexVec> data,
                                     const EstimatorConfig& cfg = {}) {
  cfg.validate();
  const std::size_t m = detail::common_dim(data);
  for (const auto& z : data)
    if (z.squared_norm() == 0.0)
      throw std::invalid_argument("tyler_fp: zero vector in data set");
  const double md = static_cast<double>(m);
  const double scale = md / static_cast<double>(data.size());

  HermitianMat sigma = HermitianMat::identity(m);
  ComplexVec w(m);
  double residual = 0.0;
  for (int it = 0; it < cfg.max_iter; ++it) {
    const Cholesky chol(sigma);
    std::vector<cdouble> acc(m * m);
    for (const auto& z : data) {
      std::copy(z.begin(), z.end(), w.begin());
      chol.forward_in_place(w.span());
      detail::accumulate_outer(acc, z, scale / w.squared_norm());
    }
    HermitianMat next = detail::from_lower(m, std::move(acc));
    residual = frobenius_distance(next, sigma) / sigma.frobenius_norm();
    if (residual < cfg.tol) return {std::move(sigma), it, residual};
    if (cfg.normalize_trace) next = next.scaled(md / next.trace());
    sigma = std::move(next);
  }
  throw NoConvergence("tyler_fp: no convergence after " +
                      std::to_string(cfg.max_iter) +
                      " iterations (residual " + std::to_string(residual) + ")");
}

inline HermitianMat tyler_fp(std::span<const ComplexVec> data,
                             const EstimatorConfig& cfg = {}) {
  return tyler_fp_detailed(data, cfg).sigma;
}

}  // namespace radvae
