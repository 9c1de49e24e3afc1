#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

#include "radvae/estimators.hpp"
#include "radvae/linalg.hpp"

namespace radvae {

struct DegenerateSnapshot : std::invalid_argument {
  DegenerateSnapshot() : std::invalid_argument("degenerate snapshot: z = 0") {}
};

struct DetectorOutput {
  double statistic = 0.0;
  double threshold = 0.0;
  bool decision = false;
};

inline DetectorOutput compare(double statistic, double threshold) noexcept {
  return {statistic, threshold, statistic > threshold};
}

/// One factorization of a covariance (true or estimated) bound to a steering
/// vector. MF and NMF then cost one triangular solve per snapshot.
class WhitenedFilter {
 public:
  WhitenedFilter(const HermitianMat& sigma, const ComplexVec& p)
      : chol_(sigma), wp_(chol_.whiten(p)), pp_(wp_.squared_norm()) {}

  WhitenedFilter(Cholesky chol, const ComplexVec& p)
      : chol_(std::move(chol)), wp_(chol_.whiten(p)), pp_(wp_.squared_norm()) {}

  // p^H S^{-1} p
  double steering_energy() const noexcept { return pp_; }
  const Cholesky& factor() const noexcept { return chol_; }

  // |p^H S^{-1} z|^2 / (p^H S^{-1} p)
  double mf(const ComplexVec& z) const {
    const ComplexVec wz = chol_.whiten(z);
    return std::norm(inner(wz)) / pp_;
  }

  // |p^H S^{-1} z|^2 / ((p^H S^{-1} p)(z^H S^{-1} z))
  double nmf(const ComplexVec& z) const {
    const ComplexVec wz = chol_.whiten(z);
    const double zz = wz.squared_norm();
    if (zz == 0.0) throw DegenerateSnapshot();
    // Cauchy-Schwarz bounds the ratio by 1; rounding can overshoot by an ulp.
    return std::min(1.0, std::norm(inner(wz)) / (pp_ * zz));
  }

 private:
  cdouble inner(const ComplexVec& wz) const noexcept {
    cdouble s{};
    for (std::size_t i = 0; i < wz.size(); ++i) s += std::conj(wp_[i]) * wz[i];
    return s;
  }

  Cholesky chol_;
  ComplexVec wp_;
  double pp_;
};

namespace detail {
inline void check_dims(const ComplexVec& z, const ComplexVec& p) {
  if (z.size() != p.size()) throw std::invalid_argument("detector: dimension mismatch");
}
}  // namespace detail

inline double mf_statistic(const ComplexVec& z, const ComplexVec& p,
                           const HermitianMat& sigma) {
  detail::check_dims(z, p);
  return WhitenedFilter(sigma, p).mf(z);
}

inline double nmf_statistic(const ComplexVec& z, const ComplexVec& p,
                            const HermitianMat& sigma) {
  detail::check_dims(z, p);
  if (z.squared_norm() == 0.0) throw DegenerateSnapshot();
  return WhitenedFilter(sigma, p).nmf(z);
}

inline double amf_scm(const ComplexVec& z, const ComplexVec& p,
                      std::span<const ComplexVec> secondary) {
  return mf_statistic(z, p, scm(secondary));
}

inline double anmf_scm(const ComplexVec& z, const ComplexVec& p,
                       std::span<const ComplexVec> secondary) {
  return nmf_statistic(z, p, scm(secondary));
}

inline double anmf_fp(const ComplexVec& z, const ComplexVec& p,
                      std::span<const ComplexVec> secondary,
                      const EstimatorConfig& cfg = {}) {
  return nmf_statistic(z, p, tyler_fp(secondary, cfg));
}

}  // namespace radvae
