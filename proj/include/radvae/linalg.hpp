#pragma once

// Small dense complex linear algebra. Sizes here are m ~ 16, so everything
// is plain O(m^3) loops over row-major storage in double precision.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace radvae {

using cdouble = std::complex<double>;

struct NotPositiveDefinite : std::runtime_error {
  explicit NotPositiveDefinite(const std::string& what)
      : std::runtime_error("not positive definite: " + what) {}
};

class ComplexVec {
 public:
  ComplexVec() = default;
  explicit ComplexVec(std::size_t m) : data_(m) {
    if (m == 0) throw std::invalid_argument("ComplexVec: length must be >= 1");
  }
  ComplexVec(std::initializer_list<cdouble> values) : data_(values) {
    validate();
  }
  explicit ComplexVec(std::vector<cdouble> values) : data_(std::move(values)) {
    validate();
  }

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  cdouble& operator[](std::size_t i) noexcept { return data_[i]; }
  const cdouble& operator[](std::size_t i) const noexcept { return data_[i]; }
  cdouble* data() noexcept { return data_.data(); }
  const cdouble* data() const noexcept { return data_.data(); }
  std::span<cdouble> span() noexcept { return data_; }
  std::span<const cdouble> span() const noexcept { return data_; }
  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  double squared_norm() const noexcept {
    double s = 0.0;
    for (const auto& v : data_) s += std::norm(v);
    return s;
  }

  bool all_finite() const noexcept {
    for (const auto& v : data_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }

  friend bool operator==(const ComplexVec&, const ComplexVec&) = default;

 private:
  void validate() const {
    if (data_.empty())
      throw std::invalid_argument("ComplexVec: length must be >= 1");
    if (!all_finite())
      throw std::invalid_argument("ComplexVec: entries must be finite");
  }

  std::vector<cdouble> data_;
};

/// Square complex matrix kept exactly Hermitian: every construction path
/// symmetrizes as (A + A^H) / 2.
class HermitianMat {
 public:
  HermitianMat() = default;

  static HermitianMat zeros(std::size_t m) {
    if (m == 0) throw std::invalid_argument("HermitianMat: size must be >= 1");
    HermitianMat h;
    h.m_ = m;
    h.a_.assign(m * m, cdouble{});
    return h;
  }

  static HermitianMat identity(std::size_t m) {
    auto h = zeros(m);
    for (std::size_t i = 0; i < m; ++i) h.a_[i * m + i] = 1.0;
    return h;
  }

  // Row-major m x m input; symmetrized on the way in.
  static HermitianMat from_rows(std::size_t m, std::vector<cdouble> rows) {
    if (m == 0 || rows.size() != m * m)
      throw std::invalid_argument("HermitianMat: expected m*m entries");
    HermitianMat h;
    h.m_ = m;
    h.a_ = std::move(rows);
    h.symmetrize();
    return h;
  }

  static HermitianMat from_rows(
      std::initializer_list<std::initializer_list<cdouble>> rows) {
    const std::size_t m = rows.size();
    std::vector<cdouble> flat;
    flat.reserve(m * m);
    for (const auto& r : rows) {
      if (r.size() != m)
        throw std::invalid_argument("HermitianMat: rows must be square");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return from_rows(m, std::move(flat));
  }

  std::size_t dim() const noexcept { return m_; }
  const cdouble& operator()(std::size_t i, std::size_t j) const noexcept {
    return a_[i * m_ + j];
  }
  std::span<const cdouble> data() const noexcept { return a_; }

  double trace() const noexcept {
    double t = 0.0;
    for (std::size_t i = 0; i < m_; ++i) t += a_[i * m_ + i].real();
    return t;
  }

  double frobenius_norm() const noexcept {
    double s = 0.0;
    for (const auto& v : a_) s += std::norm(v);
    return std::sqrt(s);
  }

  HermitianMat scaled(double c) const {
    HermitianMat h = *this;
    for (auto& v : h.a_) v *= c;
    return h;
  }

  HermitianMat plus_identity(double c) const {
    HermitianMat h = *this;
    for (std::size_t i = 0; i < m_; ++i) h.a_[i * m_ + i] += c;
    return h;
  }

  friend bool operator==(const HermitianMat&, const HermitianMat&) = default;

 private:
  void symmetrize() noexcept {
    for (std::size_t i = 0; i < m_; ++i) {
      a_[i * m_ + i] = a_[i * m_ + i].real();
      for (std::size_t j = i + 1; j < m_; ++j) {
        const cdouble avg = 0.5 * (a_[i * m_ + j] + std::conj(a_[j * m_ + i]));
        a_[i * m_ + j] = avg;
        a_[j * m_ + i] = std::conj(avg);
      }
    }
  }

  std::size_t m_ = 0;
  std::vector<cdouble> a_;
};

inline double frobenius_distance(const HermitianMat& a, const HermitianMat& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("dimension mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.data().size(); ++k)
    s += std::norm(a.data()[k] - b.data()[k]);
  return std::sqrt(s);
}

/// {T(rho)}_{ij} = rho^|i-j|.
inline HermitianMat toeplitz(double rho, std::size_t m) {
  if (!(rho >= 0.0 && rho < 1.0))
    throw std::invalid_argument("toeplitz: rho must lie in [0, 1)");
  if (m == 0) throw std::invalid_argument("toeplitz: m must be >= 1");
  std::vector<cdouble> a(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      a[i * m + j] = std::pow(rho, static_cast<double>(i > j ? i - j : j - i));
  return HermitianMat::from_rows(m, std::move(a));
}

/// Cholesky factor A = L L^H of an HPD matrix, with the triangular solves
/// the detectors need.
class Cholesky {
 public:
  explicit Cholesky(const HermitianMat& a) : m_(a.dim()), l_(m_ * m_) {
    if (m_ == 0) throw std::invalid_argument("cholesky: empty matrix");
    for (std::size_t j = 0; j < m_; ++j) {
      double d = a(j, j).real();
      for (std::size_t k = 0; k < j; ++k) d -= std::norm(l_[j * m_ + k]);
      if (!(d > 0.0) || !std::isfinite(d))
        throw NotPositiveDefinite("pivot " + std::to_string(j) + " is " +
                                  std::to_string(d));
      const double ljj = std::sqrt(d);
      l_[j * m_ + j] = ljj;
      const double inv = 1.0 / ljj;
      for (std::size_t i = j + 1; i < m_; ++i) {
        cdouble s = a(i, j);
        const cdouble* li = &l_[i * m_];
        const cdouble* lj = &l_[j * m_];
        for (std::size_t k = 0; k < j; ++k) s -= li[k] * std::conj(lj[k]);
        l_[i * m_ + j] = s * inv;
      }
    }
  }

  std::size_t dim() const noexcept { return m_; }
  const cdouble& operator()(std::size_t i, std::size_t j) const noexcept {
    return l_[i * m_ + j];
  }

  // y = L^{-1} b, in place.
  void forward_in_place(std::span<cdouble> b) const {
    check(b.size());
    for (std::size_t i = 0; i < m_; ++i) {
      cdouble s = b[i];
      const cdouble* li = &l_[i * m_];
      for (std::size_t k = 0; k < i; ++k) s -= li[k] * b[k];
      b[i] = s / li[i].real();
    }
  }

  // x = L^{-H} y, in place.
  void backward_in_place(std::span<cdouble> y) const {
    check(y.size());
    for (std::size_t ii = m_; ii-- > 0;) {
      cdouble s = y[ii];
      for (std::size_t k = ii + 1; k < m_; ++k)
        s -= std::conj(l_[k * m_ + ii]) * y[k];
      y[ii] = s / l_[ii * m_ + ii].real();
    }
  }

  ComplexVec whiten(const ComplexVec& b) const {
    ComplexVec y = b;
    forward_in_place(y.span());
    return y;
  }

  ComplexVec solve(const ComplexVec& b) const {
    ComplexVec x = b;
    forward_in_place(x.span());
    backward_in_place(x.span());
    return x;
  }

  // x^H A^{-1} y through two triangular solves.
  cdouble quad_form(const ComplexVec& x, const ComplexVec& y) const {
    const ComplexVec wx = whiten(x);
    const ComplexVec wy = whiten(y);
    cdouble s{};
    for (std::size_t i = 0; i < m_; ++i) s += std::conj(wx[i]) * wy[i];
    return s;
  }

  // L L^H, mostly for verification.
  HermitianMat reconstruct() const {
    std::vector<cdouble> a(m_ * m_);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = 0; j < m_; ++j) {
        cdouble s{};
        for (std::size_t k = 0; k <= std::min(i, j); ++k)
          s += l_[i * m_ + k] * std::conj(l_[j * m_ + k]);
        a[i * m_ + j] = s;
      }
    return HermitianMat::from_rows(m_, std::move(a));
  }

 private:
  void check(std::size_t n) const {
    if (n != m_) throw std::invalid_argument("cholesky: dimension mismatch");
  }

  std::size_t m_;
  std::vector<cdouble> l_;
};

inline Cholesky cholesky(const HermitianMat& a) { return Cholesky(a); }

inline ComplexVec solve_hpd(const HermitianMat& a, const ComplexVec& b) {
  return Cholesky(a).solve(b);
}

inline cdouble quad_form(const HermitianMat& a, const ComplexVec& x,
                         const ComplexVec& y) {
  return Cholesky(a).quad_form(x, y);
}

}  // namespace radvae
