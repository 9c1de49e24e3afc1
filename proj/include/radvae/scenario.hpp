#pragma once

// Target and noise simulation for the three clutter environments:
//   cgn_awgn   z = g + n
//   ccgn       z = sqrt(tau) g
//   ccgn_awgn  z = sqrt(tau) g + n
// with g ~ CN(0, T(rho)), n ~ CN(0, sigma^2 I), tau ~ Gamma(mu, 1/mu), and
// under H1 an extra alpha p term.

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "radvae/linalg.hpp"
#include "radvae/rng.hpp"

namespace radvae {

enum class NoiseKind { cgn_awgn, ccgn, ccgn_awgn };
enum class Hypothesis : std::uint8_t { h0 = 0, h1 = 1 };

inline std::string_view to_string(NoiseKind k) noexcept {
  switch (k) {
    case NoiseKind::cgn_awgn: return "cgn_awgn";
    case NoiseKind::ccgn: return "ccgn";
    case NoiseKind::ccgn_awgn: return "ccgn_awgn";
  }
  return "?";
}

inline NoiseKind parse_noise_kind(std::string_view s) {
  if (s == "cgn_awgn") return NoiseKind::cgn_awgn;
  if (s == "ccgn") return NoiseKind::ccgn;
  if (s == "ccgn_awgn") return NoiseKind::ccgn_awgn;
  throw std::invalid_argument("unknown scenario '" + std::string(s) +
                              "' (expected cgn_awgn, ccgn or ccgn_awgn)");
}

constexpr bool has_texture(NoiseKind k) noexcept {
  return k != NoiseKind::cgn_awgn;
}
constexpr bool has_thermal(NoiseKind k) noexcept {
  return k != NoiseKind::ccgn;
}

struct ScenarioSpec {
  NoiseKind noise_kind = NoiseKind::cgn_awgn;
  std::size_t m = 16;
  double rho = 0.5;
  double mu = 1.0;     // Gamma texture shape
  double r = 1.0;      // clutter-to-thermal power ratio
  std::size_t K = 32;  // secondary data count
  std::size_t d = 0;   // Doppler bin
  std::vector<double> snr_db;
  std::uint64_t seed = 0;

  void validate() const {
    if (m < 2) throw std::invalid_argument("scenario: m must be >= 2");
    if (!(rho >= 0.0 && rho < 1.0))
      throw std::invalid_argument("scenario: rho must lie in [0, 1)");
    if (!(mu > 0.0)) throw std::invalid_argument("scenario: mu must be > 0");
    if (!(r > 0.0)) throw std::invalid_argument("scenario: r must be > 0");
    if (d >= m) throw std::invalid_argument("scenario: Doppler bin out of range");
    if (K < m) throw std::invalid_argument("scenario: K must be >= m");
  }
};

struct TargetSpec {
  cdouble alpha;
  ComplexVec p;
  double snr_linear;
};

struct Snapshot {
  ComplexVec z;
  Hypothesis hypothesis = Hypothesis::h0;
  std::optional<double> texture;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

/// p_k = exp(2j pi d k / m), k = 0..m-1.
inline ComplexVec steering_vector(std::size_t d, std::size_t m) {
  if (m == 0 || d >= m)
    throw std::invalid_argument("steering_vector: need 0 <= d < m");
  ComplexVec p(m);
  for (std::size_t k = 0; k < m; ++k) {
    // Reduce the phase index mod m so that exact multiples stay exact.
    const auto idx = static_cast<double>((d * k) % m);
    const double th = 2.0 * std::numbers::pi * idx / static_cast<double>(m);
    p[k] = std::polar(1.0, th);
  }
  return p;
}

/// alpha = sqrt(10^(snr_db/10)) exp(2j pi phi) / sqrt(m).
inline cdouble target_amplitude(double snr_db, double phi, std::size_t m) {
  if (!(phi >= 0.0 && phi <= 1.0))
    throw std::invalid_argument("target_amplitude: phi must lie in [0, 1]");
  const double mag =
      std::sqrt(std::pow(10.0, snr_db / 10.0)) / std::sqrt(static_cast<double>(m));
  return std::polar(mag, 2.0 * std::numbers::pi * phi);
}

inline TargetSpec make_target(double snr_db, double phi, std::size_t d,
                              std::size_t m) {
  return {target_amplitude(snr_db, phi, m), steering_vector(d, m),
          std::pow(10.0, snr_db / 10.0)};
}

inline ComplexVec sample_complex_gaussian(const Cholesky& chol, Rng& rng) {
  const std::size_t m = chol.dim();
  std::vector<cdouble> u(m);
  for (auto& v : u) v = rng.complex_normal();
  ComplexVec z(m);
  for (std::size_t i = 0; i < m; ++i) {
    cdouble s{};
    for (std::size_t k = 0; k <= i; ++k) s += chol(i, k) * u[k];
    z[i] = s;
  }
  return z;
}

inline ComplexVec sample_complex_gaussian(const HermitianMat& cov, Rng& rng) {
  return sample_complex_gaussian(Cholesky(cov), rng);
}

/// Gamma(shape = mu, scale = 1/mu): unit mean, variance 1/mu.
inline double sample_texture(double mu, Rng& rng) {
  if (!(mu > 0.0)) throw std::invalid_argument("sample_texture: mu must be > 0");
  return rng.gamma(mu, 1.0 / mu);
}

/// A validated scenario with its clutter factorization precomputed.
///
/// Draw order inside one snapshot is fixed: texture (compound kinds),
/// m clutter normals, m thermal normals (AWGN kinds), then phi (H1).
class Scenario {
 public:
  explicit Scenario(ScenarioSpec spec)
      : spec_(std::move(spec)),
        clutter_cov_((spec_.validate(), toeplitz(spec_.rho, spec_.m))),
        clutter_chol_(clutter_cov_),
        sigma2_(clutter_cov_.trace() / (static_cast<double>(spec_.m) * spec_.r)) {}

  const ScenarioSpec& spec() const noexcept { return spec_; }
  std::size_t m() const noexcept { return spec_.m; }
  const HermitianMat& clutter_covariance() const noexcept { return clutter_cov_; }
  double thermal_variance() const noexcept { return sigma2_; }

  /// Covariance of the noise-only snapshot (E[tau] = 1), used by the
  /// clairvoyant MF/NMF benchmarks.
  HermitianMat total_covariance() const {
    return has_thermal(spec_.noise_kind) ? clutter_cov_.plus_identity(sigma2_)
                                         : clutter_cov_;
  }

  Snapshot noise(Rng& rng) const {
    Snapshot s;
    s.hypothesis = Hypothesis::h0;
    double scale = 1.0;
    if (has_texture(spec_.noise_kind)) {
      const double tau = sample_texture(spec_.mu, rng);
      s.texture = tau;
      scale = std::sqrt(tau);
    }
    s.z = sample_complex_gaussian(clutter_chol_, rng);
    if (scale != 1.0)
      for (auto& v : s.z) v *= scale;
    if (has_thermal(spec_.noise_kind)) {
      const double sd = std::sqrt(sigma2_);
      for (auto& v : s.z) v += sd * rng.complex_normal();
    }
    return s;
  }

  /// phi is drawn uniformly on [0, 1) unless fixed by the caller.
  Snapshot snapshot(Hypothesis h, double snr_db, Rng& rng,
                    std::optional<double> phi = std::nullopt) const {
    return snapshot(h, snr_db, steering_vector(spec_.d, spec_.m), rng, phi);
  }

  Snapshot snapshot(Hypothesis h, double snr_db, const ComplexVec& p, Rng& rng,
                    std::optional<double> phi = std::nullopt) const {
    Snapshot s = noise(rng);
    if (h == Hypothesis::h1) {
      const double ph = phi ? *phi : rng.uniform();
      const cdouble alpha = target_amplitude(snr_db, ph, spec_.m);
      for (std::size_t k = 0; k < spec_.m; ++k) s.z[k] += alpha * p[k];
      s.hypothesis = Hypothesis::h1;
    }
    return s;
  }

  std::vector<Snapshot> secondary(Rng& rng) const {
    std::vector<Snapshot> out;
    out.reserve(spec_.K);
    for (std::size_t k = 0; k < spec_.K; ++k) out.push_back(noise(rng));
    return out;
  }

 private:
  ScenarioSpec spec_;
  HermitianMat clutter_cov_;
  Cholesky clutter_chol_;
  double sigma2_;
};

inline Snapshot generate_snapshot(const ScenarioSpec& spec, Hypothesis h,
                                  double snr_db, Rng& rng) {
  return Scenario(spec).snapshot(h, snr_db, rng);
}

inline constexpr std::uint64_t kDatasetStream = fnv1a("dataset");

/// count i.i.d. snapshots; snapshot i is drawn from substream i of `seed`.
inline std::vector<Snapshot> generate_dataset(const ScenarioSpec& spec,
                                              Hypothesis h, std::size_t count,
                                              std::uint64_t seed,
                                              double snr_db = 0.0) {
  if (count == 0) throw std::invalid_argument("generate_dataset: count must be >= 1");
  const Scenario sc(spec);
  const ComplexVec p = steering_vector(spec.d, spec.m);
  std::vector<Snapshot> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = Rng::substream(seed, kDatasetStream, i);
    out.push_back(sc.snapshot(h, snr_db, p, rng));
  }
  return out;
}

inline std::vector<Snapshot> generate_secondary(const ScenarioSpec& spec, Rng& rng) {
  return Scenario(spec).secondary(rng);
}

inline std::vector<ComplexVec> vectors_of(const std::vector<Snapshot>& snaps) {
  std::vector<ComplexVec> out;
  out.reserve(snaps.size());
  for (const auto& s : snaps) out.push_back(s.z);
  return out;
}

// ---------------------------------------------------------------------------
// Dataset files: "RDS1", u32 version=1, u32 m, u64 count, u32 flags
// (bit0 = has texture), then per snapshot u8 hypothesis, [f64 texture],
// m x (f64 re, f64 im). All little-endian.

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class T>
void put_le(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& is, const std::string& what) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T)))
    throw FormatError("truncated file while reading " + what);
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace detail

inline void write_dataset(const std::vector<Snapshot>& data, const std::string& path) {
  if (data.empty()) throw std::invalid_argument("write_dataset: empty dataset");
  const std::size_t m = data.front().z.size();
  const bool tex = data.front().texture.has_value();
  for (const auto& s : data)
    if (s.z.size() != m || s.texture.has_value() != tex)
      throw std::invalid_argument("write_dataset: inconsistent snapshots");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os.write("RDS1", 4);
  detail::put_le<std::uint32_t>(os, 1);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(m));
  detail::put_le<std::uint64_t>(os, data.size());
  detail::put_le<std::uint32_t>(os, tex ? 1u : 0u);
  for (const auto& s : data) {
    detail::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(s.hypothesis));
    if (tex) detail::put_le<double>(os, *s.texture);
    for (const auto& v : s.z) {
      detail::put_le<double>(os, v.real());
      detail::put_le<double>(os, v.imag());
    }
  }
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

inline std::vector<Snapshot> read_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "RDS1", 4) != 0)
    throw FormatError("'" + path + "' is not a dataset file (bad magic)");
  if (detail::get_le<std::uint32_t>(is, "version") != 1)
    throw FormatError("unsupported dataset version in '" + path + "'");
  const auto m = detail::get_le<std::uint32_t>(is, "m");
  const auto count = detail::get_le<std::uint64_t>(is, "count");
  const auto flags = detail::get_le<std::uint32_t>(is, "flags");
  if (m == 0) throw FormatError("dataset has m = 0");
  const bool tex = (flags & 1u) != 0;
  std::vector<Snapshot> out;
  out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
  for (std::uint64_t i = 0; i < count; ++i) {
    Snapshot s;
    const auto h = detail::get_le<std::uint8_t>(is, "hypothesis");
    if (h > 1) throw FormatError("bad hypothesis byte in '" + path + "'");
    s.hypothesis = static_cast<Hypothesis>(h);
    if (tex) s.texture = detail::get_le<double>(is, "texture");
    std::vector<cdouble> z(m);
    for (auto& v : z) {
      const double re = detail::get_le<double>(is, "sample");
      const double im = detail::get_le<double>(is, "sample");
      v = {re, im};
    }
    s.z = ComplexVec(std::move(z));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace radvae
