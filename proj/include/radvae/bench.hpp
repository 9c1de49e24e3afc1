#pragma once

// Per-trial evaluation of every detector on shared simulated data.

#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "radvae/detectors.hpp"
#include "radvae/estimators.hpp"
#include "radvae/scenario.hpp"
#include "radvae/vae/model.hpp"

namespace radvae {

enum class DetectorId { mf, nmf, amf_scm, anmf_scm, anmf_fp, vae };

inline constexpr std::array kAllDetectors{DetectorId::mf,       DetectorId::nmf,
                                          DetectorId::amf_scm,  DetectorId::anmf_scm,
                                          DetectorId::anmf_fp,  DetectorId::vae};
inline constexpr std::size_t kDetectorCount = kAllDetectors.size();

inline std::string_view to_string(DetectorId d) noexcept {
  switch (d) {
    case DetectorId::mf: return "mf";
    case DetectorId::nmf: return "nmf";
    case DetectorId::amf_scm: return "amf_scm";
    case DetectorId::anmf_scm: return "anmf_scm";
    case DetectorId::anmf_fp: return "anmf_fp";
    case DetectorId::vae: return "vae";
  }
  return "?";
}

inline DetectorId parse_detector(std::string_view s) {
  for (auto d : kAllDetectors)
    if (to_string(d) == s) return d;
  throw std::invalid_argument("unknown detector '" + std::string(s) +
                              "' (expected mf, nmf, amf_scm, anmf_scm, anmf_fp or vae)");
}

constexpr bool is_adaptive(DetectorId d) noexcept {
  return d == DetectorId::amf_scm || d == DetectorId::anmf_scm || d == DetectorId::anmf_fp;
}

constexpr std::size_t index_of(DetectorId d) noexcept { return static_cast<std::size_t>(d); }

/// Reconstruction score ||z - decode(mu(z))||^2 in eval mode, using the
/// mean latent so the score is a deterministic function of z.
inline double vae_score(const VaeParams& params, const ComplexVec& z) {
  if (z.size() != params.arch.m)
    throw std::invalid_argument("vae_score: snapshot length does not match the model");
  const auto c = forward(params, make_batch(std::span(&z, 1)), {}, Mode::eval);
  double s = 0.0;
  for (std::size_t i = 0; i < c.out.size(); ++i) {
    const double d = c.input[i] - c.out[i];
    s += d * d;
  }
  return s;
}

/// What a detector needs besides the snapshot.
struct DetectorContext {
  ComplexVec p;
  const WhitenedFilter* known = nullptr;     // clairvoyant covariance bound to p
  std::span<const ComplexVec> secondary;     // adaptive detectors
  const VaeParams* vae = nullptr;
  EstimatorConfig estimator;
};

inline double statistic(DetectorId d, const ComplexVec& z, const DetectorContext& ctx) {
  switch (d) {
    case DetectorId::mf:
    case DetectorId::nmf:
      if (!ctx.known) throw std::invalid_argument("detector needs the true covariance");
      return d == DetectorId::mf ? ctx.known->mf(z) : ctx.known->nmf(z);
    case DetectorId::amf_scm: return amf_scm(z, ctx.p, ctx.secondary);
    case DetectorId::anmf_scm: return anmf_scm(z, ctx.p, ctx.secondary);
    case DetectorId::anmf_fp: return anmf_fp(z, ctx.p, ctx.secondary, ctx.estimator);
    case DetectorId::vae:
      if (!ctx.vae) throw std::invalid_argument("vae detector needs trained weights");
      return vae_score(*ctx.vae, z);
  }
  throw std::invalid_argument("unknown detector");
}

/// Strict comparison: statistic == threshold is not a detection.
inline DetectorOutput detect(DetectorId d, const ComplexVec& z, double threshold,
                             const DetectorContext& ctx) {
  return compare(statistic(d, z, ctx), threshold);
}

/// Set of detectors evaluated jointly on the same trials.
class DetectorMask {
 public:
  DetectorMask() = default;
  DetectorMask(std::initializer_list<DetectorId> ds) {
    for (auto d : ds) set(d);
  }
  explicit DetectorMask(std::span<const DetectorId> ds) {
    for (auto d : ds) set(d);
  }
  void set(DetectorId d) noexcept { bits_ |= 1u << index_of(d); }
  bool has(DetectorId d) const noexcept { return (bits_ >> index_of(d)) & 1u; }
  bool any_adaptive() const noexcept {
    return has(DetectorId::amf_scm) || has(DetectorId::anmf_scm) || has(DetectorId::anmf_fp);
  }
  std::vector<DetectorId> list() const {
    std::vector<DetectorId> out;
    for (auto d : kAllDetectors)
      if (has(d)) out.push_back(d);
    return out;
  }

 private:
  unsigned bits_ = 0;
};

/// Statistics of one trial, NaN where a detector was not requested.
using TrialStats = std::array<double, kDetectorCount>;

/// A scenario plus everything needed to run all six detectors on it: the
/// clairvoyant filters per Doppler bin and (optionally) VAE weights.
///
/// Draw order per trial: primary snapshot, then (only if an adaptive
/// detector is requested) K secondary snapshots.
class DetectionBench {
 public:
  explicit DetectionBench(ScenarioSpec spec, EstimatorConfig est = {},
                          const VaeParams* vae = nullptr)
      : scenario_(std::move(spec)), est_(est), vae_(vae) {
    est_.validate();
    const HermitianMat total = scenario_.total_covariance();
    filters_.reserve(scenario_.m());
    for (std::size_t d = 0; d < scenario_.m(); ++d) {
      steering_.push_back(steering_vector(d, scenario_.m()));
      filters_.emplace_back(total, steering_.back());
    }
    if (vae_ && vae_->arch.m != scenario_.m())
      throw std::invalid_argument("bench: VAE input length does not match scenario m");
  }

  const Scenario& scenario() const noexcept { return scenario_; }
  const ScenarioSpec& spec() const noexcept { return scenario_.spec(); }
  const VaeParams* vae() const noexcept { return vae_; }
  const EstimatorConfig& estimator() const noexcept { return est_; }
  const WhitenedFilter& known_filter(std::size_t d) const { return filters_.at(d); }

  void require(const DetectorMask& mask) const {
    if (mask.has(DetectorId::vae) && !vae_)
      throw std::invalid_argument("the vae detector requires trained weights");
  }

  TrialStats trial(const DetectorMask& mask, Hypothesis h, double snr_db, std::size_t d,
                   Rng& rng) const {
    TrialStats out;
    out.fill(std::numeric_limits<double>::quiet_NaN());
    const WhitenedFilter& kf = filters_.at(d);
    const ComplexVec& p = steering(d);
    const Snapshot s = scenario_.snapshot(h, snr_db, p, rng);
    if (mask.has(DetectorId::mf)) out[index_of(DetectorId::mf)] = kf.mf(s.z);
    if (mask.has(DetectorId::nmf)) out[index_of(DetectorId::nmf)] = kf.nmf(s.z);
    if (mask.has(DetectorId::vae)) out[index_of(DetectorId::vae)] = vae_score(*vae_, s.z);
    if (mask.any_adaptive()) {
      std::vector<ComplexVec> sec;
      sec.reserve(spec().K);
      for (std::size_t k = 0; k < spec().K; ++k) sec.push_back(scenario_.noise(rng).z);
      if (mask.has(DetectorId::amf_scm) || mask.has(DetectorId::anmf_scm)) {
        const WhitenedFilter f(scm(sec), p);
        if (mask.has(DetectorId::amf_scm)) out[index_of(DetectorId::amf_scm)] = f.mf(s.z);
        if (mask.has(DetectorId::anmf_scm)) out[index_of(DetectorId::anmf_scm)] = f.nmf(s.z);
      }
      if (mask.has(DetectorId::anmf_fp)) {
        const WhitenedFilter f(tyler_fp(sec, est_), p);
        out[index_of(DetectorId::anmf_fp)] = f.nmf(s.z);
      }
    }
    return out;
  }

 private:
  const ComplexVec& steering(std::size_t d) const { return steering_.at(d); }

  Scenario scenario_;
  EstimatorConfig est_;
  const VaeParams* vae_;
  std::vector<ComplexVec> steering_;
  std::vector<WhitenedFilter> filters_;
};

/// Stream tag for a Monte Carlo work unit.
inline std::uint64_t stream_tag(std::string_view purpose, NoiseKind kind, std::size_t d,
                                double snr_db = 0.0) {
  std::uint64_t t = fnv1a(purpose);
  t = mix64(t ^ static_cast<std::uint64_t>(kind));
  t = mix64(t ^ (static_cast<std::uint64_t>(d) << 8));
  t = mix64(t ^ std::bit_cast<std::uint64_t>(snr_db));
  return t;
}

}  // namespace radvae
