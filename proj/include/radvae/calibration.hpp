#pragma once

// Empirical PFA-targeted thresholds from noise-only statistics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "radvae/bench.hpp"
#include "radvae/parallel.hpp"

namespace radvae {

struct InsufficientData : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline std::size_t min_eval_count(double target_pfa) {
  return static_cast<std::size_t>(std::ceil(10.0 / target_pfa - 1e-9));
}

inline void check_pfa(double target_pfa) {
  if (!(target_pfa > 0.0 && target_pfa < 1.0))
    throw std::invalid_argument("target PFA must lie in (0, 1)");
}

namespace detail {
// floor(n (1 - p)) with a guard against 0.99 * 100 = 98.999...
inline std::size_t quantile_rank(std::size_t n, double p) {
  const double x = static_cast<double>(n) * (1.0 - p);
  return static_cast<std::size_t>(std::floor(x + 1e-9 * std::max(1.0, x)));
}
}  // namespace detail

/// Threshold with exceedance fraction ~ target_pfa: with k = floor(n(1-p)),
/// the midpoint of the k-th and (k+1)-th order statistics (1-based).
inline double calibrate_threshold(std::vector<double> scores, double target_pfa) {
  check_pfa(target_pfa);
  const std::size_t n = scores.size();
  // Both order statistics around the quantile must exist. The stricter
  // 10 / target_pfa rule applies to calibration runs (see calibrate()).
  if (n < 2 || static_cast<double>(n) * target_pfa < 1.0 - 1e-9)
    throw InsufficientData("calibration needs at least " +
                           std::to_string(static_cast<std::size_t>(std::ceil(1.0 / target_pfa - 1e-9))) +
                           " scores for PFA " + std::to_string(target_pfa) + ", got " +
                           std::to_string(n));
  for (double s : scores)
    if (std::isnan(s)) throw std::invalid_argument("calibrate_threshold: NaN score");
  std::sort(scores.begin(), scores.end());
  const std::size_t k = std::clamp<std::size_t>(detail::quantile_rank(n, target_pfa), 1, n - 1);
  return 0.5 * (scores[k - 1] + scores[k]);
}

inline double exceedance_fraction(std::span<const double> scores, double threshold) {
  if (scores.empty()) return 0.0;
  std::size_t c = 0;
  for (double s : scores) c += s > threshold ? 1 : 0;
  return static_cast<double>(c) / static_cast<double>(scores.size());
}

/// 3-sigma binomial half-width sqrt(p(1-p)/n) * 3.
inline double binom_3sigma(double p, std::size_t n) {
  return 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

struct CalibrationResult {
  DetectorId detector = DetectorId::mf;
  NoiseKind scenario = NoiseKind::cgn_awgn;
  std::size_t doppler_bin = 0;
  double threshold = 0.0;
  double target_pfa = 0.01;
  std::size_t eval_count = 0;
  double empirical_pfa = 0.0;  // in-sample exceedance fraction
  // ~95% distribution-free interval for the (1 - p) quantile, from order
  // statistics k -/+ 1.96 sqrt(n p (1 - p)).
  double threshold_low = 0.0, threshold_high = 0.0;
  std::uint64_t seed = 0;
};

inline CalibrationResult summarize_calibration(DetectorId det, NoiseKind kind, std::size_t d,
                                               std::vector<double> scores, double target_pfa,
                                               std::uint64_t seed) {
  CalibrationResult r;
  r.detector = det;
  r.scenario = kind;
  r.doppler_bin = d;
  r.target_pfa = target_pfa;
  r.eval_count = scores.size();
  r.seed = seed;
  r.threshold = calibrate_threshold(scores, target_pfa);
  r.empirical_pfa = exceedance_fraction(scores, r.threshold);
  std::sort(scores.begin(), scores.end());
  const std::size_t n = scores.size();
  const std::size_t k = detail::quantile_rank(n, target_pfa);
  const auto delta = static_cast<std::size_t>(
      std::ceil(1.96 * std::sqrt(static_cast<double>(n) * target_pfa * (1.0 - target_pfa))));
  r.threshold_low = scores[k > delta ? k - delta - 1 : 0];
  r.threshold_high = scores[std::min(n - 1, k + delta)];
  return r;
}

/// Statistics of `mask` on n independent H0 trials (index-ordered).
inline std::vector<TrialStats> h0_trials(const DetectionBench& bench, const DetectorMask& mask,
                                         std::size_t n, std::size_t d, std::uint64_t seed,
                                         std::string_view purpose) {
  bench.require(mask);
  const std::uint64_t tag = stream_tag(purpose, bench.spec().noise_kind, d);
  return parallel_map<TrialStats>(n, [&](std::size_t i) {
    Rng rng = Rng::substream(seed, tag, i);
    return bench.trial(mask, Hypothesis::h0, 0.0, d, rng);
  });
}

inline std::vector<double> column(const std::vector<TrialStats>& rows, DetectorId det) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[index_of(det)]);
  return out;
}

/// Calibrates every detector of `mask` from one shared noise-only
/// evaluation set of eval_count trials at Doppler bin d.
inline std::vector<CalibrationResult> calibrate(const DetectionBench& bench,
                                                const DetectorMask& mask, double target_pfa,
                                                std::size_t eval_count, std::uint64_t seed,
                                                std::size_t d = 0) {
  check_pfa(target_pfa);
  if (eval_count < min_eval_count(target_pfa))
    throw InsufficientData("eval count " + std::to_string(eval_count) +
                           " is below 10 / target_pfa");
  const auto rows = h0_trials(bench, mask, eval_count, d, seed, "calibration");
  std::vector<CalibrationResult> out;
  for (auto det : mask.list())
    out.push_back(summarize_calibration(det, bench.spec().noise_kind, d, column(rows, det),
                                        target_pfa, seed));
  return out;
}

/// Fraction of fresh H0 trials whose statistic exceeds the threshold, per
/// detector of `mask` (thresholds indexed by DetectorId). Trials are drawn
/// from a stream disjoint from the calibration stream.
inline std::array<double, kDetectorCount> empirical_pfa(
    const DetectionBench& bench, const DetectorMask& mask,
    const std::array<double, kDetectorCount>& thresholds, std::size_t n_trials,
    std::uint64_t seed, std::size_t d = 0) {
  const auto rows = h0_trials(bench, mask, n_trials, d, seed, "pfa-check");
  std::array<double, kDetectorCount> out;
  out.fill(std::numeric_limits<double>::quiet_NaN());
  for (auto det : mask.list())
    out[index_of(det)] = exceedance_fraction(column(rows, det), thresholds[index_of(det)]);
  return out;
}

inline double empirical_pfa(const DetectionBench& bench, DetectorId det, double threshold,
                            std::size_t n_trials, std::uint64_t seed, std::size_t d = 0) {
  std::array<double, kDetectorCount> th{};
  th[index_of(det)] = threshold;
  return empirical_pfa(bench, DetectorMask{det}, th, n_trials, seed, d)[index_of(det)];
}

// ---------------------------------------------------------------------------
// Calibration records: one INI section per result,
//   [calibration.<scenario>.<detector>.d<bin>]
//   detector, scenario, doppler_bin, pfa_target, lambda, lambda_ci_low,
//   lambda_ci_high, eval_count, empirical_pfa, seed

namespace detail {
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

inline void write_calibration(const std::vector<CalibrationResult>& results,
                              const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  for (const auto& r : results) {
    os << "[calibration." << to_string(r.scenario) << '.' << to_string(r.detector) << ".d"
       << r.doppler_bin << "]\n"
       << "detector = " << to_string(r.detector) << '\n'
       << "scenario = " << to_string(r.scenario) << '\n'
       << "doppler_bin = " << r.doppler_bin << '\n'
       << "pfa_target = " << detail::fmt17(r.target_pfa) << '\n'
       << "lambda = " << detail::fmt17(r.threshold) << '\n'
       << "lambda_ci_low = " << detail::fmt17(r.threshold_low) << '\n'
       << "lambda_ci_high = " << detail::fmt17(r.threshold_high) << '\n'
       << "eval_count = " << r.eval_count << '\n'
       << "empirical_pfa = " << detail::fmt17(r.empirical_pfa) << '\n'
       << "seed = " << r.seed << "\n\n";
  }
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

inline std::vector<CalibrationResult> read_calibration(const std::string& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::runtime_error("cannot read calibration file '" + path + "': " + e.message());
  }
  std::vector<CalibrationResult> out;
  for (const auto& [name, sec] : tree) {
    if (name.rfind("calibration.", 0) != 0) continue;
    try {
      CalibrationResult r;
      r.detector = parse_detector(sec.get<std::string>("detector"));
      r.scenario = parse_noise_kind(sec.get<std::string>("scenario"));
      r.doppler_bin = sec.get<std::size_t>("doppler_bin");
      r.target_pfa = sec.get<double>("pfa_target");
      r.threshold = sec.get<double>("lambda");
      r.threshold_low = sec.get<double>("lambda_ci_low", r.threshold);
      r.threshold_high = sec.get<double>("lambda_ci_high", r.threshold);
      r.eval_count = sec.get<std::size_t>("eval_count");
      r.empirical_pfa = sec.get<double>("empirical_pfa");
      r.seed = sec.get<std::uint64_t>("seed");
      out.push_back(r);
    } catch (const pt::ptree_error& e) {
      throw std::runtime_error("bad calibration record [" + name + "] in '" + path +
                               "': " + e.what());
    }
  }
  return out;
}

}  // namespace radvae
