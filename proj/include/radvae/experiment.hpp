#pragma once

// Monte Carlo Pd curves, Doppler maps and score histograms, plus the CSV
// form of their results.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "radvae/bench.hpp"
#include "radvae/calibration.hpp"
#include "radvae/parallel.hpp"

namespace radvae {

struct PfaSanityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PdRow {
  double snr_db = 0.0;
  double pd = 0.0;
  double ci_halfwidth = 0.0;  // 1.96 sqrt(pd (1 - pd) / n)
  std::size_t n_trials = 0;
};

struct PdCurve {
  DetectorId detector = DetectorId::mf;
  NoiseKind scenario = NoiseKind::cgn_awgn;
  std::size_t doppler_bin = 0;
  double pfa_target = 0.01;
  double pfa_empirical = 0.0;  // fresh H0 stream of n_trials
  std::uint64_t seed = 0;
  std::vector<PdRow> rows;
};

struct DopplerMap {
  DetectorId detector = DetectorId::mf;
  NoiseKind scenario = NoiseKind::cgn_awgn;
  std::vector<double> snr_db;
  std::vector<std::vector<double>> pd;  // [d][snr index]
  std::size_t n_trials = 0;
};

inline double ci95(double pd, std::size_t n) {
  return 1.96 * std::sqrt(pd * (1.0 - pd) / static_cast<double>(n));
}

/// Thresholds for one Doppler context, indexed by DetectorId.
struct ThresholdSet {
  std::array<double, kDetectorCount> lambda{};
  std::array<std::size_t, kDetectorCount> eval_count{};
  std::array<bool, kDetectorCount> present{};
  double target_pfa = 0.01;

  void add(const CalibrationResult& r) {
    lambda[index_of(r.detector)] = r.threshold;
    eval_count[index_of(r.detector)] = r.eval_count;
    present[index_of(r.detector)] = true;
    target_pfa = r.target_pfa;
  }
  bool has(DetectorId d) const noexcept { return present[index_of(d)]; }
};

struct PdRunOptions {
  std::size_t n_trials = 10000;
  std::uint64_t seed = 0;
  bool check_pfa = true;
};

inline void validate_grid(const std::vector<double>& snr_grid) {
  if (snr_grid.empty()) throw std::invalid_argument("SNR grid is empty");
  for (std::size_t i = 1; i < snr_grid.size(); ++i)
    if (!(snr_grid[i] > snr_grid[i - 1]))
      throw std::invalid_argument("SNR grid must be strictly increasing");
}

/// Pd versus SNR at Doppler bin d for every detector of `mask`, on shared
/// trials. Every SNR point gets n_trials fresh H1 trials (phase, texture,
/// noise and secondary data). A parallel fresh H0 stream measures the PFA;
/// with check_pfa set, a PFA outside 3 sigma of the target (binomial
/// spread of both the check stream and the calibration set) throws.
inline std::vector<PdCurve> run_pd_curves(const DetectionBench& bench, const DetectorMask& mask,
                                          const std::vector<double>& snr_grid,
                                          const ThresholdSet& thresholds, std::size_t d,
                                          const PdRunOptions& opt) {
  validate_grid(snr_grid);
  if (opt.n_trials < 1000) throw std::invalid_argument("pd curve: n_trials must be >= 1000");
  bench.require(mask);
  const auto dets = mask.list();
  for (auto det : dets)
    if (!thresholds.has(det))
      throw std::invalid_argument("detector '" + std::string(to_string(det)) +
                                  "' has not been calibrated");
  const NoiseKind kind = bench.spec().noise_kind;
  const std::size_t n = opt.n_trials;

  std::vector<std::uint64_t> tags;
  for (double snr : snr_grid) tags.push_back(stream_tag("pd", kind, d, snr));
  using Hits = std::array<std::uint8_t, kDetectorCount>;
  const auto hits = parallel_map<Hits>(snr_grid.size() * n, [&](std::size_t w) {
    const std::size_t j = w / n, i = w % n;
    Rng rng = Rng::substream(opt.seed, tags[j], i);
    const auto st = bench.trial(mask, Hypothesis::h1, snr_grid[j], d, rng);
    Hits h{};
    for (auto det : dets)
      h[index_of(det)] = st[index_of(det)] > thresholds.lambda[index_of(det)] ? 1 : 0;
    return h;
  });
  const auto pfa = empirical_pfa(bench, mask, thresholds.lambda, n, opt.seed ^ 0x5EEDULL, d);

  std::vector<PdCurve> curves;
  std::string violations;
  for (auto det : dets) {
    PdCurve c;
    c.detector = det;
    c.scenario = kind;
    c.doppler_bin = d;
    c.pfa_target = thresholds.target_pfa;
    c.pfa_empirical = pfa[index_of(det)];
    c.seed = opt.seed;
    for (std::size_t j = 0; j < snr_grid.size(); ++j) {
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i) count += hits[j * n + i][index_of(det)];
      const double pd = static_cast<double>(count) / static_cast<double>(n);
      c.rows.push_back({snr_grid[j], pd, ci95(pd, n), n});
    }
    const double p = thresholds.target_pfa;
    const double ne = static_cast<double>(thresholds.eval_count[index_of(det)]);
    double var = p * (1.0 - p) / static_cast<double>(n);
    if (ne > 0) var += p * (1.0 - p) / ne;
    if (std::abs(c.pfa_empirical - p) > 3.0 * std::sqrt(var))
      violations += " " + std::string(to_string(det)) + " (pfa " +
                    std::to_string(c.pfa_empirical) + ")";
    curves.push_back(std::move(c));
  }
  if (opt.check_pfa && !violations.empty())
    throw PfaSanityError("PFA sanity check failed in scenario " + std::string(to_string(kind)) +
                         ", Doppler bin " + std::to_string(d) + ":" + violations);
  return curves;
}

inline PdCurve run_pd_curve(const DetectionBench& bench, DetectorId det,
                            const std::vector<double>& snr_grid, const ThresholdSet& thresholds,
                            std::size_t d, const PdRunOptions& opt) {
  return run_pd_curves(bench, DetectorMask{det}, snr_grid, thresholds, d, opt).front();
}

/// Pd over the full (Doppler bin, SNR) lattice. thresholds[d] holds the
/// thresholds for bin d; a single-entry vector is reused for every bin.
inline std::vector<DopplerMap> run_doppler_map(const DetectionBench& bench,
                                               const DetectorMask& mask,
                                               const std::vector<double>& snr_grid,
                                               const std::vector<ThresholdSet>& thresholds,
                                               const PdRunOptions& opt,
                                               std::vector<PdCurve>* curves_out = nullptr) {
  const std::size_t m = bench.spec().m;
  if (thresholds.size() != 1 && thresholds.size() != m)
    throw std::invalid_argument("doppler map: need one threshold set or one per bin");
  std::vector<DopplerMap> maps;
  for (auto det : mask.list()) {
    DopplerMap dm;
    dm.detector = det;
    dm.scenario = bench.spec().noise_kind;
    dm.snr_db = snr_grid;
    dm.n_trials = opt.n_trials;
    dm.pd.assign(m, std::vector<double>(snr_grid.size(), 0.0));
    maps.push_back(std::move(dm));
  }
  for (std::size_t d = 0; d < m; ++d) {
    const auto curves =
        run_pd_curves(bench, mask, snr_grid, thresholds.size() == 1 ? thresholds[0] : thresholds[d],
                      d, opt);
    for (std::size_t k = 0; k < curves.size(); ++k)
      for (std::size_t j = 0; j < snr_grid.size(); ++j) maps[k].pd[d][j] = curves[k].rows[j].pd;
    if (curves_out) curves_out->insert(curves_out->end(), curves.begin(), curves.end());
  }
  return maps;
}

// ---------------------------------------------------------------------------

struct ScoreHistograms {
  std::vector<double> edges;  // bins + 1 edges; overflow lands in the last bin
  std::vector<double> snr_db;
  std::vector<std::size_t> h0;
  std::vector<std::vector<std::size_t>> h1;  // per SNR
  std::vector<double> overlap;               // sum_i min(f0_i, f1_i) per SNR
  std::vector<double> h0_scores;
  std::vector<std::vector<double>> h1_scores;
};

/// Binned VAE scores for H0 and for H1 at each SNR of snr_list. The H0
/// sample is shared by every SNR entry.
inline ScoreHistograms run_histogram(const DetectionBench& bench, const std::vector<double>& snr_list,
                                     std::size_t n_samples, std::uint64_t seed,
                                     std::size_t bins = 60, std::size_t d = 0) {
  if (!bench.vae()) throw std::invalid_argument("histogram: needs trained VAE weights");
  if (n_samples == 0 || bins == 0) throw std::invalid_argument("histogram: empty request");
  const DetectorMask mask{DetectorId::vae};
  const NoiseKind kind = bench.spec().noise_kind;
  ScoreHistograms h;
  h.snr_db = snr_list;
  auto scores = [&](Hypothesis hyp, double snr, std::string_view purpose) {
    const std::uint64_t tag = stream_tag(purpose, kind, d, snr);
    return parallel_map<double>(n_samples, [&](std::size_t i) {
      Rng rng = Rng::substream(seed, tag, i);
      return bench.trial(mask, hyp, snr, d, rng)[index_of(DetectorId::vae)];
    });
  };
  h.h0_scores = scores(Hypothesis::h0, 0.0, "hist-h0");
  for (double snr : snr_list) h.h1_scores.push_back(scores(Hypothesis::h1, snr, "hist-h1"));

  auto upper_quantile = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[std::min(v.size() - 1, static_cast<std::size_t>(0.999 * static_cast<double>(v.size())))];
  };
  double hi = upper_quantile(h.h0_scores);
  for (const auto& s : h.h1_scores) hi = std::max(hi, upper_quantile(s));
  if (!(hi > 0.0)) hi = 1.0;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    h.edges[i] = hi * static_cast<double>(i) / static_cast<double>(bins);
  auto bin = [&](const std::vector<double>& v) {
    std::vector<std::size_t> c(bins, 0);
    for (double s : v) {
      auto i = static_cast<std::size_t>(std::max(0.0, s) / hi * static_cast<double>(bins));
      ++c[std::min(i, bins - 1)];
    }
    return c;
  };
  h.h0 = bin(h.h0_scores);
  for (const auto& s : h.h1_scores) {
    h.h1.push_back(bin(s));
    double ov = 0.0;
    for (std::size_t i = 0; i < bins; ++i)
      ov += std::min(static_cast<double>(h.h0[i]), static_cast<double>(h.h1.back()[i])) /
            static_cast<double>(n_samples);
    h.overlap.push_back(ov);
  }
  return h;
}

// ---------------------------------------------------------------------------
// CSV: scenario,detector,doppler_bin,snr_db,pfa_target,pfa_empirical,pd,
//      ci_halfwidth,n_trials,seed

inline constexpr const char* kCsvHeader =
    "scenario,detector,doppler_bin,snr_db,pfa_target,pfa_empirical,pd,ci_halfwidth,n_trials,seed";

struct CsvRow {
  NoiseKind scenario;
  DetectorId detector;
  std::size_t doppler_bin;
  double snr_db, pfa_target, pfa_empirical, pd, ci_halfwidth;
  std::size_t n_trials;
  std::uint64_t seed;

  friend bool operator==(const CsvRow&, const CsvRow&) = default;
};

inline std::vector<CsvRow> to_rows(const std::vector<PdCurve>& curves) {
  std::vector<CsvRow> rows;
  for (const auto& c : curves)
    for (const auto& r : c.rows)
      rows.push_back({c.scenario, c.detector, c.doppler_bin, r.snr_db, c.pfa_target,
                      c.pfa_empirical, r.pd, r.ci_halfwidth, r.n_trials, c.seed});
  std::stable_sort(rows.begin(), rows.end(), [](const CsvRow& a, const CsvRow& b) {
    return std::tie(a.scenario, a.detector, a.doppler_bin, a.snr_db) <
           std::tie(b.scenario, b.detector, b.doppler_bin, b.snr_db);
  });
  return rows;
}

inline void write_csv(const std::vector<CsvRow>& rows, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << kCsvHeader << '\n';
  for (const auto& r : rows) {
    os << to_string(r.scenario) << ',' << to_string(r.detector) << ',' << r.doppler_bin << ','
       << detail::fmt17(r.snr_db) << ',' << detail::fmt17(r.pfa_target) << ','
       << detail::fmt17(r.pfa_empirical) << ',' << detail::fmt17(r.pd) << ','
       << detail::fmt17(r.ci_halfwidth) << ',' << r.n_trials << ',' << r.seed << '\n';
  }
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

inline void write_csv(const std::vector<PdCurve>& curves, const std::string& path) {
  write_csv(to_rows(curves), path);
}

inline std::vector<CsvRow> read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader)
    throw FormatError("'" + path + "': header does not match the Pd CSV schema");
  std::vector<CsvRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 10)
      throw FormatError("'" + path + "' line " + std::to_string(lineno) + ": expected 10 fields");
    try {
      rows.push_back({parse_noise_kind(f[0]), parse_detector(f[1]), std::stoul(f[2]),
                      std::stod(f[3]), std::stod(f[4]), std::stod(f[5]), std::stod(f[6]),
                      std::stod(f[7]), std::stoul(f[8]), std::stoull(f[9])});
    } catch (const std::exception& e) {
      throw FormatError("'" + path + "' line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

/// Regroups CSV rows into curves keyed by (scenario, detector, bin).
inline std::vector<PdCurve> curves_from_rows(const std::vector<CsvRow>& rows) {
  std::map<std::tuple<NoiseKind, DetectorId, std::size_t>, PdCurve> byKey;
  for (const auto& r : rows) {
    auto& c = byKey[{r.scenario, r.detector, r.doppler_bin}];
    c.scenario = r.scenario;
    c.detector = r.detector;
    c.doppler_bin = r.doppler_bin;
    c.pfa_target = r.pfa_target;
    c.pfa_empirical = r.pfa_empirical;
    c.seed = r.seed;
    c.rows.push_back({r.snr_db, r.pd, r.ci_halfwidth, r.n_trials});
  }
  std::vector<PdCurve> out;
  for (auto& [k, c] : byKey) out.push_back(std::move(c));
  return out;
}

}  // namespace radvae
