#pragma once

// Pipeline stages driven by a Config: the CLI subcommands are thin wrappers
// around these functions.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "radvae/bench.hpp"
#include "radvae/calibration.hpp"
#include "radvae/config.hpp"
#include "radvae/experiment.hpp"
#include "radvae/plot.hpp"
#include "radvae/vae/train.hpp"
#include "radvae/vae/weights_io.hpp"

namespace radvae {

/// Missing or unreadable input file.
struct FileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage) {
  return mix64(seed ^ fnv1a(stage));
}

inline ScenarioSpec scenario_from(const Config& c) {
  ScenarioSpec s;
  s.noise_kind = parse_noise_kind(c.require("scenario"));
  s.m = c.get_u64("m", 16);
  s.rho = c.get_double("rho", 0.5);
  s.mu = c.get_double("mu", 1.0);
  s.r = c.get_double("r", 1.0);
  s.K = c.get_u64("secondary", 2 * s.m);
  s.seed = c.get_u64("seed", 0);
  s.validate();
  return s;
}

inline EstimatorConfig estimator_from(const Config& c) {
  EstimatorConfig e;
  e.tol = c.get_double("fp_tol", e.tol);
  e.max_iter = static_cast<int>(c.get_u64("fp_max_iter", static_cast<std::uint64_t>(e.max_iter)));
  e.validate();
  return e;
}

inline std::vector<DetectorId> detectors_from(const Config& c, const std::string& fallback) {
  const std::string s = c.get("detector", fallback);
  std::vector<DetectorId> out;
  if (s == "all") return {kAllDetectors.begin(), kAllDetectors.end()};
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_detector(item));
  if (out.empty()) throw ConfigError("key 'detector': empty list");
  return out;
}

inline bool needs_vae(const std::vector<DetectorId>& ds) {
  return std::find(ds.begin(), ds.end(), DetectorId::vae) != ds.end();
}

inline VaeParams load_weights_checked(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw FileError("weight file '" + path + "' does not exist (run `radvae train` first)");
  try {
    return load_weights(path);
  } catch (const FormatError& e) {
    throw FileError(std::string(e.what()));
  }
}

inline std::vector<std::size_t> bins_from(const Config& c, std::size_t m, const std::string& fallback) {
  const std::string s = c.get("doppler", fallback);
  std::vector<std::size_t> out;
  if (s == "all") {
    for (std::size_t d = 0; d < m; ++d) out.push_back(d);
    return out;
  }
  for (double v : Config::parse_list("doppler", s)) {
    if (v < 0 || v != std::floor(v) || v >= static_cast<double>(m))
      throw ConfigError("key 'doppler': bins must be integers in [0, m)");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

// --- gen-data -------------------------------------------------------------

inline std::string stage_gen_data(const Config& c) {
  const ScenarioSpec s = scenario_from(c);
  const auto count = c.get_u64("count", 15000);
  const std::string h = c.get("hypothesis", "h0");
  if (h != "h0" && h != "h1") throw ConfigError("key 'hypothesis': expected h0 or h1");
  const double snr = h == "h1" ? c.get_double("snr") : 0.0;
  const std::string out = c.require("out");
  const auto data = generate_dataset(s, h == "h0" ? Hypothesis::h0 : Hypothesis::h1, count,
                                     stage_seed(s.seed, "gen-data"), snr);
  write_dataset(data, out);
  return out;
}

// --- train ----------------------------------------------------------------

inline TrainConfig train_config_from(const Config& c) {
  TrainConfig t;
  t.epochs = static_cast<int>(c.get_u64("epochs", 50));
  t.learning_rate = c.get_double("lr", 1e-3);
  t.beta = c.get_double("beta", 100.0);
  t.batch_size = c.get_u64("batch", 128);
  t.latent = c.get_u64("latent", 12);
  t.seed = stage_seed(c.get_u64("seed", 0), "train");
  t.validate();
  return t;
}

inline std::vector<Snapshot> training_data(const Config& c, const ScenarioSpec& s) {
  if (auto path = c.find("data")) {
    c.get("data", *path);
    if (!std::filesystem::exists(*path)) throw FileError("dataset '" + *path + "' does not exist");
    try {
      auto d = read_dataset(*path);
      if (!d.empty() && d.front().z.size() != s.m)
        throw ConfigError("dataset snapshot length does not match m");
      return d;
    } catch (const FormatError& e) {
      throw FileError(e.what());
    }
  }
  return generate_dataset(s, Hypothesis::h0, c.get_u64("count", 15000),
                          stage_seed(s.seed, "gen-data"));
}

inline VaeParams stage_train(const Config& c, std::ostream* log = nullptr) {
  const ScenarioSpec s = scenario_from(c);
  const TrainConfig t = train_config_from(c);
  const std::string out = c.require("weights");
  const auto data = training_data(c, s);
  auto result = train(data, t, [&](const EpochStats& e) {
    if (log)
      *log << "epoch " << e.epoch << " train " << e.train.total << " (rec " << e.train.rec
           << ", kl " << e.train.kl << ") val " << e.val.total << '\n';
  });
  round_to_f32(result.params);
  save_weights(result.params, out);
  return result.params;
}

// --- calibrate ------------------------------------------------------------

/// Classical detectors get one threshold per requested bin; the VAE gets a
/// single threshold (its score does not depend on the Doppler bin).
inline std::vector<CalibrationResult> calibrate_bins(const DetectionBench& bench,
                                                     const std::vector<DetectorId>& dets,
                                                     const std::vector<std::size_t>& bins,
                                                     double pfa, std::size_t eval_count,
                                                     std::uint64_t seed) {
  std::vector<CalibrationResult> out;
  DetectorMask classical;
  for (auto d : dets)
    if (d != DetectorId::vae) classical.set(d);
  if (needs_vae(dets)) {
    auto r = calibrate(bench, DetectorMask{DetectorId::vae}, pfa, eval_count, seed, 0);
    out.insert(out.end(), r.begin(), r.end());
  }
  if (!classical.list().empty())
    for (auto d : bins) {
      auto r = calibrate(bench, classical, pfa, eval_count, seed, d);
      out.insert(out.end(), r.begin(), r.end());
    }
  return out;
}

inline ThresholdSet thresholds_for(const std::vector<CalibrationResult>& cal,
                                   const std::vector<DetectorId>& dets, NoiseKind kind,
                                   std::size_t d) {
  ThresholdSet ts;
  for (auto det : dets) {
    const CalibrationResult* hit = nullptr;
    for (const auto& r : cal)
      if (r.detector == det && r.scenario == kind && (r.doppler_bin == d || det == DetectorId::vae))
        hit = &r;
    if (!hit)
      throw ConfigError("no calibration for detector '" + std::string(to_string(det)) +
                        "' in scenario " + std::string(to_string(kind)) + ", Doppler bin " +
                        std::to_string(d));
    ts.add(*hit);
  }
  return ts;
}

/// Bench plus weights, kept together so the bench's VAE pointer stays valid.
struct BenchHandle {
  std::unique_ptr<VaeParams> vae;
  std::unique_ptr<DetectionBench> bench;
};

inline BenchHandle bench_from(const Config& c, const std::vector<DetectorId>& dets) {
  BenchHandle h;
  if (needs_vae(dets)) h.vae = std::make_unique<VaeParams>(load_weights_checked(c.require("weights")));
  h.bench = std::make_unique<DetectionBench>(scenario_from(c), estimator_from(c), h.vae.get());
  return h;
}

inline std::vector<CalibrationResult> stage_calibrate(const Config& c) {
  const auto dets = detectors_from(c, "all");
  auto h = bench_from(c, dets);
  const double pfa = c.get_double("pfa", 1e-2);
  const auto eval_count = c.get_u64("eval_count", 5000);
  const auto bins = bins_from(c, h.bench->spec().m, "0");
  const auto res = calibrate_bins(*h.bench, dets, bins, pfa, eval_count,
                                  stage_seed(h.bench->spec().seed, "calibrate"));
  write_calibration(res, c.require("calibration"));
  return res;
}

/// Calibration records from the `calibration` file if it exists, otherwise
/// computed on the fly.
inline std::vector<CalibrationResult> obtain_calibration(const Config& c, const DetectionBench& bench,
                                                         const std::vector<DetectorId>& dets,
                                                         const std::vector<std::size_t>& bins) {
  if (auto path = c.find("calibration"); path && !path->empty()) {
    c.get("calibration", *path);
    if (!std::filesystem::exists(*path)) throw FileError("calibration file '" + *path + "' does not exist");
    try {
      return read_calibration(*path);
    } catch (const std::runtime_error& e) {
      throw FileError(e.what());
    }
  }
  return calibrate_bins(bench, dets, bins, c.get_double("pfa", 1e-2), c.get_u64("eval_count", 5000),
                        stage_seed(bench.spec().seed, "calibrate"));
}

// --- pfa-check ------------------------------------------------------------

struct PfaCheckRow {
  DetectorId detector;
  std::size_t doppler_bin;
  double target, empirical, band;
  bool pass;
};

inline std::vector<PfaCheckRow> stage_pfa_check(const Config& c) {
  const auto dets = detectors_from(c, "all");
  auto h = bench_from(c, dets);
  const auto bins = bins_from(c, h.bench->spec().m, "0");
  const auto cal = obtain_calibration(c, *h.bench, dets, bins);
  const auto trials = c.get_u64("trials", 100000);
  const auto seed = stage_seed(h.bench->spec().seed, "pfa-check");
  std::vector<PfaCheckRow> rows;
  for (auto d : bins) {
    const auto ts = thresholds_for(cal, dets, h.bench->spec().noise_kind, d);
    const auto pf = empirical_pfa(*h.bench, DetectorMask(dets), ts.lambda, trials, seed, d);
    for (auto det : dets) {
      const double band = binom_3sigma(ts.target_pfa, trials);
      const double e = pf[index_of(det)];
      rows.push_back({det, d, ts.target_pfa, e, band, std::abs(e - ts.target_pfa) <= band});
    }
  }
  return rows;
}

// --- pd-curve / doppler-map ----------------------------------------------

inline PdRunOptions run_options_from(const Config& c, std::uint64_t default_trials, std::string_view stage) {
  PdRunOptions o;
  o.n_trials = c.get_u64("trials", default_trials);
  o.seed = stage_seed(c.get_u64("seed", 0), stage);
  o.check_pfa = c.get("pfa_sanity", "on") != "off";
  return o;
}

inline std::vector<PdCurve> stage_pd_curve(const Config& c) {
  const auto dets = detectors_from(c, "mf,nmf,amf_scm,anmf_scm,anmf_fp");
  auto h = bench_from(c, dets);
  const auto snr = c.get_doubles("snr", "0:1:25");
  const auto bins = bins_from(c, h.bench->spec().m, "0");
  const auto cal = obtain_calibration(c, *h.bench, dets, bins);
  const auto opt = run_options_from(c, 10000, "pd-curve");
  std::vector<PdCurve> curves;
  for (auto d : bins) {
    auto cs = run_pd_curves(*h.bench, DetectorMask(dets), snr,
                            thresholds_for(cal, dets, h.bench->spec().noise_kind, d), d, opt);
    curves.insert(curves.end(), cs.begin(), cs.end());
  }
  write_csv(curves, c.require("out"));
  if (auto plot = c.find("plot"); plot && !plot->empty()) {
    c.get("plot", *plot);
    emit_plot(curves, *plot, "Pd vs SNR, " + std::string(to_string(h.bench->spec().noise_kind)));
  }
  return curves;
}

inline std::vector<DopplerMap> stage_doppler_map(const Config& c) {
  const auto dets = detectors_from(c, "amf_scm,anmf_fp,vae");
  auto h = bench_from(c, dets);
  const auto snr = c.get_doubles("snr", "0:1:25");
  std::vector<std::size_t> bins(h.bench->spec().m);
  std::iota(bins.begin(), bins.end(), std::size_t{0});
  const auto cal = obtain_calibration(c, *h.bench, dets, bins);
  std::vector<ThresholdSet> ts;
  for (auto d : bins) ts.push_back(thresholds_for(cal, dets, h.bench->spec().noise_kind, d));
  const auto opt = run_options_from(c, 1000, "doppler-map");
  std::vector<PdCurve> curves;
  auto maps = run_doppler_map(*h.bench, DetectorMask(dets), snr, ts, opt, &curves);
  write_csv(curves, c.require("out"));
  if (auto prefix = c.find("plot"); prefix && !prefix->empty()) {
    c.get("plot", *prefix);
    for (const auto& m : maps)
      emit_plot(m, *prefix + "_" + std::string(to_string(m.detector)) + ".svg");
  }
  return maps;
}

// --- histogram ------------------------------------------------------------

inline ScoreHistograms stage_histogram(const Config& c) {
  auto h = bench_from(c, {DetectorId::vae});
  const auto snr = c.get_doubles("snr", "5,10,15");
  const auto hist = run_histogram(*h.bench, snr, c.get_u64("samples", 10000),
                                  stage_seed(h.bench->spec().seed, "histogram"),
                                  c.get_u64("bins", 60));
  const std::string out = c.require("out");
  std::ofstream os(out);
  if (!os) throw FileError("cannot open '" + out + "' for writing");
  os << "bin_low,bin_high,h0";
  for (double s : snr) os << ",h1_" << detail::fmt17(s) << "db";
  os << '\n';
  for (std::size_t i = 0; i + 1 < hist.edges.size(); ++i) {
    os << detail::fmt17(hist.edges[i]) << ',' << detail::fmt17(hist.edges[i + 1]) << ','
       << hist.h0[i];
    for (const auto& h1 : hist.h1) os << ',' << h1[i];
    os << '\n';
  }
  os << "# overlap";
  for (double v : hist.overlap) os << ',' << detail::fmt17(v);
  os << '\n';
  if (!os) throw FileError("write failed for '" + out + "'");
  return hist;
}

// --- plot -----------------------------------------------------------------

inline void stage_plot(const Config& c) {
  const std::string in = c.require("input");
  if (!std::filesystem::exists(in)) throw FileError("CSV '" + in + "' does not exist");
  std::vector<CsvRow> rows;
  try {
    rows = read_csv(in);
  } catch (const FormatError& e) {
    throw FileError(e.what());
  }
  const auto curves = curves_from_rows(rows);
  if (curves.empty()) throw ConfigError("CSV '" + in + "' holds no rows to plot");
  const std::string out = c.require("out");
  if (c.get("kind", "curve") == "map") {
    for (const auto& m : maps_from_curves(curves))
      emit_plot(m, out + "_" + std::string(to_string(m.scenario)) + "_" +
                       std::string(to_string(m.detector)) + ".svg");
  } else {
    emit_plot(curves, out);
  }
}

}  // namespace radvae
