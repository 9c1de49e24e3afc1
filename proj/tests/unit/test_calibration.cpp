#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>

#include "radvae/calibration.hpp"

using namespace radvae;

namespace {
ScenarioSpec spec_of(NoiseKind k) {
  ScenarioSpec s;
  s.noise_kind = k;
  return s;
}
}  // namespace

TEST(Threshold, OneToHundred) {
  std::vector<double> s(100);
  std::iota(s.begin(), s.end(), 1.0);
  std::reverse(s.begin(), s.end());
  const double l = calibrate_threshold(s, 0.01);
  EXPECT_GT(l, 99.0);
  EXPECT_LT(l, 100.0);
  EXPECT_DOUBLE_EQ(l, 99.5);
  EXPECT_DOUBLE_EQ(exceedance_fraction(s, l), 0.01);
}

TEST(Threshold, InsufficientData) {
  EXPECT_EQ(min_eval_count(0.01), 1000u);
  EXPECT_THROW(calibrate_threshold(std::vector<double>(99, 1.0), 0.01), InsufficientData);
  EXPECT_THROW(calibrate_threshold(std::vector<double>(9, 1.0), 0.1), InsufficientData);
  EXPECT_NO_THROW(calibrate_threshold(std::vector<double>(10, 1.0), 0.1));
  EXPECT_THROW(calibrate_threshold(std::vector<double>(100, 1.0), 0.0), std::invalid_argument);
  EXPECT_THROW(calibrate_threshold(std::vector<double>(100, 1.0), 1.0), std::invalid_argument);
}

TEST(Threshold, InSampleExceedanceWithinBand) {
  Rng rng(1);
  for (std::size_t n : {1000u, 5000u, 12345u}) {
    std::vector<double> s(n);
    for (auto& v : s) v = rng.normal();
    for (double p : {0.01, 0.05, 0.2}) {
      if (n < min_eval_count(p)) continue;
      const double l = calibrate_threshold(s, p);
      EXPECT_NEAR(exceedance_fraction(s, l), p, binom_3sigma(p, n));
    }
  }
}

TEST(Threshold, ExtremesGiveZeroOrOne) {
  const DetectionBench bench(spec_of(NoiseKind::cgn_awgn));
  EXPECT_NEAR(empirical_pfa(bench, DetectorId::mf, 0.0, 2000, 1), 1.0, 1e-12);
  EXPECT_EQ(empirical_pfa(bench, DetectorId::mf, INFINITY, 2000, 1), 0.0);
}

TEST(Calibrate, MfThresholdNearAnalytic) {
  const DetectionBench bench(spec_of(NoiseKind::cgn_awgn));
  const auto r = calibrate(bench, DetectorMask{DetectorId::mf}, 0.01, 100000, 2);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_NEAR(r[0].threshold, -std::log(0.01), 0.3);
  EXPECT_LE(r[0].threshold_low, r[0].threshold);
  EXPECT_GE(r[0].threshold_high, r[0].threshold);
  EXPECT_NEAR(r[0].empirical_pfa, 0.01, binom_3sigma(0.01, 100000));
}

TEST(Calibrate, NmfAnalyticThresholdPfa) {
  const DetectionBench bench(spec_of(NoiseKind::cgn_awgn));
  const double pf = empirical_pfa(bench, DetectorId::nmf, 1 - std::pow(0.01, 1.0 / 15), 100000, 3);
  EXPECT_NEAR(pf, 0.01, 0.001);
}

TEST(Calibrate, LoopClosesOnFreshData) {
  for (auto k : {NoiseKind::ccgn, NoiseKind::ccgn_awgn}) {
    const DetectionBench bench(spec_of(k));
    const DetectorMask mask{DetectorId::mf, DetectorId::nmf, DetectorId::amf_scm};
    const auto cal = calibrate(bench, mask, 0.05, 20000, 4, 2);
    std::array<double, kDetectorCount> th{};
    for (const auto& c : cal) th[index_of(c.detector)] = c.threshold;
    const auto pf = empirical_pfa(bench, mask, th, 20000, 5, 2);
    for (auto d : mask.list()) {
      const double band = 3 * std::sqrt(0.05 * 0.95 * (1.0 / 20000 + 1.0 / 20000));
      EXPECT_NEAR(pf[index_of(d)], 0.05, band) << to_string(d);
    }
  }
}

TEST(Calibrate, Deterministic) {
  const DetectionBench bench(spec_of(NoiseKind::ccgn));
  const DetectorMask mask{DetectorId::nmf, DetectorId::anmf_scm};
  const auto a = calibrate(bench, mask, 0.01, 1000, 6);
  const auto b = calibrate(bench, mask, 0.01, 1000, 6);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].threshold, b[i].threshold);
  EXPECT_THROW(calibrate(bench, mask, 0.01, 999, 6), InsufficientData);
}

TEST(Calibrate, DetectionRateAtCalibratedThreshold) {
  const DetectionBench bench(spec_of(NoiseKind::cgn_awgn));
  const auto cal = calibrate(bench, DetectorMask{DetectorId::nmf}, 0.01, 20000, 7);
  DetectorContext ctx{steering_vector(0, 16), &bench.known_filter(0), {}, nullptr, {}};
  const Scenario sc(spec_of(NoiseKind::cgn_awgn));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < 20000; ++i) {
    Rng rng = Rng::substream(8, 0, i);
    hits += detect(DetectorId::nmf, sc.noise(rng).z, cal[0].threshold, ctx).decision;
  }
  EXPECT_NEAR(hits / 20000.0, 0.01, 3 * std::sqrt(0.01 * 0.99 * 2 / 20000));
}

TEST(CalibrationFile, RoundTrip) {
  const DetectionBench bench(spec_of(NoiseKind::ccgn_awgn));
  const auto cal = calibrate(bench, DetectorMask{DetectorId::mf, DetectorId::anmf_scm}, 0.01, 1000, 9, 3);
  const auto path = (std::filesystem::temp_directory_path() / "radvae_cal.ini").string();
  write_calibration(cal, path);
  const auto back = read_calibration(path);
  ASSERT_EQ(back.size(), cal.size());
  for (std::size_t i = 0; i < cal.size(); ++i) {
    EXPECT_EQ(back[i].detector, cal[i].detector);
    EXPECT_EQ(back[i].scenario, cal[i].scenario);
    EXPECT_EQ(back[i].doppler_bin, 3u);
    EXPECT_EQ(back[i].threshold, cal[i].threshold);
    EXPECT_EQ(back[i].threshold_low, cal[i].threshold_low);
    EXPECT_EQ(back[i].eval_count, cal[i].eval_count);
    EXPECT_EQ(back[i].empirical_pfa, cal[i].empirical_pfa);
    EXPECT_EQ(back[i].seed, cal[i].seed);
  }
  std::filesystem::remove(path);
}
