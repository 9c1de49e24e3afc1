// radvae: command-line driver for the simulation, training, calibration and
// evaluation stages.
//
// Exit codes: 0 success, 1 unexpected error, 2 usage error, 3 missing
// configuration key, 4 file error, 5 invalid value or numeric failure,
// 6 PFA sanity check failed.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "radvae/pipeline.hpp"
#include "radvae/radvae.hpp"

namespace {

enum Exit { kOk = 0, kUnexpected = 1, kUsage = 2, kMissingKey = 3, kFile = 4, kNumeric = 5, kPfa = 6 };

const std::vector<std::string> kScenarioKeys = {"scenario", "seed", "m", "rho", "mu", "r", "secondary"};

struct Command {
  std::string name, help;
  std::vector<std::string> keys;
};

const std::vector<Command> kCommands = {
    {"gen-data", "simulate snapshots to a dataset file", {"count", "hypothesis", "snr", "out"}},
    {"train", "train the VAE on noise-only data",
     {"data", "count", "epochs", "lr", "beta", "batch", "latent", "weights"}},
    {"calibrate", "calibrate detector thresholds on noise-only trials",
     {"detector", "pfa", "eval_count", "doppler", "weights", "calibration", "fp_tol", "fp_max_iter"}},
    {"pfa-check", "measure the false-alarm rate of calibrated thresholds",
     {"detector", "pfa", "eval_count", "doppler", "weights", "calibration", "trials", "fp_tol",
      "fp_max_iter"}},
    {"pd-curve", "Pd versus SNR at fixed PFA",
     {"detector", "pfa", "eval_count", "doppler", "weights", "calibration", "trials", "snr", "out",
      "plot", "pfa_sanity", "fp_tol", "fp_max_iter"}},
    {"doppler-map", "Pd over all Doppler bins and SNRs",
     {"detector", "pfa", "eval_count", "weights", "calibration", "trials", "snr", "out", "plot",
      "pfa_sanity", "fp_tol", "fp_max_iter"}},
    {"histogram", "VAE score histograms under H0 and H1",
     {"weights", "snr", "samples", "bins", "out"}},
    {"plot", "render a Pd CSV as SVG", {"input", "out", "kind"}},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"radvae: radar target detection with a 1D VAE and classical detectors"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(radvae::kVersion));
  std::string config_path;
  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, CLI::App*> subs;
  for (const auto& cmd : kCommands) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", config_path, "INI file with [common] and [" + cmd.name + "] sections");
    std::vector<std::string> keys = cmd.keys;
    if (cmd.name != "plot") keys.insert(keys.begin(), kScenarioKeys.begin(), kScenarioKeys.end());
    for (const auto& k : keys) sub->add_option("--" + k, values[cmd.name][k], "overrides key '" + k + "'");
    subs[cmd.name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  std::string stage;
  for (const auto& [name, sub] : subs)
    if (sub->parsed()) stage = name;

  using namespace radvae;
  try {
    Config cfg;
    if (!config_path.empty()) {
      if (!std::filesystem::exists(config_path))
        throw FileError("config file '" + config_path + "' does not exist");
      cfg = Config::from_file(config_path);
    }
    cfg.set_stage(stage);
    for (const auto& [k, v] : values[stage])
      if (subs[stage]->count("--" + k) > 0) cfg.override_value(k, v);

    std::ostream& log = std::cerr;
    auto report = [&] {
      log << "radvae " << kVersion << " stage=" << stage << " seed=" << cfg.get("seed", "0")
          << " config_hash=" << cfg.hash_hex() << " workers=" << default_workers() << '\n';
    };

    if (stage == "gen-data") {
      const auto out = stage_gen_data(cfg);
      report();
      log << "wrote " << out << '\n';
    } else if (stage == "train") {
      stage_train(cfg, &log);
      report();
      log << "wrote " << cfg.require("weights") << '\n';
    } else if (stage == "calibrate") {
      for (const auto& r : stage_calibrate(cfg))
        std::printf("%s d=%zu lambda=%.17g pfa_in_sample=%.6f n=%zu\n",
                    std::string(to_string(r.detector)).c_str(), r.doppler_bin, r.threshold,
                    r.empirical_pfa, r.eval_count);
      report();
    } else if (stage == "pfa-check") {
      bool ok = true;
      for (const auto& r : stage_pfa_check(cfg)) {
        std::printf("%s d=%zu pfa=%.6f target=%.6f band=%.6f %s\n",
                    std::string(to_string(r.detector)).c_str(), r.doppler_bin, r.empirical,
                    r.target, r.band, r.pass ? "ok" : "OUT OF BAND");
        ok = ok && r.pass;
      }
      report();
      if (!ok) return kPfa;
    } else if (stage == "pd-curve") {
      stage_pd_curve(cfg);
      report();
      log << "wrote " << cfg.require("out") << '\n';
    } else if (stage == "doppler-map") {
      stage_doppler_map(cfg);
      report();
      log << "wrote " << cfg.require("out") << '\n';
    } else if (stage == "histogram") {
      const auto h = stage_histogram(cfg);
      for (std::size_t i = 0; i < h.snr_db.size(); ++i)
        std::printf("snr=%g overlap=%.4f\n", h.snr_db[i], h.overlap[i]);
      report();
    } else if (stage == "plot") {
      stage_plot(cfg);
      report();
    }
    return kOk;
  } catch (const MissingConfigKey& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kMissingKey;
  } catch (const FileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFile;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFile;
  } catch (const PfaSanityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kPfa;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::runtime_error& e) {
    // Remaining runtime errors come from I/O (open/write failures) or from
    // numerical failures (non-convergence, non-finite training state).
    const std::string what = e.what();
    const bool io = what.find("cannot open") != std::string::npos ||
                    what.find("write failed") != std::string::npos ||
                    what.find("cannot read") != std::string::npos;
    std::cerr << "error: " << what << '\n';
    return io ? kFile : kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnexpected;
  }
}
