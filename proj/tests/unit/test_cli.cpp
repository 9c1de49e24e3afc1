#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "radvae/experiment.hpp"
#include "radvae/vae/weights_io.hpp"

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("radvae_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(const std::string& args) {
    const std::string cmd = std::string(RADVAE_CLI) + " " + args + " >" + path("stdout.txt") +
                            " 2>" + path("stderr.txt");
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  }

  std::string err() const {
    std::ifstream is(path("stderr.txt"));
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("no-such-stage"), 2);
  EXPECT_EQ(run("pd-curve --no-such-flag 1"), 2);
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("--version"), 0);
}

TEST_F(Cli, MissingKeyNamesTheKey) {
  EXPECT_EQ(run("pd-curve --out " + path("x.csv")), 3);
  EXPECT_NE(err().find("'scenario'"), std::string::npos);
  EXPECT_NE(err().find("--scenario"), std::string::npos);
  EXPECT_EQ(run("train --scenario ccgn"), 3);
  EXPECT_NE(err().find("'weights'"), std::string::npos);
}

TEST_F(Cli, MissingFilesAreFileErrors) {
  EXPECT_EQ(run("pd-curve --scenario ccgn --detector vae --weights " + path("none.bin") +
                " --out " + path("x.csv")),
            4);
  EXPECT_NE(err().find("none.bin"), std::string::npos);
  EXPECT_EQ(run("pd-curve --config " + path("none.ini")), 4);
  EXPECT_EQ(run("plot --input " + path("none.csv") + " --out " + path("x.svg")), 4);
}

TEST_F(Cli, BadValues) {
  EXPECT_EQ(run("pd-curve --scenario nonsense --out " + path("x.csv")), 5);
  EXPECT_EQ(run("pd-curve --scenario ccgn --trials abc --out " + path("x.csv")), 5);
  EXPECT_EQ(run("pd-curve --scenario ccgn --pfa 1.5 --out " + path("x.csv")), 5);
  EXPECT_EQ(run("pd-curve --scenario ccgn --snr 10,5 --trials 1000 --eval_count 1000 --out " +
                path("x.csv")),
            5);
}

TEST_F(Cli, SmallPipelineFromConfig) {
  {
    std::ofstream os(path("run.ini"));
    os << "[common]\nscenario = ccgn_awgn\nseed = 11\nweights = " << path("w.bin")
       << "\n\n[gen-data]\ncount = 600\nout = " << path("h0.rds")
       << "\n\n[train]\ndata = " << path("h0.rds") << "\nepochs = 2\n"
       << "\n[pd-curve]\ndetector = mf,vae\ntrials = 1000\neval_count = 1000\nsnr = 0,10,20\nout = "
       << path("pd.csv") << "\nplot = " << path("pd.svg") << "\n"
       << "\n[plot]\ninput = " << path("pd.csv") << "\nout = " << path("pd2.svg") << "\n";
  }
  ASSERT_EQ(run("gen-data --config " + path("run.ini")), 0) << err();
  ASSERT_TRUE(fs::exists(path("h0.rds")));
  ASSERT_EQ(run("train --config " + path("run.ini")), 0) << err();
  EXPECT_NO_THROW(radvae::load_weights(path("w.bin")));
  EXPECT_NE(err().find("config_hash="), std::string::npos);
  ASSERT_EQ(run("pd-curve --config " + path("run.ini")), 0) << err();
  const auto rows = radvae::read_csv(path("pd.csv"));
  ASSERT_EQ(rows.size(), 6u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.n_trials, 1000u);
    EXPECT_GE(r.pd, 0.0);
    EXPECT_LE(r.pd, 1.0);
  }
  EXPECT_TRUE(fs::exists(path("pd.svg")));
  ASSERT_EQ(run("plot --config " + path("run.ini")), 0) << err();
  EXPECT_TRUE(fs::exists(path("pd2.svg")));

  // Same config, same bytes.
  const auto first = radvae::read_csv(path("pd.csv"));
  ASSERT_EQ(run("pd-curve --config " + path("run.ini") + " --out " + path("pd_b.csv")), 0);
  EXPECT_EQ(radvae::read_csv(path("pd_b.csv")), first);
}

TEST_F(Cli, CalibrateThenReuse) {
  ASSERT_EQ(run("calibrate --scenario cgn_awgn --detector mf,nmf --eval_count 2000 --calibration " +
                path("cal.ini")),
            0)
      << err();
  ASSERT_EQ(run("pfa-check --scenario cgn_awgn --detector mf,nmf --calibration " + path("cal.ini") +
                " --trials 10000"),
            0)
      << err();
  ASSERT_EQ(run("pd-curve --scenario cgn_awgn --detector mf,nmf --calibration " + path("cal.ini") +
                " --trials 1000 --snr 0:5:10 --out " + path("pd.csv")),
            0)
      << err();
  EXPECT_EQ(radvae::read_csv(path("pd.csv")).size(), 6u);
}
