#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cubqmc/experiments.hpp"
#include "cubqmc/selftest.hpp"

using namespace cubqmc;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  static const fs::path dir = [] {
    auto p = fs::temp_directory_path() / ("cubqmc_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

// Runs the CLI with stdout and stderr sent to files; returns the exit status.
int cli(const std::string& args, const std::string& tag = "run") {
  const auto out = scratch_dir() / (tag + ".stdout"), err = scratch_dir() / (tag + ".stderr");
  const std::string cmd = std::string("\"") + CUBQMC_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + '"';
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

std::size_t line_count(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST(Cli, SelftestPasses) {
  EXPECT_EQ(cli("selftest", "selftest"), 0);
  const auto text = slurp(scratch_dir() / "selftest.stdout");
  for (const auto& name : selftest_suite_names()) EXPECT_NE(text.find(name), std::string::npos) << name;
}

TEST(Cli, SingleSuiteFilter) {
  EXPECT_EQ(cli("selftest --suite=transforms", "one_suite"), 0);
  const auto text = slurp(scratch_dir() / "one_suite.stdout");
  EXPECT_NE(text.find("transforms"), std::string::npos);
  EXPECT_EQ(text.find("aliasing"), std::string::npos);
  EXPECT_EQ(line_count(text), 1u);
}

TEST(Cli, UnknownSuiteIsInputError) { EXPECT_EQ(cli("selftest --suite=nonsense"), 2); }

TEST(Cli, CorruptedDirectionFileIsParseError) {
  const auto bad = scratch_dir() / "bad_dirnums.txt";
  std::ofstream(bad) << "d s a m_i\n2 1 0 1\n3 2 1 1 x\n";
  EXPECT_EQ(cli("selftest --dirnum-file \"" + bad.string() + "\"", "bad_dirnum"), 2);
  EXPECT_NE(slurp(scratch_dir() / "bad_dirnum.stderr").find("parse error"), std::string::npos);
}

TEST(Cli, MissingDirectionFileIsError) {
  EXPECT_EQ(cli("selftest --dirnum-file /nonexistent/cubqmc/dirnums.txt"), 2);
}

TEST(Cli, RelativeToleranceOfOneRejected) {
  EXPECT_EQ(cli("mvn --runs 1 --rel-tol 1", "rel_one"), 2);
  EXPECT_NE(slurp(scratch_dir() / "rel_one.stderr").find("input error"), std::string::npos);
}

TEST(Cli, NegativeAbsoluteToleranceRejected) { EXPECT_EQ(cli("mvn --runs 1 --abs-tol -1"), 2); }

TEST(Cli, UnknownSubcommandAndFlag) {
  EXPECT_EQ(cli("frobnicate"), 2);
  EXPECT_EQ(cli("mvn --frobnicate 3"), 2);
  EXPECT_EQ(cli(""), 2);
  EXPECT_EQ(cli("mvn --family hexagonal"), 2);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(cli("--help"), 0); }

TEST(Cli, ForcedOneDimensionalMvn) {
  const auto csv = scratch_dir() / "mvn_d1.csv";
  ASSERT_EQ(cli("mvn --runs 1 --force-d 1 --no-timing --out \"" + csv.string() + "\"", "mvn_d1"), 0);
  const auto text = slurp(csv);
  EXPECT_EQ(line_count(text), 2u);
  const auto header = first_line(text);
  EXPECT_EQ(header.rfind("run,seed,family", 0), 0u);
  EXPECT_NE(header.find(config_csv_header()), std::string::npos);
  EXPECT_NE(slurp(scratch_dir() / "mvn_d1.stdout").find("success fraction 1"), std::string::npos);
}

TEST(Cli, RerunIsByteIdentical) {
  const auto a = scratch_dir() / "det_a.csv", b = scratch_dir() / "det_b.csv";
  const std::string args = "mvn --runs 3 --seed 7 --no-timing --out ";
  ASSERT_EQ(cli(args + '"' + a.string() + '"'), 0);
  ASSERT_EQ(cli(args + '"' + b.string() + '"'), 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_FALSE(slurp(a).empty());
}

TEST(Cli, DifferentSeedsDiffer) {
  const auto a = scratch_dir() / "seed_a.csv", b = scratch_dir() / "seed_b.csv";
  ASSERT_EQ(cli("mvn --runs 2 --seed 1 --no-timing --out \"" + a.string() + '"'), 0);
  ASSERT_EQ(cli("mvn --runs 2 --seed 2 --no-timing --out \"" + b.string() + '"'), 0);
  EXPECT_NE(slurp(a), slurp(b));
}

TEST(Cli, BaselinesCsvCarriesConfig) {
  const auto csv = scratch_dir() / "baselines.csv";
  ASSERT_EQ(cli("baselines --integrand constant --runs 2 --no-timing --out \"" + csv.string() + '"'), 0);
  const auto text = slurp(csv);
  EXPECT_EQ(line_count(text), 3u);
  EXPECT_NE(first_line(text).find(config_csv_header()), std::string::npos);
  EXPECT_EQ(cli("baselines --integrand nonsense --runs 1"), 2);
}

TEST(Cli, AsianWritesSpectra) {
  const auto csv = scratch_dir() / "asian.csv", spectra = scratch_dir() / "spectra.csv";
  ASSERT_EQ(cli("asian --runs 1 --cv --abs-tol 0.05 --reference-level 14 --spectra-level 12 --no-timing --out \"" +
                csv.string() + "\" --spectra \"" + spectra.string() + '"'),
            0);
  const auto text = slurp(csv);
  EXPECT_EQ(line_count(text), 3u);
  EXPECT_NE(text.find("\nplain,"), std::string::npos);
  EXPECT_NE(text.find("\ncv,"), std::string::npos);
  // 2^12 coefficients for each of two outputs plus a header
  EXPECT_EQ(line_count(slurp(spectra)), 2u * 4096u + 1u);
}

TEST(Experiments, RunSeedIsXor) {
  EXPECT_EQ(run_seed(42, 0), 42u);
  EXPECT_EQ(run_seed(42, 1), 43u);
  EXPECT_EQ(run_seed(42, 3), 41u);
  EXPECT_NE(generator_seed(42), 42u);
  EXPECT_NE(generator_seed(42), generator_seed(43));
}

TEST(Experiments, ConfigValidation) {
  ExperimentConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.tol.rel = 1.0;
  EXPECT_THROW(cfg.validate(), InputError);
  cfg.tol = {0.0, 0.0};
  EXPECT_THROW(cfg.validate(), InputError);
}

TEST(Experiments, MvnInstanceRanges) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto run = mvn_instance(s, 64);
    EXPECT_GE(run.d, 1u);
    EXPECT_LE(run.d, 64u);
    EXPECT_GE(run.sigma, 0.0);
    EXPECT_LT(run.sigma, 1.0);
    ASSERT_EQ(run.upper.size(), run.d);
    for (double b : run.upper) {
      EXPECT_GE(b, 0.0);
      EXPECT_LE(b, std::sqrt(static_cast<double>(run.d)));
    }
    EXPECT_GT(run.mu, 0.0);
    EXPECT_LE(run.mu, 1.0);
  }
  EXPECT_EQ(mvn_instance(5, 64, 7).d, 7u);
}

TEST(Experiments, ForcedOneDimensionalMatchesPhi) {
  ExperimentConfig cfg;
  cfg.tol = {0.01, 0.05};
  const auto runs = run_mvn(4, 64, cfg, 1);
  ASSERT_EQ(runs.size(), 4u);
  for (const auto& r : runs) {
    EXPECT_NEAR(r.mu, norm_cdf(r.upper[0]), 1e-14);
    EXPECT_LE(r.tol_value, 1.0);
  }
  EXPECT_EQ(success_fraction(runs), 1.0);
  EXPECT_EQ(success_fraction({}), 0.0);
}

TEST(Experiments, SuccessFractionCountsTolAtMostOne) {
  std::vector<MvnRun> runs(4);
  runs[0].tol_value = 0.2;
  runs[1].tol_value = 1.0;
  runs[2].tol_value = 1.0000001;
  runs[3].tol_value = 7.0;
  EXPECT_DOUBLE_EQ(success_fraction(runs), 0.5);
}

TEST(Experiments, MvnCsvRowsAndDeterminism) {
  ExperimentConfig cfg;
  cfg.tol = {0.01, 0.05};
  cfg.timing = false;
  std::ostringstream a, b;
  write_mvn_csv(a, run_mvn(3, 16, cfg), cfg);
  write_mvn_csv(b, run_mvn(3, 16, cfg), cfg);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(line_count(a.str()), 4u);
  // every row ends with the resolved config
  std::istringstream in(a.str());
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) EXPECT_NE(line.find(config_csv_fields(cfg)), std::string::npos);
}

TEST(Experiments, SobolTableShapeAndReferences) {
  ExperimentConfig cfg;
  cfg.tol = {5e-3, 0.0};
  const auto rows = run_sobol_indices(cfg);
  ASSERT_EQ(rows.size(), 6u);
  for (std::size_t j = 0; j < 6; ++j) {
    EXPECT_EQ(rows[j].j, j + 1);
    EXPECT_EQ(rows[j].reference, kBratleyReferenceIndices[j]);
    const double ratio = (rows[j].reference - rows[j].result.v_hat) / 5e-3;
    EXPECT_NEAR(rows[j].tol_optimal, ratio * ratio, 1e-9);
  }
  EXPECT_EQ(kBratleyReferenceIndices[0], 0.6529);
  EXPECT_EQ(kBratleyReferenceIndices[1], 0.1791);
  EXPECT_EQ(kBratleyReferenceIndices[2], 0.0370);
  EXPECT_EQ(kBratleyReferenceIndices[3], 0.0133);
  EXPECT_EQ(kBratleyReferenceIndices[4], 0.0015);
  EXPECT_EQ(kBratleyReferenceIndices[5], 0.0015);
  // the largest index is estimated well at this tolerance
  EXPECT_LE(rows[0].tol_optimal, 1.0);
  std::ostringstream csv;
  cfg.timing = false;
  write_sobol_csv(csv, rows, cfg);
  EXPECT_EQ(line_count(csv.str()), 7u);
  EXPECT_NE(first_line(csv.str()).find("tol_plug_in"), std::string::npos);
}

TEST(Experiments, CvComparisonRows) {
  ExperimentConfig cfg;
  cfg.tol = {0.05, 0.0};
  const AsianOption option;
  const auto runs = run_asian(option, 2, true, cfg);
  ASSERT_EQ(runs.size(), 2u);
  const auto rows = cv_comparison(runs);
  ASSERT_EQ(rows.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(rows[k].seed, run_seed(cfg.seed, k));
    EXPECT_EQ(rows[k].n_plain, runs[k].plain.n);
    EXPECT_EQ(rows[k].n_cv, runs[k].cv->result.n);
  }
  EXPECT_TRUE(cv_comparison(run_asian(option, 1, false, cfg)).empty());
}

TEST(Experiments, BaselinesConstantIsExact) {
  ExperimentConfig cfg;
  cfg.timing = false;
  const auto rows = run_baselines("constant", HeuristicStrategy::iid_replications, 8, 256, 3, cfg);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_NEAR(r.heuristic.mean, 7.0, 1e-12);
    EXPECT_NEAR(r.guaranteed.v_hat, 7.0, 1e-12);
  }
  std::ostringstream csv;
  write_baselines_csv(csv, rows, "constant", HeuristicStrategy::iid_replications, 8, 256, 1.2, cfg);
  EXPECT_EQ(line_count(csv.str()), 4u);
  EXPECT_THROW(run_baselines("nonsense", HeuristicStrategy::iid_replications, 8, 256, 1, cfg), InputError);
}
