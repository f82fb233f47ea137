// cubqmc: batch driver for the adaptive cubature experiments.
//
// Every subcommand writes a CSV (to --out, or stdout) whose rows carry the seed and the
// resolved configuration, and a short human summary (to stdout when --out is given,
// stderr otherwise). Exit codes: 0 success, 1 suite failure, 2 input or parse error.

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "cubqmc/cubqmc.hpp"

namespace {

using namespace cubqmc;

struct CommonOptions {
  std::string family = "digital";
  double abs_tol = 0.01;
  double rel_tol = 0.0;
  std::uint64_t seed = 42;
  int m_max = 24;
  int l_star = 6;
  int r = 4;
  std::string out;
  std::string dirnum_file;
  std::string lattice_vector;
  bool no_timing = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--family", o.family, "digital or lattice")->capture_default_str();
  cmd->add_option("--abs-tol", o.abs_tol, "absolute tolerance")->capture_default_str();
  cmd->add_option("--rel-tol", o.rel_tol, "relative tolerance, in [0, 1)")->capture_default_str();
  cmd->add_option("--seed", o.seed, "base seed; run k uses seed XOR k")->capture_default_str();
  cmd->add_option("--m-max", o.m_max, "largest log2 sample size")->capture_default_str();
  cmd->add_option("--cone-lstar", o.l_star, "cone parameter l_star")->capture_default_str();
  cmd->add_option("--cone-r", o.r, "cone parameter r")->capture_default_str();
  cmd->add_option("--out", o.out, "CSV output path (default stdout)");
  cmd->add_option("--dirnum-file", o.dirnum_file, "Joe-Kuo style direction-number file");
  cmd->add_option("--lattice-vector", o.lattice_vector, "generating vector file, one integer per line");
  cmd->add_flag("--no-timing", o.no_timing, "write 0 for wall_ms so reruns are bit-identical");
}

ExperimentConfig resolve(const CommonOptions& o) {
  ExperimentConfig cfg;
  cfg.family = parse_family(o.family);
  cfg.tol = {o.abs_tol, o.rel_tol};
  cfg.cone.l_star = o.l_star;
  cfg.cone.r = o.r;
  cfg.cone.m_max = o.m_max;
  cfg.seed = o.seed;
  cfg.timing = !o.no_timing;
  if (!o.dirnum_file.empty())
    cfg.sources.directions = std::make_shared<const DirectionNumberTable>(load_direction_numbers_file(o.dirnum_file));
  if (!o.lattice_vector.empty())
    cfg.sources.lattice_vector =
        std::make_shared<const std::vector<std::uint64_t>>(load_lattice_vector_file(o.lattice_vector));
  cfg.validate();
  return cfg;
}

// CSV goes to --out when given, else stdout; the summary takes whichever is left.
struct Sinks {
  std::ofstream file;
  std::ostream* csv = &std::cout;
  std::ostream* summary = &std::cerr;

  explicit Sinks(const std::string& path) {
    if (path.empty()) return;
    file.open(path);
    if (!file) throw InputError("cannot open output file '" + path + "'");
    csv = &file;
    summary = &std::cout;
  }
};

int cmd_selftest(const CommonOptions& o, const std::string& suite) {
  resolve(o);  // surfaces malformed --dirnum-file / --lattice-vector as parse errors
  const auto results = run_selftest(suite);
  bool ok = true;
  for (const auto& r : results) {
    std::cout << r << '\n';
    ok = ok && r.passed();
  }
  return ok ? 0 : 1;
}

int cmd_mvn(const CommonOptions& o, std::size_t runs, std::size_t d_cap, std::optional<std::size_t> force_d) {
  const auto cfg = resolve(o);
  const auto rows = run_mvn(runs, d_cap, cfg, force_d);
  Sinks sinks(o.out);
  write_mvn_csv(*sinks.csv, rows, cfg);
  std::size_t ok = 0;
  for (const auto& r : rows) ok += r.tol_value <= 1.0;
  *sinks.summary << "mvn: success fraction " << success_fraction(rows) << " (" << ok << '/' << rows.size()
                 << " runs with tol <= 1), family " << to_string(cfg.family) << ", d_cap " << d_cap << '\n';
  return 0;
}

int cmd_sobol(const CommonOptions& o) {
  const auto cfg = resolve(o);
  const auto rows = run_sobol_indices(cfg);
  Sinks sinks(o.out);
  write_sobol_csv(*sinks.csv, rows, cfg);
  auto& s = *sinks.summary;
  s << std::setw(3) << "j" << std::setw(9) << "n" << std::setw(10) << "v" << std::setw(10) << "v_hat"
    << std::setw(12) << "v(mu_hat)" << std::setw(12) << "tol(v_hat)" << std::setw(14) << "tol(plug-in)" << '\n';
  s << std::fixed;
  for (const auto& r : rows)
    s << std::setw(3) << r.j << std::setw(9) << r.result.n << std::setprecision(4) << std::setw(10) << r.reference
      << std::setw(10) << r.result.v_hat << std::setw(12) << r.plug_in << std::setw(12) << r.tol_optimal
      << std::setw(14) << r.tol_plug_in << '\n';
  return 0;
}

int cmd_asian(const CommonOptions& o, std::size_t runs, bool cv, int reference_level, const std::string& spectra,
              int spectra_level) {
  const auto cfg = resolve(o);
  const AsianOption option;
  const auto rows = run_asian(option, runs, cv, cfg);
  const double reference = asian_reference(option, reference_level, cfg.family, generator_seed(cfg.seed), cfg.sources);
  Sinks sinks(o.out);
  write_asian_csv(*sinks.csv, rows, reference, cfg);
  auto& s = *sinks.summary;
  s << "asian: reference " << format_double(reference) << " from 2^" << reference_level << " points, geometric price "
    << format_double(geometric_asian_price(option)) << '\n';
  for (const auto& r : rows) {
    s << "  seed " << r.seed << ": plain n " << r.plain.n << " v_hat " << format_double(r.plain.v_hat);
    if (r.cv)
      s << "; cv n " << r.cv->result.n << " v_hat " << format_double(r.cv->result.v_hat) << " beta "
        << format_double(r.cv->fit.beta[0]);
    s << '\n';
  }
  if (!spectra.empty()) {
    std::ofstream dump(spectra);
    if (!dump) throw InputError("cannot open spectra file '" + spectra + "'");
    const double beta = write_asian_spectra(dump, option, spectra_level, cfg.family, generator_seed(cfg.seed),
                                            cfg.cone.r, cfg.sources);
    s << "  spectra at m = " << spectra_level << " written to " << spectra << " (beta " << format_double(beta)
      << ")\n";
  }
  return 0;
}

int cmd_baselines(const CommonOptions& o, const std::string& integrand, const std::string& strategy,
                  std::size_t replications, std::uint64_t n, std::size_t runs, double inflation) {
  const auto cfg = resolve(o);
  const auto kind = parse_strategy(strategy);
  const auto rows = run_baselines(integrand, kind, replications, n, runs, cfg, inflation);
  Sinks sinks(o.out);
  write_baselines_csv(*sinks.csv, rows, integrand, kind, replications, n, inflation, cfg);
  std::size_t heuristic_miss = 0, guaranteed_miss = 0;
  for (const auto& r : rows) {
    if (!r.exact) continue;
    heuristic_miss += std::abs(r.heuristic.mean - *r.exact) > r.heuristic.claimed_bound;
    guaranteed_miss += std::abs(r.guaranteed.v_hat - *r.exact) > r.guaranteed.estimates[0].err;
  }
  *sinks.summary << "baselines: " << integrand << " with " << to_string(kind) << " (R " << replications << ", n "
                 << n << ", inflation " << inflation << "): claimed bound below true error in " << heuristic_miss
                 << '/' << rows.size() << " seeds; guaranteed err below true error in " << guaranteed_miss << '/'
                 << rows.size() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive quasi-Monte Carlo cubature with data-based error bounds"};
  app.require_subcommand(1);

  CommonOptions self_o, mvn_o, sobol_o, asian_o, base_o;
  mvn_o.rel_tol = 0.05;
  sobol_o.abs_tol = 5e-3;

  auto* self = app.add_subcommand("selftest", "transform, aliasing, estimator and Parseval suites");
  add_common(self, self_o);
  std::string suite;
  self->add_option("--suite", suite, "run a single suite: transforms, aliasing, estimator, parseval");

  auto* mvn = app.add_subcommand("mvn", "random equicorrelated normal probabilities against a 1-D oracle");
  add_common(mvn, mvn_o);
  std::size_t mvn_runs = 50, d_cap = 64, force_d = 0;
  mvn->add_option("--runs", mvn_runs, "number of random instances")->capture_default_str();
  mvn->add_option("--d-cap", d_cap, "largest dimension")->capture_default_str();
  mvn->add_option("--force-d", force_d, "fix the dimension instead of drawing it");

  auto* sobol = app.add_subcommand("sobol-indices", "first-order Sobol' indices of the Bratley function");
  add_common(sobol, sobol_o);

  auto* asian = app.add_subcommand("asian", "arithmetic Asian call with optional geometric control variate");
  add_common(asian, asian_o);
  std::size_t asian_runs = 1;
  bool cv = false;
  int reference_level = 20, spectra_level = 14;
  std::string spectra;
  asian->add_option("--runs", asian_runs, "number of seeds")->capture_default_str();
  asian->add_flag("--cv", cv, "also run with the geometric control variate");
  asian->add_option("--reference-level", reference_level, "log2 points of the reference run")
      ->capture_default_str()
      ->check(CLI::Range(10, 24));
  asian->add_option("--spectra", spectra, "write coefficient magnitudes of f and h_beta to this CSV");
  asian->add_option("--spectra-level", spectra_level, "log2 points of the spectral dump")
      ->capture_default_str()
      ->check(CLI::Range(1, 24));

  auto* base = app.add_subcommand("baselines", "replication heuristics against the guaranteed engine");
  add_common(base, base_o);
  std::string integrand = "smooth", strategy = "iid-replications";
  std::size_t replications = 8, base_runs = 10;
  std::uint64_t per_rep = 1024;
  double inflation = 1.2;
  base->add_option("--integrand", integrand, "constant, smooth, spiky or bump")->capture_default_str();
  base->add_option("--strategy", strategy, "iid-replications, internal-replications or quasi-standard-error")
      ->capture_default_str();
  base->add_option("--replications", replications, "R")->capture_default_str();
  base->add_option("--n", per_rep, "points per replicate")->capture_default_str();
  base->add_option("--runs", base_runs, "number of seeds")->capture_default_str();
  base->add_option("--inflation", inflation, "multiplier on the replicate standard error")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*self) return cmd_selftest(self_o, suite);
    if (*mvn) return cmd_mvn(mvn_o, mvn_runs, d_cap, force_d ? std::optional<std::size_t>(force_d) : std::nullopt);
    if (*sobol) return cmd_sobol(sobol_o);
    if (*asian) return cmd_asian(asian_o, asian_runs, cv, reference_level, spectra, spectra_level);
    if (*base) return cmd_baselines(base_o, integrand, strategy, replications, per_rep, base_runs, inflation);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
