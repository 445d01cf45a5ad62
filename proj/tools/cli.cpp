#include "cli.hpp"

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "htsysid/distributions.hpp"
#include "htsysid/errors.hpp"
#include "htsysid/estimator.hpp"
#include "htsysid/experiment.hpp"
#include "htsysid/io.hpp"
#include "htsysid/lti.hpp"
#include "htsysid/parallel.hpp"
#include "htsysid/realization.hpp"
#include "htsysid/rng.hpp"

namespace htsysid::cli {
namespace {

constexpr std::uint64_t kTagLemmaCli = 3001;

using KvItems = std::vector<std::pair<std::string, std::string>>;

std::string num(double v) { return format_double(v); }
std::string num(int v) { return std::to_string(v); }

// ---------------------------------------------------------------------------
// Shared option groups
// ---------------------------------------------------------------------------

struct SystemOpts {
  std::string file;
  std::optional<std::uint64_t> seed;
  int n = 3;
  int m = 2;
  int p = 2;
  double rho = 0.8;
};

void add_system_options(CLI::App* cmd, SystemOpts& o) {
  cmd->add_option("--system-file", o.file,
                  "Truth system file (sections A, B, C, D)");
  cmd->add_option("--system-seed", o.seed,
                  "Draw a random truth system from this seed instead");
  cmd->add_option("--sys-n", o.n, "State dimension for --system-seed")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--sys-m", o.m, "Input dimension for --system-seed")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--sys-p", o.p, "Output dimension for --system-seed")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--sys-rho", o.rho, "Spectral radius for --system-seed")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

LtiSystem resolve_system(const SystemOpts& o) {
  if (!o.file.empty() && o.seed.has_value()) {
    throw ConfigError("--system-file and --system-seed are mutually exclusive");
  }
  if (!o.file.empty()) return load_system(o.file);
  if (o.seed.has_value()) return seeded_system(o.n, o.m, o.p, *o.seed, o.rho);
  return default_system();
}

struct DistOpts {
  std::string kind = "gaussian";
  double scale = 1.0;
  double param = 0.0;
};

void add_dist_options(CLI::App* cmd, const std::string& name,
                      const std::string& what, DistOpts& o) {
  cmd->add_option("--" + name + "-kind", o.kind, what + " distribution kind")
      ->check(CLI::IsMember({"gaussian", "student_t", "three_point"}))
      ->capture_default_str();
  cmd->add_option("--" + name + "-scale", o.scale, what + " standard deviation")
      ->capture_default_str();
  cmd->add_option("--" + name + "-param", o.param,
                  what + " shape parameter (nu for student_t, tail mass p for "
                         "three_point)");
}

DistributionSpec resolve_spec(const DistOpts& o) {
  switch (dist_kind_from_string(o.kind)) {
    case DistKind::gaussian:
      return DistributionSpec::gaussian(o.scale);
    case DistKind::student_t:
      return DistributionSpec::student_t(o.param, o.scale);
    case DistKind::three_point:
      return DistributionSpec::three_point(o.param, o.scale);
  }
  throw ConfigError("unknown distribution kind: " + o.kind);
}

struct NoiseOpts {
  DistOpts u;
  DistOpts w;
  DistOpts v;
  bool noiseless = false;
};

void add_noise_options(CLI::App* cmd, NoiseOpts& o) {
  o.w.scale = 0.1;
  o.v.scale = 0.1;
  add_dist_options(cmd, "u", "Input", o.u);
  add_dist_options(cmd, "w", "Process noise", o.w);
  add_dist_options(cmd, "v", "Measurement noise", o.v);
  cmd->add_flag("--noiseless", o.noiseless,
                "Zero out process and measurement noise");
}

NoiseSpecs resolve_noise(const NoiseOpts& o) {
  return NoiseSpecs{resolve_spec(o.u), resolve_spec(o.w), resolve_spec(o.v)};
}

DeficientBucketPolicy policy_from_string(const std::string& s) {
  if (s == "error") return DeficientBucketPolicy::error;
  if (s == "min_norm") return DeficientBucketPolicy::min_norm;
  if (s == "drop") return DeficientBucketPolicy::drop;
  throw ConfigError("unknown deficient-bucket policy: " + s);
}

EstimatorMode mode_from_string(const std::string& s) {
  if (s == "boosted") return EstimatorMode::boosted;
  if (s == "single_ols") return EstimatorMode::single_ols;
  throw ConfigError("unknown estimator mode: " + s);
}

// The --config option is documented here but consumed before CLI11 parsing:
// run() strips it from the argument list, reads the flat key=value file, and
// injects --key=value tokens for every option the command line did not set.
void add_config_option(CLI::App* cmd) {
  cmd->add_option("--config", "Read options from a key=value file "
                              "(command-line flags take precedence)");
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::pair<std::string, std::string>> read_config_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::vector<std::pair<std::string, std::string>> items;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected key=value, got '" + stripped + "'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
    }
    items.emplace_back(key, value);
  }
  return items;
}

/// Strips --config from `tokens`, then appends --key=value for each config
/// entry whose option the command line leaves unset. Returns the final
/// argument list for CLI11.
std::vector<std::string> apply_config(const CLI::App& app,
                                      const std::vector<std::string>& tokens) {
  std::vector<std::string> args;
  std::string config_path;
  std::size_t sub_pos = std::string::npos;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& tok = tokens[i];
    if (tok == "--config" && i + 1 < tokens.size()) {
      config_path = tokens[++i];
      continue;
    }
    if (tok.rfind("--config=", 0) == 0) {
      config_path = tok.substr(9);
      continue;
    }
    if (sub_pos == std::string::npos && !tok.empty() && tok[0] != '-') {
      sub_pos = args.size();
    }
    args.push_back(tok);
  }
  if (config_path.empty()) return args;
  if (sub_pos == std::string::npos) {
    throw ConfigError("--config requires a subcommand");
  }
  const CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(args[sub_pos]);
  } catch (const CLI::Error&) {
    return args;  // unknown subcommand; let CLI11 report it
  }
  std::set<std::string> given;
  for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
    if (args[i].rfind("--", 0) != 0) continue;
    const std::string name = args[i].substr(2, args[i].find('=') - 2);
    given.insert(name);
  }
  for (const auto& [key, value] : read_config_file(config_path)) {
    if (key == "config" || given.count(key) > 0) continue;
    if (sub->get_option_no_throw("--" + key) == nullptr) {
      throw ConfigError(config_path + ": unknown option '" + key + "' for '" +
                        args[sub_pos] + "'");
    }
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOpts {
  SystemOpts sys;
  NoiseOpts noise;
  int T = 5;
  int N = 64;
  std::uint64_t seed = 1;
  std::string out;
};

void setup_simulate(CLI::App& app, SimulateOpts& o) {
  CLI::App* cmd = app.add_subcommand(
      "simulate", "Sample rollouts from a linear system and write a dataset");
  add_config_option(cmd);
  add_system_options(cmd, o.sys);
  add_noise_options(cmd, o.noise);
  cmd->add_option("--T", o.T, "Rollout horizon")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--N", o.N, "Number of rollouts")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Master seed")->capture_default_str();
  cmd->add_option("--out", o.out, "Output dataset path")->required();
  cmd->callback([&o]() {
    const LtiSystem sys = resolve_system(o.sys);
    const NoiseSpecs specs = resolve_noise(o.noise);
    const std::vector<Rollout> data = simulate_dataset(
        sys, o.N, o.T, specs, RngKey(o.seed), o.noise.noiseless);
    save_dataset(o.out, data, sys.state_dim());
    std::cout << "wrote " << o.N << " rollouts (T=" << o.T << ", m="
              << sys.input_dim() << ", p=" << sys.output_dim() << ") to "
              << o.out << "\n";
  });
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

struct EstimateOpts {
  std::string in;
  std::string out;
  std::string diag_out;
  double delta = 0.36787944117144233;
  std::string mode = "boosted";
  std::string policy = "error";
  bool strict = false;
  std::optional<double> kurtosis;
  double q = 0.125;
  std::optional<std::uint64_t> shuffle_seed;
  double median_tol = 1e-9;
  int median_max_iter = 1000;
  double rank_tol = 1e-10;
};

void setup_estimate(CLI::App& app, EstimateOpts& o) {
  CLI::App* cmd = app.add_subcommand(
      "estimate",
      "Estimate the Markov parameter matrix from a dataset (bucketed OLS + "
      "geometric-median boosting)");
  add_config_option(cmd);
  cmd->add_option("--in", o.in, "Input dataset path")->required();
  cmd->add_option("--out", o.out, "Write the estimated Markov matrix here");
  cmd->add_option("--diag-out", o.diag_out, "Write diagnostics key=value file");
  cmd->add_option("--delta", o.delta, "Confidence level in (0, 1)")
      ->capture_default_str();
  cmd->add_option("--mode", o.mode, "Estimator mode")
      ->check(CLI::IsMember({"boosted", "single_ols"}))
      ->capture_default_str();
  cmd->add_option("--policy", o.policy,
                  "Deficient-bucket policy: error raises, min_norm substitutes "
                  "the minimum-norm solution, drop discards the bucket")
      ->check(CLI::IsMember({"error", "min_norm", "drop"}))
      ->capture_default_str();
  cmd->add_flag("--strict", o.strict,
                "Require M to clear the finite-sample bucket threshold");
  cmd->add_option("--kurtosis", o.kurtosis,
                  "Input kurtosis ratio E[u^4]/sigma_u^4 (needed by --strict)");
  cmd->add_option("--q", o.q, "Per-bucket failure budget for --strict")
      ->capture_default_str();
  cmd->add_option("--shuffle-seed", o.shuffle_seed,
                  "Shuffle rollouts into buckets with this seed");
  cmd->add_option("--median-tol", o.median_tol,
                  "Geometric-median relative tolerance")
      ->capture_default_str();
  cmd->add_option("--median-max-iter", o.median_max_iter,
                  "Geometric-median iteration cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--rank-tol", o.rank_tol,
                  "Relative eigenvalue tolerance for the bucket Gram matrix")
      ->capture_default_str();
  cmd->callback([&o]() {
    const DatasetFile file = load_dataset(o.in);
    const int N = static_cast<int>(file.rollouts.size());
    KvItems kv;
    kv.emplace_back("mode", o.mode);
    kv.emplace_back("N", num(N));
    if (mode_from_string(o.mode) == EstimatorMode::single_ols) {
      OlsOptions oo;
      oo.rank_rel_tol = o.rank_tol;
      oo.policy = policy_from_string(o.policy);
      const MarkovMatrix g = single_ols(file.rollouts, oo);
      kv.emplace_back("K", "1");
      kv.emplace_back("M", num(N));
      kv.emplace_back("discarded", "0");
      if (!o.out.empty()) save_markov(o.out, g);
    } else {
      EstimateOptions eo;
      eo.strictness = o.strict ? Strictness::strict : Strictness::permissive;
      eo.deficient_policy = policy_from_string(o.policy);
      eo.input_kurtosis = o.kurtosis;
      eo.strict_q = o.q;
      eo.shuffle_seed = o.shuffle_seed;
      eo.median_rel_tol = o.median_tol;
      eo.median_max_iter = o.median_max_iter;
      eo.rank_rel_tol = o.rank_tol;
      const BoostedEstimate est = estimate(file.rollouts, o.delta, eo);
      kv.emplace_back("K", num(est.plan.K));
      kv.emplace_back("M", num(est.plan.M));
      kv.emplace_back("discarded", num(est.plan.discarded));
      kv.emplace_back("deficient_buckets", num(est.deficient_buckets));
      kv.emplace_back("dropped_buckets", num(est.dropped_buckets));
      kv.emplace_back("median_iterations", num(est.median_iterations));
      kv.emplace_back("median_residual", num(est.median_residual));
      if (!o.out.empty()) save_markov(o.out, est.g_hat);
    }
    std::cout << render_kv(kv);
    if (!o.diag_out.empty()) save_kv(o.diag_out, kv);
  });
}

// ---------------------------------------------------------------------------
// realize
// ---------------------------------------------------------------------------

struct RealizeOpts {
  std::string in;
  std::string out;
  int order = 0;
  int t1 = 0;
  int t2 = 0;
  int block_width = 0;
  double rank_tol = 1e-8;
};

void setup_realize(CLI::App& app, RealizeOpts& o) {
  CLI::App* cmd = app.add_subcommand(
      "realize", "Ho-Kalman realization (A, B, C, D) from a Markov matrix");
  add_config_option(cmd);
  cmd->add_option("--in", o.in, "Input Markov matrix path")->required();
  cmd->add_option("--out", o.out, "Write sections A, B, C, D here")->required();
  cmd->add_option("--order", o.order, "Realization order n")
      ->check(CLI::PositiveNumber)
      ->required();
  cmd->add_option("--t1", o.t1, "Hankel block rows (0 = balanced default)")
      ->capture_default_str();
  cmd->add_option("--t2", o.t2, "Hankel block columns (0 = balanced default)")
      ->capture_default_str();
  cmd->add_option("--block-width", o.block_width,
                  "Override the Markov block width m (0 = from file header)")
      ->capture_default_str();
  cmd->add_option("--rank-tol", o.rank_tol,
                  "Require sigma_n >= rank-tol * sigma_1 of the Hankel matrix")
      ->capture_default_str();
  cmd->callback([&o]() {
    const MarkovMatrix g = load_markov(o.in, o.block_width);
    if ((o.t1 == 0) != (o.t2 == 0)) {
      throw ConfigError("provide both --t1 and --t2, or neither");
    }
    const bool balanced = o.t1 == 0;
    const RealizationResult r =
        balanced ? ho_kalman(g, o.order, o.rank_tol)
                 : ho_kalman(g, o.order, o.t1, o.t2, o.rank_tol);
    save_sections(o.out, {{"A", r.A}, {"B", r.B}, {"C", r.C}, {"D", r.D}});
    const int auto_t = (g.block_count() - 1) / 2;
    KvItems kv;
    kv.emplace_back("order", num(o.order));
    kv.emplace_back("t1", num(balanced ? auto_t : o.t1));
    kv.emplace_back("t2", num(balanced ? auto_t : o.t2));
    std::ostringstream sv;
    for (Eigen::Index i = 0; i < r.hankel_singular_values.size(); ++i) {
      if (i > 0) sv << ' ';
      sv << format_double(r.hankel_singular_values(i));
    }
    kv.emplace_back("hankel_singular_values", sv.str());
    std::cout << render_kv(kv);
  });
}

// ---------------------------------------------------------------------------
// bound
// ---------------------------------------------------------------------------

struct BoundOpts {
  SystemOpts sys;
  int n = 3;
  int m = 2;
  int p = 2;
  int T = 5;
  double su = 1.0;
  double sw = 0.1;
  double sv = 0.1;
  std::optional<double> f_norm;
  double delta = 0.36787944117144233;
  int N = 64;
  double c1 = 1.0;
  double c2 = 1.0;
};

void setup_bound(CLI::App& app, BoundOpts& o) {
  CLI::App* cmd = app.add_subcommand(
      "bound", "Evaluate the finite-sample spectral-norm error bound");
  add_config_option(cmd);
  add_system_options(cmd, o.sys);
  CLI::Option* n_opt =
      cmd->add_option("--n", o.n, "State dimension")->capture_default_str();
  CLI::Option* m_opt =
      cmd->add_option("--m", o.m, "Input dimension")->capture_default_str();
  CLI::Option* p_opt =
      cmd->add_option("--p", o.p, "Output dimension")->capture_default_str();
  cmd->add_option("--T", o.T, "Horizon")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--su", o.su, "Input standard deviation")
      ->capture_default_str();
  cmd->add_option("--sw", o.sw, "Process-noise standard deviation")
      ->capture_default_str();
  cmd->add_option("--sv", o.sv, "Measurement-noise standard deviation")
      ->capture_default_str();
  CLI::Option* f_opt = cmd->add_option(
      "--f-norm", o.f_norm,
      "Spectral norm of the process-noise response F (computed from the "
      "system when omitted)");
  cmd->add_option("--delta", o.delta, "Confidence level in (0, 1)")
      ->capture_default_str();
  cmd->add_option("--N", o.N, "Number of rollouts")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--c1", o.c1, "Measurement-noise constant")
      ->capture_default_str();
  cmd->add_option("--c2", o.c2, "Process-noise constant")
      ->capture_default_str();
  cmd->callback([&o, n_opt, m_opt, p_opt, f_opt]() {
    int n = o.n;
    int m = o.m;
    int p = o.p;
    double f_norm = 0.0;
    if (f_opt->count() > 0) {
      f_norm = *o.f_norm;
    } else {
      if (n_opt->count() || m_opt->count() || p_opt->count()) {
        throw ConfigError(
            "--n/--m/--p require an explicit --f-norm; without one the "
            "dimensions and F come from the system options");
      }
      const LtiSystem sys = resolve_system(o.sys);
      n = sys.state_dim();
      m = sys.input_dim();
      p = sys.output_dim();
      f_norm = f_matrix_norm(sys, o.T);
    }
    const double value = theorem1_bound(n, m, p, o.T, o.sw, o.sv, o.su, f_norm,
                                        o.delta, o.N, o.c1, o.c2);
    KvItems kv;
    kv.emplace_back("f_norm", num(f_norm));
    kv.emplace_back("bound", num(value));
    std::cout << render_kv(kv);
  });
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

struct ExperimentOpts {
  SystemOpts sys;
  NoiseOpts noise;
  std::string out_dir;
  int T = 6;
  double delta = 0.36787944117144233;
  std::vector<int> n_grid = {64, 128, 256, 512, 1024};
  int trials = 50;
  std::string mode = "boosted";
  std::string policy = "min_norm";
  bool strict = false;
  std::uint64_t seed = 1;
  double c1 = 1.0;
  double c2 = 1.0;
  std::optional<double> eps;
};

void setup_experiment(CLI::App& app, ExperimentOpts& o) {
  CLI::App* cmd = app.add_subcommand(
      "experiment",
      "Monte Carlo error study over a grid of dataset sizes; writes "
      "errors.csv, summary.csv, report.json");
  add_config_option(cmd);
  add_system_options(cmd, o.sys);
  add_noise_options(cmd, o.noise);
  cmd->add_option("--out-dir", o.out_dir, "Output directory")->required();
  cmd->add_option("--T", o.T, "Rollout horizon")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--delta", o.delta, "Confidence level in (0, 1)")
      ->capture_default_str();
  cmd->add_option("--n-grid", o.n_grid, "Dataset sizes (comma separated)")
      ->delimiter(',');
  cmd->add_option("--trials", o.trials, "Trials per grid point")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--mode", o.mode, "Estimator mode")
      ->check(CLI::IsMember({"boosted", "single_ols"}))
      ->capture_default_str();
  cmd->add_option("--policy", o.policy, "Deficient-bucket policy")
      ->check(CLI::IsMember({"error", "min_norm", "drop"}))
      ->capture_default_str();
  cmd->add_flag("--strict", o.strict,
                "Require M to clear the finite-sample bucket threshold");
  cmd->add_option("--seed", o.seed, "Master seed")->capture_default_str();
  cmd->add_option("--c1", o.c1, "Measurement-noise constant")
      ->capture_default_str();
  cmd->add_option("--c2", o.c2, "Process-noise constant")
      ->capture_default_str();
  cmd->add_option("--eps", o.eps,
                  "Failure threshold override (defaults to the bound)");
  cmd->callback([&o]() {
    ExperimentConfig config;
    config.system = resolve_system(o.sys);
    config.T = o.T;
    config.specs = resolve_noise(o.noise);
    config.noiseless = o.noise.noiseless;
    config.delta = o.delta;
    config.n_grid = o.n_grid;
    config.trials = o.trials;
    config.mode = mode_from_string(o.mode);
    config.strictness = o.strict ? Strictness::strict : Strictness::permissive;
    config.deficient_policy = policy_from_string(o.policy);
    config.seed = o.seed;
    config.c1 = o.c1;
    config.c2 = o.c2;
    config.reference_eps = o.eps;
    config.output_dir = o.out_dir;
    const ExperimentReport report = run_experiment(config);
    std::cout << "config_hash = " << report.config_hash << "\n";
    for (const GridSummary& row : report.summary) {
      std::cout << "N=" << row.N << " median_err=" << num(row.median_err)
                << " q99_err=" << num(row.q99_err)
                << " fail_frac=" << num(row.fail_frac)
                << " bound=" << num(row.bound) << "\n";
    }
    std::cout << "slope = "
              << (report.slope_defined ? num(report.slope)
                                       : std::string("undefined"))
              << "\n";
    std::cout << "wrote errors.csv, summary.csv, report.json to " << o.out_dir
              << "\n";
  });
}

// ---------------------------------------------------------------------------
// delta-sweep
// ---------------------------------------------------------------------------

struct DeltaSweepOpts {
  SystemOpts sys;
  NoiseOpts noise;
  std::string out_dir;
  int T = 6;
  std::vector<double> deltas = {0.5, 0.25, 0.1};
  int n_factor = 64;
  int trials = 200;
  std::string policy = "min_norm";
  std::uint64_t seed = 1;
  double c1 = 1.0;
  double c2 = 1.0;
};

void setup_delta_sweep(CLI::App& app, DeltaSweepOpts& o) {
  CLI::App* cmd = app.add_subcommand(
      "delta-sweep",
      "Calibrate the bound constant on the largest delta and check failure "
      "fractions across confidence levels; writes delta_sweep.csv, "
      "report.json");
  add_config_option(cmd);
  add_system_options(cmd, o.sys);
  add_noise_options(cmd, o.noise);
  cmd->add_option("--out-dir", o.out_dir, "Output directory")->required();
  cmd->add_option("--T", o.T, "Rollout horizon")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--deltas", o.deltas, "Confidence levels (comma separated)")
      ->delimiter(',');
  cmd->add_option("--n-factor", o.n_factor,
                  "Rollouts per bucket; each leg runs at N = n-factor * K")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--trials", o.trials, "Trials per leg")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--policy", o.policy, "Deficient-bucket policy")
      ->check(CLI::IsMember({"error", "min_norm", "drop"}))
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Master seed")->capture_default_str();
  cmd->add_option("--c1", o.c1, "Measurement-noise constant")
      ->capture_default_str();
  cmd->add_option("--c2", o.c2, "Process-noise constant")
      ->capture_default_str();
  cmd->callback([&o]() {
    DeltaSweepConfig config;
    config.system = resolve_system(o.sys);
    config.T = o.T;
    config.specs = resolve_noise(o.noise);
    config.noiseless = o.noise.noiseless;
    config.deltas = o.deltas;
    config.n_factor = o.n_factor;
    config.trials = o.trials;
    config.deficient_policy = policy_from_string(o.policy);
    config.seed = o.seed;
    config.c1 = o.c1;
    config.c2 = o.c2;
    config.output_dir = o.out_dir;
    const DeltaSweepReport report = run_delta_sweep(config);
    std::cout << "config_hash = " << report.config_hash << "\n";
    std::cout << "pilot_delta = " << num(report.pilot_delta) << "\n";
    std::cout << "calibrated_c = " << num(report.calibrated_c) << "\n";
    for (const DeltaLeg& leg : report.legs) {
      std::cout << "delta=" << num(leg.delta) << " K=" << leg.K
                << " M=" << leg.M << " N=" << leg.N << " eps=" << num(leg.eps)
                << " fail_frac=" << num(leg.fail_frac)
                << " median_err=" << num(leg.median_err) << "\n";
    }
    std::cout << "wrote delta_sweep.csv, report.json to " << o.out_dir << "\n";
  });
}

// ---------------------------------------------------------------------------
// lemma-check
// ---------------------------------------------------------------------------

struct LemmaCheckOpts {
  NoiseOpts noise;
  int n = 1;
  int m = 1;
  int p = 1;
  int T = 2;
  int M = 1536;
  double q = 0.125;
  int draws = 100;
  std::uint64_t seed = 1;
  std::string out;
};

void setup_lemma_check(CLI::App& app, LemmaCheckOpts& o) {
  CLI::App* cmd = app.add_subcommand(
      "lemma-check",
      "Monte Carlo frequencies of the three per-bucket concentration events "
      "behind the error bound (white-box; uses recorded noise)");
  add_config_option(cmd);
  add_noise_options(cmd, o.noise);
  cmd->add_option("--n", o.n, "State dimension")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--m", o.m, "Input dimension")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--p", o.p, "Output dimension")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--T", o.T, "Rollout horizon")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--M", o.M, "Rollouts per bucket draw")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--q", o.q, "Per-bucket failure budget")
      ->capture_default_str();
  cmd->add_option("--draws", o.draws, "Number of independent bucket draws")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Master seed")->capture_default_str();
  cmd->add_option("--out", o.out, "Also write the report to this file");
  cmd->callback([&o]() {
    // The three events involve only inputs and recorded noise, never the
    // system response, so a zero system of the right dimensions suffices.
    const LtiSystem sys(Eigen::MatrixXd::Zero(o.n, o.n),
                        Eigen::MatrixXd::Zero(o.n, o.m),
                        Eigen::MatrixXd::Zero(o.p, o.n),
                        Eigen::MatrixXd::Zero(o.p, o.m));
    const NoiseSpecs specs = resolve_noise(o.noise);
    const RngKey master = RngKey(o.seed).child(kTagLemmaCli);
    std::vector<LemmaDiagnostics> results(o.draws);
    parallel_for(o.draws, [&](int d) {
      const std::vector<Rollout> bucket =
          simulate_dataset(sys, o.M, o.T, specs, master.child(d));
      results[d] = lemma_diagnostics(bucket, specs.u.scale, specs.w.scale,
                                     specs.v.scale, o.q);
    });
    int exc = 0;
    int proc = 0;
    int meas = 0;
    for (const LemmaDiagnostics& r : results) {
      exc += r.excitation.holds ? 1 : 0;
      proc += r.process_noise.holds ? 1 : 0;
      meas += r.measurement_noise.holds ? 1 : 0;
    }
    const double denom = static_cast<double>(o.draws);
    KvItems kv;
    kv.emplace_back("draws", num(o.draws));
    kv.emplace_back("M", num(o.M));
    kv.emplace_back("T", num(o.T));
    kv.emplace_back("m", num(o.m));
    kv.emplace_back("n", num(o.n));
    kv.emplace_back("p", num(o.p));
    kv.emplace_back("q", num(o.q));
    const std::optional<double> kurt = kurtosis_ratio(resolve_spec(o.noise.u));
    if (kurt.has_value()) {
      const int threshold = strict_bucket_threshold(o.m, o.T, *kurt, o.q);
      kv.emplace_back("strict_threshold", num(threshold));
      kv.emplace_back("strict_ok", o.M >= threshold ? "true" : "false");
    } else {
      kv.emplace_back("strict_threshold", "undefined");
      kv.emplace_back("strict_ok", "false");
    }
    kv.emplace_back("excitation_freq", num(exc / denom));
    kv.emplace_back("process_freq", num(proc / denom));
    kv.emplace_back("measurement_freq", num(meas / denom));
    kv.emplace_back("excitation_rhs", num(results.front().excitation.rhs));
    kv.emplace_back("process_rhs", num(results.front().process_noise.rhs));
    kv.emplace_back("measurement_rhs",
                    num(results.front().measurement_noise.rhs));
    std::cout << render_kv(kv);
    if (!o.out.empty()) save_kv(o.out, kv);
  });
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{
      "htsysid - robust identification of partially observed linear systems "
      "from heavy-tailed data"};
  app.set_version_flag("--version", "htsysid 0.1.0");
  app.require_subcommand(1);
  app.footer(
      "Exit codes: 0 success, 2 usage error, 3 configuration error, 4 I/O "
      "error, 5 computation error.\n"
      "HTSYSID_WORKERS limits the worker thread count.");

  SimulateOpts simulate_opts;
  EstimateOpts estimate_opts;
  RealizeOpts realize_opts;
  BoundOpts bound_opts;
  ExperimentOpts experiment_opts;
  DeltaSweepOpts sweep_opts;
  LemmaCheckOpts lemma_opts;
  setup_simulate(app, simulate_opts);
  setup_estimate(app, estimate_opts);
  setup_realize(app, realize_opts);
  setup_bound(app, bound_opts);
  setup_experiment(app, experiment_opts);
  setup_delta_sweep(app, sweep_opts);
  setup_lemma_check(app, lemma_opts);

  try {
    const std::vector<std::string> tokens(argv + (argc > 0 ? 1 : 0),
                                          argv + argc);
    const std::vector<std::string> args = apply_config(app, tokens);
    std::vector<const char*> cargv;
    cargv.reserve(args.size() + 1);
    cargv.push_back(argc > 0 ? argv[0] : "htsysid");
    for (const std::string& a : args) cargv.push_back(a.c_str());
    app.parse(static_cast<int>(cargv.size()), cargv.data());
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::FileError& e) {
    app.exit(e);
    return 3;
  } catch (const CLI::ConfigError& e) {
    app.exit(e);
    return 3;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("htsysid");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace htsysid::cli
