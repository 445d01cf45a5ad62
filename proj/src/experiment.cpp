#include "htsysid/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "htsysid/errors.hpp"
#include "htsysid/io.hpp"
#include "htsysid/parallel.hpp"

namespace htsysid {

namespace {

// Child-key context tags (must never collide with rollout indices, which
// live one level deeper in the key tree).
constexpr std::uint64_t kTagExperiment = 1001;
constexpr std::uint64_t kTagSweep = 1002;

std::string spec_string(const DistributionSpec& s) {
  return to_string(s.kind) + "(scale=" + format_double(s.scale) +
         ",param=" + format_double(s.param) + ")";
}

std::string matrix_string(const Eigen::MatrixXd& M) {
  std::string out = std::to_string(M.rows()) + "x" + std::to_string(M.cols()) + ":";
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      out += format_double(M(i, j));
      out += ',';
    }
  return out;
}

std::string system_string(const LtiSystem& sys) {
  return "A=" + matrix_string(sys.A) + ";B=" + matrix_string(sys.B) +
         ";C=" + matrix_string(sys.C) + ";D=" + matrix_string(sys.D);
}

nlohmann::json spec_json(const DistributionSpec& s) {
  return {{"kind", to_string(s.kind)}, {"scale", s.scale}, {"param", s.param}};
}

nlohmann::json matrix_json(const Eigen::MatrixXd& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json system_json(const LtiSystem& sys) {
  return {{"n", sys.state_dim()},   {"m", sys.input_dim()},
          {"p", sys.output_dim()},  {"A", matrix_json(sys.A)},
          {"B", matrix_json(sys.B)}, {"C", matrix_json(sys.C)},
          {"D", matrix_json(sys.D)}};
}

std::ofstream open_result_file(const std::string& dir, const std::string& name,
                               const std::string& config_hash,
                               const std::string& columns) {
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << "# config-hash: " << config_hash << '\n' << columns << '\n';
  return f;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw IoError("cannot create output directory '" + dir +
                  "': " + ec.message());
}

void write_json(const std::string& dir, const nlohmann::json& j) {
  const auto path = std::filesystem::path(dir) / "report.json";
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << j.dump(2) << '\n';
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

struct TrialStats {
  std::vector<double> errs;
  double mean = 0.0;
  double median = 0.0;
  double q99 = 0.0;
};

TrialStats summarize(const std::vector<double>& errs) {
  TrialStats s;
  s.errs = errs;
  for (const double e : errs) s.mean += e;
  s.mean /= static_cast<double>(errs.size());
  s.median = median_of(errs);
  s.q99 = quantile_upper(errs, 0.99);
  return s;
}

}  // namespace

std::string to_string(EstimatorMode mode) {
  return mode == EstimatorMode::boosted ? "boosted" : "single_ols";
}

std::string to_string(DeficientBucketPolicy policy) {
  switch (policy) {
    case DeficientBucketPolicy::error: return "error";
    case DeficientBucketPolicy::min_norm: return "min_norm";
    case DeficientBucketPolicy::drop: return "drop";
  }
  return "unknown";
}

std::string to_string(Strictness strictness) {
  return strictness == Strictness::strict ? "strict" : "permissive";
}

double fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2)
    throw ConfigError("fit_loglog_slope: need at least two points");
  double sx = 0, sy = 0;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0))
      throw ConfigError("fit_loglog_slope: coordinates must be positive");
    sx += std::log(x);
    sy += std::log(y);
  }
  const double mx = sx / points.size();
  const double my = sy / points.size();
  double sxx = 0, sxy = 0;
  for (const auto& [x, y] : points) {
    const double dx = std::log(x) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y) - my);
  }
  if (sxx == 0.0) throw ConfigError("fit_loglog_slope: x values all equal");
  return sxy / sxx;
}

double quantile_upper(std::vector<double> values, double q) {
  if (values.empty()) throw ConfigError("quantile_upper: no values");
  if (!(q > 0.0) || q > 1.0)
    throw ConfigError("quantile_upper: q must lie in (0, 1]");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto idx = static_cast<long>(std::ceil(q * n)) - 1;
  idx = std::max(0l, std::min(idx, static_cast<long>(values.size()) - 1));
  return values[static_cast<std::size_t>(idx)];
}

double median_of(std::vector<double> values) {
  if (values.empty()) throw ConfigError("median_of: no values");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string canonical_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "T=" << c.T << '\n'
     << "c1=" << format_double(c.c1) << '\n'
     << "c2=" << format_double(c.c2) << '\n'
     << "delta=" << format_double(c.delta) << '\n'
     << "kind=experiment" << '\n'
     << "mode=" << to_string(c.mode) << '\n';
  os << "n_grid=";
  for (std::size_t i = 0; i < c.n_grid.size(); ++i)
    os << (i ? "," : "") << c.n_grid[i];
  os << '\n';
  os << "noiseless=" << (c.noiseless ? 1 : 0) << '\n'
     << "policy=" << to_string(c.deficient_policy) << '\n'
     << "reference_eps="
     << (c.reference_eps ? format_double(*c.reference_eps) : "auto") << '\n'
     << "seed=" << c.seed << '\n'
     << "strictness=" << to_string(c.strictness) << '\n'
     << "system=" << system_string(c.system) << '\n'
     << "trials=" << c.trials << '\n'
     << "u=" << spec_string(c.specs.u) << '\n'
     << "v=" << spec_string(c.specs.v) << '\n'
     << "w=" << spec_string(c.specs.w) << '\n';
  return os.str();
}

std::string canonical_config(const DeltaSweepConfig& c) {
  std::ostringstream os;
  os << "T=" << c.T << '\n'
     << "c1=" << format_double(c.c1) << '\n'
     << "c2=" << format_double(c.c2) << '\n';
  os << "deltas=";
  for (std::size_t i = 0; i < c.deltas.size(); ++i)
    os << (i ? "," : "") << format_double(c.deltas[i]);
  os << '\n';
  os << "kind=delta_sweep" << '\n'
     << "n_factor=" << c.n_factor << '\n'
     << "noiseless=" << (c.noiseless ? 1 : 0) << '\n'
     << "policy=" << to_string(c.deficient_policy) << '\n'
     << "seed=" << c.seed << '\n'
     << "system=" << system_string(c.system) << '\n'
     << "trials=" << c.trials << '\n'
     << "u=" << spec_string(c.specs.u) << '\n'
     << "v=" << spec_string(c.specs.v) << '\n'
     << "w=" << spec_string(c.specs.w) << '\n';
  return os.str();
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  if (config.T < 1) throw ConfigError("experiment: T must be >= 1");
  if (config.trials < 1) throw ConfigError("experiment: trials must be >= 1");
  if (config.n_grid.empty()) throw ConfigError("experiment: empty N grid");
  for (const int N : config.n_grid)
    if (N < 1) throw ConfigError("experiment: grid sizes must be >= 1");
  config.specs.u.validate();
  config.specs.w.validate();
  config.specs.v.validate();

  const MarkovMatrix g_true = true_markov(config.system, config.T);
  const double f_norm = f_matrix_norm(config.system, config.T);
  const double sigma_w = config.noiseless ? 0.0 : config.specs.w.scale;
  const double sigma_v = config.noiseless ? 0.0 : config.specs.v.scale;

  ExperimentReport report;
  report.config_hash = fnv1a_hex(canonical_config(config));

  const bool writing = !config.output_dir.empty();
  std::ofstream errors_csv, summary_csv;
  if (writing) {
    ensure_dir(config.output_dir);
    errors_csv = open_result_file(config.output_dir, "errors.csv",
                                  report.config_hash,
                                  "N,trial,err_spec,err_fro");
    summary_csv = open_result_file(config.output_dir, "summary.csv",
                                   report.config_hash,
                                   "N,median_err,q99_err,fail_frac,bound");
  }

  const RngKey master = RngKey(config.seed).child(kTagExperiment);
  for (const int N : config.n_grid) {
    const double bound = config.reference_eps
                             ? *config.reference_eps
                             : theorem1_bound(config.system.state_dim(),
                                              config.system.input_dim(),
                                              config.system.output_dim(),
                                              config.T, sigma_w, sigma_v,
                                              config.specs.u.scale, f_norm,
                                              config.delta, N, config.c1,
                                              config.c2);
    std::vector<std::optional<TrialRecord>> slots(config.trials);
    auto flush = [&] {
      if (!writing) return;
      for (const auto& slot : slots)
        if (slot)
          errors_csv << slot->N << ',' << slot->trial << ','
                     << format_double(slot->err_spec) << ','
                     << format_double(slot->err_fro) << '\n';
      errors_csv.flush();
    };

    auto run_trial = [&](int r) {
      const RngKey key = master.child(N).child(r);
      const auto dataset = simulate_dataset(config.system, N, config.T,
                                            config.specs, key, config.noiseless);
      TrialRecord rec;
      rec.N = N;
      rec.trial = r;
      MarkovMatrix g_hat;
      if (config.mode == EstimatorMode::boosted) {
        EstimateOptions opts;
        opts.strictness = config.strictness;
        opts.deficient_policy = config.deficient_policy;
        opts.input_kurtosis = kurtosis_ratio(config.specs.u);
        BoostedEstimate est = estimate(dataset, config.delta, opts);
        g_hat = std::move(est.g_hat);
        rec.deficient_buckets = est.deficient_buckets;
      } else {
        OlsOptions opts;
        opts.policy = config.deficient_policy;
        g_hat = single_ols(dataset, opts);
      }
      const Eigen::MatrixXd diff = g_hat.entries - g_true.entries;
      rec.err_spec = spectral_norm(diff);
      rec.err_fro = diff.norm();
      slots[r] = rec;
    };
    try {
      parallel_for(config.trials, run_trial);
    } catch (...) {
      flush();  // keep whatever completed before surfacing the failure
      throw;
    }
    flush();

    std::vector<double> errs;
    errs.reserve(config.trials);
    GridSummary gs;
    gs.N = N;
    gs.trials = config.trials;
    gs.bound = bound;
    for (const auto& slot : slots) {
      report.trials.push_back(*slot);
      errs.push_back(slot->err_spec);
      gs.deficient_buckets_total += slot->deficient_buckets;
      if (slot->err_spec > bound) gs.fail_frac += 1.0;
    }
    gs.fail_frac /= static_cast<double>(config.trials);
    const TrialStats stats = summarize(errs);
    gs.mean_err = stats.mean;
    gs.median_err = stats.median;
    gs.q99_err = stats.q99;
    report.summary.push_back(gs);
    if (writing) {
      summary_csv << gs.N << ',' << format_double(gs.median_err) << ','
                  << format_double(gs.q99_err) << ','
                  << format_double(gs.fail_frac) << ','
                  << format_double(gs.bound) << '\n';
      summary_csv.flush();
    }
  }

  bool fittable = report.summary.size() >= 2;
  for (const auto& gs : report.summary)
    if (!(gs.median_err > 1e-13)) fittable = false;
  if (fittable) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& gs : report.summary)
      pts.emplace_back(static_cast<double>(gs.N), gs.median_err);
    report.slope = fit_loglog_slope(pts);
    report.slope_defined = true;
  }

  if (writing) {
    nlohmann::json j;
    j["config"] = {
        {"T", config.T},
        {"c1", config.c1},
        {"c2", config.c2},
        {"delta", config.delta},
        {"mode", to_string(config.mode)},
        {"n_grid", config.n_grid},
        {"noiseless", config.noiseless},
        {"policy", to_string(config.deficient_policy)},
        {"seed", config.seed},
        {"strictness", to_string(config.strictness)},
        {"system", system_json(config.system)},
        {"trials", config.trials},
        {"u", spec_json(config.specs.u)},
        {"v", spec_json(config.specs.v)},
        {"w", spec_json(config.specs.w)}};
    j["config_hash"] = report.config_hash;
    nlohmann::json grid = nlohmann::json::array();
    for (const auto& gs : report.summary)
      grid.push_back({{"N", gs.N},
                      {"mean_err", gs.mean_err},
                      {"median_err", gs.median_err},
                      {"q99_err", gs.q99_err},
                      {"fail_frac", gs.fail_frac},
                      {"bound", gs.bound},
                      {"trials", gs.trials},
                      {"deficient_buckets_total", gs.deficient_buckets_total}});
    j["grid"] = std::move(grid);
    j["slope_defined"] = report.slope_defined;
    if (report.slope_defined)
      j["slope"] = report.slope;
    else
      j["slope"] = nullptr;
    write_json(config.output_dir, j);
  }
  return report;
}

DeltaSweepReport run_delta_sweep(const DeltaSweepConfig& config) {
  if (config.T < 1) throw ConfigError("delta-sweep: T must be >= 1");
  if (config.trials < 1) throw ConfigError("delta-sweep: trials must be >= 1");
  if (config.n_factor < 1) throw ConfigError("delta-sweep: n_factor must be >= 1");
  if (config.deltas.empty()) throw ConfigError("delta-sweep: no deltas given");
  config.specs.u.validate();
  config.specs.w.validate();
  config.specs.v.validate();

  std::vector<double> deltas = config.deltas;
  std::sort(deltas.begin(), deltas.end(), std::greater<double>());
  deltas.erase(std::unique(deltas.begin(), deltas.end()), deltas.end());
  for (const double d : deltas)
    if (!(d > 0.0) || !(d < 1.0))
      throw ConfigError("delta-sweep: deltas must lie in (0, 1)");

  const MarkovMatrix g_true = true_markov(config.system, config.T);
  const double f_norm = f_matrix_norm(config.system, config.T);
  const double sigma_w = config.noiseless ? 0.0 : config.specs.w.scale;
  const double sigma_v = config.noiseless ? 0.0 : config.specs.v.scale;

  DeltaSweepReport report;
  report.config_hash = fnv1a_hex(canonical_config(config));
  const RngKey master = RngKey(config.seed).child(kTagSweep);

  std::vector<std::vector<double>> leg_errors;
  std::vector<double> unit_bound;
  for (const double delta : deltas) {
    const int K = bucket_count(delta);
    const int N = config.n_factor * K;
    DeltaLeg leg;
    leg.delta = delta;
    leg.K = K;
    leg.M = config.n_factor;
    leg.N = N;
    leg.trials = config.trials;
    unit_bound.push_back(theorem1_bound(
        config.system.state_dim(), config.system.input_dim(),
        config.system.output_dim(), config.T, sigma_w, sigma_v,
        config.specs.u.scale, f_norm, delta, N, config.c1, config.c2));

    std::vector<double> errs(config.trials, 0.0);
    parallel_for(config.trials, [&](int r) {
      const RngKey key = master.child(K).child(r);
      const auto dataset = simulate_dataset(config.system, N, config.T,
                                            config.specs, key, config.noiseless);
      EstimateOptions opts;
      opts.deficient_policy = config.deficient_policy;
      opts.input_kurtosis = kurtosis_ratio(config.specs.u);
      const BoostedEstimate est = estimate(dataset, delta, opts);
      errs[r] = spectral_norm(est.g_hat.entries - g_true.entries);
    });
    leg.median_err = median_of(errs);
    leg.unit_eps = unit_bound.back();
    leg.errors = errs;
    leg_errors.push_back(std::move(errs));
    report.legs.push_back(leg);
  }

  // Calibrate the shared multiplier on the largest-delta leg: smallest c
  // (binary search) whose pilot failure fraction is <= that delta.
  report.pilot_delta = deltas.front();
  const std::vector<double>& pilot = leg_errors.front();
  const double pilot_unit = unit_bound.front();
  auto fail_frac_at = [&](double c) {
    int fails = 0;
    for (const double e : pilot)
      if (e > c * pilot_unit) ++fails;
    return static_cast<double>(fails) / static_cast<double>(pilot.size());
  };
  if (pilot_unit <= 0.0) {
    if (fail_frac_at(0.0) > report.pilot_delta)
      throw ConfigError(
          "delta-sweep: reference bound is zero but errors are not; cannot "
          "calibrate");
    report.calibrated_c = 0.0;
  } else {
    double hi = 1.0;
    int doublings = 0;
    while (fail_frac_at(hi) > report.pilot_delta) {
      hi *= 2.0;
      if (++doublings > 200)
        throw ConvergenceError(fail_frac_at(hi), doublings);
    }
    double lo = 0.0;
    for (int i = 0; i < 100; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (fail_frac_at(mid) <= report.pilot_delta)
        hi = mid;
      else
        lo = mid;
    }
    report.calibrated_c = hi;
  }

  for (std::size_t i = 0; i < report.legs.size(); ++i) {
    DeltaLeg& leg = report.legs[i];
    leg.eps = report.calibrated_c * unit_bound[i];
    int fails = 0;
    for (const double e : leg_errors[i])
      if (e > leg.eps) ++fails;
    leg.fail_frac = static_cast<double>(fails) / static_cast<double>(leg.trials);
  }

  if (!config.output_dir.empty()) {
    ensure_dir(config.output_dir);
    auto csv = open_result_file(config.output_dir, "delta_sweep.csv",
                                report.config_hash,
                                "delta,K,M,N,eps,fail_frac,median_err,trials");
    for (const auto& leg : report.legs)
      csv << format_double(leg.delta) << ',' << leg.K << ',' << leg.M << ','
          << leg.N << ',' << format_double(leg.eps) << ','
          << format_double(leg.fail_frac) << ','
          << format_double(leg.median_err) << ',' << leg.trials << '\n';
    csv.flush();

    nlohmann::json j;
    j["config"] = {{"T", config.T},
                   {"c1", config.c1},
                   {"c2", config.c2},
                   {"deltas", deltas},
                   {"n_factor", config.n_factor},
                   {"noiseless", config.noiseless},
                   {"policy", to_string(config.deficient_policy)},
                   {"seed", config.seed},
                   {"system", system_json(config.system)},
                   {"trials", config.trials},
                   {"u", spec_json(config.specs.u)},
                   {"v", spec_json(config.specs.v)},
                   {"w", spec_json(config.specs.w)}};
    j["config_hash"] = report.config_hash;
    j["calibrated_c"] = report.calibrated_c;
    j["pilot_delta"] = report.pilot_delta;
    nlohmann::json legs = nlohmann::json::array();
    for (const auto& leg : report.legs)
      legs.push_back({{"delta", leg.delta},
                      {"K", leg.K},
                      {"M", leg.M},
                      {"N", leg.N},
                      {"eps", leg.eps},
                      {"fail_frac", leg.fail_frac},
                      {"median_err", leg.median_err},
                      {"trials", leg.trials}});
    j["legs"] = std::move(legs);
    write_json(config.output_dir, j);
  }
  return report;
}

}  // namespace htsysid
