#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "htsysid/estimator.hpp"
#include "htsysid/lti.hpp"

namespace htsysid {

enum class EstimatorMode { boosted, single_ols };

std::string to_string(EstimatorMode mode);
std::string to_string(DeficientBucketPolicy policy);
std::string to_string(Strictness strictness);

/// Monte Carlo error study over a grid of dataset sizes. Trial (N, r) always
/// regenerates the same dataset for the same seed, independent of worker
/// count and of the estimator mode, so mode comparisons are paired.
struct ExperimentConfig {
  LtiSystem system = default_system();
  int T = 6;
  NoiseSpecs specs = {DistributionSpec::gaussian(1.0),
                      DistributionSpec::gaussian(0.1),
                      DistributionSpec::gaussian(0.1)};
  bool noiseless = false;
  double delta = 0.36787944117144233;  // e^-1
  std::vector<int> n_grid = {64, 128, 256, 512, 1024};
  int trials = 50;
  EstimatorMode mode = EstimatorMode::boosted;
  Strictness strictness = Strictness::permissive;
  DeficientBucketPolicy deficient_policy = DeficientBucketPolicy::min_norm;
  std::uint64_t seed = 1;
  double c1 = 1.0;
  double c2 = 1.0;
  /// Failure threshold for fail_frac; defaults to the theorem1_bound value.
  std::optional<double> reference_eps;
  /// When non-empty, errors.csv / summary.csv / report.json land here.
  std::string output_dir;
};

struct TrialRecord {
  int N = 0;
  int trial = 0;
  double err_spec = 0.0;
  double err_fro = 0.0;
  int deficient_buckets = 0;
};

struct GridSummary {
  int N = 0;
  double mean_err = 0.0;
  double median_err = 0.0;
  double q99_err = 0.0;
  double fail_frac = 0.0;
  double bound = 0.0;
  int trials = 0;
  int deficient_buckets_total = 0;
};

struct ExperimentReport {
  std::string config_hash;
  std::vector<TrialRecord> trials;
  std::vector<GridSummary> summary;
  bool slope_defined = false;
  double slope = 0.0;  // least-squares slope of log(median_err) vs log(N)
};

ExperimentReport run_experiment(const ExperimentConfig& config);

/// Confidence sweep: each delta runs at its own N = n_factor * K(delta)
/// (so M = n_factor rollouts per bucket), and one shared bound multiplier c
/// is calibrated by binary search on the largest-delta leg: the smallest c
/// whose pilot failure fraction is <= that delta.
struct DeltaSweepConfig {
  LtiSystem system = default_system();
  int T = 6;
  NoiseSpecs specs = {DistributionSpec::gaussian(1.0),
                      DistributionSpec::gaussian(0.1),
                      DistributionSpec::gaussian(0.1)};
  bool noiseless = false;
  std::vector<double> deltas = {0.5, 0.25, 0.1};
  int n_factor = 64;
  int trials = 200;
  DeficientBucketPolicy deficient_policy = DeficientBucketPolicy::min_norm;
  std::uint64_t seed = 1;
  double c1 = 1.0;
  double c2 = 1.0;
  std::string output_dir;
};

struct DeltaLeg {
  double delta = 0.0;
  int K = 0;
  int M = 0;
  int N = 0;
  double eps = 0.0;       // calibrated threshold c * bound(delta, N)
  double unit_eps = 0.0;  // bound(delta, N) before the calibrated multiplier
  double fail_frac = 0.0;
  double median_err = 0.0;
  int trials = 0;
  std::vector<double> errors;  // per-trial spectral errors, trial order
};

struct DeltaSweepReport {
  std::string config_hash;
  double calibrated_c = 0.0;
  double pilot_delta = 0.0;
  std::vector<DeltaLeg> legs;  // sorted by descending delta; pilot first
};

DeltaSweepReport run_delta_sweep(const DeltaSweepConfig& config);

/// Least-squares slope of ln(y) against ln(x); requires >= 2 points with
/// positive coordinates.
double fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

/// Upper empirical quantile: the ceil(q*n)-th smallest value.
double quantile_upper(std::vector<double> values, double q);
double median_of(std::vector<double> values);

/// Canonical key=value rendering of a configuration; its FNV-1a hash stamps
/// every result file so outputs can be matched to the run that made them.
std::string canonical_config(const ExperimentConfig& config);
std::string canonical_config(const DeltaSweepConfig& config);

}  // namespace htsysid
