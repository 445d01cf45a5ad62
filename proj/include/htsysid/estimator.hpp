#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "htsysid/lti.hpp"

namespace htsysid {

/// Partition of N rollouts into K equal buckets of M, remainder discarded.
struct BucketPlan {
  int K = 0;
  int M = 0;
  int discarded = 0;
  std::vector<int> bucket_of;             // rollout index -> bucket, -1 = discarded
  std::vector<std::vector<int>> buckets;  // K lists of M rollout indices
};

/// K = ceil(32 ln(1/delta)), clamped to >= 1. A tiny slack guards the ceil
/// against upward rounding at exact-integer arguments (delta = e^-1 -> 32).
int bucket_count(double delta);

/// Contiguous-slice assignment: bucket j gets rollouts [jM, (j+1)M); an
/// optional seeded shuffle permutes indices first. Throws
/// InsufficientRolloutsError when N < K.
BucketPlan plan_buckets(int N, double delta,
                        std::optional<std::uint64_t> shuffle_seed = std::nullopt);

/// Block upper-triangular Toeplitz lift of a d x T signal: (d*T) x T, where
/// block (r, c) equals column (c - r) of the signal for c >= r and zero
/// below the diagonal.
Eigen::MatrixXd block_toeplitz(const Eigen::MatrixXd& signal);

/// Toeplitz lift of a rollout's input sequence: (m*T) x T.
Eigen::MatrixXd toeplitz_input(const Rollout& rollout);

/// Per-bucket regression data: Y (p x MT) and U (mT x MT), columns of
/// rollout i occupying the contiguous slice [i*T, (i+1)*T).
struct RegressionBlock {
  Eigen::MatrixXd Y;
  Eigen::MatrixXd U;
};

RegressionBlock assemble_block(const std::vector<Rollout>& dataset,
                               const std::vector<int>& indices);

/// What to do with a bucket whose Gram matrix U U^T fails the eigenvalue
/// tolerance: raise (default contract), substitute the minimum-norm
/// least-squares solution, or drop the bucket from the boosting stage.
enum class DeficientBucketPolicy { error, min_norm, drop };

struct OlsOptions {
  double rank_rel_tol = 1e-10;  // lambda_min >= tol * lambda_max required
  DeficientBucketPolicy policy = DeficientBucketPolicy::error;
  int bucket_index = -1;  // for error reporting only
};

struct OlsResult {
  MarkovMatrix g;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  bool deficient = false;  // Gram failed tolerance (policy != error)
};

/// Least squares G = Y U^T (U U^T)^{-1} over one bucket. block_width is m.
OlsResult ols_bucket(const RegressionBlock& block, int block_width,
                     const OlsOptions& options = {});

struct GeometricMedianResult {
  Eigen::MatrixXd point;
  int iterations = 0;
  double residual = 0.0;                // first-order optimality at exit
  std::vector<double> objective_trace;  // objective after each iterate
};

/// Geometric median under the Frobenius norm via Weiszfeld iteration with
/// the Vardi-Zhang correction at data points. `rel_tol` is interpreted
/// relative to the mean pairwise distance between the input points.
GeometricMedianResult geometric_median(const std::vector<Eigen::MatrixXd>& points,
                                       double rel_tol = 1e-9,
                                       int max_iter = 1000);

enum class Strictness { permissive, strict };

struct EstimateOptions {
  Strictness strictness = Strictness::permissive;
  DeficientBucketPolicy deficient_policy = DeficientBucketPolicy::error;
  /// E[u^4]/sigma_u^4 of the input distribution; required in strict mode.
  std::optional<double> input_kurtosis;
  double strict_q = 0.125;  // per-bucket failure budget behind the threshold
  std::optional<std::uint64_t> shuffle_seed;
  double median_rel_tol = 1e-9;
  int median_max_iter = 1000;
  double rank_rel_tol = 1e-10;
};

struct BoostedEstimate {
  MarkovMatrix g_hat;
  std::vector<MarkovMatrix> per_bucket;  // the points fed to the median
  BucketPlan plan;
  int median_iterations = 0;
  double median_residual = 0.0;
  int deficient_buckets = 0;
  int dropped_buckets = 0;
};

/// Bucketed OLS followed by geometric-median boosting.
BoostedEstimate estimate(const std::vector<Rollout>& dataset, double delta,
                         const EstimateOptions& options = {});

/// Plain OLS over the whole dataset as a single bucket (the unboosted
/// baseline; identical to estimate() whenever K = 1).
MarkovMatrix single_ols(const std::vector<Rollout>& dataset,
                        const OlsOptions& options = {});

/// High-probability spectral-norm error bound
///   (sigma_v C1 + sigma_w C2) / sigma_u * sqrt(p ln(1/delta) / N)
/// with C1 = c1 T^{3/2} sqrt(pm) and C2 = c2 ||F|| T^{5/2} sqrt(nm).
double theorem1_bound(int n, int m, int p, int T, double sigma_w,
                      double sigma_v, double sigma_u, double f_norm,
                      double delta, int N, double c1 = 1.0, double c2 = 1.0);

struct LemmaCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// The three per-bucket events behind the error bound, evaluated on recorded
/// noise (white-box; requires simulator rollouts):
///   excitation:   lambda_min(U U^T)  >= M sigma_u^2 / 2
///   process:      ||W U^T||_F^2      <= (3/q) T^5 sigma_u^2 sigma_w^2 M n m
///   measurement:  ||V U^T||_F^2      <= (3/q) T^3 sigma_u^2 sigma_v^2 M p m
struct LemmaDiagnostics {
  LemmaCheck excitation;
  LemmaCheck process_noise;
  LemmaCheck measurement_noise;
  int M = 0;
};

LemmaDiagnostics lemma_diagnostics(const std::vector<Rollout>& bucket,
                                   double sigma_u, double sigma_w,
                                   double sigma_v, double q = 0.125);

/// Rollouts-per-bucket threshold used by strict mode:
/// ceil(12 (mT)^2 kurtosis / q).
int strict_bucket_threshold(int m, int T, double kurtosis, double q = 0.125);

}  // namespace htsysid
