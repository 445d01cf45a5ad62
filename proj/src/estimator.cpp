#include "htsysid/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "htsysid/errors.hpp"

namespace htsysid {

namespace {

// Guards ceil() against one-ulp upward rounding at exact-integer arguments.
constexpr double kCeilSlack = 1e-9;

void check_uniform(const std::vector<Rollout>& dataset) {
  if (dataset.empty()) throw ConfigError("dataset is empty");
  const int m = dataset.front().input_dim();
  const int p = dataset.front().output_dim();
  const int T = dataset.front().horizon();
  if (m < 1 || p < 1 || T < 1)
    throw ConfigError("rollouts must have m, p, T >= 1");
  for (const Rollout& r : dataset) {
    if (r.input_dim() != m || r.output_dim() != p || r.horizon() != T ||
        r.outputs.cols() != T)
      throw ConfigError("dataset rollouts have inconsistent dimensions");
  }
}

}  // namespace

int bucket_count(double delta) {
  if (!(delta > 0.0) || !(delta < 1.0))
    throw ConfigError("delta must lie in (0, 1)");
  const double k = std::ceil(32.0 * std::log(1.0 / delta) - kCeilSlack);
  return std::max(1, static_cast<int>(k));
}

BucketPlan plan_buckets(int N, double delta,
                        std::optional<std::uint64_t> shuffle_seed) {
  if (N < 1) throw ConfigError("plan_buckets: N must be >= 1");
  const int K = bucket_count(delta);
  if (N < K) throw InsufficientRolloutsError(K, N);

  BucketPlan plan;
  plan.K = K;
  plan.M = N / K;
  plan.discarded = N - plan.K * plan.M;

  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  if (shuffle_seed) {
    RngStream stream((RngKey(*shuffle_seed)));
    for (int i = N - 1; i > 0; --i) {
      const int j = static_cast<int>(stream.next_below(i + 1));
      std::swap(order[i], order[j]);
    }
  }

  plan.bucket_of.assign(N, -1);
  plan.buckets.assign(K, {});
  for (int j = 0; j < K; ++j) {
    plan.buckets[j].reserve(plan.M);
    for (int s = 0; s < plan.M; ++s) {
      const int idx = order[j * plan.M + s];
      plan.bucket_of[idx] = j;
      plan.buckets[j].push_back(idx);
    }
  }
  return plan;
}

Eigen::MatrixXd block_toeplitz(const Eigen::MatrixXd& signal) {
  const auto d = signal.rows();
  const auto T = signal.cols();
  if (d < 1 || T < 1) throw ConfigError("block_toeplitz: signal must be d x T");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d * T, T);
  for (Eigen::Index c = 0; c < T; ++c)
    for (Eigen::Index r = 0; r <= c; ++r)
      out.block(r * d, c, d, 1) = signal.col(c - r);
  return out;
}

Eigen::MatrixXd toeplitz_input(const Rollout& rollout) {
  return block_toeplitz(rollout.inputs);
}

RegressionBlock assemble_block(const std::vector<Rollout>& dataset,
                               const std::vector<int>& indices) {
  check_uniform(dataset);
  if (indices.empty()) throw ConfigError("assemble_block: empty index list");
  const Rollout& first = dataset.front();
  const int m = first.input_dim();
  const int p = first.output_dim();
  const int T = first.horizon();
  const auto M = static_cast<Eigen::Index>(indices.size());

  RegressionBlock block;
  block.Y.resize(p, M * T);
  block.U.resize(static_cast<Eigen::Index>(m) * T, M * T);
  for (Eigen::Index s = 0; s < M; ++s) {
    const int idx = indices[static_cast<std::size_t>(s)];
    if (idx < 0 || idx >= static_cast<int>(dataset.size()))
      throw ConfigError("assemble_block: rollout index out of range");
    const Rollout& r = dataset[static_cast<std::size_t>(idx)];
    block.Y.middleCols(s * T, T) = r.outputs;
    block.U.middleCols(s * T, T) = toeplitz_input(r);
  }
  return block;
}

OlsResult ols_bucket(const RegressionBlock& block, int block_width,
                     const OlsOptions& options) {
  const auto rows = block.U.rows();
  if (block_width < 1 || rows % block_width != 0)
    throw ConfigError("ols_bucket: U rows must be a multiple of block width");
  if (block.Y.cols() != block.U.cols())
    throw ConfigError("ols_bucket: Y and U must have equal column counts");

  const Eigen::MatrixXd gram = block.U * block.U.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const Eigen::VectorXd& evals = eig.eigenvalues();
  OlsResult result;
  result.lambda_min = evals.minCoeff();
  result.lambda_max = evals.maxCoeff();

  const bool deficient =
      !(result.lambda_min >= options.rank_rel_tol * result.lambda_max) ||
      result.lambda_max <= 0.0;
  if (deficient) {
    if (options.policy == DeficientBucketPolicy::error)
      throw ExcitationError(result.lambda_min, result.lambda_max,
                            options.bucket_index);
    result.deficient = true;
    // Minimum-norm least squares through the eigen pseudo-inverse: invert
    // only eigenvalues above the same relative cutoff.
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(evals.size());
    const double cutoff = options.rank_rel_tol * result.lambda_max;
    for (Eigen::Index i = 0; i < evals.size(); ++i)
      if (evals(i) > cutoff && evals(i) > 0.0) inv(i) = 1.0 / evals(i);
    const Eigen::MatrixXd pinv = eig.eigenvectors() * inv.asDiagonal() *
                                 eig.eigenvectors().transpose();
    result.g.entries = block.Y * block.U.transpose() * pinv;
  } else {
    // Normal equations; gram is SPD once past the eigenvalue gate.
    result.g.entries =
        gram.ldlt().solve(block.U * block.Y.transpose()).transpose();
  }
  result.g.block_width = block_width;
  return result;
}

GeometricMedianResult geometric_median(const std::vector<Eigen::MatrixXd>& points,
                                       double rel_tol, int max_iter) {
  if (points.empty()) throw ConfigError("geometric_median: no points");
  const auto rows = points.front().rows();
  const auto cols = points.front().cols();
  for (const auto& P : points)
    if (P.rows() != rows || P.cols() != cols)
      throw ConfigError("geometric_median: points have mixed shapes");
  if (!(rel_tol > 0.0) || max_iter < 1)
    throw ConfigError("geometric_median: need rel_tol > 0 and max_iter >= 1");

  const int K = static_cast<int>(points.size());
  GeometricMedianResult res;
  if (K == 1) {
    res.point = points.front();
    res.objective_trace.push_back(0.0);
    return res;
  }

  double pair_sum = 0.0;
  double point_scale = 0.0;
  for (int i = 0; i < K; ++i) {
    point_scale = std::max(point_scale, points[i].norm());
    for (int j = i + 1; j < K; ++j)
      pair_sum += (points[i] - points[j]).norm();
  }
  const double mean_pairwise = pair_sum / (0.5 * K * (K - 1));

  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(rows, cols);
  for (const auto& P : points) theta += P;
  theta /= static_cast<double>(K);

  // Points indistinguishable at machine precision: distance-normalized
  // residuals are pure rounding noise there, so the mean is the answer.
  if (mean_pairwise <= 1e-12 * (1.0 + point_scale)) {
    res.point = theta;
    double objective = 0.0;
    for (const auto& P : points) objective += (theta - P).norm();
    res.objective_trace.push_back(objective);
    return res;
  }
  const double tol = rel_tol * mean_pairwise;
  // Fixed-point stall: once the iterate moves by less than a few ulps of the
  // data scale, rounding noise dominates and further iterations cannot
  // tighten the first-order residual.
  const double stall_tol = 4e-16 * (1.0 + point_scale);

  std::vector<double> dist(points.size());
  for (int iter = 0; iter <= max_iter; ++iter) {
    double objective = 0.0;
    for (int j = 0; j < K; ++j) {
      dist[j] = (theta - points[j]).norm();
      objective += dist[j];
    }
    res.objective_trace.push_back(objective);

    // First-order optimality with distances clamped below by tol.
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(rows, cols);
    int eta = 0;  // points the iterate is (numerically) sitting on
    Eigen::MatrixXd far_grad = Eigen::MatrixXd::Zero(rows, cols);
    double weight_sum = 0.0;
    Eigen::MatrixXd weighted = Eigen::MatrixXd::Zero(rows, cols);
    for (int j = 0; j < K; ++j) {
      grad += (theta - points[j]) / std::max(dist[j], tol);
      if (dist[j] > tol) {
        far_grad += (theta - points[j]) / dist[j];
        weighted += points[j] / dist[j];
        weight_sum += 1.0 / dist[j];
      } else {
        ++eta;
      }
    }
    res.iterations = iter;
    res.residual = grad.norm();
    if (res.residual <= tol * K) {
      res.point = theta;
      return res;
    }
    // Sitting on a data point of multiplicity eta: optimal once the pull of
    // the remaining points is no stronger than eta (Vardi-Zhang condition).
    if (eta > 0 && far_grad.norm() <= eta + tol * K) {
      res.point = theta;
      res.residual = std::max(0.0, far_grad.norm() - eta);
      return res;
    }
    // A data point is the exact geometric median when the unit pulls of the
    // other points sum to no more than its multiplicity. Testing that at the
    // nearest data point sidesteps the slow linear crawl of the plain
    // iteration toward a vertex optimum and returns the vertex exactly.
    {
      int k = 0;
      for (int j = 1; j < K; ++j) {
        if (dist[j] < dist[k]) k = j;
      }
      const double coincident_tol = 1e-12 * (1.0 + point_scale);
      double eta_k = 0.0;
      Eigen::MatrixXd pull = Eigen::MatrixXd::Zero(rows, cols);
      for (int j = 0; j < K; ++j) {
        const double d = (points[k] - points[j]).norm();
        if (d <= coincident_tol) {
          eta_k += 1.0;
        } else {
          pull += (points[k] - points[j]) / d;
        }
      }
      if (pull.norm() <= eta_k + tol * K) {
        res.point = points[k];
        res.residual = std::max(0.0, pull.norm() - eta_k);
        double vertex_obj = 0.0;
        for (const auto& P : points) vertex_obj += (points[k] - P).norm();
        res.objective_trace.push_back(vertex_obj);
        return res;
      }
    }
    if (iter == max_iter) break;

    if (weight_sum == 0.0) {
      // every point within tol of the iterate
      res.point = theta;
      res.residual = 0.0;
      return res;
    }
    const Eigen::MatrixXd weiszfeld = weighted / weight_sum;
    Eigen::MatrixXd next;
    if (eta == 0) {
      next = weiszfeld;
    } else {
      const double r = far_grad.norm();
      const double gamma = std::min(1.0, eta / r);
      next = (1.0 - gamma) * weiszfeld + gamma * theta;
    }
    // Second-order acceleration: away from the data points the objective is
    // smooth, and the plain iteration degrades to rate 1 - O(gap) near the
    // 120-degree / near-vertex degeneracies. A Newton candidate is adopted
    // only when it is finite and descends at least as far as the Weiszfeld
    // candidate, which keeps the objective trace non-increasing.
    if (eta == 0) {
      const Eigen::Index D = rows * cols;
      Eigen::VectorXd g = Eigen::VectorXd::Zero(D);
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(D, D);
      for (int j = 0; j < K; ++j) {
        const Eigen::MatrixXd diff = theta - points[j];
        const Eigen::Map<const Eigen::VectorXd> v(diff.data(), D);
        g += v / dist[j];
        H += (Eigen::MatrixXd::Identity(D, D) -
              (v * v.transpose()) / (dist[j] * dist[j])) /
             dist[j];
      }
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
      if (ldlt.info() == Eigen::Success) {
        const Eigen::VectorXd step = ldlt.solve(g);
        if (step.allFinite()) {
          Eigen::MatrixXd cand = theta;
          Eigen::Map<Eigen::VectorXd>(cand.data(), D) -= step;
          const auto obj_of = [&points](const Eigen::MatrixXd& x) {
            double s = 0.0;
            for (const auto& P : points) s += (x - P).norm();
            return s;
          };
          if (obj_of(cand) <= obj_of(next)) next = cand;
        }
      }
    }
    if ((next - theta).norm() <= stall_tol) {
      res.point = next;
      res.iterations = iter + 1;
      return res;
    }
    theta = std::move(next);
  }
  throw ConvergenceError(res.residual, res.iterations);
}

BoostedEstimate estimate(const std::vector<Rollout>& dataset, double delta,
                         const EstimateOptions& options) {
  check_uniform(dataset);
  const int N = static_cast<int>(dataset.size());
  const int m = dataset.front().input_dim();
  const int T = dataset.front().horizon();

  BoostedEstimate out;
  out.plan = plan_buckets(N, delta, options.shuffle_seed);

  if (options.strictness == Strictness::strict) {
    if (!options.input_kurtosis)
      throw ConfigError(
          "strict mode needs the input kurtosis ratio E[u^4]/sigma_u^4");
    const int need =
        strict_bucket_threshold(m, T, *options.input_kurtosis, options.strict_q);
    if (out.plan.M < need)
      throw InsufficientRolloutsError(need * out.plan.K, N);
  }

  OlsOptions ols_opts;
  ols_opts.rank_rel_tol = options.rank_rel_tol;
  ols_opts.policy = options.deficient_policy;

  std::vector<Eigen::MatrixXd> median_points;
  double worst_lambda_min = 0.0;
  double worst_lambda_max = 0.0;
  for (int j = 0; j < out.plan.K; ++j) {
    ols_opts.bucket_index = j;
    RegressionBlock block = assemble_block(dataset, out.plan.buckets[j]);
    OlsResult ols = ols_bucket(block, m, ols_opts);
    if (ols.deficient) {
      ++out.deficient_buckets;
      worst_lambda_min = ols.lambda_min;
      worst_lambda_max = ols.lambda_max;
      if (options.deficient_policy == DeficientBucketPolicy::drop) {
        ++out.dropped_buckets;
        continue;
      }
    }
    median_points.push_back(ols.g.entries);
    out.per_bucket.push_back(std::move(ols.g));
  }
  if (median_points.empty())
    throw ExcitationError(worst_lambda_min, worst_lambda_max, -1);

  GeometricMedianResult median = geometric_median(
      median_points, options.median_rel_tol, options.median_max_iter);
  out.g_hat.entries = std::move(median.point);
  out.g_hat.block_width = m;
  out.median_iterations = median.iterations;
  out.median_residual = median.residual;
  return out;
}

MarkovMatrix single_ols(const std::vector<Rollout>& dataset,
                        const OlsOptions& options) {
  check_uniform(dataset);
  std::vector<int> indices(dataset.size());
  std::iota(indices.begin(), indices.end(), 0);
  RegressionBlock block = assemble_block(dataset, indices);
  return ols_bucket(block, dataset.front().input_dim(), options).g;
}

double theorem1_bound(int n, int m, int p, int T, double sigma_w,
                      double sigma_v, double sigma_u, double f_norm,
                      double delta, int N, double c1, double c2) {
  if (n < 1 || m < 1 || p < 1 || T < 1)
    throw ConfigError("theorem1_bound: dimensions must be >= 1");
  if (!(sigma_u > 0.0)) throw ConfigError("theorem1_bound: sigma_u must be > 0");
  if (sigma_w < 0.0 || sigma_v < 0.0 || f_norm < 0.0 || c1 < 0.0 || c2 < 0.0)
    throw ConfigError("theorem1_bound: scales and constants must be >= 0");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw ConfigError("theorem1_bound: delta must lie in (0, 1)");
  if (N < 1) throw ConfigError("theorem1_bound: N must be >= 1");

  const double Td = static_cast<double>(T);
  const double C1 = c1 * std::pow(Td, 1.5) * std::sqrt(double(p) * m);
  const double C2 = c2 * f_norm * std::pow(Td, 2.5) * std::sqrt(double(n) * m);
  return (sigma_v * C1 + sigma_w * C2) / sigma_u *
         std::sqrt(p * std::log(1.0 / delta) / N);
}

LemmaDiagnostics lemma_diagnostics(const std::vector<Rollout>& bucket,
                                   double sigma_u, double sigma_w,
                                   double sigma_v, double q) {
  check_uniform(bucket);
  if (!(q > 0.0) || !(q < 1.0))
    throw ConfigError("lemma_diagnostics: q must lie in (0, 1)");
  if (!(sigma_u > 0.0) || sigma_w < 0.0 || sigma_v < 0.0)
    throw ConfigError("lemma_diagnostics: bad noise scales");
  for (const Rollout& r : bucket)
    if (!r.has_noise_records())
      throw ConfigError(
          "lemma_diagnostics needs white-box rollouts with recorded noise");

  const int M = static_cast<int>(bucket.size());
  const int m = bucket.front().input_dim();
  const int p = bucket.front().output_dim();
  const int T = bucket.front().horizon();
  const int n = static_cast<int>(bucket.front().process_noise.rows());
  for (const Rollout& r : bucket)
    if (r.process_noise.rows() != n || r.process_noise.cols() != T ||
        r.meas_noise.rows() != p || r.meas_noise.cols() != T)
      throw ConfigError("lemma_diagnostics: inconsistent noise records");

  Eigen::MatrixXd U(static_cast<Eigen::Index>(m) * T,
                    static_cast<Eigen::Index>(M) * T);
  Eigen::MatrixXd W(static_cast<Eigen::Index>(n) * T,
                    static_cast<Eigen::Index>(M) * T);
  Eigen::MatrixXd V(p, static_cast<Eigen::Index>(M) * T);
  for (int s = 0; s < M; ++s) {
    const Rollout& r = bucket[static_cast<std::size_t>(s)];
    U.middleCols(static_cast<Eigen::Index>(s) * T, T) = toeplitz_input(r);
    W.middleCols(static_cast<Eigen::Index>(s) * T, T) =
        block_toeplitz(r.process_noise);
    V.middleCols(static_cast<Eigen::Index>(s) * T, T) = r.meas_noise;
  }

  const double Td = static_cast<double>(T);
  LemmaDiagnostics d;
  d.M = M;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(U * U.transpose());
  d.excitation.lhs = eig.eigenvalues().minCoeff();
  d.excitation.rhs = M * sigma_u * sigma_u / 2.0;
  d.excitation.holds = d.excitation.lhs >= d.excitation.rhs;

  d.process_noise.lhs = (W * U.transpose()).squaredNorm();
  d.process_noise.rhs = 3.0 / q * std::pow(Td, 5) * sigma_u * sigma_u *
                        sigma_w * sigma_w * M * n * m;
  d.process_noise.holds = d.process_noise.lhs <= d.process_noise.rhs;

  d.measurement_noise.lhs = (V * U.transpose()).squaredNorm();
  d.measurement_noise.rhs = 3.0 / q * std::pow(Td, 3) * sigma_v * sigma_v *
                            sigma_u * sigma_u * M * p * m;
  d.measurement_noise.holds = d.measurement_noise.lhs <= d.measurement_noise.rhs;
  return d;
}

int strict_bucket_threshold(int m, int T, double kurtosis, double q) {
  if (m < 1 || T < 1) throw ConfigError("strict_bucket_threshold: bad dims");
  if (!(kurtosis >= 1.0))
    throw ConfigError("strict_bucket_threshold: kurtosis ratio must be >= 1");
  if (!(q > 0.0) || !(q < 1.0))
    throw ConfigError("strict_bucket_threshold: q must lie in (0, 1)");
  const double mt = static_cast<double>(m) * T;
  return static_cast<int>(
      std::ceil(12.0 * mt * mt * kurtosis / q - kCeilSlack));
}

}  // namespace htsysid
