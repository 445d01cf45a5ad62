#include "htsysid/realization.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "htsysid/errors.hpp"

namespace htsysid {

namespace {

Eigen::MatrixXd hankel_from_blocks(const MarkovMatrix& g, int T1, int T2,
                                   int shift) {
  const int p = static_cast<int>(g.entries.rows());
  const int m = g.block_width;
  Eigen::MatrixXd H(static_cast<Eigen::Index>(p) * T1,
                    static_cast<Eigen::Index>(m) * T2);
  for (int i = 0; i < T1; ++i)
    for (int j = 0; j < T2; ++j)
      H.block(static_cast<Eigen::Index>(i) * p,
              static_cast<Eigen::Index>(j) * m, p, m) =
          g.block(i + j + shift);
  return H;
}

}  // namespace

RealizationResult ho_kalman(const MarkovMatrix& g, int order, int T1, int T2,
                            double rank_rel_tol) {
  const int p = static_cast<int>(g.entries.rows());
  const int m = g.block_width;
  const int T = g.block_count();
  if (p < 1 || m < 1 || T < 1)
    throw ConfigError("ho_kalman: malformed Markov matrix");
  if (order < 1) throw ConfigError("ho_kalman: order must be >= 1");
  if (T1 < 1 || T2 < 1)
    throw ConfigError("ho_kalman: T1 and T2 must be >= 1");
  if (T1 + T2 + 1 > T)
    throw ConfigError("ho_kalman: need T1 + T2 + 1 <= " + std::to_string(T) +
                      " Markov blocks; got T1 = " + std::to_string(T1) +
                      ", T2 = " + std::to_string(T2));
  if (order > std::min(p * T1, m * T2))
    throw ConfigError("ho_kalman: order exceeds the Hankel matrix rank bound");

  const Eigen::MatrixXd H = hankel_from_blocks(g, T1, T2, 1);
  const Eigen::MatrixXd H_shift = hankel_from_blocks(g, T1, T2, 2);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      H, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double sigma1 = sv(0);
  const double sigma_n = sv(order - 1);
  if (!(sigma_n >= rank_rel_tol * sigma1) || sigma1 <= 0.0)
    throw ConfigError(
        "ho_kalman: Hankel matrix numerically rank-deficient at order " +
        std::to_string(order) + " (sigma_n/sigma_1 = " +
        std::to_string(sigma1 > 0.0 ? sigma_n / sigma1 : 0.0) + ")");

  const Eigen::VectorXd sqrt_s = sv.head(order).cwiseSqrt();
  const Eigen::MatrixXd Un = svd.matrixU().leftCols(order);
  const Eigen::MatrixXd Vn = svd.matrixV().leftCols(order);
  const Eigen::MatrixXd O = Un * sqrt_s.asDiagonal();              // pT1 x n
  const Eigen::MatrixXd Q = sqrt_s.asDiagonal() * Vn.transpose();  // n x mT2

  RealizationResult r;
  r.hankel_singular_values = sv;
  r.D = g.block(0);
  r.C = O.topRows(p);
  r.B = Q.leftCols(m);
  const Eigen::VectorXd inv_sqrt_s = sqrt_s.cwiseInverse();
  r.A = inv_sqrt_s.asDiagonal() * (Un.transpose() * H_shift * Vn) *
        inv_sqrt_s.asDiagonal();
  return r;
}

RealizationResult ho_kalman(const MarkovMatrix& g, int order,
                            double rank_rel_tol) {
  const int half = (g.block_count() - 1) / 2;
  return ho_kalman(g, order, half, half, rank_rel_tol);
}

RealizationErrors realization_error(const LtiSystem& truth,
                                    const RealizationResult& est, int T) {
  const LtiSystem model = est.to_system();
  if (model.input_dim() != truth.input_dim() ||
      model.output_dim() != truth.output_dim())
    throw ConfigError("realization_error: input/output dimensions disagree");

  RealizationErrors e;
  e.markov_err = spectral_norm(true_markov(truth, T).entries -
                               true_markov(model, T).entries);

  // Hausdorff distance between the two eigenvalue sets.
  const auto ev_true =
      Eigen::EigenSolver<Eigen::MatrixXd>(truth.A, false).eigenvalues();
  const auto ev_est =
      Eigen::EigenSolver<Eigen::MatrixXd>(model.A, false).eigenvalues();
  const auto directed = [](const Eigen::VectorXcd& from,
                           const Eigen::VectorXcd& to) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < from.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < to.size(); ++j)
        best = std::min(best, std::abs(from(i) - to(j)));
      worst = std::max(worst, best);
    }
    return worst;
  };
  e.eig_err = std::max(directed(ev_true, ev_est), directed(ev_est, ev_true));
  return e;
}

}  // namespace htsysid
