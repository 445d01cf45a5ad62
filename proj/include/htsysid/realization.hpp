#pragma once

#include <Eigen/Dense>

#include "htsysid/lti.hpp"

namespace htsysid {

struct RealizationResult {
  Eigen::MatrixXd A, B, C, D;
  Eigen::VectorXd hankel_singular_values;  // all singular values of H

  LtiSystem to_system() const { return LtiSystem(A, B, C, D); }
};

/// Ho-Kalman realization of order `order` from Markov blocks. The Hankel
/// matrix H (block (i,j) = G_{i+j+1}, i < T1, j < T2) is factored through a
/// balanced rank-n SVD (O = U_n S^{1/2}, Q = S^{1/2} V_n^T); A is recovered
/// from the one-step-shifted Hankel matrix. Requires T1, T2 >= 1,
/// T1 + T2 + 1 <= block count, and sigma_n >= rank_rel_tol * sigma_1.
RealizationResult ho_kalman(const MarkovMatrix& g, int order, int T1, int T2,
                            double rank_rel_tol = 1e-8);

/// Balanced default split T1 = T2 = floor((T-1)/2).
RealizationResult ho_kalman(const MarkovMatrix& g, int order,
                            double rank_rel_tol = 1e-8);

struct RealizationErrors {
  double markov_err = 0.0;  // spectral norm gap between T-block Markov matrices
  double eig_err = 0.0;     // Hausdorff distance between eigenvalue sets of A
};

/// Basis-independent distance between the truth and a realized model.
RealizationErrors realization_error(const LtiSystem& truth,
                                    const RealizationResult& est, int T);

}  // namespace htsysid
