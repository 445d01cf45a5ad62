#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "htsysid/distributions.hpp"

namespace htsysid {

/// Ground-truth discrete-time system x+ = Ax + Bu + w, y = Cx + Du + v.
/// Stability is not required; spectral_radius() is exposed so callers can
/// keep desk-scale signals bounded.
struct LtiSystem {
  Eigen::MatrixXd A, B, C, D;

  LtiSystem(Eigen::MatrixXd A_, Eigen::MatrixXd B_, Eigen::MatrixXd C_,
            Eigen::MatrixXd D_);

  int state_dim() const { return static_cast<int>(A.rows()); }
  int input_dim() const { return static_cast<int>(B.cols()); }
  int output_dim() const { return static_cast<int>(C.rows()); }
  double spectral_radius() const;
};

/// One zero-initial-state trajectory over t = 0..T-1, columns indexed by t.
/// Noise realizations are retained when the rollout came from the simulator
/// (white-box diagnostics need them); rollouts loaded from disk have empty
/// noise records.
struct Rollout {
  Eigen::MatrixXd inputs;         // m x T
  Eigen::MatrixXd outputs;        // p x T
  Eigen::MatrixXd process_noise;  // n x T, possibly empty
  Eigen::MatrixXd meas_noise;     // p x T, possibly empty

  int horizon() const { return static_cast<int>(inputs.cols()); }
  int input_dim() const { return static_cast<int>(inputs.rows()); }
  int output_dim() const { return static_cast<int>(outputs.rows()); }
  bool has_noise_records() const {
    return process_noise.size() > 0 && meas_noise.size() > 0;
  }
};

/// First T impulse-response blocks laid out as [D | CB | CAB | ... ],
/// a p x (m*T) matrix of m-column blocks.
struct MarkovMatrix {
  Eigen::MatrixXd entries;  // p x (m*T)
  int block_width = 0;      // m

  int block_count() const {
    return block_width > 0 ? static_cast<int>(entries.cols()) / block_width : 0;
  }
  Eigen::MatrixXd block(int k) const {
    return entries.middleCols(static_cast<Eigen::Index>(k) * block_width,
                              block_width);
  }
};

struct NoiseSpecs {
  DistributionSpec u = DistributionSpec::gaussian(1.0);
  DistributionSpec w = DistributionSpec::gaussian(1.0);
  DistributionSpec v = DistributionSpec::gaussian(1.0);
};

/// Deterministic simulation kernel: outputs from explicit input and noise
/// sequences (U is m x T, W is n x T, V is p x T), x_0 = 0.
Eigen::MatrixXd simulate_outputs(const LtiSystem& sys, const Eigen::MatrixXd& U,
                                 const Eigen::MatrixXd& W,
                                 const Eigen::MatrixXd& V);

/// One sampled rollout; `noiseless` zeroes w and v (records kept as zeros).
Rollout simulate_rollout(const LtiSystem& sys, int T, const NoiseSpecs& specs,
                         RngKey key, bool noiseless = false);

/// N independent rollouts; rollout i derives its key from `master.child(i)`.
std::vector<Rollout> simulate_dataset(const LtiSystem& sys, int N, int T,
                                      const NoiseSpecs& specs, RngKey master,
                                      bool noiseless = false);

/// G = [D, CB, CAB, ..., CA^{T-2}B].
MarkovMatrix true_markov(const LtiSystem& sys, int T);

/// F = [0, C, CA, ..., CA^{T-2}], the p x (n*T) process-noise response.
Eigen::MatrixXd f_matrix(const LtiSystem& sys, int T);

/// Spectral norm of f_matrix (the ||F|| entering the error bound).
double f_matrix_norm(const LtiSystem& sys, int T);

/// Random system: i.i.d. unit-variance normal entries, A rescaled so its
/// spectral radius equals `rho`.
LtiSystem seeded_system(int n, int m, int p, std::uint64_t seed,
                        double rho = 0.8);

/// The pinned desk-scale truth: n = 3, m = 2, p = 2, spectral radius 0.8.
LtiSystem default_system();

/// Largest singular value.
double spectral_norm(const Eigen::MatrixXd& M);

}  // namespace htsysid
