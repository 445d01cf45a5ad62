#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "htsysid/errors.hpp"
#include "htsysid/lti.hpp"
#include "htsysid/realization.hpp"

using namespace htsysid;

namespace {

LtiSystem scalar_system(double a) {
  Eigen::MatrixXd A(1, 1), B(1, 1), C(1, 1), D(1, 1);
  A << a;
  B << 1.0;
  C << 1.0;
  D << 0.0;
  return LtiSystem(A, B, C, D);
}

}  // namespace

TEST_CASE("scalar Hankel example: T1 = T2 = 1 recovers A = 0.5 exactly") {
  // G = (0, 1, 0.5): H = [G_1] = [1], shifted H = [G_2] = [0.5]
  const auto g = true_markov(scalar_system(0.5), 3);
  const auto r = ho_kalman(g, 1, 1, 1);
  CHECK(r.hankel_singular_values.size() == 1);
  CHECK(r.hankel_singular_values(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.A(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.D(0, 0) == 0.0);
  // C and B are balanced square roots: C*B must equal G_1 = 1
  CHECK(r.C(0, 0) * r.B(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("default split is balanced: T1 = T2 = floor((T-1)/2)") {
  const auto g = true_markov(default_system(), 9);
  const auto r = ho_kalman(g, 3);  // uses T1 = T2 = 4
  CHECK(r.hankel_singular_values.size() == 8);  // min(p*4, m*4) = 8
}

TEST_CASE("exact Markov parameters realize the default system") {
  const auto sys = default_system();
  const int T = 9;
  const auto g = true_markov(sys, T);
  const auto r = ho_kalman(g, 3);

  // the Hankel matrix of an order-3 system has numerical rank 3
  const auto& sv = r.hankel_singular_values;
  REQUIRE(sv.size() >= 4);
  CHECK(sv(3) <= 1e-10 * sv(0));
  CHECK(sv(2) > 1e-6 * sv(0));

  const auto err = realization_error(sys, r, T);
  CHECK(err.markov_err < 1e-8);
  CHECK(err.eig_err < 1e-8);
}

TEST_CASE("realized Markov blocks match beyond the Hankel window") {
  // realization from T = 9 blocks must extrapolate correctly to T = 12
  const auto sys = default_system();
  const auto g = true_markov(sys, 9);
  const auto model = ho_kalman(g, 3).to_system();
  const auto g12_true = true_markov(sys, 12);
  const auto g12_model = true_markov(model, 12);
  CHECK(spectral_norm(g12_true.entries - g12_model.entries) < 1e-7);
}

TEST_CASE("realization is basis-invariant up to similarity") {
  // realize, then realize the realization: same eigenvalues, same Markov
  const auto sys = seeded_system(2, 1, 1, 99, 0.6);
  const auto g = true_markov(sys, 7);
  const auto first = ho_kalman(g, 2);
  const auto second = ho_kalman(true_markov(first.to_system(), 7), 2);
  const auto err = realization_error(first.to_system(), second, 7);
  CHECK(err.markov_err < 1e-9);
  CHECK(err.eig_err < 1e-9);
}

TEST_CASE("unbalanced splits are accepted when they fit") {
  const auto sys = default_system();
  const auto g = true_markov(sys, 9);
  const auto r = ho_kalman(g, 3, 5, 3);
  CHECK(realization_error(sys, r, 9).markov_err < 1e-8);
  CHECK_THROWS_AS(ho_kalman(g, 3, 5, 4), ConfigError);  // 5+4+1 > 9
  CHECK_THROWS_AS(ho_kalman(g, 3, 0, 4), ConfigError);
}

TEST_CASE("rank tolerance rejects over-ambitious orders") {
  const auto g = true_markov(default_system(), 9);
  CHECK_THROWS_AS(ho_kalman(g, 4), ConfigError);  // sigma_4 ~ 0
  CHECK_THROWS_AS(ho_kalman(g, 9), ConfigError);  // above min(pT1, mT2)
}

TEST_CASE("noise below the rank tolerance is absorbed") {
  const auto sys = default_system();
  const auto g = true_markov(sys, 9);
  MarkovMatrix noisy = g;
  RngStream s((RngKey(4)));
  for (Eigen::Index i = 0; i < noisy.entries.rows(); ++i)
    for (Eigen::Index j = 0; j < noisy.entries.cols(); ++j)
      noisy.entries(i, j) += 1e-3 * s.normal();
  const auto r = ho_kalman(noisy, 3, 4, 4, 1e-4);
  const auto err = realization_error(sys, r, 9);
  CHECK(err.markov_err < 0.1);
  CHECK(err.eig_err < 0.1);
}

TEST_CASE("realization_error: zero against itself, Hausdorff on eigenvalues") {
  const auto sys = default_system();
  RealizationResult self;
  self.A = sys.A;
  self.B = sys.B;
  self.C = sys.C;
  self.D = sys.D;
  const auto e = realization_error(sys, self, 6);
  CHECK(e.markov_err == 0.0);
  CHECK(e.eig_err == 0.0);

  // hand case: truth eigenvalues {0.5, 0.3} vs model {0.5, 0.1} -> 0.2
  Eigen::MatrixXd A1(2, 2), A2(2, 2);
  A1 << 0.5, 0, 0, 0.3;
  A2 << 0.5, 0, 0, 0.1;
  const Eigen::MatrixXd B2 = Eigen::MatrixXd::Ones(2, 1);
  const Eigen::MatrixXd C2 = Eigen::MatrixXd::Ones(1, 2);
  const Eigen::MatrixXd D2 = Eigen::MatrixXd::Zero(1, 1);
  const LtiSystem truth(A1, B2, C2, D2);
  RealizationResult model;
  model.A = A2;
  model.B = B2;
  model.C = C2;
  model.D = D2;
  CHECK(realization_error(truth, model, 2).eig_err ==
        doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("dimension mismatches are rejected") {
  const auto g = true_markov(default_system(), 9);
  const auto r = ho_kalman(g, 3);
  const auto other = seeded_system(3, 1, 1, 5, 0.5);
  CHECK_THROWS_AS(realization_error(other, r, 9), ConfigError);
}
