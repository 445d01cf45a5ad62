#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <sstream>

#include "htsysid/distributions.hpp"
#include "htsysid/errors.hpp"
#include "htsysid/estimator.hpp"
#include "htsysid/io.hpp"
#include "htsysid/lti.hpp"
#include "htsysid/realization.hpp"
#include "htsysid/rng.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace htsysid;

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Robust identification of partially observed linear systems from "
      "heavy-tailed data: simulation, bucketed least squares with "
      "geometric-median boosting, Ho-Kalman realization, and the "
      "finite-sample error bound.";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const IoError& e) {
      PyErr_SetString(PyExc_OSError, e.what());
    }
  });

  py::enum_<DistKind>(m, "DistKind")
      .value("gaussian", DistKind::gaussian)
      .value("student_t", DistKind::student_t)
      .value("three_point", DistKind::three_point);

  py::class_<DistributionSpec>(m, "DistributionSpec")
      .def_static("gaussian", &DistributionSpec::gaussian, "scale"_a)
      .def_static("student_t", &DistributionSpec::student_t, "nu"_a, "scale"_a)
      .def_static("three_point", &DistributionSpec::three_point, "p"_a,
                  "scale"_a)
      .def_readonly("kind", &DistributionSpec::kind)
      .def_readonly("scale", &DistributionSpec::scale)
      .def_readonly("param", &DistributionSpec::param)
      .def("variance", &DistributionSpec::variance)
      .def("fourth_moment", &DistributionSpec::fourth_moment)
      .def("__repr__", [](const DistributionSpec& s) {
        std::ostringstream oss;
        oss << "DistributionSpec(" << to_string(s.kind)
            << ", scale=" << format_double(s.scale);
        if (s.kind != DistKind::gaussian)
          oss << ", param=" << format_double(s.param);
        oss << ")";
        return oss.str();
      });
  m.def("kurtosis_ratio", &kurtosis_ratio, "spec"_a,
        "E[X^4]/sigma^4, or None when the fourth moment diverges.");
  m.def(
      "sample_vector",
      [](const DistributionSpec& spec, int dim, std::uint64_t seed) {
        return sample_vector(spec, dim, RngKey(seed));
      },
      "spec"_a, "dim"_a, "seed"_a, "i.i.d. coordinates from a seeded stream.");

  py::class_<NoiseSpecs>(m, "NoiseSpecs")
      .def(py::init<>())
      .def(py::init([](DistributionSpec u, DistributionSpec w,
                       DistributionSpec v) {
             return NoiseSpecs{u, w, v};
           }),
           "u"_a, "w"_a, "v"_a)
      .def_readwrite("u", &NoiseSpecs::u)
      .def_readwrite("w", &NoiseSpecs::w)
      .def_readwrite("v", &NoiseSpecs::v);

  py::class_<LtiSystem>(m, "LtiSystem")
      .def(py::init<Eigen::MatrixXd, Eigen::MatrixXd, Eigen::MatrixXd,
                    Eigen::MatrixXd>(),
           "A"_a, "B"_a, "C"_a, "D"_a)
      .def_readonly("A", &LtiSystem::A)
      .def_readonly("B", &LtiSystem::B)
      .def_readonly("C", &LtiSystem::C)
      .def_readonly("D", &LtiSystem::D)
      .def("state_dim", &LtiSystem::state_dim)
      .def("input_dim", &LtiSystem::input_dim)
      .def("output_dim", &LtiSystem::output_dim)
      .def("spectral_radius", &LtiSystem::spectral_radius);
  m.def("default_system", &default_system,
        "The pinned desk-scale truth (n=3, m=2, p=2, spectral radius 0.8).");
  m.def("seeded_system", &seeded_system, "n"_a, "m"_a, "p"_a, "seed"_a,
        "rho"_a = 0.8);

  py::class_<Rollout>(m, "Rollout")
      .def_readonly("inputs", &Rollout::inputs)
      .def_readonly("outputs", &Rollout::outputs)
      .def_readonly("process_noise", &Rollout::process_noise)
      .def_readonly("meas_noise", &Rollout::meas_noise)
      .def("horizon", &Rollout::horizon)
      .def("has_noise_records", &Rollout::has_noise_records);
  m.def(
      "simulate_dataset",
      [](const LtiSystem& sys, int N, int T, const NoiseSpecs& specs,
         std::uint64_t seed, bool noiseless) {
        return simulate_dataset(sys, N, T, specs, RngKey(seed), noiseless);
      },
      "system"_a, "N"_a, "T"_a, "specs"_a = NoiseSpecs{}, "seed"_a = 1,
      "noiseless"_a = false);

  py::class_<MarkovMatrix>(m, "MarkovMatrix")
      .def(py::init([](Eigen::MatrixXd entries, int block_width) {
             return MarkovMatrix{std::move(entries), block_width};
           }),
           "entries"_a, "block_width"_a)
      .def_readonly("entries", &MarkovMatrix::entries)
      .def_readonly("block_width", &MarkovMatrix::block_width)
      .def("block_count", &MarkovMatrix::block_count)
      .def("block", &MarkovMatrix::block, "k"_a);
  m.def("true_markov", &true_markov, "system"_a, "T"_a);
  m.def("f_matrix", &f_matrix, "system"_a, "T"_a);
  m.def("f_matrix_norm", &f_matrix_norm, "system"_a, "T"_a);
  m.def("spectral_norm", &spectral_norm, "matrix"_a);

  py::class_<BucketPlan>(m, "BucketPlan")
      .def_readonly("K", &BucketPlan::K)
      .def_readonly("M", &BucketPlan::M)
      .def_readonly("discarded", &BucketPlan::discarded)
      .def_readonly("bucket_of", &BucketPlan::bucket_of)
      .def_readonly("buckets", &BucketPlan::buckets);
  m.def("bucket_count", &bucket_count, "delta"_a);
  m.def("plan_buckets", &plan_buckets, "N"_a, "delta"_a,
        "shuffle_seed"_a = std::nullopt);
  m.def("block_toeplitz", &block_toeplitz, "signal"_a);

  py::enum_<DeficientBucketPolicy>(m, "DeficientBucketPolicy")
      .value("error", DeficientBucketPolicy::error)
      .value("min_norm", DeficientBucketPolicy::min_norm)
      .value("drop", DeficientBucketPolicy::drop);
  py::enum_<Strictness>(m, "Strictness")
      .value("permissive", Strictness::permissive)
      .value("strict", Strictness::strict);

  py::class_<OlsOptions>(m, "OlsOptions")
      .def(py::init<>())
      .def_readwrite("rank_rel_tol", &OlsOptions::rank_rel_tol)
      .def_readwrite("policy", &OlsOptions::policy);

  py::class_<GeometricMedianResult>(m, "GeometricMedianResult")
      .def_readonly("point", &GeometricMedianResult::point)
      .def_readonly("iterations", &GeometricMedianResult::iterations)
      .def_readonly("residual", &GeometricMedianResult::residual)
      .def_readonly("objective_trace", &GeometricMedianResult::objective_trace);
  m.def("geometric_median", &geometric_median, "points"_a, "rel_tol"_a = 1e-9,
        "max_iter"_a = 1000);

  py::class_<EstimateOptions>(m, "EstimateOptions")
      .def(py::init<>())
      .def_readwrite("strictness", &EstimateOptions::strictness)
      .def_readwrite("deficient_policy", &EstimateOptions::deficient_policy)
      .def_readwrite("input_kurtosis", &EstimateOptions::input_kurtosis)
      .def_readwrite("strict_q", &EstimateOptions::strict_q)
      .def_readwrite("shuffle_seed", &EstimateOptions::shuffle_seed)
      .def_readwrite("median_rel_tol", &EstimateOptions::median_rel_tol)
      .def_readwrite("median_max_iter", &EstimateOptions::median_max_iter)
      .def_readwrite("rank_rel_tol", &EstimateOptions::rank_rel_tol);

  py::class_<BoostedEstimate>(m, "BoostedEstimate")
      .def_readonly("g_hat", &BoostedEstimate::g_hat)
      .def_readonly("per_bucket", &BoostedEstimate::per_bucket)
      .def_readonly("plan", &BoostedEstimate::plan)
      .def_readonly("median_iterations", &BoostedEstimate::median_iterations)
      .def_readonly("median_residual", &BoostedEstimate::median_residual)
      .def_readonly("deficient_buckets", &BoostedEstimate::deficient_buckets)
      .def_readonly("dropped_buckets", &BoostedEstimate::dropped_buckets);
  m.def("estimate", &estimate, "dataset"_a, "delta"_a,
        "options"_a = EstimateOptions{},
        "Bucketed OLS followed by geometric-median boosting.");
  m.def("single_ols", &single_ols, "dataset"_a, "options"_a = OlsOptions{},
        "Plain OLS over the whole dataset as one bucket.");
  m.def("theorem1_bound", &theorem1_bound, "n"_a, "m"_a, "p"_a, "T"_a,
        "sigma_w"_a, "sigma_v"_a, "sigma_u"_a, "f_norm"_a, "delta"_a, "N"_a,
        "c1"_a = 1.0, "c2"_a = 1.0,
        "High-probability spectral-norm error bound.");

  py::class_<LemmaCheck>(m, "LemmaCheck")
      .def_readonly("lhs", &LemmaCheck::lhs)
      .def_readonly("rhs", &LemmaCheck::rhs)
      .def_readonly("holds", &LemmaCheck::holds);
  py::class_<LemmaDiagnostics>(m, "LemmaDiagnostics")
      .def_readonly("excitation", &LemmaDiagnostics::excitation)
      .def_readonly("process_noise", &LemmaDiagnostics::process_noise)
      .def_readonly("measurement_noise", &LemmaDiagnostics::measurement_noise)
      .def_readonly("M", &LemmaDiagnostics::M);
  m.def("lemma_diagnostics", &lemma_diagnostics, "bucket"_a, "sigma_u"_a,
        "sigma_w"_a, "sigma_v"_a, "q"_a = 0.125);
  m.def("strict_bucket_threshold", &strict_bucket_threshold, "m"_a, "T"_a,
        "kurtosis"_a, "q"_a = 0.125);

  py::class_<RealizationResult>(m, "RealizationResult")
      .def_readonly("A", &RealizationResult::A)
      .def_readonly("B", &RealizationResult::B)
      .def_readonly("C", &RealizationResult::C)
      .def_readonly("D", &RealizationResult::D)
      .def_readonly("hankel_singular_values",
                    &RealizationResult::hankel_singular_values)
      .def("to_system", &RealizationResult::to_system);
  m.def(
      "ho_kalman",
      [](const MarkovMatrix& g, int order, int t1, int t2, double tol) {
        return ho_kalman(g, order, t1, t2, tol);
      },
      "g"_a, "order"_a, "t1"_a, "t2"_a, "rank_rel_tol"_a = 1e-8);
  m.def(
      "ho_kalman",
      [](const MarkovMatrix& g, int order, double tol) {
        return ho_kalman(g, order, tol);
      },
      "g"_a, "order"_a, "rank_rel_tol"_a = 1e-8,
      "Balanced split t1 = t2 = floor((T-1)/2).");

  py::class_<RealizationErrors>(m, "RealizationErrors")
      .def_readonly("markov_err", &RealizationErrors::markov_err)
      .def_readonly("eig_err", &RealizationErrors::eig_err);
  m.def("realization_error", &realization_error, "truth"_a, "est"_a, "T"_a);
}
