#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "htsysid/distributions.hpp"
#include "htsysid/errors.hpp"

using namespace htsysid;

namespace {

struct Moments {
  double mean = 0, var = 0, m4 = 0;
};

Moments sample_moments(const DistributionSpec& spec, int n, std::uint64_t seed) {
  RngStream s((RngKey(seed)));
  Moments mo;
  double m2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_scalar(spec, s);
    mo.mean += x;
    m2 += x * x;
    mo.m4 += x * x * x * x;
  }
  mo.mean /= n;
  m2 /= n;
  mo.m4 /= n;
  mo.var = m2 - mo.mean * mo.mean;
  return mo;
}

}  // namespace

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(DistributionSpec::gaussian(0.0), ConfigError);
  CHECK_THROWS_AS(DistributionSpec::gaussian(-1.0), ConfigError);
  CHECK_THROWS_AS(DistributionSpec::student_t(2.0, 1.0), ConfigError);
  CHECK_THROWS_AS(DistributionSpec::student_t(1.5, 1.0), ConfigError);
  CHECK_THROWS_AS(DistributionSpec::three_point(0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(DistributionSpec::three_point(0.6, 1.0), ConfigError);
  CHECK_NOTHROW(DistributionSpec::three_point(0.5, 1.0));
  CHECK_NOTHROW(DistributionSpec::student_t(2.1, 0.5));
}

TEST_CASE("closed-form fourth moments and kurtosis ratios") {
  // gaussian: E[X^4] = 3 sigma^4
  const auto g = DistributionSpec::gaussian(2.0);
  CHECK(*g.fourth_moment() == doctest::Approx(3.0 * 16.0));
  CHECK(*kurtosis_ratio(g) == doctest::Approx(3.0));

  // normalized student_t: 3 (nu-2)/(nu-4) for nu > 4, undefined otherwise
  const auto t9 = DistributionSpec::student_t(9.0, 1.0);
  CHECK(*kurtosis_ratio(t9) == doctest::Approx(3.0 * 7.0 / 5.0));
  CHECK(!DistributionSpec::student_t(4.0, 1.0).fourth_moment().has_value());
  CHECK(!DistributionSpec::student_t(2.5, 1.0).fourth_moment().has_value());
  CHECK(!kurtosis_ratio(DistributionSpec::student_t(3.0, 1.0)).has_value());

  // three_point: 1/(2p); the p = 1/8 family used in the experiments gives 4
  const auto tp = DistributionSpec::three_point(0.125, 1.0);
  CHECK(*kurtosis_ratio(tp) == doctest::Approx(4.0));
  CHECK(*kurtosis_ratio(DistributionSpec::three_point(0.5, 3.0)) ==
        doctest::Approx(1.0));
}

TEST_CASE("kurtosis ratio is always >= 1 when defined (Jensen)") {
  const double slack = 1.0 - 1e-12;  // rounding slack at the p = 1/2 boundary
  for (const double scale : {0.1, 1.0, 7.5}) {
    CHECK(*kurtosis_ratio(DistributionSpec::gaussian(scale)) >= slack);
    for (const double nu : {4.5, 6.0, 20.0, 1000.0})
      CHECK(*kurtosis_ratio(DistributionSpec::student_t(nu, scale)) >= slack);
    for (const double p : {0.01, 0.125, 0.3, 0.5})
      CHECK(*kurtosis_ratio(DistributionSpec::three_point(p, scale)) >= slack);
  }
}

TEST_CASE("three_point support and frequencies at p = 1/8, scale 1") {
  const auto spec = DistributionSpec::three_point(0.125, 1.0);
  RngStream s((RngKey(2024)));
  const int n = 100000;
  int neg = 0, zero = 0, pos = 0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_scalar(spec, s);
    if (x == -2.0)
      ++neg;
    else if (x == 0.0)
      ++zero;
    else if (x == 2.0)
      ++pos;
    else
      FAIL("value off the three-point support: " << x);
  }
  CHECK(neg / double(n) == doctest::Approx(0.125).epsilon(0.05));
  CHECK(pos / double(n) == doctest::Approx(0.125).epsilon(0.05));
  CHECK(zero / double(n) == doctest::Approx(0.75).epsilon(0.02));
}

TEST_CASE("sampled variance matches scale^2 for every family") {
  // gaussian
  auto mo = sample_moments(DistributionSpec::gaussian(0.7), 400000, 31);
  CHECK(std::abs(mo.mean) < 0.01);
  CHECK(mo.var == doctest::Approx(0.49).epsilon(0.02));

  // three_point
  mo = sample_moments(DistributionSpec::three_point(0.125, 1.5), 400000, 32);
  CHECK(std::abs(mo.mean) < 0.02);
  CHECK(mo.var == doctest::Approx(2.25).epsilon(0.02));

  // light-tailed student_t: variance and fourth moment both checkable
  mo = sample_moments(DistributionSpec::student_t(9.0, 1.0), 400000, 33);
  CHECK(std::abs(mo.mean) < 0.01);
  CHECK(mo.var == doctest::Approx(1.0).epsilon(0.03));
  CHECK(mo.m4 == doctest::Approx(3.0 * 7.0 / 5.0).epsilon(0.10));

  // heavy-tailed student_t (infinite fourth moment): variance still = scale^2,
  // but convergence is slow, hence the loose tolerance
  mo = sample_moments(DistributionSpec::student_t(2.5, 0.5), 1000000, 34);
  CHECK(std::abs(mo.mean) < 0.01);
  CHECK(mo.var == doctest::Approx(0.25).epsilon(0.15));
}

TEST_CASE("sample_vector is deterministic in the key and fills all coords") {
  const auto spec = DistributionSpec::gaussian(1.0);
  const auto a = sample_vector(spec, 5, RngKey(77));
  const auto b = sample_vector(spec, 5, RngKey(77));
  CHECK((a - b).norm() == 0.0);
  const auto c = sample_vector(spec, 5, RngKey(78));
  CHECK((a - c).norm() > 0.0);
  CHECK_THROWS_AS(sample_vector(spec, 0, RngKey(1)), ConfigError);
}

TEST_CASE("kind name round trip") {
  for (const auto kind :
       {DistKind::gaussian, DistKind::student_t, DistKind::three_point})
    CHECK(dist_kind_from_string(to_string(kind)) == kind);
  CHECK_THROWS_AS(dist_kind_from_string("cauchy"), ConfigError);
}
