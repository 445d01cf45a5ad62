#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "htsysid/rng.hpp"

using htsysid::RngKey;
using htsysid::RngStream;

TEST_CASE("streams are deterministic functions of the key") {
  RngStream a((RngKey(42)));
  RngStream b((RngKey(42)));
  for (int i = 0; i < 64; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream c((RngKey(43)));
  int same = 0;
  RngStream a2((RngKey(42)));
  for (int i = 0; i < 64; ++i)
    if (a2.next_u64() == c.next_u64()) ++same;
  CHECK(same == 0);
}

TEST_CASE("child keys derive distinct independent streams") {
  const RngKey root(7);
  CHECK(root.child(1).value() != root.child(2).value());
  CHECK(root.child(1).value() == root.child(1).value());
  // grandchildren along different paths must not collide either
  CHECK(root.child(1).child(2).value() != root.child(2).child(1).value());

  // distinct trial/rollout tuples give uncorrelated streams at first draw
  std::vector<std::uint64_t> seen;
  for (int trial = 0; trial < 50; ++trial)
    for (int rollout = 0; rollout < 50; ++rollout) {
      RngStream s(root.child(trial).child(rollout));
      seen.push_back(s.next_u64());
    }
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}

TEST_CASE("normal() consumes exactly two uniforms") {
  RngStream a((RngKey(9)));
  RngStream b((RngKey(9)));
  (void)a.normal();
  (void)b.next_u64();
  (void)b.next_u64();
  CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform01 moments") {
  RngStream s((RngKey(1001)));
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sq += u * u;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.005));
  CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.02));
}

TEST_CASE("normal moments match N(0,1)") {
  RngStream s((RngKey(1002)));
  const int n = 200000;
  double m1 = 0, m2 = 0, m4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  CHECK(std::abs(m1) < 0.01);
  CHECK(m2 == doctest::Approx(1.0).epsilon(0.01));
  CHECK(m4 == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("gamma moments match Gamma(shape, 1)") {
  for (const double shape : {0.7, 1.0, 2.5, 8.0}) {
    CAPTURE(shape);
    RngStream s(RngKey(1003).child(static_cast<std::uint64_t>(shape * 10)));
    const int n = 200000;
    double m1 = 0, m2 = 0;
    for (int i = 0; i < n; ++i) {
      const double g = s.gamma(shape);
      CHECK(g > 0.0);
      m1 += g;
      m2 += g * g;
    }
    m1 /= n;
    m2 /= n;
    CHECK(m1 == doctest::Approx(shape).epsilon(0.02));
    CHECK(m2 - m1 * m1 == doctest::Approx(shape).epsilon(0.05));
  }
}

TEST_CASE("next_below is in range and deterministic") {
  RngStream s((RngKey(5)));
  RngStream t((RngKey(5)));
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t x = s.next_below(17);
    CHECK(x < 17);
    CHECK(x == t.next_below(17));
  }
}
