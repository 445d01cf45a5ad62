#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "htsysid/rng.hpp"

namespace htsysid {

enum class DistKind { gaussian, student_t, three_point };

/// Zero-mean scalar noise family with an exactly known second moment:
/// the per-coordinate standard deviation equals `scale` for every kind.
///   gaussian     N(0, scale^2)
///   student_t    Student-t(nu), nu > 2, rescaled by sqrt((nu-2)/nu)
///   three_point  {-a, 0, +a} with P(+-a) = p each and a = scale/sqrt(2p)
/// `param` carries nu for student_t and the tail mass p for three_point.
struct DistributionSpec {
  DistKind kind = DistKind::gaussian;
  double scale = 1.0;
  double param = 0.0;

  static DistributionSpec gaussian(double scale);
  static DistributionSpec student_t(double nu, double scale);
  static DistributionSpec three_point(double p, double scale);

  /// Throws ConfigError on out-of-range parameters.
  void validate() const;

  double variance() const { return scale * scale; }

  /// E[X^4] of one coordinate; nullopt when the moment diverges (nu <= 4).
  std::optional<double> fourth_moment() const;
};

/// Kurtosis ratio E[X^4]/sigma^4 (the sigma~^4/sigma^4 excitation constant);
/// nullopt when the fourth moment does not exist. Always >= 1 when defined.
std::optional<double> kurtosis_ratio(const DistributionSpec& spec);

double sample_scalar(const DistributionSpec& spec, RngStream& stream);

/// i.i.d. coordinates drawn from a stream derived from `key`.
Eigen::VectorXd sample_vector(const DistributionSpec& spec, int dim, RngKey key);

DistKind dist_kind_from_string(const std::string& name);
std::string to_string(DistKind kind);

}  // namespace htsysid
