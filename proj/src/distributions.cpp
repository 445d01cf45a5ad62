#include "htsysid/distributions.hpp"

#include <cmath>

#include "htsysid/errors.hpp"

namespace htsysid {

DistributionSpec DistributionSpec::gaussian(double scale) {
  DistributionSpec s{DistKind::gaussian, scale, 0.0};
  s.validate();
  return s;
}

DistributionSpec DistributionSpec::student_t(double nu, double scale) {
  DistributionSpec s{DistKind::student_t, scale, nu};
  s.validate();
  return s;
}

DistributionSpec DistributionSpec::three_point(double p, double scale) {
  DistributionSpec s{DistKind::three_point, scale, p};
  s.validate();
  return s;
}

void DistributionSpec::validate() const {
  if (!std::isfinite(scale) || scale <= 0.0)
    throw ConfigError("distribution scale must be finite and > 0");
  switch (kind) {
    case DistKind::gaussian:
      break;
    case DistKind::student_t:
      if (!std::isfinite(param) || param <= 2.0)
        throw ConfigError(
            "student_t requires nu > 2 (finite variance); got nu = " +
            std::to_string(param));
      break;
    case DistKind::three_point:
      if (!std::isfinite(param) || param <= 0.0 || param > 0.5)
        throw ConfigError("three_point requires tail mass p in (0, 0.5]; got p = " +
                          std::to_string(param));
      break;
  }
}

std::optional<double> DistributionSpec::fourth_moment() const {
  const double s4 = scale * scale * scale * scale;
  switch (kind) {
    case DistKind::gaussian:
      return 3.0 * s4;
    case DistKind::student_t:
      // Raw t(nu) has E[X^4] = 3 nu^2 / ((nu-2)(nu-4)); after the
      // sqrt((nu-2)/nu) variance normalization this is 3 (nu-2)/(nu-4).
      if (param <= 4.0) return std::nullopt;
      return 3.0 * s4 * (param - 2.0) / (param - 4.0);
    case DistKind::three_point:
      // E[X^4] = 2p a^4 with a^2 = scale^2/(2p).
      return s4 / (2.0 * param);
  }
  return std::nullopt;
}

std::optional<double> kurtosis_ratio(const DistributionSpec& spec) {
  const auto m4 = spec.fourth_moment();
  if (!m4) return std::nullopt;
  return *m4 / (spec.variance() * spec.variance());
}

double sample_scalar(const DistributionSpec& spec, RngStream& stream) {
  switch (spec.kind) {
    case DistKind::gaussian:
      return spec.scale * stream.normal();
    case DistKind::student_t: {
      const double nu = spec.param;
      const double z = stream.normal();
      const double chi2 = 2.0 * stream.gamma(0.5 * nu);
      const double t = z * std::sqrt(nu / chi2);
      return spec.scale * std::sqrt((nu - 2.0) / nu) * t;
    }
    case DistKind::three_point: {
      const double p = spec.param;
      const double a = spec.scale / std::sqrt(2.0 * p);
      const double u = stream.uniform01();
      if (u < p) return -a;
      if (u < 2.0 * p) return a;
      return 0.0;
    }
  }
  return 0.0;
}

Eigen::VectorXd sample_vector(const DistributionSpec& spec, int dim, RngKey key) {
  if (dim <= 0) throw ConfigError("sample_vector: dim must be positive");
  RngStream stream(key);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = sample_scalar(spec, stream);
  return v;
}

DistKind dist_kind_from_string(const std::string& name) {
  if (name == "gaussian") return DistKind::gaussian;
  if (name == "student_t") return DistKind::student_t;
  if (name == "three_point") return DistKind::three_point;
  throw ConfigError("unknown distribution kind '" + name +
                    "' (expected gaussian, student_t, or three_point)");
}

std::string to_string(DistKind kind) {
  switch (kind) {
    case DistKind::gaussian: return "gaussian";
    case DistKind::student_t: return "student_t";
    case DistKind::three_point: return "three_point";
  }
  return "unknown";
}

}  // namespace htsysid
