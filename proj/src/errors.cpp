#include "htsysid/errors.hpp"

#include <cstdio>

namespace htsysid {

namespace {
std::string fmt(const char* pattern, double a, double b, int c) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}
}  // namespace

InsufficientRolloutsError::InsufficientRolloutsError(int required, int available)
    : ConfigError("insufficient rollouts: need at least " +
                  std::to_string(required) + ", have " +
                  std::to_string(available)),
      required_(required),
      available_(available) {}

ExcitationError::ExcitationError(double lambda_min, double lambda_max,
                                 int bucket)
    : std::runtime_error(
          fmt("excitation deficiency: lambda_min = %.6g, lambda_max = %.6g "
              "(bucket %d)",
              lambda_min, lambda_max, bucket)),
      lambda_min_(lambda_min),
      lambda_max_(lambda_max),
      bucket_(bucket) {}

ConvergenceError::ConvergenceError(double residual, int iterations)
    : std::runtime_error("geometric median failed to converge: residual " +
                         std::to_string(residual) + " after " +
                         std::to_string(iterations) + " iterations"),
      residual_(residual),
      iterations_(iterations) {}

}  // namespace htsysid
