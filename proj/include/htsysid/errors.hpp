#pragma once

#include <stdexcept>
#include <string>

namespace htsysid {

/// Invalid parameters, malformed configuration, dimension mismatches.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what_arg)
      : std::runtime_error(what_arg) {}
};

/// Filesystem or parse failure on an external artifact.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what_arg)
      : std::runtime_error(what_arg) {}
};

/// Dataset too small for the requested confidence level.
class InsufficientRolloutsError : public ConfigError {
 public:
  InsufficientRolloutsError(int required, int available);
  int required() const { return required_; }
  int available() const { return available_; }

 private:
  int required_;
  int available_;
};

/// A bucket's input Gram matrix is numerically singular.
class ExcitationError : public std::runtime_error {
 public:
  ExcitationError(double lambda_min, double lambda_max, int bucket);
  double lambda_min() const { return lambda_min_; }
  double lambda_max() const { return lambda_max_; }
  int bucket() const { return bucket_; }

 private:
  double lambda_min_;
  double lambda_max_;
  int bucket_;
};

/// Iterative solver hit its iteration cap before reaching tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(double residual, int iterations);
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

}  // namespace htsysid
