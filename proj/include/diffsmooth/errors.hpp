#pragma once

#include <stdexcept>
#include <string>

namespace diffsmooth {

// Invalid configuration or parameter values. CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Requested smoothing level exceeds what the schedule can represent,
// i.e. sigma^2 > (1 - abar_T) / abar_T.
class UnreachableNoiseError : public std::runtime_error {
 public:
  UnreachableNoiseError(double sigma, double sigma_max);
  double sigma() const { return sigma_; }
  double sigma_max() const { return sigma_max_; }

 private:
  double sigma_;
  double sigma_max_;
};

// Non-finite state encountered while integrating the reverse SDE.
class IntegrationDivergedError : public std::runtime_error {
 public:
  explicit IntegrationDivergedError(int step);
  int step() const { return step_; }

 private:
  int step_;
};

}  // namespace diffsmooth
