#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace diffsmooth {

struct ConfidenceParams {
  double alpha = 0.001;  // certification failure probability, in (0,1)
  int n0 = 100;          // selection sample count
  int n = 2000;          // estimation sample count

  // Throws ConfigError on hard violations; returns a warning string when
  // n0 > n (allowed but usually a mistake).
  std::optional<std::string> validate() const;
};

// Standard normal CDF (erfc-based, accurate in both tails).
double normal_cdf(double x);

// Inverse standard normal CDF. Rational approximation plus one Halley
// refinement; |cdf(result) - p| <= 1e-12. Antisymmetric by construction.
// Throws std::domain_error unless 0 < p < 1.
double normal_quantile(double p);

// log P[Binomial(n, p) >= k], computed by log-sum-exp over the tail.
double binomial_log_sf(std::int64_t k, std::int64_t n, double p);

// One-sided Clopper-Pearson lower confidence bound: the largest p with
// P[Binomial(n,p) >= k] <= 1 - conf. Bisection on the exact tail, absolute
// tolerance 1e-10. k = 0 returns 0. Throws std::domain_error on bad input.
double lower_conf_bound(std::int64_t k, std::int64_t n, double conf);

}  // namespace diffsmooth
