#include "diffsmooth/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "diffsmooth/errors.hpp"

namespace diffsmooth {

std::optional<std::string> ConfidenceParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("alpha must be in (0,1)");
  }
  if (n0 < 1 || n < 1) {
    throw ConfigError("n0 and n must be >= 1");
  }
  if (n0 > n) {
    return "n0 > n: selection uses more samples than estimation";
  }
  return std::nullopt;
}

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

namespace {

// Acklam's rational approximation for p in (0, 0.5].
double quantile_seed(double p) {
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return q *
         (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double quantile_lower_half(double p) {
  double x = quantile_seed(p);
  // One Halley step against the erfc-based CDF.
  const double e = normal_cdf(x) - p;
  const double u =
      e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("normal_quantile: p must be in (0,1)");
  }
  if (p == 0.5) return 0.0;
  return p < 0.5 ? quantile_lower_half(p) : -quantile_lower_half(1.0 - p);
}

double binomial_log_sf(std::int64_t k, std::int64_t n, double p) {
  if (k <= 0) return 0.0;
  if (k > n) return -std::numeric_limits<double>::infinity();
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return 0.0;
  const double log_p = std::log(p);
  const double log_1mp = std::log1p(-p);
  const double lgn = std::lgamma(static_cast<double>(n) + 1.0);
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(n - k + 1));
  for (std::int64_t i = k; i <= n; ++i) {
    const double log_c = lgn - std::lgamma(static_cast<double>(i) + 1.0) -
                         std::lgamma(static_cast<double>(n - i) + 1.0);
    const double t = log_c + static_cast<double>(i) * log_p +
                     static_cast<double>(n - i) * log_1mp;
    terms.push_back(t);
    max_term = std::max(max_term, t);
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - max_term);
  return max_term + std::log(s);
}

double lower_conf_bound(std::int64_t k, std::int64_t n, double conf) {
  if (n < 1 || k < 0 || k > n) {
    throw std::domain_error("lower_conf_bound: need 0 <= k <= n, n >= 1");
  }
  if (!(conf > 0.0 && conf < 1.0)) {
    throw std::domain_error("lower_conf_bound: conf must be in (0,1)");
  }
  if (k == 0) return 0.0;
  const double log_alpha = std::log1p(-conf);
  if (k == n) {
    return std::exp(log_alpha / static_cast<double>(n));
  }
  double lo = 0.0;   // log_sf <= log_alpha here
  double hi = 1.0;   // log_sf > log_alpha here
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (binomial_log_sf(k, n, mid) <= log_alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace diffsmooth
