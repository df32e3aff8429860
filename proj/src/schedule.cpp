#include "diffsmooth/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "diffsmooth/errors.hpp"

namespace diffsmooth {

double DiffusionSchedule::max_sigma() const {
  return std::sqrt(noise_ratio(T));
}

DiffusionSchedule linear_schedule(int T, double beta1, double betaT) {
  if (T < 2) throw ConfigError("schedule: T must be >= 2");
  if (!(beta1 > 0.0 && beta1 <= betaT && betaT < 1.0)) {
    throw ConfigError("schedule: need 0 < beta1 <= betaT < 1");
  }
  DiffusionSchedule s;
  s.T = T;
  s.beta_min = beta1;
  s.beta_max = betaT;
  s.beta.assign(T + 1, 0.0);
  s.alpha.assign(T + 1, 1.0);
  s.alpha_bar.assign(T + 1, 1.0);
  // Accumulate the cumulative product in extended precision; 1000-term
  // products in double drift by ~1e-13.
  long double prod = 1.0L;
  for (int t = 1; t <= T; ++t) {
    s.beta[t] = beta1 + (betaT - beta1) * static_cast<double>(t - 1) /
                            static_cast<double>(T - 1);
    s.alpha[t] = 1.0 - s.beta[t];
    prod *= static_cast<long double>(s.alpha[t]);
    s.alpha_bar[t] = static_cast<double>(prod);
  }
  return s;
}

Timestep compute_timestep(const DiffusionSchedule& schedule, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("compute_timestep: sigma must be > 0");
  const double target = sigma * sigma;
  if (target > schedule.noise_ratio(schedule.T)) {
    throw UnreachableNoiseError(sigma, schedule.max_sigma());
  }
  // noise_ratio is strictly increasing in t, so binary search for the first
  // step meeting the target.
  int lo = 1, hi = schedule.T;
  while (lo < hi) {
    const int mid = lo + (hi - lo) / 2;
    if (schedule.noise_ratio(mid) >= target) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return Timestep{lo, schedule.alpha_bar[lo]};
}

double SdeCoefficients::gamma(double t) const {
  if (t <= 0.0) return static_cast<double>(T) * beta[1];
  const int j = std::min(T, static_cast<int>(std::ceil(t * T)));
  return static_cast<double>(T) * beta[std::max(1, j)];
}

double SdeCoefficients::tau(double t) const {
  if (t <= 0.0) return 0.0;
  t = std::min(t, 1.0);
  const int j = std::min(T, static_cast<int>(std::ceil(t * T)));
  const double frac = t * T - static_cast<double>(j - 1);
  return tau_prefix[j - 1] + 0.5 * beta[j] * frac;
}

double SdeCoefficients::alpha_bar(double t) const {
  return std::exp(-2.0 * tau(t));
}

SdeCoefficients make_sde(int T, std::vector<double> beta) {
  SdeCoefficients sde;
  sde.T = T;
  sde.beta = std::move(beta);
  sde.tau_prefix.assign(T + 1, 0.0);
  for (int j = 1; j <= T; ++j) {
    sde.tau_prefix[j] = sde.tau_prefix[j - 1] + 0.5 * sde.beta[j];
  }
  return sde;
}

SdeCoefficients continuous_from_discrete(const DiffusionSchedule& schedule) {
  return make_sde(schedule.T, schedule.beta);
}

double time_for_alpha_bar(const SdeCoefficients& sde, double target) {
  if (!(target > 0.0 && target < 1.0)) {
    throw ConfigError("time_for_alpha_bar: target must be in (0,1)");
  }
  if (sde.alpha_bar(1.0) > target) {
    throw ConfigError("time_for_alpha_bar: target below alpha_bar(1)");
  }
  double lo = 0.0, hi = 1.0;  // alpha_bar decreasing in t
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (sde.alpha_bar(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace diffsmooth
