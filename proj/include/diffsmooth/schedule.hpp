#pragma once

#include <vector>

namespace diffsmooth {

// Discrete DDPM variance schedule. Arrays are 1-indexed by timestep;
// index 0 holds the empty-product conventions (alpha_bar[0] = 1).
struct DiffusionSchedule {
  int T = 0;
  std::vector<double> beta;       // beta[t], t in 1..T; beta[0] = 0
  std::vector<double> alpha;      // 1 - beta[t]
  std::vector<double> alpha_bar;  // prod_{s<=t} alpha[s]; alpha_bar[0] = 1
  double beta_min = 0.0;
  double beta_max = 0.0;

  // (1 - abar_t) / abar_t, the effective noise variance at step t.
  double noise_ratio(int t) const {
    return (1.0 - alpha_bar[t]) / alpha_bar[t];
  }
  // Largest smoothing sigma the schedule can match.
  double max_sigma() const;
};

DiffusionSchedule linear_schedule(int T, double beta1, double betaT);

struct Timestep {
  int t = 0;
  double alpha_bar = 1.0;
};

// Smallest t with (1 - abar_t)/abar_t >= sigma^2 (the ComputeTimestep loop's
// exit state). Throws UnreachableNoiseError when sigma is above capacity.
Timestep compute_timestep(const DiffusionSchedule& schedule, double sigma);

// Continuous VP-SDE coefficients induced by a discrete schedule:
// gamma(t) = T * beta_ceil(tT) on (0,1], tau(t) = int_0^t gamma/2,
// alpha_bar(t) = exp(-2 tau(t)).
struct SdeCoefficients {
  int T = 0;
  std::vector<double> beta;        // 1-indexed as in DiffusionSchedule
  std::vector<double> tau_prefix;  // tau at grid points j/T, j in 0..T

  double gamma(double t) const;
  double tau(double t) const;
  double alpha_bar(double t) const;
};

SdeCoefficients continuous_from_discrete(const DiffusionSchedule& schedule);

// SDE coefficients with a piecewise-constant beta table supplied directly
// (used for degenerate cases such as gamma = 0 in tests).
SdeCoefficients make_sde(int T, std::vector<double> beta);

// Bisection for the time t in (0,1] with alpha_bar(t) = target.
double time_for_alpha_bar(const SdeCoefficients& sde, double target);

}  // namespace diffsmooth
