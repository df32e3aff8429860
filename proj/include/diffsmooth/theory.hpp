#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diffsmooth/denoise.hpp"
#include "diffsmooth/mixture.hpp"
#include "diffsmooth/rng.hpp"
#include "diffsmooth/schedule.hpp"

namespace diffsmooth {

// C_eta = sqrt(d + 2 sqrt(d log(1/eta)) + 2 log(1/eta)): with probability at
// least 1 - eta a standard normal d-vector has norm below C_eta.
double c_eta(int d, double eta);

struct Theorem1Config {
  double eta = 0.05;
  double t_star = 0.5;      // start time in (0, 1]
  double delta_norm = 0.3;  // adversarial perturbation magnitude
  int trials = 1000;
  int sde_steps = 1000;
  SeedSpec seed;

  void validate() const;
};

struct TheoremReport {
  double bound_value = 0.0;
  double empirical_violation_rate = 0.0;
  int trials = 0;
  double mean_slack = 0.0;
  double effective_c = 0.0;
  // Per-trial trace, aligned: observed distance, bound, violation flag.
  std::vector<double> distances;
  std::vector<double> bounds;
  std::vector<char> violated;
};

// Proximity of the reverse-SDE sample to the clean point: per trial draws
// x0, sets x_rs = x0 + delta with ||delta|| = delta_norm in a random
// direction, integrates the reverse SDE from sqrt(abar(t*)) x_rs, and checks
// ||xhat0 - x0|| <= ||x_rs - x0|| + sqrt(e^{2 tau} - 1) C_eta + tau C.
// C is an effective constant, twice the largest score norm seen along the
// integrated trajectories, so the validated claim is scoped to the visited
// region; a global score bound does not exist for Gaussian mixtures.
TheoremReport validate_theorem1(const MixtureWorld& world,
                                const SdeCoefficients& sde,
                                const Theorem1Config& cfg);

// One-shot denoiser output vs the conditional mean: per trial draws a
// forward sample x_t, compares one_shot_denoise with posterior_mean, and
// checks the distance against K(t) * lhat where lhat is a Monte-Carlo
// estimate (conditional_draws exact draws of x0 | x_t) of the time-t noise
// prediction loss, with a 3-standard-error allowance. With lambda = 0 the
// left side must vanish to 1e-9 and no loss estimate is needed.
TheoremReport validate_theorem2(const MixtureWorld& world,
                                const DiffusionSchedule& schedule,
                                const NoisePredictor& predictor,
                                double lambda_noise, int trials,
                                const SeedSpec& seed,
                                int conditional_draws = 512);

// Theorem 2 constant K(t) = 2 sigma_t^2 alpha_t (1-abar_t)^{3/2} /
// (beta_t^2 sqrt(abar_t)) with sigma_t^2 = (1-alpha_t)/alpha_t.
double theorem2_constant(const DiffusionSchedule& schedule, int t);

// Key-value block, optionally followed by a per-trial CSV
// (trial,distance,bound,violated).
void write_report(const TheoremReport& report, const std::string& path,
                  bool with_trials);

}  // namespace diffsmooth
