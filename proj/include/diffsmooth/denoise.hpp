#pragma once

#include <functional>
#include <span>
#include <vector>

#include "diffsmooth/mixture.hpp"
#include "diffsmooth/rng.hpp"
#include "diffsmooth/schedule.hpp"

namespace diffsmooth {

// Noise-predictor role: eps_hat(x_t, t). Must be a pure function of its
// arguments; output dimension equals input dimension.
using NoisePredictor =
    std::function<void(std::span<const double> x_t, int t,
                       std::span<double> eps_out)>;

// Analytic predictor: eps_hat = -sqrt(1 - abar_t) * score_t(x_t). With it,
// one-shot denoising returns the exact posterior mean (Tweedie).
NoisePredictor exact_noise_predictor(const MixtureWorld& world,
                                     const DiffusionSchedule& schedule);

// Exact predictor plus a seeded Gaussian perturbation of magnitude lambda.
// The perturbation is a pure function of (x_t, t), so the predictor stays
// deterministic.
NoisePredictor perturbed_noise_predictor(const MixtureWorld& world,
                                         const DiffusionSchedule& schedule,
                                         double lambda, const SeedSpec& seed);

// x0_hat = (x_t - sqrt(1 - abar_t) * eps_hat) / sqrt(abar_t).
// Throws std::domain_error when t is outside 1..T.
void one_shot_denoise(const NoisePredictor& predictor,
                      std::span<const double> x_t, int t,
                      const DiffusionSchedule& schedule,
                      std::span<double> out);

struct ReverseSdeConfig {
  int num_steps = 1000;
  SeedSpec seed;
};

struct ReverseSdeResult {
  std::vector<double> x0;
  double max_score_norm = 0.0;  // over all evaluated states of this path
};

// Euler-Maruyama integration of the reverse SDE from t_start down to 0 with
// the exact mixture score and uniform steps. Per step:
//   x += dt * gamma(t)/2 * (x + 2 score) + sqrt(gamma(t) dt) * z.
// Brownian increments are the given standard normals, one per (step, coord).
ReverseSdeResult reverse_sde_path(const MixtureWorld& world,
                                  const SdeCoefficients& sde,
                                  std::span<const double> x_start,
                                  double t_start, int num_steps,
                                  std::span<const double> normals);

// Seeded wrapper: draws the num_steps x dim increments from config.seed.
ReverseSdeResult reverse_sde_sample(const MixtureWorld& world,
                                    const SdeCoefficients& sde,
                                    std::span<const double> x_start,
                                    double t_start,
                                    const ReverseSdeConfig& config);

}  // namespace diffsmooth
