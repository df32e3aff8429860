#include "diffsmooth/denoise.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "diffsmooth/errors.hpp"

namespace diffsmooth {

NoisePredictor exact_noise_predictor(const MixtureWorld& world,
                                     const DiffusionSchedule& schedule) {
  return [&world, &schedule](std::span<const double> x_t, int t,
                             std::span<double> eps_out) {
    const double ab = schedule.alpha_bar[t];
    world.score_t(x_t, ab, eps_out);
    const double c = -std::sqrt(1.0 - ab);
    for (double& e : eps_out) e *= c;
  };
}

NoisePredictor perturbed_noise_predictor(const MixtureWorld& world,
                                         const DiffusionSchedule& schedule,
                                         double lambda, const SeedSpec& seed) {
  NoisePredictor exact = exact_noise_predictor(world, schedule);
  return [exact, lambda, seed](std::span<const double> x_t, int t,
                               std::span<double> eps_out) {
    exact(x_t, t, eps_out);
    // Hash the input bits into a stream id so the perturbation is a fixed
    // function of (x_t, t).
    std::uint64_t h = 0x9e3779b97f4a7c15ull ^ static_cast<std::uint64_t>(t);
    for (double v : x_t) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      h = threefry2x64({h, seed.stream_id}, {bits, 0})[0];
    }
    const SeedSpec point_seed{seed.base_seed, h};
    for (std::size_t j = 0; j < eps_out.size(); ++j) {
      eps_out[j] += lambda * normal_at(point_seed, j);
    }
  };
}

void one_shot_denoise(const NoisePredictor& predictor,
                      std::span<const double> x_t, int t,
                      const DiffusionSchedule& schedule,
                      std::span<double> out) {
  if (t < 1 || t > schedule.T) {
    throw std::domain_error("one_shot_denoise: t out of range");
  }
  const double ab = schedule.alpha_bar[t];
  predictor(x_t, t, out);
  const double sqrt_ab = std::sqrt(ab);
  const double sqrt_1mab = std::sqrt(1.0 - ab);
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = (x_t[j] - sqrt_1mab * out[j]) / sqrt_ab;
  }
}

ReverseSdeResult reverse_sde_path(const MixtureWorld& world,
                                  const SdeCoefficients& sde,
                                  std::span<const double> x_start,
                                  double t_start, int num_steps,
                                  std::span<const double> normals) {
  if (!(t_start > 0.0 && t_start <= 1.0)) {
    throw ConfigError("reverse_sde: t_start must be in (0,1]");
  }
  if (num_steps < 1) throw ConfigError("reverse_sde: num_steps must be >= 1");
  const int d = world.dim();
  const double dt = t_start / num_steps;
  ReverseSdeResult res;
  res.x0.assign(x_start.begin(), x_start.end());
  std::vector<double> score(d);
  for (int k = 0; k < num_steps; ++k) {
    const double t = t_start - k * dt;
    const double g = sde.gamma(t);
    // Extreme rate schedules can underflow alpha_bar to 0; the score has a
    // well-defined pure-noise limit there, so clamp instead of failing.
    const double ab =
        std::max(sde.alpha_bar(t), std::numeric_limits<double>::min());
    world.score_t(res.x0, ab, score);
    double sn2 = 0.0;
    for (double s : score) sn2 += s * s;
    res.max_score_norm = std::max(res.max_score_norm, std::sqrt(sn2));
    const double diff = std::sqrt(g * dt);
    bool finite = true;
    for (int j = 0; j < d; ++j) {
      res.x0[j] += dt * 0.5 * g * (res.x0[j] + 2.0 * score[j]) +
                   diff * normals[static_cast<std::size_t>(k) * d + j];
      finite = finite && std::isfinite(res.x0[j]);
    }
    if (!finite) throw IntegrationDivergedError(k);
  }
  return res;
}

ReverseSdeResult reverse_sde_sample(const MixtureWorld& world,
                                    const SdeCoefficients& sde,
                                    std::span<const double> x_start,
                                    double t_start,
                                    const ReverseSdeConfig& config) {
  std::vector<double> z(static_cast<std::size_t>(config.num_steps) *
                        world.dim());
  fill_standard_normal(config.seed, 0, z);
  return reverse_sde_path(world, sde, x_start, t_start, config.num_steps, z);
}

}  // namespace diffsmooth
