#include "diffsmooth/theory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "diffsmooth/errors.hpp"

namespace diffsmooth {

namespace {
constexpr std::uint64_t kTagX0 = 41;
constexpr std::uint64_t kTagDirection = 42;
constexpr std::uint64_t kTagPath = 43;
constexpr std::uint64_t kTagForward = 44;
constexpr std::uint64_t kTagTimestep = 45;
constexpr std::uint64_t kTagConditional = 46;

double norm2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return std::sqrt(s);
}
}  // namespace

double c_eta(int d, double eta) {
  if (d < 1) throw std::domain_error("c_eta: d must be >= 1");
  if (!(eta > 0.0 && eta < 1.0)) {
    throw std::domain_error("c_eta: eta must be in (0,1)");
  }
  const double l = std::log(1.0 / eta);
  return std::sqrt(d + 2.0 * std::sqrt(d * l) + 2.0 * l);
}

void Theorem1Config::validate() const {
  if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("theorem1: eta not in (0,1)");
  if (!(t_star > 0.0 && t_star <= 1.0)) {
    throw ConfigError("theorem1: t_star must be in (0,1]");
  }
  if (delta_norm < 0.0) throw ConfigError("theorem1: delta_norm < 0");
  if (trials < 1) throw ConfigError("theorem1: trials must be >= 1");
  if (sde_steps < 1) throw ConfigError("theorem1: sde_steps must be >= 1");
}

TheoremReport validate_theorem1(const MixtureWorld& world,
                                const SdeCoefficients& sde,
                                const Theorem1Config& cfg) {
  cfg.validate();
  const int d = world.dim();
  const double tau = sde.tau(cfg.t_star);
  const double sqrt_ab = std::sqrt(sde.alpha_bar(cfg.t_star));
  const double ceta = c_eta(d, cfg.eta);

  TheoremReport rep;
  rep.trials = cfg.trials;
  rep.distances.reserve(cfg.trials);

  std::vector<double> x_t(d), dir(d);
  std::vector<double> normals(static_cast<std::size_t>(cfg.sde_steps) * d);
  double max_score_norm = 0.0;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const std::uint64_t tr = static_cast<std::uint64_t>(trial);
    const LabeledSample x0 = world.sample_one(substream(cfg.seed, kTagX0, 0), tr);
    // Random direction, scaled to delta_norm.
    const SeedSpec dir_seed = substream(cfg.seed, kTagDirection, tr);
    double dn = 0.0;
    do {
      fill_standard_normal(dir_seed, 0, dir);
      dn = 0.0;
      for (double v : dir) dn += v * v;
      dn = std::sqrt(dn);
    } while (dn == 0.0);
    for (int j = 0; j < d; ++j) {
      x_t[j] = sqrt_ab * (x0.x[j] + cfg.delta_norm * dir[j] / dn);
    }
    fill_standard_normal(substream(cfg.seed, kTagPath, tr), 0, normals);
    ReverseSdeResult res;
    try {
      res = reverse_sde_path(world, sde, x_t, cfg.t_star, cfg.sde_steps,
                             normals);
    } catch (const IntegrationDivergedError&) {
      throw IntegrationDivergedError(trial);
    }
    max_score_norm = std::max(max_score_norm, res.max_score_norm);
    rep.distances.push_back(norm2(res.x0, x0.x));
  }

  rep.effective_c = 2.0 * max_score_norm;
  rep.bound_value = cfg.delta_norm +
                    std::sqrt(std::expm1(2.0 * tau)) * ceta +
                    tau * rep.effective_c;
  rep.bounds.assign(cfg.trials, rep.bound_value);
  rep.violated.resize(cfg.trials);
  double slack = 0.0;
  int violations = 0;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const bool v = rep.distances[trial] > rep.bound_value;
    rep.violated[trial] = v ? 1 : 0;
    violations += v;
    slack += rep.bound_value - rep.distances[trial];
  }
  rep.empirical_violation_rate = static_cast<double>(violations) / cfg.trials;
  rep.mean_slack = slack / cfg.trials;
  return rep;
}

double theorem2_constant(const DiffusionSchedule& schedule, int t) {
  const double alpha = schedule.alpha[t];
  const double beta = schedule.beta[t];
  const double ab = schedule.alpha_bar[t];
  const double sigma2 = (1.0 - alpha) / alpha;
  return 2.0 * sigma2 * alpha * std::pow(1.0 - ab, 1.5) /
         (beta * beta * std::sqrt(ab));
}

TheoremReport validate_theorem2(const MixtureWorld& world,
                                const DiffusionSchedule& schedule,
                                const NoisePredictor& predictor,
                                double lambda_noise, int trials,
                                const SeedSpec& seed, int conditional_draws) {
  if (trials < 1) throw ConfigError("theorem2: trials must be >= 1");
  if (conditional_draws < 2) {
    throw ConfigError("theorem2: conditional_draws must be >= 2");
  }
  const int d = world.dim();
  TheoremReport rep;
  rep.trials = trials;
  rep.distances.reserve(trials);
  rep.bounds.reserve(trials);
  rep.violated.reserve(trials);

  std::vector<double> x_t(d), x_hat(d), mean(d), eps_hat(d), x0_draw(d);
  double bound_sum = 0.0, slack_sum = 0.0;
  int violations = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const std::uint64_t tr = static_cast<std::uint64_t>(trial);
    const int t = 1 + static_cast<int>(
                          uniform_at(substream(seed, kTagTimestep, 0), tr) *
                          schedule.T);
    const int t_clamped = std::min(t, schedule.T);
    const double ab = schedule.alpha_bar[t_clamped];
    const double sqrt_ab = std::sqrt(ab);
    const double sqrt_1mab = std::sqrt(1.0 - ab);
    const LabeledSample x0 = world.sample_one(substream(seed, kTagX0, 0), tr);
    const SeedSpec fwd = substream(seed, kTagForward, tr);
    for (int j = 0; j < d; ++j) {
      x_t[j] = sqrt_ab * x0.x[j] + sqrt_1mab * normal_at(fwd, j);
    }
    one_shot_denoise(predictor, x_t, t_clamped, schedule, x_hat);
    world.posterior_mean(x_t, ab, mean);
    const double lhs = norm2(x_hat, mean);

    double bound;
    if (lambda_noise == 0.0) {
      bound = 1e-9;
    } else {
      // Loss estimate: mean ||eps_hat(x_t) - eps(x_t, x0)|| over exact
      // conditional draws of x0 | x_t, plus a 3-standard-error allowance.
      predictor(x_t, t_clamped, eps_hat);
      const SeedSpec cond = substream(seed, kTagConditional, tr);
      double s1 = 0.0, s2 = 0.0;
      for (int k = 0; k < conditional_draws; ++k) {
        world.sample_conditional_x0(x_t, ab, cond,
                                    static_cast<std::uint64_t>(k), x0_draw);
        double e2 = 0.0;
        for (int j = 0; j < d; ++j) {
          const double e = (x_t[j] - sqrt_ab * x0_draw[j]) / sqrt_1mab;
          const double diff = eps_hat[j] - e;
          e2 += diff * diff;
        }
        const double v = std::sqrt(e2);
        s1 += v;
        s2 += v * v;
      }
      const double lhat = s1 / conditional_draws;
      const double var =
          std::max(0.0, (s2 - conditional_draws * lhat * lhat) /
                            (conditional_draws - 1));
      const double se = std::sqrt(var / conditional_draws);
      bound = theorem2_constant(schedule, t_clamped) * (lhat + 3.0 * se);
    }
    const bool v = lhs > bound;
    violations += v;
    bound_sum += bound;
    slack_sum += bound - lhs;
    rep.distances.push_back(lhs);
    rep.bounds.push_back(bound);
    rep.violated.push_back(v ? 1 : 0);
  }
  rep.bound_value = bound_sum / trials;
  rep.empirical_violation_rate = static_cast<double>(violations) / trials;
  rep.mean_slack = slack_sum / trials;
  rep.effective_c = 0.0;
  return rep;
}

void write_report(const TheoremReport& report, const std::string& path,
                  bool with_trials) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write report file: " + path);
  f.precision(17);
  f << "trials: " << report.trials << "\n";
  f << "bound_value: " << report.bound_value << "\n";
  f << "empirical_violation_rate: " << report.empirical_violation_rate << "\n";
  f << "mean_slack: " << report.mean_slack << "\n";
  f << "effective_c: " << report.effective_c << "\n";
  if (with_trials) {
    f << "\ntrial,distance,bound,violated\n";
    for (int i = 0; i < report.trials; ++i) {
      f << i << "," << report.distances[i] << "," << report.bounds[i] << ","
        << static_cast<int>(report.violated[i]) << "\n";
    }
  }
}

}  // namespace diffsmooth
