#include "diffsmooth/cert.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "diffsmooth/errors.hpp"

namespace diffsmooth {

namespace {
constexpr std::uint64_t kTagSelect = 31;
constexpr std::uint64_t kTagEstimate = 32;
constexpr std::uint64_t kTagGauss = 33;
constexpr std::uint64_t kTagDraw = 34;
constexpr std::uint64_t kTagPredict = 35;
}  // namespace

void DiffSmoothConfig::validate() const {
  if (!(sigma > 0.0)) throw ConfigError("cfg: sigma must be > 0");
  if (sigma_local < 0.0 || sigma_local > sigma) {
    throw ConfigError("cfg: need 0 <= sigma_local <= sigma");
  }
  if (sigma_local_shift < 0.0) {
    throw ConfigError("cfg: sigma_local_shift must be >= 0");
  }
  if (m < 1) throw ConfigError("cfg: m must be >= 1");
  conf.validate();
}

namespace {

// Local smoothing vote: argmax of the mean confidence over m noisy copies.
int vote_mean_confidence(std::span<const double> x_hat,
                         const SoftClassifierHandle& F, int m,
                         double sigma_loc, const SeedSpec& local_seed) {
  thread_local std::vector<double> probs, acc, noisy;
  const int d = static_cast<int>(x_hat.size());
  probs.resize(F.num_labels);
  acc.assign(F.num_labels, 0.0);
  if (sigma_loc == 0.0) {
    F.eval(x_hat, probs);
    return argmax_smallest(probs);
  }
  noisy.resize(d);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < d; ++j) {
      noisy[j] = x_hat[j] +
                 sigma_loc * normal_at(local_seed,
                                       static_cast<std::uint64_t>(i) * d + j);
    }
    F.eval(noisy, probs);
    for (int c = 0; c < F.num_labels; ++c) acc[c] += probs[c];
  }
  return argmax_smallest(acc);
}

int purify_classify_at(std::span<const double> x_rs,
                       const DiffSmoothConfig& cfg,
                       const SoftClassifierHandle& F,
                       const NoisePredictor& predictor,
                       const DiffusionSchedule& schedule, const Timestep& ts,
                       const SeedSpec& local_seed) {
  thread_local std::vector<double> x_t, x_hat;
  const int d = static_cast<int>(x_rs.size());
  x_t.resize(d);
  x_hat.resize(d);
  const double sqrt_ab = std::sqrt(ts.alpha_bar);
  if (cfg.convention == DataConvention::unit_interval) {
    for (int j = 0; j < d; ++j) x_t[j] = sqrt_ab * (2.0 * x_rs[j] - 1.0);
  } else {
    for (int j = 0; j < d; ++j) x_t[j] = sqrt_ab * x_rs[j];
  }
  one_shot_denoise(predictor, x_t, ts.t, schedule, x_hat);
  if (cfg.convention == DataConvention::unit_interval) {
    for (int j = 0; j < d; ++j) x_hat[j] = (x_hat[j] + 1.0) / 2.0;
  }
  const double sigma_loc = cfg.sigma_local + cfg.sigma_local_shift;
  return vote_mean_confidence(x_hat, F, cfg.m, sigma_loc, local_seed);
}

Timestep resolve_timestep(const DiffSmoothConfig& cfg,
                          const DiffusionSchedule& schedule) {
  const double match_sigma = cfg.convention == DataConvention::unit_interval
                                 ? 2.0 * cfg.sigma
                                 : cfg.sigma;
  return compute_timestep(schedule, match_sigma);
}

}  // namespace

int purify_classify(std::span<const double> x_rs, const DiffSmoothConfig& cfg,
                    const SoftClassifierHandle& F,
                    const NoisePredictor& predictor,
                    const DiffusionSchedule& schedule,
                    const SeedSpec& local_seed) {
  cfg.validate();
  return purify_classify_at(x_rs, cfg, F, predictor, schedule,
                            resolve_timestep(cfg, schedule), local_seed);
}

BaseClassifier make_purify_classifier(const DiffSmoothConfig& cfg,
                                      const SoftClassifierHandle& F,
                                      const NoisePredictor& predictor,
                                      const DiffusionSchedule& schedule) {
  cfg.validate();
  const Timestep ts = resolve_timestep(cfg, schedule);
  return [cfg, F, predictor, &schedule, ts](std::span<const double> x_rs,
                                            const SeedSpec& seed) {
    return purify_classify_at(x_rs, cfg, F, predictor, schedule, ts, seed);
  };
}

BaseClassifier make_plain_classifier(const SoftClassifierHandle& F) {
  return [F](std::span<const double> x_rs, const SeedSpec&) {
    thread_local std::vector<double> probs;
    probs.resize(F.num_labels);
    F.eval(x_rs, probs);
    return argmax_smallest(probs);
  };
}

BaseClassifier make_local_only_classifier(const DiffSmoothConfig& cfg,
                                          const SoftClassifierHandle& F) {
  cfg.validate();
  const double sigma_loc = cfg.sigma_local + cfg.sigma_local_shift;
  const int m = cfg.m;
  return [F, m, sigma_loc](std::span<const double> x_rs,
                           const SeedSpec& seed) {
    return vote_mean_confidence(x_rs, F, m, sigma_loc, seed);
  };
}

std::vector<std::int64_t> sample_under_noise(const BaseClassifier& f,
                                             std::span<const double> x,
                                             std::int64_t n, double sigma,
                                             int num_labels,
                                             const SeedSpec& seed) {
  std::vector<std::int64_t> counts(num_labels, 0);
  const int d = static_cast<int>(x.size());
  const SeedSpec gauss = substream(seed, kTagGauss, 0);
  thread_local std::vector<double> x_rs;
  x_rs.resize(d);
  for (std::int64_t i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      x_rs[j] = x[j] + sigma * normal_at(gauss,
                                         static_cast<std::uint64_t>(i) * d + j);
    }
    const int y = f(x_rs, substream(seed, kTagDraw, i));
    counts.at(y) += 1;
  }
  return counts;
}

CertificationRecord certify_with_base(std::span<const double> x,
                                      int true_label,
                                      const DiffSmoothConfig& cfg,
                                      const BaseClassifier& f,
                                      int num_labels) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  CertificationRecord rec;
  rec.true_label = true_label;
  rec.seed = cfg.seed;
  rec.counts0 = sample_under_noise(f, x, cfg.conf.n0, cfg.sigma, num_labels,
                                   substream(cfg.seed, kTagSelect, 0));
  std::vector<double> as_double(rec.counts0.begin(), rec.counts0.end());
  const int c_a = argmax_smallest(as_double);
  rec.counts = sample_under_noise(f, x, cfg.conf.n, cfg.sigma, num_labels,
                                  substream(cfg.seed, kTagEstimate, 0));
  rec.p_a_lower =
      lower_conf_bound(rec.counts[c_a], cfg.conf.n, 1.0 - cfg.conf.alpha);
  if (rec.p_a_lower > 0.5) {
    rec.predicted = c_a;
    rec.radius = cfg.sigma * normal_quantile(rec.p_a_lower);
    rec.correct = (c_a == true_label);
  } else {
    rec.predicted = kAbstain;
    rec.radius = 0.0;
    rec.correct = false;
  }
  rec.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return rec;
}

CertificationRecord certify(std::span<const double> x, int true_label,
                            const DiffSmoothConfig& cfg,
                            const SoftClassifierHandle& F,
                            const NoisePredictor& predictor,
                            const DiffusionSchedule& schedule) {
  return certify_with_base(x, true_label, cfg,
                           make_purify_classifier(cfg, F, predictor, schedule),
                           F.num_labels);
}

int predict_smoothed(std::span<const double> x, const DiffSmoothConfig& cfg,
                     const SoftClassifierHandle& F,
                     const NoisePredictor& predictor,
                     const DiffusionSchedule& schedule, std::int64_t n_pred,
                     double alpha_pred) {
  if (n_pred < 1) throw ConfigError("predict: n_pred must be >= 1");
  const auto f = make_purify_classifier(cfg, F, predictor, schedule);
  const auto counts = sample_under_noise(f, x, n_pred, cfg.sigma,
                                         F.num_labels,
                                         substream(cfg.seed, kTagPredict, 0));
  std::vector<double> as_double(counts.begin(), counts.end());
  const int top = argmax_smallest(as_double);
  std::int64_t runner_up = 0;
  for (int c = 0; c < F.num_labels; ++c) {
    if (c != top) runner_up = std::max(runner_up, counts[c]);
  }
  const std::int64_t n_two = counts[top] + runner_up;
  // Two-sided exact binomial test against p = 1/2.
  const double p_value =
      std::min(1.0, 2.0 * std::exp(binomial_log_sf(counts[top], n_two, 0.5)));
  return p_value <= alpha_pred ? top : kAbstain;
}

double radius_two_sided(double sigma, double p_a_lower, double p_b_upper) {
  return 0.5 * sigma *
         (normal_quantile(p_a_lower) - normal_quantile(p_b_upper));
}

}  // namespace diffsmooth
