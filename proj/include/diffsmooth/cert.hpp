#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "diffsmooth/classify.hpp"
#include "diffsmooth/denoise.hpp"
#include "diffsmooth/schedule.hpp"
#include "diffsmooth/stats.hpp"

namespace diffsmooth {

inline constexpr int kAbstain = -1;

enum class DataConvention {
  raw,           // points live in R^d; timestep matched against sigma
  unit_interval  // points in [0,1]^d; 2x-1 mapping and timestep for 2*sigma
};

struct DiffSmoothConfig {
  double sigma = 0.5;
  double sigma_local = 0.0;        // sigma' <= sigma
  double sigma_local_shift = 0.0;  // additive shift applied at prediction time
  int m = 1;
  DataConvention convention = DataConvention::raw;
  ConfidenceParams conf;
  SeedSpec seed;

  void validate() const;
};

struct CertificationRecord {
  std::int64_t index = 0;
  int true_label = 0;
  int predicted = kAbstain;
  double radius = 0.0;
  bool correct = false;
  double wall_time = 0.0;  // seconds
  // Audit fields: enough to recompute p_a_lower and the radius exactly.
  std::vector<std::int64_t> counts0;
  std::vector<std::int64_t> counts;
  double p_a_lower = 0.0;
  SeedSpec seed;
};

// Hard base classifier over a noisy sample. The SeedSpec feeds any internal
// randomness (local smoothing draws); callers pass a distinct stream per
// Monte-Carlo draw so results are partition-invariant.
using BaseClassifier =
    std::function<int(std::span<const double> x_rs, const SeedSpec& seed)>;

// The purify-then-locally-smooth base classifier. Purification runs the
// one-shot denoiser at the timestep matched to the smoothing level, then the
// prediction is argmax_c sum_i F(x_hat + delta_i')/m with
// delta_i' ~ N(0, (sigma' + shift)^2 I).
int purify_classify(std::span<const double> x_rs, const DiffSmoothConfig& cfg,
                    const SoftClassifierHandle& F,
                    const NoisePredictor& predictor,
                    const DiffusionSchedule& schedule,
                    const SeedSpec& local_seed);

// Same pipeline with the timestep resolved once up front.
BaseClassifier make_purify_classifier(const DiffSmoothConfig& cfg,
                                      const SoftClassifierHandle& F,
                                      const NoisePredictor& predictor,
                                      const DiffusionSchedule& schedule);

// Plain randomized smoothing (no purification, no local smoothing).
BaseClassifier make_plain_classifier(const SoftClassifierHandle& F);

// Local smoothing without purification (the ablation arm).
BaseClassifier make_local_only_classifier(const DiffSmoothConfig& cfg,
                                          const SoftClassifierHandle& F);

// n evaluations of f(x + delta), delta ~ N(0, sigma^2 I), tallied per class.
// Deterministic per seed; draw i depends only on (seed, i).
std::vector<std::int64_t> sample_under_noise(const BaseClassifier& f,
                                             std::span<const double> x,
                                             std::int64_t n, double sigma,
                                             int num_labels,
                                             const SeedSpec& seed);

// Certification with the one-sided radius sigma * Phi^-1(pA_lower); abstains
// when the bound does not exceed 1/2.
CertificationRecord certify_with_base(std::span<const double> x,
                                      int true_label,
                                      const DiffSmoothConfig& cfg,
                                      const BaseClassifier& f, int num_labels);

CertificationRecord certify(std::span<const double> x, int true_label,
                            const DiffSmoothConfig& cfg,
                            const SoftClassifierHandle& F,
                            const NoisePredictor& predictor,
                            const DiffusionSchedule& schedule);

// Two-sided binomial test between the top two counts; abstains when not
// significant at alpha_pred.
int predict_smoothed(std::span<const double> x, const DiffSmoothConfig& cfg,
                     const SoftClassifierHandle& F,
                     const NoisePredictor& predictor,
                     const DiffusionSchedule& schedule, std::int64_t n_pred,
                     double alpha_pred);

// Documentation/test helper for the two-class radius form.
double radius_two_sided(double sigma, double p_a_lower, double p_b_upper);

}  // namespace diffsmooth
