#pragma once

#include <span>
#include <string>
#include <vector>

#include "diffsmooth/rng.hpp"

namespace diffsmooth {

struct LabeledSample {
  std::vector<double> x;
  int label = 0;
};

struct MixtureComponent {
  double weight = 1.0;
  std::vector<double> mean;
  double scale = 1.0;  // isotropic standard deviation
  int label = 0;
};

// K-component isotropic Gaussian mixture with labels. All closed-form
// quantities below refer to the VP-noised marginal at signal retention
// abar: p_t = sum_k w_k N(sqrt(abar) mu_k, (abar s_k^2 + 1 - abar) I).
class MixtureWorld {
 public:
  static constexpr int kMaxComponents = 64;

  MixtureWorld() = default;
  MixtureWorld(int dim, std::vector<MixtureComponent> components);

  int dim() const { return dim_; }
  int num_labels() const { return num_labels_; }
  const std::vector<MixtureComponent>& components() const {
    return components_;
  }

  // d = 2, four equal-weight components at (+-2, +-2), scale 0.5, four
  // distinct labels.
  static MixtureWorld make_default();

  std::vector<LabeledSample> sample(const SeedSpec& seed,
                                    std::size_t count) const;
  // Draw i of a sampling stream without materializing the whole list.
  LabeledSample sample_one(const SeedSpec& seed, std::uint64_t index) const;

  double log_density_t(std::span<const double> x, double alpha_bar) const;
  void score_t(std::span<const double> x, double alpha_bar,
               std::span<double> out) const;
  void posterior_mean(std::span<const double> x_t, double alpha_bar,
                      std::span<double> out) const;
  void soft_classify(std::span<const double> x, std::span<double> out) const;
  void smoothed_soft_classify(std::span<const double> x, double sigma_train,
                              std::span<double> out) const;

  // One exact draw from x0 | x_t at retention abar (component picked from
  // the posterior responsibilities, then the per-component Gaussian).
  void sample_conditional_x0(std::span<const double> x_t, double alpha_bar,
                             const SeedSpec& seed, std::uint64_t index,
                             std::span<double> out) const;

  // E[||x||^2] under the mixture: sum w_k (||mu_k||^2 + d s_k^2).
  double second_moment() const;

  void save(const std::string& path) const;
  static MixtureWorld load(const std::string& path);

 private:
  // Log responsibilities at retention abar; returns log p_t(x).
  double log_responsibilities(std::span<const double> x, double alpha_bar,
                              std::span<double> log_r) const;

  int dim_ = 0;
  int num_labels_ = 0;
  std::vector<MixtureComponent> components_;
};

}  // namespace diffsmooth
