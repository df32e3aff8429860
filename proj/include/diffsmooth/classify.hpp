#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "diffsmooth/mixture.hpp"
#include "diffsmooth/rng.hpp"

namespace diffsmooth {

// Soft classifier F: R^d -> simplex over labels. eval must be pure and
// thread-safe; outputs are non-negative and sum to 1.
struct SoftClassifierHandle {
  std::function<void(std::span<const double> x, std::span<double> probs)> eval;
  int dim = 0;
  int num_labels = 0;
  std::string name;
  double sigma_train = 0.0;
};

// argmax of F(x); ties broken by smallest label index.
int hard_predict(const SoftClassifierHandle& f, std::span<const double> x);
int argmax_smallest(std::span<const double> v);

// Analytic Bayes-optimal classifier for Gaussian-augmented data at
// sigma_train (component variances inflated by sigma_train^2).
SoftClassifierHandle bayes_smoothed_classifier(const MixtureWorld& world,
                                               double sigma_train);

struct TrainConfig {
  double sigma_train = 0.5;
  int epochs = 120;
  double learning_rate = 0.05;
  int hidden_width = 64;
  int batch_size = 64;
  SeedSpec seed;
};

// One-hidden-layer ReLU network with softmax output.
class MlpClassifier {
 public:
  MlpClassifier() = default;
  MlpClassifier(int dim, int hidden, int labels);

  void eval(std::span<const double> x, std::span<double> probs) const;

  int dim() const { return dim_; }
  int num_labels() const { return labels_; }

  void save(const std::string& path) const;
  static MlpClassifier load(const std::string& path);

  bool operator==(const MlpClassifier& other) const = default;

  // Parameters, row-major. Exposed for the trainer.
  int dim_ = 0, hidden_ = 0, labels_ = 0;
  std::vector<double> w1, b1, w2, b2;
};

// Mini-batch SGD on cross-entropy with Gaussian augmentation: every epoch
// each input is presented as x + delta, delta ~ N(0, sigma_train^2 I),
// resampled per epoch. Deterministic for a fixed seed.
MlpClassifier train_augmented_classifier(
    const std::vector<LabeledSample>& train_set, const TrainConfig& cfg);

SoftClassifierHandle wrap_classifier(std::shared_ptr<const MlpClassifier> model,
                                     const std::string& name,
                                     double sigma_train);

}  // namespace diffsmooth
