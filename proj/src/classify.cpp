#include "diffsmooth/classify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "diffsmooth/errors.hpp"

namespace diffsmooth {

int argmax_smallest(std::span<const double> v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

int hard_predict(const SoftClassifierHandle& f, std::span<const double> x) {
  std::vector<double> probs(f.num_labels);
  f.eval(x, probs);
  return argmax_smallest(probs);
}

SoftClassifierHandle bayes_smoothed_classifier(const MixtureWorld& world,
                                               double sigma_train) {
  SoftClassifierHandle h;
  h.dim = world.dim();
  h.num_labels = world.num_labels();
  h.sigma_train = sigma_train;
  h.name = "bayes_smoothed";
  h.eval = [&world, sigma_train](std::span<const double> x,
                                 std::span<double> probs) {
    world.smoothed_soft_classify(x, sigma_train, probs);
  };
  return h;
}

MlpClassifier::MlpClassifier(int dim, int hidden, int labels)
    : dim_(dim),
      hidden_(hidden),
      labels_(labels),
      w1(static_cast<std::size_t>(hidden) * dim, 0.0),
      b1(hidden, 0.0),
      w2(static_cast<std::size_t>(labels) * hidden, 0.0),
      b2(labels, 0.0) {}

void MlpClassifier::eval(std::span<const double> x,
                         std::span<double> probs) const {
  std::vector<double> h(hidden_);
  for (int i = 0; i < hidden_; ++i) {
    double a = b1[i];
    for (int j = 0; j < dim_; ++j) a += w1[i * dim_ + j] * x[j];
    h[i] = a > 0.0 ? a : 0.0;
  }
  double max_z = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < labels_; ++c) {
    double z = b2[c];
    for (int i = 0; i < hidden_; ++i) z += w2[c * hidden_ + i] * h[i];
    probs[c] = z;
    max_z = std::max(max_z, z);
  }
  double sum = 0.0;
  for (int c = 0; c < labels_; ++c) {
    probs[c] = std::exp(probs[c] - max_z);
    sum += probs[c];
  }
  for (int c = 0; c < labels_; ++c) probs[c] /= sum;
}

MlpClassifier train_augmented_classifier(
    const std::vector<LabeledSample>& train_set, const TrainConfig& cfg) {
  if (train_set.empty()) throw ConfigError("train: empty training set");
  if (cfg.sigma_train < 0.0) throw ConfigError("train: sigma_train < 0");
  if (cfg.epochs < 1 || cfg.hidden_width < 1 || cfg.batch_size < 1) {
    throw ConfigError("train: epochs, width and batch size must be positive");
  }
  const int d = static_cast<int>(train_set.front().x.size());
  std::set<int> labels;
  for (const auto& s : train_set) labels.insert(s.label);
  if (labels.size() < 2) {
    throw ConfigError("train: training set has a single label");
  }
  const int num_labels = *labels.rbegin() + 1;
  const int n = static_cast<int>(train_set.size());
  const int hw = cfg.hidden_width;

  MlpClassifier m(d, hw, num_labels);
  const SeedSpec init_seed = substream(cfg.seed, 21, 0);
  const double init_scale1 = std::sqrt(2.0 / d);
  const double init_scale2 = std::sqrt(2.0 / hw);
  std::uint64_t idx = 0;
  for (auto& w : m.w1) w = init_scale1 * normal_at(init_seed, idx++);
  for (auto& w : m.w2) w = init_scale2 * normal_at(init_seed, idx++);

  std::vector<double> noisy(d), h(hw), pre(hw), probs(num_labels), grad_h(hw);
  std::vector<double> gw1(m.w1.size()), gb1(hw), gw2(m.w2.size()),
      gb2(num_labels);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the epoch's stream.
    const SeedSpec shuffle_seed = substream(cfg.seed, 22, epoch);
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(uniform_at(shuffle_seed, i) * (i + 1));
      std::swap(order[i], order[std::min(j, i)]);
    }
    const SeedSpec noise_seed = substream(cfg.seed, 23, epoch);
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int end = std::min(n, start + cfg.batch_size);
      std::fill(gw1.begin(), gw1.end(), 0.0);
      std::fill(gb1.begin(), gb1.end(), 0.0);
      std::fill(gw2.begin(), gw2.end(), 0.0);
      std::fill(gb2.begin(), gb2.end(), 0.0);
      for (int b = start; b < end; ++b) {
        const int i = order[b];
        const auto& s = train_set[i];
        for (int j = 0; j < d; ++j) {
          noisy[j] = s.x[j];
          if (cfg.sigma_train > 0.0) {
            noisy[j] += cfg.sigma_train *
                        normal_at(noise_seed,
                                  static_cast<std::uint64_t>(i) * d + j);
          }
        }
        for (int u = 0; u < hw; ++u) {
          double a = m.b1[u];
          for (int j = 0; j < d; ++j) a += m.w1[u * d + j] * noisy[j];
          pre[u] = a;
          h[u] = a > 0.0 ? a : 0.0;
        }
        double max_z = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < num_labels; ++c) {
          double z = m.b2[c];
          for (int u = 0; u < hw; ++u) z += m.w2[c * hw + u] * h[u];
          probs[c] = z;
          max_z = std::max(max_z, z);
        }
        double sum = 0.0;
        for (int c = 0; c < num_labels; ++c) {
          probs[c] = std::exp(probs[c] - max_z);
          sum += probs[c];
        }
        for (int c = 0; c < num_labels; ++c) probs[c] /= sum;
        std::fill(grad_h.begin(), grad_h.end(), 0.0);
        for (int c = 0; c < num_labels; ++c) {
          const double g = probs[c] - (c == s.label ? 1.0 : 0.0);
          for (int u = 0; u < hw; ++u) {
            grad_h[u] += g * m.w2[c * hw + u];
            gw2[c * hw + u] += g * h[u];
          }
          gb2[c] += g;
        }
        for (int u = 0; u < hw; ++u) {
          if (pre[u] <= 0.0) continue;
          for (int j = 0; j < d; ++j) gw1[u * d + j] += grad_h[u] * noisy[j];
          gb1[u] += grad_h[u];
        }
      }
      const double step = cfg.learning_rate / static_cast<double>(end - start);
      for (std::size_t k = 0; k < m.w1.size(); ++k) m.w1[k] -= step * gw1[k];
      for (int u = 0; u < hw; ++u) m.b1[u] -= step * gb1[u];
      for (std::size_t k = 0; k < m.w2.size(); ++k) m.w2[k] -= step * gw2[k];
      for (int c = 0; c < num_labels; ++c) m.b2[c] -= step * gb2[c];
    }
  }
  return m;
}

SoftClassifierHandle wrap_classifier(std::shared_ptr<const MlpClassifier> model,
                                     const std::string& name,
                                     double sigma_train) {
  SoftClassifierHandle h;
  h.dim = model->dim();
  h.num_labels = model->num_labels();
  h.name = name;
  h.sigma_train = sigma_train;
  h.eval = [model](std::span<const double> x, std::span<double> probs) {
    model->eval(x, probs);
  };
  return h;
}

void MlpClassifier::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write model file: " + path);
  f << "mlp-v1 " << dim_ << " " << hidden_ << " " << labels_ << "\n";
  f.precision(17);
  auto dump = [&f](const std::vector<double>& v) {
    for (double x : v) f << x << "\n";
  };
  dump(w1);
  dump(b1);
  dump(w2);
  dump(b2);
}

MlpClassifier MlpClassifier::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open model file: " + path);
  std::string magic;
  int d = 0, hw = 0, l = 0;
  f >> magic >> d >> hw >> l;
  if (magic != "mlp-v1" || !f) {
    throw ConfigError("model file: bad header in " + path);
  }
  MlpClassifier m(d, hw, l);
  auto read = [&f, &path](std::vector<double>& v) {
    for (double& x : v) f >> x;
    if (!f) throw ConfigError("model file: truncated " + path);
  };
  read(m.w1);
  read(m.b1);
  read(m.w2);
  read(m.b2);
  return m;
}

}  // namespace diffsmooth
