#include "diffsmooth/mixture.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "diffsmooth/errors.hpp"

namespace diffsmooth {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr std::uint64_t kTagCategory = 11;
constexpr std::uint64_t kTagCoords = 12;
}  // namespace

MixtureWorld::MixtureWorld(int dim, std::vector<MixtureComponent> components)
    : dim_(dim), components_(std::move(components)) {
  if (dim_ < 1) throw ConfigError("world: dim must be >= 1");
  if (components_.empty()) throw ConfigError("world: no components");
  if (components_.size() > kMaxComponents) {
    throw ConfigError("world: too many components");
  }
  double weight_sum = 0.0;
  std::set<int> labels;
  for (const auto& c : components_) {
    if (!(c.weight > 0.0)) throw ConfigError("world: weights must be > 0");
    if (!(c.scale > 0.0)) throw ConfigError("world: scales must be > 0");
    if (static_cast<int>(c.mean.size()) != dim_) {
      throw ConfigError("world: mean dimension mismatch");
    }
    if (c.label < 0 || c.label >= kMaxComponents) {
      throw ConfigError("world: labels must be in [0, 64)");
    }
    weight_sum += c.weight;
    labels.insert(c.label);
  }
  if (std::abs(weight_sum - 1.0) > 1e-12) {
    throw ConfigError("world: weights must sum to 1");
  }
  if (labels.size() < 2) throw ConfigError("world: need at least 2 labels");
  num_labels_ = *labels.rbegin() + 1;
}

MixtureWorld MixtureWorld::make_default() {
  std::vector<MixtureComponent> comps;
  const double coords[4][2] = {{-2, -2}, {-2, 2}, {2, -2}, {2, 2}};
  for (int k = 0; k < 4; ++k) {
    comps.push_back(MixtureComponent{
        0.25, {coords[k][0], coords[k][1]}, 0.5, k});
  }
  return MixtureWorld(2, std::move(comps));
}

double MixtureWorld::second_moment() const {
  double s = 0.0;
  for (const auto& c : components_) {
    double mu2 = 0.0;
    for (double m : c.mean) mu2 += m * m;
    s += c.weight * (mu2 + dim_ * c.scale * c.scale);
  }
  return s;
}

LabeledSample MixtureWorld::sample_one(const SeedSpec& seed,
                                       std::uint64_t index) const {
  const double u = uniform_at(substream(seed, kTagCategory, 0), index);
  std::size_t k = 0;
  double acc = 0.0;
  for (; k < components_.size(); ++k) {
    acc += components_[k].weight;
    if (u <= acc) break;
  }
  k = std::min(k, components_.size() - 1);
  const auto& comp = components_[k];
  LabeledSample s;
  s.label = comp.label;
  s.x.resize(dim_);
  const SeedSpec coord_seed = substream(seed, kTagCoords, 0);
  for (int j = 0; j < dim_; ++j) {
    s.x[j] = comp.mean[j] +
             comp.scale * normal_at(coord_seed,
                                    index * static_cast<std::uint64_t>(dim_) +
                                        static_cast<std::uint64_t>(j));
  }
  return s;
}

std::vector<LabeledSample> MixtureWorld::sample(const SeedSpec& seed,
                                                std::size_t count) const {
  std::vector<LabeledSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(sample_one(seed, i));
  }
  return out;
}

double MixtureWorld::log_responsibilities(std::span<const double> x,
                                          double alpha_bar,
                                          std::span<double> log_r) const {
  const double sqrt_ab = std::sqrt(alpha_bar);
  double max_l = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    const double v = alpha_bar * c.scale * c.scale + 1.0 - alpha_bar;
    double q = 0.0;
    for (int j = 0; j < dim_; ++j) {
      const double dxy = x[j] - sqrt_ab * c.mean[j];
      q += dxy * dxy;
    }
    const double l = std::log(c.weight) -
                     0.5 * dim_ * (kLog2Pi + std::log(v)) - 0.5 * q / v;
    log_r[k] = l;
    max_l = std::max(max_l, l);
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    sum += std::exp(log_r[k] - max_l);
  }
  const double log_z = max_l + std::log(sum);
  for (std::size_t k = 0; k < components_.size(); ++k) log_r[k] -= log_z;
  return log_z;
}

double MixtureWorld::log_density_t(std::span<const double> x,
                                   double alpha_bar) const {
  if (!(alpha_bar > 0.0 && alpha_bar <= 1.0)) {
    throw std::domain_error("log_density_t: alpha_bar must be in (0,1]");
  }
  std::array<double, kMaxComponents> log_r;
  return log_responsibilities(x, alpha_bar,
                              std::span(log_r.data(), components_.size()));
}

void MixtureWorld::score_t(std::span<const double> x, double alpha_bar,
                           std::span<double> out) const {
  if (!(alpha_bar > 0.0 && alpha_bar <= 1.0)) {
    throw std::domain_error("score_t: alpha_bar must be in (0,1]");
  }
  std::array<double, kMaxComponents> log_r;
  log_responsibilities(x, alpha_bar,
                       std::span(log_r.data(), components_.size()));
  const double sqrt_ab = std::sqrt(alpha_bar);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    const double v = alpha_bar * c.scale * c.scale + 1.0 - alpha_bar;
    const double r = std::exp(log_r[k]);
    for (int j = 0; j < dim_; ++j) {
      out[j] += r * (sqrt_ab * c.mean[j] - x[j]) / v;
    }
  }
}

void MixtureWorld::posterior_mean(std::span<const double> x_t,
                                  double alpha_bar,
                                  std::span<double> out) const {
  if (!(alpha_bar > 0.0 && alpha_bar < 1.0)) {
    throw std::domain_error("posterior_mean: alpha_bar must be in (0,1)");
  }
  std::array<double, kMaxComponents> log_r;
  log_responsibilities(x_t, alpha_bar,
                       std::span(log_r.data(), components_.size()));
  const double sqrt_ab = std::sqrt(alpha_bar);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    const double s2 = c.scale * c.scale;
    const double v = alpha_bar * s2 + 1.0 - alpha_bar;
    const double r = std::exp(log_r[k]);
    for (int j = 0; j < dim_; ++j) {
      out[j] +=
          r * (s2 * sqrt_ab * x_t[j] + (1.0 - alpha_bar) * c.mean[j]) / v;
    }
  }
}

void MixtureWorld::sample_conditional_x0(std::span<const double> x_t,
                                         double alpha_bar,
                                         const SeedSpec& seed,
                                         std::uint64_t index,
                                         std::span<double> out) const {
  std::array<double, kMaxComponents> log_r;
  log_responsibilities(x_t, alpha_bar,
                       std::span(log_r.data(), components_.size()));
  const double u = uniform_at(substream(seed, kTagCategory, 0), index);
  std::size_t k = 0;
  double acc = 0.0;
  for (; k < components_.size(); ++k) {
    acc += std::exp(log_r[k]);
    if (u <= acc) break;
  }
  k = std::min(k, components_.size() - 1);
  const auto& c = components_[k];
  const double s2 = c.scale * c.scale;
  const double v = alpha_bar * s2 + 1.0 - alpha_bar;
  const double sqrt_ab = std::sqrt(alpha_bar);
  const double cond_sd = std::sqrt(s2 * (1.0 - alpha_bar) / v);
  const SeedSpec coord_seed = substream(seed, kTagCoords, 0);
  for (int j = 0; j < dim_; ++j) {
    const double m =
        (s2 * sqrt_ab * x_t[j] + (1.0 - alpha_bar) * c.mean[j]) / v;
    out[j] = m + cond_sd * normal_at(coord_seed,
                                     index * static_cast<std::uint64_t>(dim_) +
                                         static_cast<std::uint64_t>(j));
  }
}

namespace {
// Shared by the clean and augmented Bayes classifiers; vk is the effective
// per-component variance.
void classify_with_variances(const std::vector<MixtureComponent>& comps,
                             int dim, int num_labels,
                             std::span<const double> x,
                             std::span<const double> vk,
                             std::span<double> out) {
  std::array<double, MixtureWorld::kMaxComponents> l;
  double max_l = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < comps.size(); ++k) {
    double q = 0.0;
    for (int j = 0; j < dim; ++j) {
      const double dxy = x[j] - comps[k].mean[j];
      q += dxy * dxy;
    }
    l[k] = std::log(comps[k].weight) - 0.5 * dim * std::log(vk[k]) -
           0.5 * q / vk[k];
    max_l = std::max(max_l, l[k]);
  }
  std::array<double, MixtureWorld::kMaxComponents> label_mass{};
  double z = 0.0;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const double e = std::exp(l[k] - max_l);
    label_mass[comps[k].label] += e;
    z += e;
  }
  for (int y = 0; y < num_labels; ++y) out[y] = label_mass[y] / z;
}
}  // namespace

void MixtureWorld::soft_classify(std::span<const double> x,
                                 std::span<double> out) const {
  smoothed_soft_classify(x, 0.0, out);
}

void MixtureWorld::smoothed_soft_classify(std::span<const double> x,
                                          double sigma_train,
                                          std::span<double> out) const {
  std::array<double, kMaxComponents> vk;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    vk[k] = components_[k].scale * components_[k].scale +
            sigma_train * sigma_train;
  }
  classify_with_variances(components_, dim_, num_labels_, x,
                          std::span(vk.data(), components_.size()), out);
}

void MixtureWorld::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write world file: " + path);
  f << "# mixture world: component rows are weight, mean..., scale, label\n";
  f << "dim " << dim_ << "\n";
  f.precision(17);
  for (const auto& c : components_) {
    f << "component " << c.weight;
    for (double m : c.mean) f << " " << m;
    f << " " << c.scale << " " << c.label << "\n";
  }
}

MixtureWorld MixtureWorld::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open world file: " + path);
  int dim = 0;
  std::vector<MixtureComponent> comps;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    std::string key;
    is >> key;
    if (key == "dim") {
      is >> dim;
    } else if (key == "component") {
      if (dim < 1) throw ConfigError("world file: dim must come first");
      MixtureComponent c;
      is >> c.weight;
      c.mean.resize(dim);
      for (int j = 0; j < dim; ++j) is >> c.mean[j];
      is >> c.scale >> c.label;
      if (!is) throw ConfigError("world file: malformed component row");
      comps.push_back(std::move(c));
    } else {
      throw ConfigError("world file: unknown key '" + key + "'");
    }
  }
  return MixtureWorld(dim, std::move(comps));
}

}  // namespace diffsmooth
