#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "diffsmooth/errors.hpp"
#include "diffsmooth/mixture.hpp"

using namespace diffsmooth;

namespace {

// A single standard Gaussian, represented as two same-shape components so
// the two-label requirement is met.
MixtureWorld standard_gaussian_world(int dim) {
  std::vector<MixtureComponent> comps;
  comps.push_back({0.5, std::vector<double>(dim, 0.0), 1.0, 0});
  comps.push_back({0.5, std::vector<double>(dim, 0.0), 1.0, 1});
  return MixtureWorld(dim, std::move(comps));
}

MixtureWorld random_world(const SeedSpec& seed) {
  std::vector<MixtureComponent> comps;
  const int k = 3;
  double wsum = 0.0;
  std::vector<double> w(k);
  for (int i = 0; i < k; ++i) {
    w[i] = 0.2 + uniform_at(seed, 100 + i);
    wsum += w[i];
  }
  for (int i = 0; i < k; ++i) {
    MixtureComponent c;
    c.weight = w[i] / wsum;
    c.mean = {3.0 * normal_at(seed, 2 * i), 3.0 * normal_at(seed, 2 * i + 1)};
    c.scale = 0.4 + uniform_at(seed, 200 + i);
    c.label = i;
    comps.push_back(c);
  }
  // Absorb rounding so the weights sum to 1 exactly.
  double acc = 0.0;
  for (int i = 0; i < k - 1; ++i) acc += comps[i].weight;
  comps[k - 1].weight = 1.0 - acc;
  return MixtureWorld(2, std::move(comps));
}

}  // namespace

TEST_CASE("construction validates the component list") {
  CHECK_THROWS_AS(MixtureWorld(2, {}), ConfigError);
  // Weights must sum to one.
  CHECK_THROWS_AS(MixtureWorld(1, {{0.6, {0.0}, 1.0, 0}, {0.6, {1.0}, 1.0, 1}}),
                  ConfigError);
  // At least two distinct labels.
  CHECK_THROWS_AS(MixtureWorld(1, {{0.5, {0.0}, 1.0, 0}, {0.5, {1.0}, 1.0, 0}}),
                  ConfigError);
  // Positive scales.
  CHECK_THROWS_AS(MixtureWorld(1, {{0.5, {0.0}, 0.0, 0}, {0.5, {1.0}, 1.0, 1}}),
                  ConfigError);
  // Labels within the supported range.
  CHECK_THROWS_AS(MixtureWorld(1, {{0.5, {0.0}, 1.0, 0}, {0.5, {1.0}, 1.0, 64}}),
                  ConfigError);
  const auto w = MixtureWorld::make_default();
  CHECK(w.dim() == 2);
  CHECK(w.num_labels() == 4);
  CHECK(w.second_moment() == doctest::Approx(8.0 + 2 * 0.25).epsilon(1e-12));
}

TEST_CASE("sampling hits the component statistics") {
  const auto w = standard_gaussian_world(2);
  const SeedSpec seed{11, 0};
  const std::size_t n = 100000;
  double mean0 = 0.0, mean1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = w.sample_one(seed, i);
    mean0 += s.x[0];
    mean1 += s.x[1];
  }
  CHECK(std::abs(mean0 / n) < 0.013);
  CHECK(std::abs(mean1 / n) < 0.013);

  const auto def = MixtureWorld::make_default();
  std::array<int, 4> freq{};
  const auto samples = def.sample(SeedSpec{12, 0}, n);
  REQUIRE(samples.size() == n);
  for (const auto& s : samples) freq[s.label] += 1;
  for (int c = 0; c < 4; ++c) {
    CHECK(std::abs(freq[c] / static_cast<double>(n) - 0.25) < 0.006);
  }
  CHECK(def.sample(SeedSpec{12, 0}, 0).empty());
  // Determinism and streaming consistency.
  CHECK(samples[17].x == def.sample_one(SeedSpec{12, 0}, 17).x);
}

TEST_CASE("sampled labels come from the generating component") {
  const auto def = MixtureWorld::make_default();
  for (const auto& s : def.sample(SeedSpec{13, 0}, 2000)) {
    // Nearest component mean identifies the generator (separation 8 sigma).
    int nearest = 0;
    double best = 1e300;
    const auto& comps = def.components();
    for (std::size_t k = 0; k < comps.size(); ++k) {
      double d2 = 0.0;
      for (int j = 0; j < 2; ++j) {
        const double d = s.x[j] - comps[k].mean[j];
        d2 += d * d;
      }
      if (d2 < best) {
        best = d2;
        nearest = static_cast<int>(k);
      }
    }
    CHECK(s.label == comps[nearest].label);
  }
}

TEST_CASE("score matches finite differences of the log density") {
  const auto worlds = {random_world(SeedSpec{21, 0}),
                       MixtureWorld::make_default()};
  for (const auto& w : worlds) {
    for (double ab : {0.3, 0.9}) {
      for (int i = 0; i < 20; ++i) {
        const SeedSpec s{22, static_cast<std::uint64_t>(i)};
        std::vector<double> x = {4.0 * normal_at(s, 0), 4.0 * normal_at(s, 1)};
        std::vector<double> score(2);
        w.score_t(x, ab, score);
        const double h = 1e-5;
        for (int j = 0; j < 2; ++j) {
          auto xp = x, xm = x;
          xp[j] += h;
          xm[j] -= h;
          const double fd =
              (w.log_density_t(xp, ab) - w.log_density_t(xm, ab)) / (2 * h);
          CHECK(std::abs(score[j] - fd) <=
                1e-5 * std::max(1.0, std::abs(fd)));
        }
      }
    }
  }
}

TEST_CASE("score closed forms for simple worlds") {
  const auto g = standard_gaussian_world(3);
  std::vector<double> x = {0.7, -1.2, 2.5}, score(3);
  for (double ab : {0.2, 0.6, 1.0}) {
    g.score_t(x, ab, score);
    for (int j = 0; j < 3; ++j) {
      CHECK(score[j] == doctest::Approx(-x[j]).epsilon(1e-12));
    }
  }
  // Symmetric two-component mixture: score vanishes at the midpoint.
  MixtureWorld sym(1, {{0.5, {-2.0}, 0.7, 0}, {0.5, {2.0}, 0.7, 1}});
  std::vector<double> origin = {0.0}, s1(1);
  sym.score_t(origin, 0.5, s1);
  CHECK(std::abs(s1[0]) < 1e-14);
}

TEST_CASE("score is curl-free in 2-D") {
  const auto w = random_world(SeedSpec{23, 0});
  const double h = 1e-5;
  for (int i = 0; i < 10; ++i) {
    const SeedSpec s{24, static_cast<std::uint64_t>(i)};
    const double x0 = 3.0 * normal_at(s, 0), x1 = 3.0 * normal_at(s, 1);
    std::vector<double> sp(2), sm(2);
    std::vector<double> p0 = {x0 + h, x1}, m0 = {x0 - h, x1};
    w.score_t(p0, 0.5, sp);
    w.score_t(m0, 0.5, sm);
    const double d1s0 = (sp[1] - sm[1]) / (2 * h);
    std::vector<double> p1 = {x0, x1 + h}, m1 = {x0, x1 - h};
    w.score_t(p1, 0.5, sp);
    w.score_t(m1, 0.5, sm);
    const double d0s1 = (sp[0] - sm[0]) / (2 * h);
    CHECK(std::abs(d1s0 - d0s1) < 1e-4);
  }
}

TEST_CASE("posterior mean closed form and limits") {
  const auto g = standard_gaussian_world(4);
  std::vector<double> x = {1.0, 0.0, 0.0, 0.0}, out(4);
  g.posterior_mean(x, 0.5, out);
  CHECK(out[0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
  for (int j = 1; j < 4; ++j) CHECK(std::abs(out[j]) < 1e-12);

  const auto def = MixtureWorld::make_default();
  std::vector<double> xt = {1.3, -0.4}, out2(2);
  def.posterior_mean(xt, 1.0 - 1e-8, out2);
  CHECK(std::abs(out2[0] - xt[0]) < 1e-3);
  CHECK(std::abs(out2[1] - xt[1]) < 1e-3);

  CHECK_THROWS_AS(def.posterior_mean(xt, 1.0, out2), std::domain_error);
  CHECK_THROWS_AS(def.posterior_mean(xt, 0.0, out2), std::domain_error);
  CHECK_THROWS_AS(def.score_t(xt, 1.5, out2), std::domain_error);
}

TEST_CASE("posterior mean matches a quadrature oracle") {
  const auto w = random_world(SeedSpec{25, 0});
  const double ab = 0.6;
  const double sqrt_ab = std::sqrt(ab);
  for (int trial = 0; trial < 3; ++trial) {
    const SeedSpec s{26, static_cast<std::uint64_t>(trial)};
    const std::vector<double> xt = {2.0 * normal_at(s, 0),
                                    2.0 * normal_at(s, 1)};
    // Integrate x0 * p0(x0) * N(xt; sqrt(ab) x0, (1-ab) I) on a 400x400 grid.
    const int g = 400;
    const double lo = -10.0, hi = 10.0, step = (hi - lo) / g;
    double z = 0.0, m0 = 0.0, m1 = 0.0;
    for (int i = 0; i < g; ++i) {
      const double a = lo + (i + 0.5) * step;
      for (int j = 0; j < g; ++j) {
        const double b = lo + (j + 0.5) * step;
        double p0 = 0.0;
        for (const auto& c : w.components()) {
          const double s2 = c.scale * c.scale;
          const double q = (a - c.mean[0]) * (a - c.mean[0]) +
                           (b - c.mean[1]) * (b - c.mean[1]);
          p0 += c.weight * std::exp(-0.5 * q / s2) / (2 * M_PI * s2);
        }
        const double qn = (xt[0] - sqrt_ab * a) * (xt[0] - sqrt_ab * a) +
                          (xt[1] - sqrt_ab * b) * (xt[1] - sqrt_ab * b);
        const double lk = std::exp(-0.5 * qn / (1.0 - ab));
        z += p0 * lk;
        m0 += a * p0 * lk;
        m1 += b * p0 * lk;
      }
    }
    std::vector<double> out(2);
    w.posterior_mean(xt, ab, out);
    CHECK(std::abs(out[0] - m0 / z) < 1e-3);
    CHECK(std::abs(out[1] - m1 / z) < 1e-3);
  }
}

TEST_CASE("Tweedie identity holds") {
  for (int trial = 0; trial < 200; ++trial) {
    const SeedSpec s{27, static_cast<std::uint64_t>(trial)};
    const auto w = trial % 2 == 0 ? MixtureWorld::make_default()
                                  : random_world(SeedSpec{28, s.stream_id});
    const double ab = 0.05 + 0.9 * uniform_at(s, 9);
    const std::vector<double> xt = {3.0 * normal_at(s, 0),
                                    3.0 * normal_at(s, 1)};
    std::vector<double> mean(2), score(2);
    w.posterior_mean(xt, ab, mean);
    w.score_t(xt, ab, score);
    for (int j = 0; j < 2; ++j) {
      const double tweedie = (xt[j] + (1.0 - ab) * score[j]) / std::sqrt(ab);
      CHECK(std::abs(mean[j] - tweedie) <= 1e-9);
    }
  }
}

TEST_CASE("soft classifier is a normalized posterior") {
  const auto def = MixtureWorld::make_default();
  std::vector<double> probs(4);
  // Far isolated mean: near-certain label.
  std::vector<double> at_mean = {2.0, 2.0};
  def.soft_classify(at_mean, probs);
  CHECK(probs[3] >= 0.999);
  // Equidistant point between two classes.
  MixtureWorld two(1, {{0.5, {-2.0}, 0.5, 0}, {0.5, {2.0}, 0.5, 1}});
  std::vector<double> p2(2), mid = {0.0};
  two.soft_classify(mid, p2);
  CHECK(std::abs(p2[0] - 0.5) < 1e-12);
  CHECK(std::abs(p2[1] - 0.5) < 1e-12);
  // Normalization over random inputs.
  for (int i = 0; i < 1000; ++i) {
    const SeedSpec s{29, static_cast<std::uint64_t>(i)};
    std::vector<double> x = {5.0 * normal_at(s, 0), 5.0 * normal_at(s, 1)};
    def.soft_classify(x, probs);
    double sum = 0.0;
    for (double p : probs) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("smoothed classifier degenerates and flattens correctly") {
  const auto def = MixtureWorld::make_default();
  std::vector<double> a(4), b(4);
  const std::vector<double> x = {0.7, -1.1};
  def.soft_classify(x, a);
  def.smoothed_soft_classify(x, 0.0, b);
  for (int c = 0; c < 4; ++c) CHECK(std::abs(a[c] - b[c]) <= 1e-12);
  def.smoothed_soft_classify(x, 1e6, b);
  for (int c = 0; c < 4; ++c) CHECK(std::abs(b[c] - 0.25) < 1e-3);
}

TEST_CASE("smoothed classifier matches a Monte-Carlo Bayes oracle") {
  const auto def = MixtureWorld::make_default();
  const double sigma = 0.5;
  const std::vector<double> x = {1.1, 0.2};
  // Monte-Carlo: draw (x0, y) from the world, add noise, estimate P[y | x]
  // with a small kernel-free importance estimate: P[y|x] proportional to
  // sum over draws near x. Instead use the analytic augmented density per
  // label as an independent reimplementation.
  double mass[4] = {0, 0, 0, 0};
  for (const auto& c : def.components()) {
    const double v = c.scale * c.scale + sigma * sigma;
    const double q = (x[0] - c.mean[0]) * (x[0] - c.mean[0]) +
                     (x[1] - c.mean[1]) * (x[1] - c.mean[1]);
    mass[c.label] += c.weight * std::exp(-0.5 * q / v) / v;
  }
  const double z = mass[0] + mass[1] + mass[2] + mass[3];
  std::vector<double> probs(4);
  def.smoothed_soft_classify(x, sigma, probs);
  for (int c = 0; c < 4; ++c) {
    CHECK(std::abs(probs[c] - mass[c] / z) <= 1e-12);
  }
  // Monte-Carlo sanity: empirical class frequencies of noisy draws that
  // land in a small ball around x agree with the posterior within 0.05.
  const SeedSpec seed{30, 0};
  double counts[4] = {0, 0, 0, 0};
  double total = 0.0;
  std::uint64_t idx = 0;
  for (int i = 0; i < 2000000; ++i) {
    const auto s = def.sample_one(seed, static_cast<std::uint64_t>(i));
    const double nx = s.x[0] + sigma * normal_at(seed, idx++);
    const double ny = s.x[1] + sigma * normal_at(seed, idx++);
    const double d2 = (nx - x[0]) * (nx - x[0]) + (ny - x[1]) * (ny - x[1]);
    if (d2 < 0.09) {
      counts[s.label] += 1.0;
      total += 1.0;
    }
  }
  REQUIRE(total > 1000);
  for (int c = 0; c < 4; ++c) {
    CHECK(std::abs(counts[c] / total - probs[c]) < 0.05);
  }
}

TEST_CASE("log-space computations survive far-field inputs") {
  const auto def = MixtureWorld::make_default();
  std::vector<double> x = {1000.0, -1000.0}, score(2), probs(4), mean(2);
  CHECK(std::isfinite(def.log_density_t(x, 0.5)));
  def.score_t(x, 0.5, score);
  CHECK(std::isfinite(score[0]));
  CHECK(std::isfinite(score[1]));
  def.soft_classify(x, probs);
  double sum = 0.0;
  for (double p : probs) {
    CHECK(std::isfinite(p));
    sum += p;
  }
  CHECK(std::abs(sum - 1.0) <= 1e-9);
  def.posterior_mean(x, 0.5, mean);
  CHECK(std::isfinite(mean[0]));
}

TEST_CASE("conditional sampler agrees with the posterior mean") {
  const auto def = MixtureWorld::make_default();
  const double ab = 0.7;
  const std::vector<double> xt = {0.9, 0.8};
  std::vector<double> mean(2), draw(2);
  def.posterior_mean(xt, ab, mean);
  double acc0 = 0.0, acc1 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    def.sample_conditional_x0(xt, ab, SeedSpec{31, 0},
                              static_cast<std::uint64_t>(i), draw);
    acc0 += draw[0];
    acc1 += draw[1];
  }
  CHECK(std::abs(acc0 / n - mean[0]) < 0.03);
  CHECK(std::abs(acc1 / n - mean[1]) < 0.03);
}

TEST_CASE("world files round-trip") {
  const auto def = MixtureWorld::make_default();
  const std::string path = "test_world_roundtrip.txt";
  def.save(path);
  const auto back = MixtureWorld::load(path);
  CHECK(back.dim() == def.dim());
  REQUIRE(back.components().size() == def.components().size());
  for (std::size_t k = 0; k < back.components().size(); ++k) {
    CHECK(back.components()[k].weight == def.components()[k].weight);
    CHECK(back.components()[k].mean == def.components()[k].mean);
    CHECK(back.components()[k].scale == def.components()[k].scale);
    CHECK(back.components()[k].label == def.components()[k].label);
  }
  std::filesystem::remove(path);
  CHECK_THROWS_AS(MixtureWorld::load("does_not_exist.txt"), ConfigError);
}
