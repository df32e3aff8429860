#include <doctest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>

#include "diffsmooth/errors.hpp"
#include "diffsmooth/rng.hpp"
#include "diffsmooth/schedule.hpp"

using namespace diffsmooth;

namespace {
const DiffusionSchedule& default_schedule() {
  static const DiffusionSchedule s = linear_schedule(1000, 1e-4, 0.02);
  return s;
}
}  // namespace

TEST_CASE("linear schedule endpoints and simple values") {
  const auto& s = default_schedule();
  CHECK(s.T == 1000);
  CHECK(s.beta[1] == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(s.beta[1000] == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(s.alpha_bar[0] == 1.0);
  CHECK(s.alpha_bar[1] == doctest::Approx(0.9999).epsilon(1e-12));

  const auto tiny = linear_schedule(2, 0.1, 0.1);
  CHECK(tiny.alpha_bar[2] == doctest::Approx(0.81).epsilon(1e-12));
}

TEST_CASE("alpha_bar matches an arbitrary-precision product oracle") {
  using big = boost::multiprecision::cpp_bin_float_50;
  const auto& s = default_schedule();
  big prod = 1;
  for (int t = 1; t <= s.T; ++t) {
    prod *= big(1) - big(s.beta[t]);
    if (t == 1 || t == 10 || t == 100 || t == 500 || t == 1000) {
      const double ref = static_cast<double>(prod);
      CHECK(std::abs(s.alpha_bar[t] - ref) <= 1e-10 * std::abs(ref));
    }
  }
}

TEST_CASE("alpha_bar is strictly decreasing and positive") {
  const auto& s = default_schedule();
  for (int t = 1; t <= s.T; ++t) {
    CHECK(s.alpha_bar[t] > 0.0);
    CHECK(s.alpha_bar[t] < s.alpha_bar[t - 1]);
    if (t > 1) CHECK(s.noise_ratio(t) > s.noise_ratio(t - 1));
  }
}

TEST_CASE("linear_schedule rejects bad parameters") {
  CHECK_THROWS_AS(linear_schedule(1, 1e-4, 0.02), ConfigError);
  CHECK_THROWS_AS(linear_schedule(10, 0.0, 0.02), ConfigError);
  CHECK_THROWS_AS(linear_schedule(10, 0.03, 0.02), ConfigError);
  CHECK_THROWS_AS(linear_schedule(10, 0.5, 1.0), ConfigError);
}

TEST_CASE("compute_timestep equals an exhaustive-scan oracle") {
  const auto& s = default_schedule();
  for (double sigma : {0.1, 0.25, 0.5, 1.0}) {
    int expected = -1;
    for (int t = 1; t <= s.T; ++t) {
      if (s.noise_ratio(t) >= sigma * sigma) {
        expected = t;
        break;
      }
    }
    const Timestep ts = compute_timestep(s, sigma);
    CHECK(ts.t == expected);
    CHECK(ts.alpha_bar == s.alpha_bar[ts.t]);
    // Loop exit condition restated.
    CHECK(s.noise_ratio(ts.t) >= sigma * sigma);
    if (ts.t > 1) CHECK(s.noise_ratio(ts.t - 1) < sigma * sigma);
  }
}

TEST_CASE("compute_timestep boundary and error cases") {
  const auto& s = default_schedule();
  const double sigma1 = std::sqrt(s.noise_ratio(1));
  CHECK(compute_timestep(s, sigma1).t == 1);
  CHECK_THROWS_AS(compute_timestep(s, 1e6), UnreachableNoiseError);
  try {
    compute_timestep(s, 1e6);
  } catch (const UnreachableNoiseError& e) {
    CHECK(e.sigma() == 1e6);
    CHECK(e.sigma_max() == doctest::Approx(s.max_sigma()));
    CHECK(std::string(e.what()).find("maximum supported sigma") !=
          std::string::npos);
  }
}

TEST_CASE("compute_timestep is non-decreasing in sigma") {
  const auto& s = default_schedule();
  const SeedSpec seed{31, 0};
  const double max_s = s.max_sigma();
  for (int i = 0; i < 50; ++i) {
    double s1 = uniform_at(seed, 2 * i) * (max_s - 0.01) + 0.01;
    double s2 = uniform_at(seed, 2 * i + 1) * (max_s - 0.01) + 0.01;
    if (s1 > s2) std::swap(s1, s2);
    CHECK(compute_timestep(s, s1).t <= compute_timestep(s, s2).t);
  }
}

TEST_CASE("continuous coefficients are consistent with their definitions") {
  const auto sde = continuous_from_discrete(default_schedule());
  CHECK(sde.tau(0.0) == 0.0);
  CHECK(sde.alpha_bar(0.0) == 1.0);
  // tau(t) = -0.5 ln alpha_bar_cont(t) at 20 grid points (definitional).
  for (int i = 1; i <= 20; ++i) {
    const double t = i / 20.0;
    CHECK(std::abs(sde.tau(t) + 0.5 * std::log(sde.alpha_bar(t))) <= 1e-10);
    CHECK(sde.alpha_bar(t) < sde.alpha_bar(t - 0.05) - 0.0);
  }
  // gamma is the piecewise-constant rescaling of the discrete betas.
  const auto& s = default_schedule();
  CHECK(sde.gamma(0.0005) == doctest::Approx(1000.0 * s.beta[1]));
  CHECK(sde.gamma(0.5) == doctest::Approx(1000.0 * s.beta[500]));
  CHECK(sde.gamma(1.0) == doctest::Approx(1000.0 * s.beta[1000]));
}

TEST_CASE("continuous alpha_bar tracks the discrete one") {
  const auto& s = default_schedule();
  const auto sde = continuous_from_discrete(s);
  // The two conventions differ by the product-vs-exponential gap
  // sum(beta^2)/2, which stays below 1e-3 in absolute terms everywhere on
  // the default schedule.
  for (int t = 1; t <= s.T; ++t) {
    const double cont = sde.alpha_bar(static_cast<double>(t) / s.T);
    CHECK(std::abs(cont - s.alpha_bar[t]) <= 1e-3);
  }
  // Quadrature oracle for tau(1) with 1e5 trapezoid panels.
  double integral = 0.0;
  const int panels = 100000;
  for (int i = 0; i < panels; ++i) {
    const double a = static_cast<double>(i) / panels;
    const double b = static_cast<double>(i + 1) / panels;
    integral += 0.5 * (sde.gamma(a + 1e-12) + sde.gamma(b)) * (b - a);
  }
  CHECK(std::abs(sde.tau(1.0) - 0.5 * integral) < 1e-4);
  CHECK(std::abs(sde.alpha_bar(1.0) - s.alpha_bar[s.T]) <= 1e-3);
}

TEST_CASE("time_for_alpha_bar inverts alpha_bar") {
  const auto sde = continuous_from_discrete(default_schedule());
  for (double target : {0.9, 0.5, 0.1}) {
    const double t = time_for_alpha_bar(sde, target);
    CHECK(std::abs(sde.alpha_bar(t) - target) < 1e-9);
  }
  CHECK_THROWS_AS(time_for_alpha_bar(sde, 0.0), ConfigError);
  CHECK_THROWS_AS(time_for_alpha_bar(sde, 1.0), ConfigError);
}

TEST_CASE("gamma = 0 degenerate table keeps alpha_bar at 1") {
  const auto sde = make_sde(4, {0.0, 0.0, 0.0, 0.0, 0.0});
  CHECK(sde.alpha_bar(1.0) == 1.0);
  CHECK(sde.tau(0.7) == 0.0);
}
