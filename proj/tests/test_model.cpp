#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "ecnoise/model.hpp"
#include "oracles.hpp"

using namespace ecnoise;

namespace {
const ModelParams table1 = default_bias_params();

double peak_lambda() {
  double best_l = 0, best_p = 0;
  for (int i = 0; i <= 200; ++i) {
    const double l = 0.45 * std::pow(1e4, i / 200.0);
    const double p = saddle_prob(table1, IntensityPair::static_scene(l), Polarity::Positive).value;
    if (p > best_p) {
      best_p = p;
      best_l = l;
    }
  }
  return best_l;
}
}  // namespace

TEST_CASE("theta evaluation") {
  const ThetaCoefficients c{18.92, 35.49, 0.439};
  CHECK(theta_eval(c, 0.0) == doctest::Approx(18.92).epsilon(1e-15));
  CHECK(theta_eval({0, 0, 1}, 7.5) == 7.5);
  CHECK(theta_eval(c, 100.0) == doctest::Approx(417.72).epsilon(1e-12));
  CHECK_THROWS_AS(theta_eval(c, -1.0), std::domain_error);
}

TEST_CASE("theta minimum over a domain") {
  CHECK(theta_min_on({10, 0, -0.01}, 500) == doctest::Approx(5.0));
  CHECK(theta_min_on({1, 2, 3}, 100) == doctest::Approx(1.0));
}

TEST_CASE("params validation") {
  CHECK_NOTHROW(validate(table1));
  ModelParams p = table1;
  p.B = 0.0;
  CHECK_THROWS_AS(validate(p), std::invalid_argument);
  p = table1;
  p.B = 1.2;
  CHECK_THROWS_AS(validate(p), std::invalid_argument);
  p = table1;
  p.theta_pos = {1.0, 0.0, -0.01};  // negative past lambda = 100
  CHECK_THROWS_AS(validate(p), std::invalid_argument);
  p.lambda_max = 50;
  CHECK_NOTHROW(validate(p));
}

TEST_CASE("poisson: zero photon rate gives no positive event") {
  const auto r = poisson_prob(table1, {0, 0}, Polarity::Positive);
  CHECK(r.value == 0.0);
  CHECK(r.method == Method::Poisson);
}

TEST_CASE("poisson: matches a brute-force double sum") {
  ModelParams p = oracle::constant_theta(std::log(2.0), 0.0);
  const auto r = poisson_prob(p, {1.0, 1.0}, Polarity::Positive, 1e-15);
  // Sum over n0 of e^-1/n0! times P(n >= 2 n0 + 1).
  long double expect = 0;
  for (int n0 = 0; n0 <= 60; ++n0) {
    long double tail = 0;
    for (int n = 2 * n0 + 1; n <= 60; ++n) tail += oracle::pois_pmf(1.0L, n);
    expect += oracle::pois_pmf(1.0L, n0) * tail;
  }
  CHECK(r.value == doctest::Approx(static_cast<double>(expect)).epsilon(1e-12));

  // General pairs with lambda-dependent theta against the literal sum.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0, 1);
  for (int k = 0; k < 25; ++k) {
    ModelParams q;
    q.B = 0.05 + 0.9 * U(rng);
    q.theta_pos = {3 * U(rng), 2 * U(rng), 0.2 * U(rng)};
    q.theta_neg = {3 * U(rng), 2 * U(rng), 0.2 * U(rng)};
    const IntensityPair pair{0.2 + 12 * U(rng), 0.2 + 12 * U(rng)};
    for (Polarity pol : {Polarity::Positive, Polarity::Negative}) {
      const double got = poisson_prob(q, pair, pol).value;
      const double want = oracle::poisson_double_sum(q, pair, pol, 150);
      CHECK(std::abs(got - want) <= 1e-12 + 1e-10 * want);
    }
  }
}

TEST_CASE("poisson: default-bias curve peaks between 1e-8 and 1e-6") {
  double peak = 0;
  for (int i = 0; i < 40; ++i) {
    const double lux = 0.1 * std::pow(1e4, i / 39.0);
    peak = std::max(peak, poisson_prob(table1, IntensityPair::static_scene(4.5 * lux), Polarity::Positive).value);
  }
  CHECK(peak >= 1e-8);
  CHECK(peak <= 1e-6);
}

TEST_CASE("poisson: tolerance must be positive") {
  CHECK_THROWS_AS(poisson_prob(table1, {1, 1}, Polarity::Positive, 0.0), std::domain_error);
  CHECK_THROWS_AS(poisson_prob(table1, {1, 1}, Polarity::Positive, -1.0), std::domain_error);
}

TEST_CASE("poisson: truncation bound is reported and small") {
  const auto r = poisson_prob(table1, {500, 500}, Polarity::Positive, 1e-12);
  CHECK(r.truncation_error >= 0.0);
  CHECK(r.truncation_error <= 1e-12);
}

TEST_CASE("gaussian: symmetric case sits at one half") {
  ModelParams p = oracle::constant_theta(0.0, 0.0);
  CHECK(gaussian_prob(p, {100, 100}, Polarity::Positive).value == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("gaussian: underestimates at very low photon counts") {
  const IntensityPair pair = IntensityPair::static_scene(0.01);
  CHECK(gaussian_prob(table1, pair, Polarity::Positive).value <
        poisson_prob(table1, pair, Polarity::Positive).value);
}

TEST_CASE("gaussian: within 10% of poisson at lambda = 50" * doctest::may_fail()) {
  // Recorded discrepancy: the Gaussian overestimates this deep tail by ~25%.
  const IntensityPair pair = IntensityPair::static_scene(50.0);
  const double g = gaussian_prob(table1, pair, Polarity::Positive).value;
  const double p = poisson_prob(table1, pair, Polarity::Positive).value;
  INFO("gaussian=" << g << " poisson=" << p << " rel=" << oracle::rel_err(g, p));
  CHECK(oracle::rel_err(g, p) < 0.10);
}

TEST_CASE("gaussian: zero variance with zero mean is degenerate") {
  ModelParams p = oracle::constant_theta(0.15, 0.0);
  CHECK_THROWS_AS(gaussian_prob(p, {0, 0}, Polarity::Positive), ModelError);
}

TEST_CASE("cgf: value and derivatives") {
  CHECK(saddle_cgf(table1, {10, 10}, Polarity::Positive, 0.0).kappa == 0.0);
  ModelParams sym = oracle::constant_theta(0.0, 0.0);
  CHECK(saddle_cgf(sym, {7, 7}, Polarity::Positive, 0.0).d1 == doctest::Approx(0.0));

  const double h = 1e-6;
  const auto v = saddle_cgf(table1, {10, 10}, Polarity::Positive, 0.1);
  const double kp = saddle_cgf(table1, {10, 10}, Polarity::Positive, 0.1 + h).kappa;
  const double km = saddle_cgf(table1, {10, 10}, Polarity::Positive, 0.1 - h).kappa;
  const double fd2 = (kp - 2 * v.kappa + km) / (h * h);
  CHECK(v.d2 > 0.0);
  CHECK(oracle::rel_err(v.d2, fd2) < 1e-4);
  CHECK_THROWS_AS(saddle_cgf(table1, {10, 10}, Polarity::Positive, 800.0), std::range_error);
}

TEST_CASE("cgf: derivative property at 50 random points") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0, 1);
  for (int k = 0; k < 50; ++k) {
    ModelParams p;
    p.B = 0.01 + 0.99 * U(rng);
    p.theta_pos = {50 * U(rng), 40 * U(rng), U(rng)};
    p.theta_neg = {50 * U(rng), 40 * U(rng), U(rng)};
    const IntensityPair pair{0.1 + 500 * U(rng), 0.1 + 500 * U(rng)};
    const Polarity pol = U(rng) < 0.5 ? Polarity::Positive : Polarity::Negative;
    const double t = -2.0 + 4.0 * U(rng);
    const double h = 1e-5 * std::max(1.0, std::abs(t));
    const auto v = saddle_cgf(p, pair, pol, t);
    const auto vp = saddle_cgf(p, pair, pol, t + h);
    const auto vm = saddle_cgf(p, pair, pol, t - h);
    const double fd1 = (vp.kappa - vm.kappa) / (2 * h);
    const double fd2 = (vp.d1 - vm.d1) / (2 * h);  // from the closed-form first derivative
    CHECK(oracle::rel_err(v.d1, fd1) < 1e-4 + 1e-6 * std::abs(vp.kappa) / std::max(std::abs(v.d1), 1e-300));
    CHECK(oracle::rel_err(v.d2, fd2) < 1e-4);
  }
}

TEST_CASE("saddle: degenerate and zero-rate cases") {
  ModelParams sym = oracle::constant_theta(0.0, 0.0);
  CHECK_THROWS_AS(saddle_prob(sym, {5, 5}, Polarity::Positive), SaddleDegenerate);
  CHECK(saddle_prob(table1, {0, 0}, Polarity::Positive).value == 0.0);
  CHECK(saddle_prob(table1, {0, 0}, Polarity::Negative).value == 0.0);
}

TEST_CASE("saddle: sign of the saddle point follows the polarity") {
  const IntensityPair pair = IntensityPair::static_scene(20.0);
  CHECK(saddle_point(table1, pair, Polarity::Positive) > 0.0);
  CHECK(saddle_point(table1, pair, Polarity::Negative) < 0.0);
}

TEST_CASE("saddle: within 15% of poisson over the observed range" * doctest::may_fail()) {
  // Recorded discrepancy: below ~8 photons the lattice of the exact sum
  // separates the two by factors; above that they agree to a few percent.
  int bad = 0;
  for (int i = 0; i < 20; ++i) {
    const double lambda = 0.45 * std::pow(1e4, i / 19.0);
    const IntensityPair pair = IntensityPair::static_scene(lambda);
    const double p = poisson_prob(table1, pair, Polarity::Positive, 1e-15).value;
    if (p <= 1e-12) continue;
    const double s = saddle_prob(table1, pair, Polarity::Positive).value;
    if (oracle::rel_err(s, p) > 0.15) {
      ++bad;
      MESSAGE("lambda=" << lambda << " saddle=" << s << " poisson=" << p);
    }
  }
  CHECK(bad == 0);
}

TEST_CASE("saddle: close to poisson once photon counts are moderate") {
  for (double lambda : {15.0, 30.0, 60.0, 120.0, 300.0}) {
    const IntensityPair pair = IntensityPair::static_scene(lambda);
    const double p = poisson_prob(table1, pair, Polarity::Positive).value;
    const double s = saddle_prob(table1, pair, Polarity::Positive).value;
    CHECK(oracle::rel_err(s, p) < 0.15);
  }
}

TEST_CASE("event_prob: floor handling") {
  const auto r = event_prob(table1, IntensityPair::static_scene(1e6), Polarity::Positive, Method::Saddle, true);
  CHECK(r.value == doctest::Approx(table1.cv_pos).epsilon(0.01));

  ModelParams nofloor = table1;
  nofloor.cv_pos = nofloor.cv_neg = 0.0;
  for (Method m : {Method::Poisson, Method::Gaussian, Method::Saddle}) {
    const IntensityPair pair = IntensityPair::static_scene(13.0);
    CHECK(event_prob(nofloor, pair, Polarity::Negative, m, true).value ==
          event_prob(nofloor, pair, Polarity::Negative, m, false).value);
  }

  const IntensityPair peak = IntensityPair::static_scene(peak_lambda());
  const double on = event_prob(table1, peak, Polarity::Positive, Method::Saddle, true).value;
  const double off = event_prob(table1, peak, Polarity::Positive, Method::Saddle, false).value;
  CHECK(on - off == doctest::Approx(table1.cv_pos).epsilon(1e-6));
}

TEST_CASE("null probability") {
  CHECK(null_prob(table1, {0, 0}, Method::Poisson) == 1.0);

  ModelParams sym = table1;
  sym.theta_neg = sym.theta_pos;
  const IntensityPair peak = IntensityPair::static_scene(peak_lambda());
  const auto pos = poisson_prob(sym, peak, Polarity::Positive);
  const auto neg = poisson_prob(sym, peak, Polarity::Negative);
  CHECK(std::abs(null_prob(sym, peak, Method::Poisson) - (1 - 2 * pos.value)) <=
        2 * (pos.truncation_error + neg.truncation_error) + 1e-15);

  ModelParams wide = table1;
  wide.B = 5.0;
  CHECK(null_prob(wide, {10, 10}, Method::Poisson) >= 1 - 1e-6);
}

TEST_CASE("radiometric conversion factor") {
  CHECK(radiometric_alpha(4.86, 20, 666) == doctest::Approx(3.96).epsilon(0.002));
  CHECK(radiometric_alpha(4.86, 40, 666) == doctest::Approx(1.98).epsilon(0.002));
  CHECK(radiometric_alpha(9.72, 20, 666) == doctest::Approx(4 * radiometric_alpha(4.86, 20, 666)));
  CHECK(radiometric_alpha(9.72, 20, 666) == doctest::Approx(15.84).epsilon(0.002));
  CHECK_THROWS_AS(radiometric_alpha(0, 20, 666), std::domain_error);
  CHECK_THROWS_AS(radiometric_alpha(4.86, -1, 666), std::domain_error);
}

TEST_CASE("property: polarity equivalence with constant theta") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0, 1);
  for (int k = 0; k < 100; ++k) {
    ModelParams p = oracle::constant_theta(1e-3 + (1 - 1e-3) * U(rng), 300 * U(rng));
    const double lambda = std::pow(10.0, -2 + 5 * U(rng));
    const IntensityPair pair = IntensityPair::static_scene(lambda);
    const auto a = poisson_prob(p, pair, Polarity::Positive);
    const auto b = poisson_prob(p, pair, Polarity::Negative);
    CHECK(std::abs(a.value - b.value) <= 2 * (a.truncation_error + b.truncation_error) + 1e-14);
  }
}

TEST_CASE("property: poisson non-increasing in theta") {
  for (double lambda : {0.5, 3.0, 20.0, 150.0}) {
    double prev = 1.0;
    for (double theta = 0; theta <= 200; theta += 2.5) {
      const double v = poisson_prob(oracle::constant_theta(0.15, theta), IntensityPair::static_scene(lambda),
                                    Polarity::Positive).value;
      CHECK(v <= prev + 1e-15);
      prev = v;
    }
  }
}

TEST_CASE("property: all methods non-increasing in B") {
  for (Method m : {Method::Poisson, Method::Gaussian, Method::Saddle}) {
    for (double lambda : {2.0, 20.0, 200.0}) {
      double prev = 1.0;
      for (double B = 0.02; B <= 1.0; B += 0.02) {
        ModelParams p = oracle::constant_theta(B, 10.0);
        const double v = event_prob(p, IntensityPair::static_scene(lambda), Polarity::Positive, m, false).value;
        CHECK(v <= prev * (1 + 1e-12) + 1e-300);
        prev = v;
      }
    }
  }
}

TEST_CASE("property: every method stays in [0, 1]") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(0, 1);
  for (int k = 0; k < 200; ++k) {
    ModelParams p;
    p.B = 0.01 + 0.99 * U(rng);
    p.theta_pos = {100 * U(rng), 50 * U(rng), U(rng)};
    p.theta_neg = {100 * U(rng), 50 * U(rng), U(rng)};
    p.cv_pos = 0.5 * U(rng);
    const IntensityPair pair{std::pow(10.0, -2 + 6 * U(rng)), std::pow(10.0, -2 + 6 * U(rng))};
    for (Method m : {Method::Gaussian, Method::Saddle}) {
      for (Polarity pol : {Polarity::Positive, Polarity::Negative}) {
        double v = 0;
        try {
          v = event_prob(p, pair, pol, m, true).value;
        } catch (const SaddleDegenerate&) {
          continue;
        }
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
}

TEST_CASE("method names") {
  CHECK(parse_method("saddle") == Method::Saddle);
  CHECK(parse_method("poisson") == Method::Poisson);
  CHECK(to_string(Method::Gaussian) == "gaussian");
  CHECK_THROWS_AS(parse_method("bogus"), std::invalid_argument);
}
