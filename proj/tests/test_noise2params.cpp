#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "ecnoise/noise2params.hpp"
#include "oracles.hpp"
#include "roundtrip.hpp"

using namespace ecnoise;

namespace {
const ModelParams table1 = default_bias_params();

double forward(double theta, double lambda, Polarity pol) {
  return saddle_prob(oracle::constant_theta(0.15, theta), IntensityPair::static_scene(lambda), pol).value;
}
}  // namespace

TEST_CASE("theta inversion recovers a known leakage") {
  const double lux = 50.0 / 4.5;
  for (Polarity pol : {Polarity::Positive, Polarity::Negative}) {
    const double obs = forward(200.0, 50.0, pol);
    CHECK(invert_theta(0.15, 4.5, lux, obs, pol) == doctest::Approx(200.0).epsilon(0.005));
  }
  const double obs = poisson_prob(oracle::constant_theta(0.15, 200), {50, 50}, Polarity::Positive).value;
  CHECK(invert_theta(0.15, 4.5, lux, obs, Polarity::Positive, Method::Poisson) ==
        doctest::Approx(200.0).epsilon(0.005));
}

TEST_CASE("theta inversion boundaries") {
  const double p0 = forward(0.0, 50.0, Polarity::Positive);
  CHECK(invert_theta(0.15, 4.5, 50.0 / 4.5, p0, Polarity::Positive) == 0.0);
  CHECK_THROWS_AS(invert_theta(0.15, 4.5, 50.0 / 4.5, std::min(0.999, 2 * p0), Polarity::Positive), NoSolution);
  CHECK_THROWS_AS(invert_theta(0.15, 4.5, 10, 0.0, Polarity::Positive), std::domain_error);
}

TEST_CASE("theta form regression") {
  std::vector<std::pair<double, double>> s;
  for (int i = 0; i < 20; ++i) {
    const double lam = 0.45 * std::pow(1e4, i / 19.0);
    s.push_back({lam, 18.92 + 35.49 * std::sqrt(lam) + 0.439 * lam});
  }
  const auto fit = fit_theta_form(s);
  CHECK(std::abs(fit.coeffs.c1 - 18.92) < 1e-8);
  CHECK(std::abs(fit.coeffs.c2 - 35.49) < 1e-8);
  CHECK(std::abs(fit.coeffs.c3 - 0.439) < 1e-8);
  CHECK(fit.residual_rms < 1e-8);

  for (auto& [lam, th] : s) th = 42.0;
  const auto flat = fit_theta_form(s);
  CHECK(flat.coeffs.c1 == doctest::Approx(42.0).epsilon(1e-10));
  CHECK(std::abs(flat.coeffs.c2) < 1e-8);
  CHECK(std::abs(flat.coeffs.c3) < 1e-9);

  CHECK_THROWS_AS(fit_theta_form({{1, 2}, {4, 3}}), SingularFit);
  CHECK_THROWS_AS(fit_theta_form({{4, 2}, {4, 3}, {4, 5}}), SingularFit);
}

TEST_CASE("fit metrics") {
  const Eigen::ArrayXd obs = (Eigen::ArrayXd(3) << 1.0, 2.0, 4.0).finished();
  const Eigen::ArrayXd sd = (Eigen::ArrayXd(3) << 0.5, 1.0, 2.0).finished();
  const auto same = fit_metrics(obs, obs, sd);
  CHECK(same.rmse == 0.0);
  CHECK(same.chi2_nu == 0.0);
  CHECK(same.r2 == 1.0);
  CHECK(same.peak_rrmse == 0.0);

  CHECK(fit_metrics(obs, obs + sd, sd).chi2_nu == doctest::Approx(1.0).epsilon(1e-15));

  // residuals (0.5, -1, 1): ss_res 2.25, mean 7/3, ss_tot 14/3
  const Eigen::ArrayXd pred = (Eigen::ArrayXd(3) << 1.5, 1.0, 5.0).finished();
  const auto m = fit_metrics(obs, pred, sd, 1);
  CHECK(m.rmse == doctest::Approx(std::sqrt(0.75)));
  CHECK(m.r2 == doctest::Approx(1 - 2.25 / (14.0 / 3)));
  CHECK(m.peak_rrmse == doctest::Approx(std::sqrt(0.75) / 4));
  CHECK(m.chi2_nu == doctest::Approx((1.0 + 1.0 + 0.25) / 2));

  CHECK_THROWS_AS(fit_metrics(Eigen::ArrayXd::Zero(3), pred, sd), std::domain_error);
  CHECK(std::isnan(fit_metrics(obs, pred, Eigen::ArrayXd::Zero(3)).chi2_nu));
}

TEST_CASE("probability floor selection") {
  ModelParams nofloor = table1;
  nofloor.cv_pos = nofloor.cv_neg = 0;

  EmpiricalCurve data;
  for (int i = 0; i < 30; ++i) {
    const double lux = roundtrip::grid_lux(i);
    data.push_back({lux, curve_prediction(nofloor, lux, Polarity::Positive, Method::Saddle) + 1e-8,
                    curve_prediction(nofloor, lux, Polarity::Negative, Method::Saddle), 0, 0, 0, 0});
  }
  const ModelParams injected = apply_cv(data, nofloor);
  CHECK(injected.cv_pos == doctest::Approx(1e-8).epsilon(0.05));
  CHECK(injected.cv_neg == 0.0);   // tails already match; a floor only adds error

  data[3].p_pos = 0.0;
  CHECK(apply_cv(data, nofloor).cv_pos == 0.0);
}

TEST_CASE("round trip on default-bias curves") {
  const FitDataset data = roundtrip::make_dataset(table1, 1);
  const FitResult r = fit_params(data);
  CHECK(oracle::rel_err(r.params.B, table1.B) <= 0.05);
  CHECK(oracle::rel_err(r.params.alpha, table1.alpha) <= 0.10);
  CHECK_NOTHROW(validate(r.params));
  CHECK_FALSE(r.under_determined);
  CHECK(r.params.B <= 0.3);
  CHECK(!r.trace.empty());
  for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1]);

  // predicted curve error against the noise-free truth, relative to the
  // rms of the injected noise
  double ss_fit = 0, ss_noise = 0;
  for (const auto& pt : data.noise) {
    for (Polarity pol : {Polarity::Positive, Polarity::Negative}) {
      const double truth = curve_prediction(table1, pt.intensity_lux, pol, Method::Saddle);
      const double obs = pol == Polarity::Positive ? pt.p_pos : pt.p_neg;
      ss_fit += std::pow(curve_prediction(r.params, pt.intensity_lux, pol, Method::Saddle) - obs, 2);
      ss_noise += std::pow(obs - truth, 2);
    }
  }
  CHECK(std::sqrt(ss_fit) <= 2 * std::sqrt(ss_noise));
}

TEST_CASE("single-intensity data is flagged") {
  FitDataset d;
  const double lux = 10.0;
  d.noise.push_back({lux, curve_prediction(table1, lux, Polarity::Positive, Method::Saddle),
                     curve_prediction(table1, lux, Polarity::Negative, Method::Saddle), 1e-8, 1e-8, 0, 0});
  FitConfig cfg;
  cfg.n_starts = 2;
  cfg.max_evals = 400;
  try {
    CHECK(fit_params(d, cfg).under_determined);
  } catch (const NonConvergence& e) {
    CHECK(e.best_so_far.under_determined);
  }
}

TEST_CASE("objective ignores row order") {
  FitDataset a = roundtrip::make_dataset(table1, 4, false);
  FitDataset b = a;
  std::reverse(b.noise.begin(), b.noise.end());
  FitConfig cfg;
  cfg.n_starts = 1;
  cfg.max_evals = 100;
  FitResult ra, rb;
  try {
    ra = fit_params(a, cfg);
  } catch (const NonConvergence& e) {
    ra = e.best_so_far;
  }
  try {
    rb = fit_params(b, cfg);
  } catch (const NonConvergence& e) {
    rb = e.best_so_far;
  }
  CHECK(ra.objective == doctest::Approx(rb.objective).epsilon(1e-9));
}

TEST_CASE("configuration") {
  FitConfig bad;
  bad.B = {0.5, 0.2};
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
  const auto kv = KeyValue::parse("B_lo = 0.01\nB_hi = 0.3\nn_starts = 3\n");
  const FitConfig c = read_fit_config(kv);
  CHECK(c.B.hi == 0.3);
  CHECK(c.n_starts == 3);
  CHECK(c.alpha.hi == 50.0);
  CHECK_THROWS_AS(read_fit_config(KeyValue::parse("B_hi = 1.5\n")), std::invalid_argument);
}

TEST_CASE("bundled default-bias data") {
  const std::filesystem::path dir(ECNOISE_DATA_DIR);
  FitDataset d;
  d.noise = read_curve_csv(dir / "default_bias_noise.csv");
  d.scurves = read_scurve_observed(dir / "default_bias_scurves.csv");
  // the brightest baseline is saturated by log contrast 0.3
  double brightest = 0;
  for (const auto& s : d.scurves) brightest = std::max(brightest, s.baseline_lux);
  for (const auto& s : d.scurves) {
    if (s.baseline_lux == brightest && s.log_contrast >= 0.3) CHECK(s.prob_observed >= 0.99);
  }
  const FitResult r = fit_params(d);
  CHECK(r.params.B > 0.0);
  CHECK(r.params.B <= 0.3);
  CHECK(r.metrics[0].r2 >= 0.9);
  CHECK(r.metrics[1].r2 >= 0.9);
}
