#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "ecnoise/scurve.hpp"
#include "oracles.hpp"

using namespace ecnoise;

namespace {
const ModelParams table1 = default_bias_params();
const std::vector<double> baselines{0.304, 2.997, 30.409, 299.684};

SCurveRequest request(int n_pixels = 100, double sigma_B = 0.0045) {
  SCurveRequest req;
  req.baseline_lux = baselines;
  req.contrast_grid = SCurveRequest::linear_grid();
  req.n_pixels = n_pixels;
  req.sigma_B = sigma_B;
  req.seed = 7;
  return req;
}
}  // namespace

TEST_CASE("contrast zero reduces to the static noise probability") {
  const auto fam = scurve_family(table1, request(1, 0.0));
  for (std::size_t i = 0; i < baselines.size(); ++i) {
    const IntensityPair pair = IntensityPair::static_scene(table1.alpha * baselines[i]);
    const double want = event_prob(table1, pair, Polarity::Positive, Method::Saddle, true).value;
    CHECK(fam.mean(i, 0) == doctest::Approx(want).epsilon(1e-12));
    CHECK(fam.mean(i, 0) <= 1e-5);
  }
}

TEST_CASE("bright baseline saturates at unit contrast") {
  const auto fam = scurve_family(table1, request());
  CHECK(fam.mean(3, fam.contrast_grid.size() - 1) >= 0.999);
}

TEST_CASE("zero threshold spread gives identical pixels") {
  const auto fam = scurve_family(table1, request(50, 0.0));
  CHECK((fam.stddev.isNaN() || fam.stddev == 0.0).all());
}

TEST_CASE("family shape, range and monotonicity") {
  const auto fam = scurve_family(table1, request());
  CHECK(fam.mean.rows() == 4);
  CHECK(fam.mean.cols() == 60);
  for (Eigen::Index i = 0; i < fam.mean.rows(); ++i) {
    double prev = 0.0;
    for (Eigen::Index j = 0; j < fam.mean.cols(); ++j) {
      if (fam.missing(i, j)) continue;
      CHECK(fam.mean(i, j) >= 0.0);
      CHECK(fam.mean(i, j) <= 1.0);
      CHECK(fam.mean(i, j) >= prev - 1e-12);
      prev = fam.mean(i, j);
    }
  }
}

TEST_CASE("raising B never raises a curve point") {
  SCurveRequest req = request(1, 0.0);
  ModelParams lo = table1, hi = table1;
  hi.B = 0.25;
  const auto a = scurve_family(lo, req);
  const auto b = scurve_family(hi, req);
  for (Eigen::Index i = 0; i < a.mean.rows(); ++i)
    for (Eigen::Index j = 0; j < a.mean.cols(); ++j)
      if (!a.missing(i, j) && !b.missing(i, j)) CHECK(b.mean(i, j) <= a.mean(i, j) + 1e-12);
}

TEST_CASE("half-crossing approaches B at high baselines with no leakage") {
  ModelParams p = oracle::constant_theta(0.15, 0.0);
  p.cv_pos = p.cv_neg = 0;
  SCurveRequest req;
  req.n_pixels = 1;
  req.sigma_B = 0.0;
  req.method = Method::Gaussian;
  req.contrast_grid = SCurveRequest::linear_grid(0.0, 0.3, 3001);
  double prev_gap = 1.0;
  for (double lux : {10.0, 1e3, 1e5}) {
    req.baseline_lux = {lux};
    const auto fam = scurve_family(p, req);
    Eigen::Index j = 0;
    while (fam.mean(0, j) < 0.5) ++j;
    const double gap = std::abs(fam.contrast_grid[j] - 0.15);
    CHECK(gap <= prev_gap + 1e-4);
    prev_gap = gap;
  }
  CHECK(prev_gap < 2e-3);
}

TEST_CASE("negative contrasts pick the negative polarity") {
  SCurveRequest req = request(1, 0.0);
  req.contrast_grid = {-1.0};
  const auto fam = scurve_family(table1, req);
  CHECK(fam.mean(3, 0) >= 0.999);
}

TEST_CASE("seeded determinism") {
  const auto a = scurve_family(table1, request());
  const auto b = scurve_family(table1, request());
  CHECK(((a.mean == b.mean) || (a.mean.isNaN() && b.mean.isNaN())).all());
  CHECK(((a.stddev == b.stddev) || (a.stddev.isNaN() && b.stddev.isNaN())).all());
}

TEST_CASE("csv writer and observed-column reader") {
  const auto fam = scurve_family(table1, request(10));
  const auto path = std::filesystem::temp_directory_path() / "ecnoise_scurve.csv";
  Eigen::ArrayXXd observed = fam.mean;
  write_scurve_csv(path, fam, &observed);
  const auto pts = read_scurve_observed(path);
  CHECK(pts.size() == static_cast<std::size_t>(fam.mean.size()));
  CHECK(pts.front().baseline_lux == baselines.front());
  CHECK(pts.back().prob_observed == observed(3, 59));
  write_scurve_csv(path, fam);
  CHECK_THROWS(read_scurve_observed(path));
}

TEST_CASE("bias to threshold map") {
  CHECK(bias_to_B(0) == 0.15);
  CHECK(bias_to_B(105) == doctest::Approx(0.236205).epsilon(1e-12));
  CHECK(bias_to_B(-105) == doctest::Approx(0.063795).epsilon(1e-12));
  for (int k = -200; k < 200; ++k) CHECK(bias_to_B(k + 1) > bias_to_B(k));
}

TEST_CASE("refractory time map") {
  CHECK(refractory_time(0) == doctest::Approx(79.1).epsilon(0.002));
  CHECK(std::abs(refractory_time(0) - 79) <= 1);
  CHECK(refractory_time(200) == doctest::Approx(19.3).epsilon(0.01));
  CHECK(std::abs(refractory_time(200) - 20) <= 1);
  for (int b = -22; b < 500; ++b) CHECK(refractory_time(b + 1) < refractory_time(b));
  CHECK_THROWS_AS(refractory_time(-23), std::domain_error);
}
