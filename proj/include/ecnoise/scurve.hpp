// scurve.hpp -- Heaviside-step (S-curve) event probabilities and bias maps.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "ecnoise/model.hpp"

namespace ecnoise {

struct SCurveRequest {
  std::vector<double> baseline_lux;
  std::vector<double> contrast_grid;   // ln(I / I0); sign picks the polarity
  int n_pixels = 1000;
  std::uint64_t seed = 0;
  double sigma_B = 0.0045;
  Method method = Method::Saddle;
  bool apply_floor = true;

  /// n points evenly spaced on [lo, hi].
  static std::vector<double> linear_grid(double lo = 0.0, double hi = 1.0, int n = 60);
};

/// mean(i, j) / stddev(i, j) for baseline i and contrast j. A NaN mean marks
/// a point whose saddle point degenerated for some ensemble member.
struct SCurveFamily {
  std::vector<double> baseline_lux;
  std::vector<double> contrast_grid;
  Eigen::ArrayXXd mean;
  Eigen::ArrayXXd stddev;

  bool missing(Eigen::Index i, Eigen::Index j) const { return std::isnan(mean(i, j)); }
};

SCurveFamily scurve_family(const ModelParams& params, const SCurveRequest& req);

/// Header baseline_lux,log_contrast,prob_mean,prob_std; missing points leave
/// the probability fields empty. When `observed` is given (same shape) a
/// prob_observed column is appended.
void write_scurve_csv(const std::filesystem::path& path, const SCurveFamily& family,
                      const Eigen::ArrayXXd* observed = nullptr);

/// Observed S-curve points for fitting.
struct SCurvePoint {
  double baseline_lux = 0.0;
  double log_contrast = 0.0;
  double prob_observed = 0.0;
};

/// Reads the S-curve CSV with a prob_observed column; rows with an empty
/// prob_observed are skipped.
std::vector<SCurvePoint> read_scurve_observed(const std::filesystem::path& path);

/// Log-contrast threshold for a bias_diff offset k (linear calibration).
double bias_to_B(int k);

/// Refractory time in microseconds for a bias_refr setting.
double refractory_time(int b_r);

}  // namespace ecnoise
