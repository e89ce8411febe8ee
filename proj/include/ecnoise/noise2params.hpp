// noise2params.hpp -- camera parameters from static-scene noise curves.
//
// Pipeline: invert a constant theta per intensity on a coarse (B, alpha) grid,
// regress the inverted values onto c1 + c2 sqrt(lambda) + c3 lambda, then
// polish the best grid points with a bounded Nelder-Mead search over
// (B, alpha, c1..c3 positive, c1..c3 negative). The probability floor c_V is
// decided afterwards.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ecnoise/ingest.hpp"
#include "ecnoise/keyvalue.hpp"
#include "ecnoise/model.hpp"
#include "ecnoise/scurve.hpp"

namespace ecnoise {

class NoSolution : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularFit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Constant theta at which the model reproduces observed_p at this intensity.
/// P(theta) falls monotonically, so the root is bisected on [0, theta_max]
/// with theta_max doubled until P(theta_max) < observed_p.
double invert_theta(double B, double alpha, double intensity_lux, double observed_p, Polarity pol,
                    Method method = Method::Saddle);

struct ThetaFit {
  ThetaCoefficients coeffs;
  double residual_rms = 0.0;
};

/// Least squares of theta on {1, sqrt(lambda), lambda}.
ThetaFit fit_theta_form(const std::vector<std::pair<double, double>>& samples);

struct FitMetrics {
  double rmse = 0.0;
  double chi2_nu = 0.0;
  double r2 = 1.0;
  double peak_rrmse = 0.0;
};

/// chi2_nu divides by n - n_params and skips points whose uncertainty is not
/// positive; with no usable uncertainty it is NaN.
FitMetrics fit_metrics(const Eigen::ArrayXd& observed, const Eigen::ArrayXd& predicted,
                       const Eigen::ArrayXd& uncertainties, int n_params = 0);

struct FitDataset {
  EmpiricalCurve noise;
  std::vector<SCurvePoint> scurves;
  double noise_weight = 0.5;   // only used when S-curves are present
  double scurve_weight = 0.5;
};

struct Bounds {
  double lo = 0.0;
  double hi = 1.0;
};

struct FitConfig {
  Bounds B{1e-3, 1.0};
  Bounds alpha{0.5, 50.0};
  Bounds c1{0.0, 1000.0};
  Bounds c2{0.0, 1000.0};
  Bounds c3{-5.0, 5.0};
  Method method = Method::Saddle;
  int n_starts = 8;
  int max_evals = 4000;        // per start
  double tolerance = 1e-9;     // relative spread of simplex values
  std::uint64_t seed = 0;
  bool log_residuals = false;
  bool spatial_uncertainty = false;
  bool fit_floor = true;

  void check() const;
};

/// Reads optional keys B_lo, B_hi, alpha_lo, ... c3_hi, n_starts, max_evals,
/// tolerance over the defaults.
FitConfig read_fit_config(const KeyValue& kv, FitConfig base = {});

struct FitResult {
  ModelParams params;
  std::array<FitMetrics, 2> metrics{};   // positive, negative
  double objective = 0.0;
  std::vector<double> trace;             // best objective after each simplex iteration
  int converged_starts = 0;
  std::int64_t fallback_points = 0;      // saddle-degenerate points evaluated with the Gaussian
  bool under_determined = false;
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, FitResult best)
      : std::runtime_error(what), best_so_far(std::move(best)) {}
  FitResult best_so_far;
};

/// Model probability for one curve point (floor included).
double curve_prediction(const ModelParams& params, double intensity_lux, Polarity pol, Method method);

/// Per polarity: c_V = smallest observed probability (0 if any point is 0),
/// kept only when it lowers that polarity's RMSE.
ModelParams apply_cv(const EmpiricalCurve& data, ModelParams params, Method method = Method::Saddle);

/// Metrics of params against a noise curve, per polarity.
std::array<FitMetrics, 2> curve_metrics(const EmpiricalCurve& data, const ModelParams& params,
                                        Method method, bool spatial_uncertainty = false,
                                        int n_params = 5);

FitResult fit_params(const FitDataset& data, const FitConfig& config = {});

void write_metrics_csv(const std::filesystem::path& path, const FitResult& result);
void write_trace_csv(const std::filesystem::path& path, const std::vector<double>& trace);

}  // namespace ecnoise
