// model.hpp -- event-probability model for a single event-camera pixel.
//
// Photon counts n ~ Pois(lambda) and n0 ~ Pois(lambda0) enter the detection
// variable Z = n - e^{+-B} (n0 + theta(lambda0)) + theta(lambda); a positive
// event fires when Z+ > 0, a negative one when Z- < 0. Three evaluations of
// those probabilities are provided: exact Poisson double sum, Gaussian, and
// leading-order saddle point.
#pragma once

#include <stdexcept>
#include <string>

namespace ecnoise {

enum class Polarity { Positive, Negative };
enum class Method { Poisson, Gaussian, Saddle };

std::string to_string(Polarity pol);
std::string to_string(Method method);
Method parse_method(const std::string& name);

/// Sign used in the trigger condition: +1 for positive events, -1 for negative.
constexpr int sign_of(Polarity pol) { return pol == Polarity::Positive ? 1 : -1; }

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Saddle point within 1e-6 of the origin (mean of Z ~ 0); the leading-order
/// formula diverges as 1/s there.
class SaddleDegenerate : public ModelError {
 public:
  explicit SaddleDegenerate(double s);
  double saddle;
};

/// No sign change of kappa' within |t| <= 50.
class NoSaddle : public ModelError {
 public:
  using ModelError::ModelError;
};

/// Leakage term theta(lambda) = c1 + c2 sqrt(lambda) + c3 lambda, in photons.
struct ThetaCoefficients {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;

  double operator()(double lambda) const;
  ThetaCoefficients scaled(double factor) const { return {c1 * factor, c2 * factor, c3 * factor}; }
  bool operator==(const ThetaCoefficients&) const = default;
};

/// c1 + c2 sqrt(lambda) + c3 lambda. Throws std::domain_error for lambda < 0.
double theta_eval(const ThetaCoefficients& coeffs, double lambda);

/// Smallest theta over [0, lambda_max]. With c2 >= 0 the quadratic in
/// sqrt(lambda) attains its minimum at one of the two endpoints.
double theta_min_on(const ThetaCoefficients& coeffs, double lambda_max);

struct ModelParams {
  double B = 0.15;                // log-contrast threshold, shared by both polarities
  double alpha = 4.5;             // photons per lux per timestep
  ThetaCoefficients theta_pos{};
  ThetaCoefficients theta_neg{};
  double cv_pos = 0.0;            // additive probability floor
  double cv_neg = 0.0;
  double refractory_us = 79.0;
  double lambda_max = 3000.0;     // domain on which theta must stay non-negative

  const ThetaCoefficients& theta(Polarity pol) const {
    return pol == Polarity::Positive ? theta_pos : theta_neg;
  }
  ThetaCoefficients& theta(Polarity pol) { return pol == Polarity::Positive ? theta_pos : theta_neg; }
  double cv(Polarity pol) const { return pol == Polarity::Positive ? cv_pos : cv_neg; }
  double& cv(Polarity pol) { return pol == Polarity::Positive ? cv_pos : cv_neg; }

  bool operator==(const ModelParams&) const = default;
};

/// Best-fit default-bias parameters (B = 0.15, alpha = 4.5, R = 79 us).
ModelParams default_bias_params();

/// Throws std::invalid_argument naming the first violated invariant.
void validate(const ModelParams& params);

struct IntensityPair {
  double lambda = 0.0;    // current mean photon count per timestep
  double lambda0 = 0.0;   // reference mean photon count per timestep

  static IntensityPair static_scene(double lambda) { return {lambda, lambda}; }
};

struct ProbResult {
  double value = 0.0;
  Method method = Method::Poisson;
  double truncation_error = 0.0;
};

ProbResult poisson_prob(const ModelParams& params, IntensityPair pair, Polarity pol,
                        double tol = 1e-15);

ProbResult gaussian_prob(const ModelParams& params, IntensityPair pair, Polarity pol);

struct CgfValue {
  double kappa = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Cumulant generating function of Z and its first two derivatives at t.
CgfValue saddle_cgf(const ModelParams& params, IntensityPair pair, Polarity pol, double t);

/// Root of kappa'(s) = 0. Throws SaddleDegenerate / NoSaddle.
double saddle_point(const ModelParams& params, IntensityPair pair, Polarity pol);

ProbResult saddle_prob(const ModelParams& params, IntensityPair pair, Polarity pol);

ProbResult event_prob(const ModelParams& params, IntensityPair pair, Polarity pol,
                      Method method, bool apply_floor);

/// max(0, 1 - P+ - P-), floors not applied.
double null_prob(const ModelParams& params, IntensityPair pair, Method method);

/// Mean photons per lux per microsecond from pixel pitch, luminous efficacy
/// and mean wavelength.
double radiometric_alpha(double pixel_side_um, double efficacy_lm_per_w, double wavelength_nm);

}  // namespace ecnoise
