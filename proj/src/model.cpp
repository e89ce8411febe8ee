#include "ecnoise/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/poisson.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace ecnoise {

namespace {

constexpr double kSnapTolerance = 1e-9;
constexpr double kSaddleDegenerate = 1e-6;
constexpr double kSaddleSearchLimit = 50.0;

// Floor/ceil arguments that land within 1e-9 of an integer are treated as
// that integer, so the strict trigger inequality is not decided by rounding.
double snap(double x) {
  const double r = std::round(x);
  return std::abs(x - r) < kSnapTolerance ? r : x;
}

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// log of the Chernoff bound e^{-lambda} (e lambda / k)^k, valid for the upper
// tail P(X >= k) when k > lambda and for the lower tail P(X <= k) when k < lambda.
double log_chernoff(double lambda, double k) {
  if (k <= 0.0) return -lambda;
  if (lambda <= 0.0) return -std::numeric_limits<double>::infinity();
  return -lambda + k + k * std::log(lambda / k);
}

double poisson_pmf(double lambda, long long n) {
  if (lambda == 0.0) return n == 0 ? 1.0 : 0.0;
  return boost::math::pdf(boost::math::poisson_distribution<double>(lambda), static_cast<double>(n));
}

// P(Pois(lambda) >= k)
double poisson_sf_ge(double lambda, double k) {
  if (k <= 0.0) return 1.0;
  if (lambda == 0.0) return 0.0;
  return boost::math::gamma_p(k, lambda);
}

// P(Pois(lambda) <= m)
double poisson_cdf_le(double lambda, double m) {
  if (m < 0.0) return 0.0;
  if (lambda == 0.0) return 1.0;
  return boost::math::gamma_q(m + 1.0, lambda);
}

void check_pair(IntensityPair pair) {
  if (!(pair.lambda >= 0.0) || !(pair.lambda0 >= 0.0) || !std::isfinite(pair.lambda) ||
      !std::isfinite(pair.lambda0)) {
    throw std::domain_error("intensity pair must be finite and non-negative");
  }
}

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

}  // namespace

std::string to_string(Polarity pol) { return pol == Polarity::Positive ? "positive" : "negative"; }

std::string to_string(Method method) {
  switch (method) {
    case Method::Poisson: return "poisson";
    case Method::Gaussian: return "gaussian";
    case Method::Saddle: return "saddle";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "poisson") return Method::Poisson;
  if (name == "gaussian") return Method::Gaussian;
  if (name == "saddle") return Method::Saddle;
  throw std::invalid_argument("unknown method '" + name + "' (expected poisson|gaussian|saddle)");
}

SaddleDegenerate::SaddleDegenerate(double s)
    : ModelError("saddle point " + std::to_string(s) + " is within 1e-6 of zero"), saddle(s) {}

double ThetaCoefficients::operator()(double lambda) const {
  return c1 + c2 * std::sqrt(lambda) + c3 * lambda;
}

double theta_eval(const ThetaCoefficients& coeffs, double lambda) {
  if (!(lambda >= 0.0)) throw std::domain_error("theta_eval: lambda must be non-negative");
  return coeffs(lambda);
}

double theta_min_on(const ThetaCoefficients& coeffs, double lambda_max) {
  return std::min(coeffs(0.0), coeffs(lambda_max));
}

ModelParams default_bias_params() {
  ModelParams p;
  p.B = 0.15;
  p.alpha = 4.5;
  p.theta_pos = {18.92, 35.49, 0.439};
  p.theta_neg = {16.42, 37.42, 0.0676};
  p.cv_pos = 9.57e-9;
  p.cv_neg = 3.18e-8;
  p.refractory_us = 79.0;
  return p;
}

void validate(const ModelParams& p) {
  auto fail = [](const std::string& what) { throw std::invalid_argument("invalid model params: " + what); };
  if (!(p.B > 0.0 && p.B <= 1.0)) fail("B must lie in (0, 1]");
  if (!(p.alpha > 0.0) || !std::isfinite(p.alpha)) fail("alpha must be positive");
  if (!(p.cv_pos >= 0.0 && p.cv_pos < 1.0)) fail("cv_pos must lie in [0, 1)");
  if (!(p.cv_neg >= 0.0 && p.cv_neg < 1.0)) fail("cv_neg must lie in [0, 1)");
  if (!(p.refractory_us >= 0.0)) fail("refractory_us must be non-negative");
  if (!(p.lambda_max > 0.0)) fail("lambda_max must be positive");
  for (Polarity pol : {Polarity::Positive, Polarity::Negative}) {
    const auto& c = p.theta(pol);
    if (!(c.c1 >= 0.0)) fail("c1_" + to_string(pol).substr(0, 3) + " must be non-negative");
    if (!(c.c2 >= 0.0)) fail("c2_" + to_string(pol).substr(0, 3) + " must be non-negative");
    if (!std::isfinite(c.c3)) fail("c3 must be finite");
    if (theta_min_on(c, p.lambda_max) < 0.0) {
      fail("theta_" + to_string(pol).substr(0, 3) + " goes negative on [0, lambda_max]");
    }
  }
}

ProbResult poisson_prob(const ModelParams& params, IntensityPair pair, Polarity pol, double tol) {
  if (!(tol > 0.0)) throw std::domain_error("poisson_prob: tolerance must be positive");
  check_pair(pair);

  const double lambda = pair.lambda;
  const double lambda0 = pair.lambda0;
  const auto& coeffs = params.theta(pol);
  const double theta = coeffs(lambda);
  const double theta0 = coeffs(lambda0);
  const double b = std::exp(sign_of(pol) * params.B);

  // Outer window on n0, widened until each dropped tail is below tol / 2.
  const double spread = 12.0 * std::sqrt(lambda0 + 1.0) + 30.0;
  const double step = std::ceil(std::sqrt(lambda0 + 1.0));
  const double log_half_tol = std::log(tol / 2.0);
  double hi = std::ceil(lambda0 + spread);
  while (log_chernoff(lambda0, hi + 1.0) > log_half_tol) hi += step;
  double lo = std::max(0.0, std::floor(lambda0 - spread));
  while (lo > 0.0 && log_chernoff(lambda0, lo - 1.0) > log_half_tol) lo = std::max(0.0, lo - step);

  double truncation = std::exp(log_chernoff(lambda0, hi + 1.0));
  if (lo > 0.0) truncation += std::exp(log_chernoff(lambda0, lo - 1.0));

  CompensatedSum sum;
  for (auto n0 = static_cast<long long>(lo); n0 <= static_cast<long long>(hi); ++n0) {
    const double weight = poisson_pmf(lambda0, n0);
    if (weight == 0.0) continue;
    const double bound = snap(b * (static_cast<double>(n0) + theta0) - theta);
    double inner = 0.0;
    if (pol == Polarity::Positive) {
      inner = poisson_sf_ge(lambda, std::floor(bound) + 1.0);
    } else {
      inner = poisson_cdf_le(lambda, std::ceil(bound) - 1.0);
    }
    sum.add(weight * inner);
  }
  return {clamp01(sum.value()), Method::Poisson, truncation};
}

ProbResult gaussian_prob(const ModelParams& params, IntensityPair pair, Polarity pol) {
  check_pair(pair);
  const auto& coeffs = params.theta(pol);
  const double b = std::exp(sign_of(pol) * params.B);
  const double mean = pair.lambda - b * (pair.lambda0 + coeffs(pair.lambda0)) + coeffs(pair.lambda);
  const double var = pair.lambda + b * b * pair.lambda0;

  if (var == 0.0) {
    if (mean == 0.0) throw ModelError("gaussian_prob: zero variance and zero mean");
    const bool above = mean > 0.0;
    const double value = (pol == Polarity::Positive) == above ? 1.0 : 0.0;
    return {value, Method::Gaussian, 0.0};
  }
  const double x = mean / std::sqrt(2.0 * var);
  const double value = pol == Polarity::Positive ? 0.5 * std::erfc(-x) : 0.5 * std::erfc(x);
  return {clamp01(value), Method::Gaussian, 0.0};
}

CgfValue saddle_cgf(const ModelParams& params, IntensityPair pair, Polarity pol, double t) {
  if (!std::isfinite(t)) throw std::domain_error("saddle_cgf: t must be finite");
  const auto& coeffs = params.theta(pol);
  const double theta = coeffs(pair.lambda);
  const double theta0 = coeffs(pair.lambda0);
  const double b = std::exp(sign_of(pol) * params.B);

  const double up = std::exp(t);
  const double down = std::exp(-t * b);
  if (!std::isfinite(up) || !std::isfinite(down)) {
    throw std::range_error("saddle_cgf: exponential overflow at t = " + std::to_string(t));
  }
  CgfValue v;
  v.kappa = pair.lambda * std::expm1(t) + pair.lambda0 * std::expm1(-t * b) + t * theta - t * b * theta0;
  v.d1 = pair.lambda * up - pair.lambda0 * b * down + theta - b * theta0;
  v.d2 = pair.lambda * up + pair.lambda0 * b * b * down;
  if (!std::isfinite(v.kappa) || !std::isfinite(v.d1) || !std::isfinite(v.d2)) {
    throw std::range_error("saddle_cgf: non-finite cumulants at t = " + std::to_string(t));
  }
  return v;
}

double saddle_point(const ModelParams& params, IntensityPair pair, Polarity pol) {
  check_pair(pair);
  auto d1 = [&](double t) { return saddle_cgf(params, pair, pol, t).d1; };

  // kappa'' > 0, so kappa' is increasing and the root lies on the side
  // opposite to the sign of the mean kappa'(0).
  const double mean = d1(0.0);
  if (mean == 0.0) throw SaddleDegenerate(0.0);
  if (pair.lambda == 0.0 && pair.lambda0 == 0.0) {
    throw NoSaddle("saddle_point: kappa' is constant for zero photon rates");
  }
  const double dir = mean < 0.0 ? 1.0 : -1.0;

  double inner = 0.0;  // d1 has the sign of mean here
  double outer = 1e-4;
  if (std::signbit(d1(dir * outer)) == std::signbit(mean)) {
    inner = outer;
    outer = 1.0;
    while (std::signbit(d1(dir * outer)) == std::signbit(mean)) {
      if (outer >= kSaddleSearchLimit) {
        throw NoSaddle("saddle_point: no sign change of kappa' within |t| <= 50");
      }
      inner = outer;
      outer = std::min(2.0 * outer, kSaddleSearchLimit);
    }
  }

  // Safeguarded Newton on the bracket [inner, outer] (in |t|), stopping at
  // |kappa'| < 1e-12 relative to the magnitude of its terms.
  const auto& coeffs = params.theta(pol);
  const double b = std::exp(sign_of(pol) * params.B);
  const double offset_scale = std::abs(coeffs(pair.lambda)) + b * std::abs(coeffs(pair.lambda0));
  double t = 0.5 * (inner + outer);
  for (int iter = 0; iter < 200; ++iter) {
    const auto v = saddle_cgf(params, pair, pol, dir * t);
    const double scale = pair.lambda * std::exp(dir * t) + pair.lambda0 * b * std::exp(-dir * t * b) + offset_scale;
    if (std::abs(v.d1) <= 1e-12 * scale) break;
    if (std::signbit(v.d1) == std::signbit(mean)) {
      inner = t;
    } else {
      outer = t;
    }
    double next = t - v.d1 / (dir * v.d2);
    if (!std::isfinite(next) || !(next > inner && next < outer)) next = 0.5 * (inner + outer);
    t = next;
    if (outer - inner <= 1e-15 * outer) break;
  }
  const double s = dir * t;
  if (std::abs(s) < kSaddleDegenerate) throw SaddleDegenerate(s);
  return s;
}

ProbResult saddle_prob(const ModelParams& params, IntensityPair pair, Polarity pol) {
  check_pair(pair);
  if (pair.lambda == 0.0 && pair.lambda0 == 0.0) {
    // Z is the constant theta(0) - e^{+-B} theta(0).
    const auto& coeffs = params.theta(pol);
    const double z = coeffs(0.0) - std::exp(sign_of(pol) * params.B) * coeffs(0.0);
    const bool fires = pol == Polarity::Positive ? z > 0.0 : z < 0.0;
    return {fires ? 1.0 : 0.0, Method::Saddle, 0.0};
  }
  const double s = saddle_point(params, pair, pol);
  const auto v = saddle_cgf(params, pair, pol, s);
  const double lead = std::exp(v.kappa) / (std::abs(s) * std::sqrt(2.0 * std::numbers::pi * v.d2));
  const double tail = std::min(lead, 0.5);
  // s on the tail side of the requested event gives the tail itself; on the
  // other side the pole at t = 0 contributes its unit residue.
  const bool tail_side = pol == Polarity::Positive ? s > 0.0 : s < 0.0;
  return {clamp01(tail_side ? tail : 1.0 - tail), Method::Saddle, 0.0};
}

ProbResult event_prob(const ModelParams& params, IntensityPair pair, Polarity pol, Method method,
                      bool apply_floor) {
  ProbResult r;
  switch (method) {
    case Method::Poisson: r = poisson_prob(params, pair, pol); break;
    case Method::Gaussian: r = gaussian_prob(params, pair, pol); break;
    case Method::Saddle: r = saddle_prob(params, pair, pol); break;
  }
  if (apply_floor) r.value = clamp01(r.value + params.cv(pol));
  return r;
}

double null_prob(const ModelParams& params, IntensityPair pair, Method method) {
  const double pos = event_prob(params, pair, Polarity::Positive, method, false).value;
  const double neg = event_prob(params, pair, Polarity::Negative, method, false).value;
  return std::max(0.0, 1.0 - pos - neg);
}

double radiometric_alpha(double pixel_side_um, double efficacy_lm_per_w, double wavelength_nm) {
  if (!(pixel_side_um > 0.0) || !(efficacy_lm_per_w > 0.0) || !(wavelength_nm > 0.0)) {
    throw std::domain_error("radiometric_alpha: inputs must be positive");
  }
  constexpr double planck = 6.62607015e-34;       // J s
  constexpr double light_speed = 2.99792458e8;    // m / s
  const double side_m = pixel_side_um * 1e-6;
  const double area = side_m * side_m;
  const double per_second = area * (wavelength_nm * 1e-9) / (efficacy_lm_per_w * planck * light_speed);
  return per_second * 1e-6;
}

}  // namespace ecnoise
