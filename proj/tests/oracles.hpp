// Independent reference computations used by the tests. Nothing here calls
// into the library's numerical code.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "ecnoise/model.hpp"

namespace oracle {

inline long double pois_pmf(long double lambda, int n) {
  if (lambda == 0) return n == 0 ? 1.0L : 0.0L;
  return std::exp(n * std::log(lambda) - lambda - std::lgamma(static_cast<long double>(n) + 1));
}

/// Literal double sum over n, n0 <= nmax of the trigger condition on Z.
inline double poisson_double_sum(const ecnoise::ModelParams& p, ecnoise::IntensityPair pair,
                                 ecnoise::Polarity pol, int nmax) {
  const auto& c = p.theta(pol);
  const long double theta = c.c1 + c.c2 * std::sqrt(pair.lambda) + c.c3 * pair.lambda;
  const long double theta0 = c.c1 + c.c2 * std::sqrt(pair.lambda0) + c.c3 * pair.lambda0;
  const long double b = std::exp(static_cast<long double>(ecnoise::sign_of(pol)) * p.B);
  long double total = 0;
  for (int n0 = 0; n0 <= nmax; ++n0) {
    const long double w0 = pois_pmf(pair.lambda0, n0);
    for (int n = 0; n <= nmax; ++n) {
      const long double z = n - b * (n0 + theta0) + theta;
      const bool fires = pol == ecnoise::Polarity::Positive ? z > 1e-12L : z < -1e-12L;
      if (fires) total += w0 * pois_pmf(pair.lambda, n);
    }
  }
  return static_cast<double>(total);
}

/// Phi^{-1}(1 - q) by bisection on erfc, good to ~1e-13.
inline double upper_normal_quantile(double q) {
  double lo = -40.0;
  double hi = 40.0;
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(mid / std::sqrt(2.0)) > q) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline ecnoise::ModelParams constant_theta(double B, double theta, double alpha = 4.5) {
  ecnoise::ModelParams p;
  p.B = B;
  p.alpha = alpha;
  p.theta_pos = {theta, 0.0, 0.0};
  p.theta_neg = {theta, 0.0, 0.0};
  return p;
}

}  // namespace oracle
