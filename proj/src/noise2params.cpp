#include "ecnoise/noise2params.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "ecnoise/parallel.hpp"
#include "ecnoise/random.hpp"

namespace ecnoise {

namespace {

constexpr double kPenalty = 1e6;
constexpr int kDim = 8;   // B, alpha, c1..c3 positive, c1..c3 negative

using Vec = Eigen::Matrix<double, kDim, 1>;

double prob_or_gaussian(const ModelParams& p, IntensityPair pair, Polarity pol, Method method,
                        bool floor, std::int64_t* fallbacks = nullptr) {
  try {
    return event_prob(p, pair, pol, method, floor).value;
  } catch (const SaddleDegenerate&) {
  } catch (const NoSaddle&) {
  }
  if (fallbacks) ++*fallbacks;
  return event_prob(p, pair, pol, Method::Gaussian, floor).value;
}

ModelParams constant_theta_params(double B, double alpha, double theta) {
  ModelParams p;
  p.B = B;
  p.alpha = alpha;
  p.theta_pos = {theta, 0.0, 0.0};
  p.theta_neg = {theta, 0.0, 0.0};
  return p;
}

std::array<Bounds, kDim> box(const FitConfig& c) {
  return {c.B, c.alpha, c.c1, c.c2, c.c3, c.c1, c.c2, c.c3};
}

ModelParams params_from(const Vec& x) {
  ModelParams p;
  p.B = x[0];
  p.alpha = x[1];
  p.theta_pos = {x[2], x[3], x[4]};
  p.theta_neg = {x[5], x[6], x[7]};
  return p;
}

Vec vector_from(const ModelParams& p) {
  Vec x;
  x << p.B, p.alpha, p.theta_pos.c1, p.theta_pos.c2, p.theta_pos.c3, p.theta_neg.c1, p.theta_neg.c2,
      p.theta_neg.c3;
  return x;
}

// x = lo + (hi - lo)(1 + sin u)/2 keeps every simplex vertex inside the box.
Vec to_box(const Vec& u, const std::array<Bounds, kDim>& b) {
  Vec x;
  for (int i = 0; i < kDim; ++i) x[i] = b[i].lo + (b[i].hi - b[i].lo) * 0.5 * (1.0 + std::sin(u[i]));
  return x;
}

Vec from_box(const Vec& x, const std::array<Bounds, kDim>& b) {
  Vec u;
  for (int i = 0; i < kDim; ++i) {
    const double s = std::clamp(2.0 * (x[i] - b[i].lo) / (b[i].hi - b[i].lo) - 1.0, -0.999, 0.999);
    u[i] = std::asin(s);
  }
  return u;
}

/// Residual bookkeeping shared by the objective, metrics and c_V decision.
class Objective {
 public:
  Objective(const FitDataset& data, const FitConfig& cfg) : data_(data), cfg_(cfg) {
    for (const auto& pt : data.noise) {
      noise_max_[0] = std::max(noise_max_[0], pt.p_pos);
      noise_max_[1] = std::max(noise_max_[1], pt.p_neg);
      lambda_hi_ = std::max(lambda_hi_, pt.intensity_lux);
    }
    for (const auto& s : data.scurves) {
      scurve_max_ = std::max(scurve_max_, s.prob_observed);
      lambda_hi_ = std::max(lambda_hi_, s.baseline_lux * std::exp(std::max(0.0, s.log_contrast)));
    }
  }

  /// Largest intensity (lux) the data touches.
  double lux_hi() const { return lambda_hi_; }

  double operator()(const ModelParams& p, std::int64_t* fallbacks = nullptr) const {
    const double lam_hi = p.alpha * lambda_hi_;
    double penalty = 0.0;
    for (Polarity pol : {Polarity::Positive, Polarity::Negative}) {
      const double m = theta_min_on(p.theta(pol), lam_hi);
      if (m < 0) penalty += kPenalty * (1.0 - m);
    }
    if (penalty > 0) return penalty;
    try {
      const double nterm = noise_term(p, fallbacks);
      if (data_.scurves.empty()) return nterm;
      const double sterm = !cfg_.log_residuals && scurve_max_ > 0 ? scurve_rmse(p, fallbacks) / scurve_max_ : 0.0;
      return data_.noise_weight * nterm + data_.scurve_weight * sterm;
    } catch (const std::exception&) {
      return kPenalty;
    }
  }

  /// Mean over polarities of RMSE / peak. Each polarity counts on its own
  /// scale; a pooled RMSE lets whichever curve is larger drown the other.
  double noise_term(const ModelParams& p, std::int64_t* fallbacks = nullptr) const {
    std::array<double, 2> ss{0.0, 0.0};
    for (const auto& pt : data_.noise) {
      const IntensityPair pair = IntensityPair::static_scene(p.alpha * pt.intensity_lux);
      for (Polarity pol : {Polarity::Positive, Polarity::Negative}) {
        const int k = pol == Polarity::Positive ? 0 : 1;
        const double pred = prob_or_gaussian(p, pair, pol, cfg_.method, true, fallbacks);
        const double r = residual(pred, k == 0 ? pt.p_pos : pt.p_neg);
        ss[k] += r * r;
      }
    }
    if (data_.noise.empty()) return 0.0;
    double term = 0.0;
    for (int k = 0; k < 2; ++k) {
      const double rmse = std::sqrt(ss[k] / static_cast<double>(data_.noise.size()));
      term += 0.5 * (!cfg_.log_residuals && noise_max_[k] > 0 ? rmse / noise_max_[k] : rmse);
    }
    return term;
  }

  double scurve_rmse(const ModelParams& p, std::int64_t* fallbacks = nullptr) const {
    double ss = 0.0;
    for (const auto& s : data_.scurves) {
      const double lambda0 = p.alpha * s.baseline_lux;
      const IntensityPair pair{lambda0 * std::exp(s.log_contrast), lambda0};
      const Polarity pol = s.log_contrast >= 0 ? Polarity::Positive : Polarity::Negative;
      const double r = residual(prob_or_gaussian(p, pair, pol, cfg_.method, true, fallbacks), s.prob_observed);
      ss += r * r;
    }
    return data_.scurves.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(data_.scurves.size()));
  }

 private:
  double residual(double pred, double obs) const {
    if (!cfg_.log_residuals) return pred - obs;
    constexpr double tiny = 1e-300;
    return std::log10(std::max(pred, tiny)) - std::log10(std::max(obs, tiny));
  }

  const FitDataset& data_;
  const FitConfig& cfg_;
  std::array<double, 2> noise_max_{0.0, 0.0};
  double scurve_max_ = 0.0;
  double lambda_hi_ = 0.0;
};

struct SimplexOutcome {
  Vec x;
  double f = 0.0;
  bool converged = false;
  std::vector<double> trace;
};

// Nelder-Mead on the unconstrained sine coordinates.
SimplexOutcome nelder_mead(const std::function<double(const Vec&)>& f, const Vec& u0, double step,
                           int max_evals, double tol) {
  std::array<Vec, kDim + 1> v;
  std::array<double, kDim + 1> fv;
  v[0] = u0;
  for (int i = 0; i < kDim; ++i) {
    v[i + 1] = u0;
    v[i + 1][i] += step;
  }
  int evals = 0;
  for (int i = 0; i <= kDim; ++i) {
    fv[i] = f(v[i]);
    ++evals;
  }
  SimplexOutcome out;
  std::array<int, kDim + 1> order;
  for (;;) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    const int best = order.front();
    const int worst = order.back();
    const int second = order[kDim - 1];
    out.trace.push_back(fv[best]);

    double size = 0.0;
    for (int i = 0; i <= kDim; ++i) size = std::max(size, (v[i] - v[best]).cwiseAbs().maxCoeff());
    const double spread = fv[worst] - fv[best];
    if (spread <= tol * std::abs(fv[best]) && size < 1e-3) {
      out.converged = true;
      break;
    }
    if (evals >= max_evals) break;

    Vec centroid = Vec::Zero();
    for (int i = 0; i <= kDim; ++i) {
      if (i != worst) centroid += v[i];
    }
    centroid /= kDim;

    const Vec xr = centroid + (centroid - v[worst]);
    const double fr = f(xr);
    ++evals;
    if (fr < fv[best]) {
      const Vec xe = centroid + 2.0 * (centroid - v[worst]);
      const double fe = f(xe);
      ++evals;
      if (fe < fr) {
        v[worst] = xe;
        fv[worst] = fe;
      } else {
        v[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      v[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    const Vec xc = outside ? Vec(centroid + 0.5 * (xr - centroid)) : Vec(centroid + 0.5 * (v[worst] - centroid));
    const double fc = f(xc);
    ++evals;
    if (fc < (outside ? fr : fv[worst])) {
      v[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (int i = 0; i <= kDim; ++i) {
      if (i == best) continue;
      v[i] = v[best] + 0.5 * (v[i] - v[best]);
      fv[i] = f(v[i]);
      ++evals;
    }
  }
  const int best = static_cast<int>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  out.x = v[best];
  out.f = fv[best];
  return out;
}

ThetaCoefficients clamp_into(ThetaCoefficients c, const FitConfig& cfg) {
  c.c1 = std::clamp(c.c1, cfg.c1.lo, cfg.c1.hi);
  c.c2 = std::clamp(c.c2, cfg.c2.lo, cfg.c2.hi);
  c.c3 = std::clamp(c.c3, cfg.c3.lo, cfg.c3.hi);
  return c;
}

// Theta coefficients implied by (B, alpha) through per-point inversion.
// Points sitting on the floor carry no information about theta and are skipped.
ThetaCoefficients seed_theta(const EmpiricalCurve& noise, double B, double alpha, Polarity pol,
                             double floor, const FitConfig& cfg) {
  std::vector<std::pair<double, double>> samples;
  for (const auto& pt : noise) {
    const double raw = pol == Polarity::Positive ? pt.p_pos : pt.p_neg;
    if (raw < 2.0 * floor) continue;
    const double obs = raw - floor;
    if (!(obs > 0 && obs < 1)) continue;
    try {
      samples.emplace_back(alpha * pt.intensity_lux, invert_theta(B, alpha, pt.intensity_lux, obs, pol, cfg.method));
    } catch (const std::exception&) {
    }
  }
  if (samples.empty()) return clamp_into({}, cfg);
  if (samples.size() >= 3) {
    try {
      return clamp_into(fit_theta_form(samples).coeffs, cfg);
    } catch (const SingularFit&) {
    }
  }
  double mean = 0.0;
  for (const auto& s : samples) mean += s.second;
  return clamp_into({mean / static_cast<double>(samples.size()), 0.0, 0.0}, cfg);
}

}  // namespace

double invert_theta(double B, double alpha, double intensity_lux, double observed_p, Polarity pol,
                    Method method) {
  if (!(observed_p > 0 && observed_p < 1)) throw std::domain_error("observed probability must lie in (0, 1)");
  if (!(intensity_lux > 0)) throw std::domain_error("intensity must be positive");
  const double lambda = alpha * intensity_lux;
  auto P = [&](double theta) {
    return prob_or_gaussian(constant_theta_params(B, alpha, theta), IntensityPair::static_scene(lambda), pol,
                            method, false);
  };
  const double tol = 1e-3 * observed_p;
  const double p0 = P(0.0);
  if (std::abs(p0 - observed_p) < tol) return 0.0;
  if (observed_p > p0) {
    throw NoSolution("observed probability " + format_sci(observed_p) + " exceeds the theta = 0 value " +
                     format_sci(p0));
  }
  constexpr double theta_cap = 1e9;
  double lo = 0.0;
  double hi = 1.0;
  while (P(hi) > observed_p) {
    lo = hi;
    hi *= 2.0;
    if (hi > theta_cap) throw NoSolution("no theta in [0, 1e9] reaches " + format_sci(observed_p));
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double pm = P(mid);
    if (std::abs(pm - observed_p) < tol && hi - lo < 1e-9 * std::max(1.0, mid)) break;
    if (pm > observed_p) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= std::numeric_limits<double>::epsilon() * hi) break;
  }
  return mid;
}

ThetaFit fit_theta_form(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 3) throw SingularFit("theta form needs at least 3 samples");
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lam = samples[static_cast<std::size_t>(i)].first;
    if (!(lam >= 0)) throw std::domain_error("negative lambda in theta samples");
    A(i, 0) = 1.0;
    A(i, 1) = std::sqrt(lam);
    A(i, 2) = lam;
    y[i] = samples[static_cast<std::size_t>(i)].second;
  }
  // Column scaling keeps the rank test meaningful when lambda spans decades.
  const Eigen::Vector3d scale = A.colwise().norm().transpose().cwiseMax(1e-300);
  const Eigen::MatrixXd As = A * scale.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(As);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) throw SingularFit("theta design matrix is rank deficient");
  const Eigen::Vector3d c = qr.solve(y).cwiseQuotient(scale);
  ThetaFit fit;
  fit.coeffs = {c[0], c[1], c[2]};
  fit.residual_rms = std::sqrt((A * c - y).squaredNorm() / static_cast<double>(n));
  return fit;
}

FitMetrics fit_metrics(const Eigen::ArrayXd& observed, const Eigen::ArrayXd& predicted,
                       const Eigen::ArrayXd& uncertainties, int n_params) {
  if (observed.size() != predicted.size()) throw std::invalid_argument("observed and predicted lengths differ");
  if (uncertainties.size() != 0 && uncertainties.size() != observed.size()) {
    throw std::invalid_argument("uncertainty length differs from the data");
  }
  if (observed.size() == 0) throw std::invalid_argument("no points to score");
  const double peak = observed.maxCoeff();
  if (!(peak > 0)) throw std::domain_error("peak-relative RMSE undefined: max(observed) is 0");

  FitMetrics m;
  const Eigen::ArrayXd r = predicted - observed;
  const double ss_res = r.square().sum();
  m.rmse = std::sqrt(ss_res / static_cast<double>(r.size()));
  const double ss_tot = (observed - observed.mean()).square().sum();
  m.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : (ss_res == 0 ? 1.0 : -std::numeric_limits<double>::infinity());
  m.peak_rrmse = m.rmse / peak;

  double chi2 = 0.0;
  Eigen::Index used = 0;
  for (Eigen::Index i = 0; i < uncertainties.size(); ++i) {
    if (!(uncertainties[i] > 0)) continue;
    chi2 += (r[i] / uncertainties[i]) * (r[i] / uncertainties[i]);
    ++used;
  }
  const Eigen::Index nu = used - n_params;
  m.chi2_nu = nu > 0 ? chi2 / static_cast<double>(nu) : std::numeric_limits<double>::quiet_NaN();
  return m;
}

void FitConfig::check() const {
  for (const Bounds& b : {B, alpha, c1, c2, c3}) {
    if (!(b.lo < b.hi) || !std::isfinite(b.lo) || !std::isfinite(b.hi)) {
      throw std::invalid_argument("fit bounds need finite lo < hi");
    }
  }
  if (!(B.lo > 0 && B.hi <= 1)) throw std::invalid_argument("B bounds must lie in (0, 1]");
  if (!(alpha.lo > 0)) throw std::invalid_argument("alpha lower bound must be positive");
  if (c1.lo < 0 || c2.lo < 0) throw std::invalid_argument("c1 and c2 must stay non-negative");
  if (n_starts < 1 || max_evals < 10) throw std::invalid_argument("need at least one start and 10 evaluations");
}

FitConfig read_fit_config(const KeyValue& kv, FitConfig c) {
  auto bounds = [&](const std::string& name, Bounds& b) {
    b.lo = kv.number_or(name + "_lo", b.lo);
    b.hi = kv.number_or(name + "_hi", b.hi);
  };
  bounds("B", c.B);
  bounds("alpha", c.alpha);
  bounds("c1", c.c1);
  bounds("c2", c.c2);
  bounds("c3", c.c3);
  c.n_starts = static_cast<int>(kv.number_or("n_starts", c.n_starts));
  c.max_evals = static_cast<int>(kv.number_or("max_evals", c.max_evals));
  c.tolerance = kv.number_or("tolerance", c.tolerance);
  c.check();
  return c;
}

double curve_prediction(const ModelParams& params, double intensity_lux, Polarity pol, Method method) {
  return prob_or_gaussian(params, IntensityPair::static_scene(params.alpha * intensity_lux), pol, method, true);
}

ModelParams apply_cv(const EmpiricalCurve& data, ModelParams params, Method method) {
  for (Polarity pol : {Polarity::Positive, Polarity::Negative}) {
    double candidate = std::numeric_limits<double>::infinity();
    for (const auto& pt : data) candidate = std::min(candidate, pol == Polarity::Positive ? pt.p_pos : pt.p_neg);
    if (data.empty() || !(candidate > 0)) {
      params.cv(pol) = 0.0;
      continue;
    }
    auto rmse_with = [&](double cv) {
      ModelParams p = params;
      p.cv(pol) = cv;
      double ss = 0.0;
      for (const auto& pt : data) {
        const double r = curve_prediction(p, pt.intensity_lux, pol, method) -
                         (pol == Polarity::Positive ? pt.p_pos : pt.p_neg);
        ss += r * r;
      }
      return ss;
    };
    params.cv(pol) = rmse_with(candidate) < rmse_with(0.0) ? candidate : 0.0;
  }
  return params;
}

std::array<FitMetrics, 2> curve_metrics(const EmpiricalCurve& data, const ModelParams& params,
                                        Method method, bool spatial, int n_params) {
  std::array<FitMetrics, 2> out{};
  const auto n = static_cast<Eigen::Index>(data.size());
  for (Polarity pol : {Polarity::Positive, Polarity::Negative}) {
    Eigen::ArrayXd obs(n), pred(n), sd(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& pt = data[static_cast<std::size_t>(i)];
      const bool pos = pol == Polarity::Positive;
      obs[i] = pos ? pt.p_pos : pt.p_neg;
      sd[i] = spatial ? (pos ? pt.std_spatial_pos : pt.std_spatial_neg)
                      : (pos ? pt.std_temporal_pos : pt.std_temporal_neg);
      pred[i] = curve_prediction(params, pt.intensity_lux, pol, method);
    }
    out[pol == Polarity::Positive ? 0 : 1] = fit_metrics(obs, pred, sd, n_params);
  }
  return out;
}

FitResult fit_params(const FitDataset& data, const FitConfig& cfg) {
  cfg.check();
  if (data.noise.empty()) throw std::invalid_argument("fit needs at least one noise-curve point");
  for (const auto& pt : data.noise) {
    if (!(pt.intensity_lux > 0)) throw std::invalid_argument("noise-curve intensities must be positive");
  }
  const auto bounds = box(cfg);
  const Objective objective(data, cfg);

  // The floor candidate is held fixed during the search; apply_cv decides
  // afterwards whether it stays.
  std::array<double, 2> floor{0.0, 0.0};
  if (cfg.fit_floor) {
    for (Polarity pol : {Polarity::Positive, Polarity::Negative}) {
      double m = std::numeric_limits<double>::infinity();
      for (const auto& pt : data.noise) m = std::min(m, pol == Polarity::Positive ? pt.p_pos : pt.p_neg);
      floor[pol == Polarity::Positive ? 0 : 1] = m > 0 && m < 1 ? m : 0.0;
    }
  }
  auto with_floor = [&](ModelParams p) {
    p.cv_pos = floor[0];
    p.cv_neg = floor[1];
    return p;
  };

  double lux_lo = std::numeric_limits<double>::infinity();
  double lux_hi = 0.0;
  for (const auto& pt : data.noise) {
    lux_lo = std::min(lux_lo, pt.intensity_lux);
    lux_hi = std::max(lux_hi, pt.intensity_lux);
  }
  const bool under_determined = data.noise.size() < 5 || lux_hi / lux_lo < 100.0;

  // Coarse (B, alpha) scan seeded by theta inversion.
  std::vector<double> grid_B;
  for (double b : {0.05, 0.1, 0.15, 0.2, 0.3, 0.5}) {
    if (b >= cfg.B.lo && b <= cfg.B.hi) grid_B.push_back(b);
  }
  if (grid_B.empty()) grid_B.push_back(0.5 * (cfg.B.lo + cfg.B.hi));
  constexpr int n_alpha = 10;
  std::vector<double> grid_alpha;
  for (int i = 0; i < n_alpha; ++i) {
    grid_alpha.push_back(cfg.alpha.lo * std::pow(cfg.alpha.hi / cfg.alpha.lo, (i + 0.5) / n_alpha));
  }
  struct Candidate {
    ModelParams params;
    double f = 0.0;
  };
  std::vector<Candidate> grid(grid_B.size() * grid_alpha.size());
  parallel_for(grid.size(), [&](std::size_t k) {
    ModelParams p;
    p.B = grid_B[k / grid_alpha.size()];
    p.alpha = grid_alpha[k % grid_alpha.size()];
    p.theta_pos = seed_theta(data.noise, p.B, p.alpha, Polarity::Positive, floor[0], cfg);
    p.theta_neg = seed_theta(data.noise, p.B, p.alpha, Polarity::Negative, floor[1], cfg);
    grid[k] = {p, objective(with_floor(p))};
  });
  std::stable_sort(grid.begin(), grid.end(), [](const Candidate& a, const Candidate& b) { return a.f < b.f; });

  const std::size_t starts = std::min<std::size_t>(static_cast<std::size_t>(cfg.n_starts), grid.size());
  std::vector<SimplexOutcome> runs(starts);
  parallel_for(starts, [&](std::size_t s) {
    auto rng = pixel_rng(cfg.seed, s, Stream::Jitter);
    std::normal_distribution<double> jitter(0.0, 0.02);
    Vec u0 = from_box(vector_from(grid[s].params), bounds);
    for (int i = 0; i < kDim; ++i) u0[i] += jitter(rng);
    auto f = [&](const Vec& u) { return objective(with_floor(params_from(to_box(u, bounds)))); };
    SimplexOutcome best = nelder_mead(f, u0, 0.3, cfg.max_evals, cfg.tolerance);
    // Restarting from the optimum rebuilds a collapsed simplex.
    for (int restart = 0; restart < 2; ++restart) {
      SimplexOutcome again = nelder_mead(f, best.x, 0.05, cfg.max_evals, cfg.tolerance);
      const bool improved = again.f < best.f * (1.0 - 1e-9);
      again.trace.insert(again.trace.begin(), best.trace.begin(), best.trace.end());
      if (again.f <= best.f) best = std::move(again);
      if (!improved) break;
    }
    runs[s] = std::move(best);
  });

  std::size_t winner = 0;
  int converged = 0;
  for (std::size_t s = 0; s < runs.size(); ++s) {
    if (runs[s].converged) ++converged;
    if (runs[s].f < runs[winner].f) winner = s;
  }

  FitResult res;
  res.params = with_floor(params_from(to_box(runs[winner].x, bounds)));
  res.params.lambda_max = res.params.alpha * objective.lux_hi();
  res.trace = runs[winner].trace;
  res.converged_starts = converged;
  res.under_determined = under_determined;
  if (cfg.fit_floor) res.params = apply_cv(data.noise, res.params, cfg.method);
  res.objective = objective(res.params, &res.fallback_points);
  res.metrics = curve_metrics(data.noise, res.params, cfg.method, cfg.spatial_uncertainty);

  if (converged == 0 || !(res.objective < kPenalty)) {
    throw NonConvergence("no start of the simplex search converged", res);
  }
  return res;
}

void write_metrics_csv(const std::filesystem::path& path, const FitResult& r) {
  std::ofstream out(path);
  if (!out) throw FormatError(path.string() + ": cannot write");
  out << "polarity,rmse,chi2_nu,r2,peak_rrmse\n";
  const char* names[2] = {"positive", "negative"};
  for (int i = 0; i < 2; ++i) {
    out << names[i] << ',' << format_sci(r.metrics[i].rmse) << ',' << format_sci(r.metrics[i].chi2_nu) << ','
        << format_sci(r.metrics[i].r2) << ',' << format_sci(r.metrics[i].peak_rrmse) << '\n';
  }
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<double>& trace) {
  std::ofstream out(path);
  if (!out) throw FormatError(path.string() + ": cannot write");
  out << "iteration,objective\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out << i << ',' << format_sci(trace[i]) << '\n';
}

}  // namespace ecnoise
