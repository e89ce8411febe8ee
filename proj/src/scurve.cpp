#include "ecnoise/scurve.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "ecnoise/csv.hpp"
#include "ecnoise/keyvalue.hpp"
#include "ecnoise/parallel.hpp"
#include "ecnoise/synth.hpp"

namespace ecnoise {

std::vector<double> SCurveRequest::linear_grid(double lo, double hi, int n) {
  std::vector<double> g;
  if (n <= 0) return g;
  if (n == 1) return {lo};
  g.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g.push_back(lo + (hi - lo) * i / (n - 1));
  return g;
}

SCurveFamily scurve_family(const ModelParams& params, const SCurveRequest& req) {
  validate(params);
  if (req.n_pixels < 1) throw std::invalid_argument("ensemble needs at least one pixel");
  if (!(req.sigma_B >= 0)) throw std::invalid_argument("sigma_B must be >= 0");
  for (double c : req.contrast_grid) {
    if (!std::isfinite(c)) throw std::invalid_argument("contrast values must be finite");
  }
  for (double b : req.baseline_lux) {
    if (!(b >= 0)) throw std::invalid_argument("baselines must be >= 0 lux");
  }

  const PixelEnsemble ens = sample_ensemble(req.n_pixels, 1, params.B, req.sigma_B, 0.0, req.seed);
  const auto nb = static_cast<Eigen::Index>(req.baseline_lux.size());
  const auto nc = static_cast<Eigen::Index>(req.contrast_grid.size());

  SCurveFamily fam;
  fam.baseline_lux = req.baseline_lux;
  fam.contrast_grid = req.contrast_grid;
  fam.mean = Eigen::ArrayXXd::Zero(nb, nc);
  fam.stddev = Eigen::ArrayXXd::Zero(nb, nc);

  parallel_for(static_cast<std::size_t>(nb * nc), [&](std::size_t k) {
    const Eigen::Index i = static_cast<Eigen::Index>(k) / nc;
    const Eigen::Index j = static_cast<Eigen::Index>(k) % nc;
    const double c = req.contrast_grid[j];
    const double lambda0 = params.alpha * req.baseline_lux[i];
    const IntensityPair pair{lambda0 * std::exp(c), lambda0};
    const Polarity pol = c >= 0 ? Polarity::Positive : Polarity::Negative;

    Eigen::ArrayXd p(ens.size());
    try {
      for (Eigen::Index m = 0; m < ens.size(); ++m) {
        ModelParams pm = params;
        pm.B = ens.B[m];
        p[m] = event_prob(pm, pair, pol, req.method, req.apply_floor).value;
      }
    } catch (const SaddleDegenerate&) {
      fam.mean(i, j) = std::numeric_limits<double>::quiet_NaN();
      fam.stddev(i, j) = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    const double mu = p.mean();
    fam.mean(i, j) = std::clamp(mu, 0.0, 1.0);
    // identical members would otherwise leave a rounding residue in the std
    const bool spread = p.size() > 1 && p.maxCoeff() > p.minCoeff();
    fam.stddev(i, j) = spread ? std::sqrt((p - mu).square().sum() / (p.size() - 1)) : 0.0;
  });
  return fam;
}

void write_scurve_csv(const std::filesystem::path& path, const SCurveFamily& fam,
                      const Eigen::ArrayXXd* observed) {
  std::ofstream out(path);
  if (!out) throw FormatError(path.string() + ": cannot write");
  out << "baseline_lux,log_contrast,prob_mean,prob_std" << (observed ? ",prob_observed" : "") << '\n';
  for (Eigen::Index i = 0; i < fam.mean.rows(); ++i) {
    for (Eigen::Index j = 0; j < fam.mean.cols(); ++j) {
      out << format_double(fam.baseline_lux[i]) << ',' << format_double(fam.contrast_grid[j]) << ',';
      if (fam.missing(i, j)) {
        out << ',';
        if (observed) out << ',';
      } else {
        out << format_sci(fam.mean(i, j)) << ',' << format_sci(fam.stddev(i, j));
        if (observed) out << ',' << format_sci((*observed)(i, j));
      }
      out << '\n';
    }
  }
}

std::vector<SCurvePoint> read_scurve_observed(const std::filesystem::path& path) {
  CsvReader csv(path);
  csv.expect_header({"baseline_lux,log_contrast,prob_mean,prob_std,prob_observed"});
  std::vector<SCurvePoint> pts;
  std::vector<std::string> f;
  while (csv.next(f)) {
    if (f.size() != 5) csv.fail("expected 5 fields");
    if (f[4].empty()) continue;
    SCurvePoint p{csv.to_double(f[0]), csv.to_double(f[1]), csv.to_double(f[4])};
    if (p.baseline_lux < 0) csv.fail("negative baseline");
    if (p.prob_observed < 0 || p.prob_observed > 1) csv.fail("probability outside [0,1]");
    pts.push_back(p);
  }
  return pts;
}

double bias_to_B(int k) { return 8.21e-4 * k + 0.15; }

double refractory_time(int b_r) {
  if (b_r <= -22.97) {
    throw std::domain_error("bias_refr " + std::to_string(b_r) + " at or below the pole -22.97");
  }
  return 1530.72 / (b_r + 22.97) + 12.45;
}

}  // namespace ecnoise
