#include "ecnoise/outliers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <boost/math/distributions/normal.hpp>

namespace ecnoise {

std::int64_t RunStats::singles(std::size_t i, Polarity pol) const {
  const auto& m = at(i, pol);
  const auto it = m.find(1);
  return it == m.end() ? 0 : it->second;
}

std::int64_t RunStats::max_run(std::size_t i) const {
  std::int64_t best = 0;
  for (const auto& m : runs[i]) {
    if (!m.empty()) best = std::max(best, m.rbegin()->first);
  }
  return best;
}

std::int64_t RunStats::events(std::size_t i, Polarity pol) const {
  std::int64_t n = 0;
  for (const auto& [len, freq] : at(i, pol)) n += len * freq;
  return n;
}

Eigen::ArrayXd RunStats::singles_array(Polarity pol) const {
  Eigen::ArrayXd out(static_cast<Eigen::Index>(pixels.size()));
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = static_cast<double>(singles(i, pol));
  }
  return out;
}

RunStats RunStats::from_counts(int width, int height, const std::vector<std::int64_t>& pos,
                               const std::vector<std::int64_t>& neg) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (pos.size() != n || neg.size() != n) throw std::invalid_argument("count arrays do not match the ROI");
  RunStats s;
  s.width = width;
  s.height = height;
  s.pixels.reserve(n);
  s.runs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.pixels.push_back({static_cast<int>(i % width), static_cast<int>(i / width)});
    if (pos[i] < 0 || neg[i] < 0) throw std::invalid_argument("negative count");
    if (pos[i] > 0) s.runs[i][0][1] = pos[i];
    if (neg[i] > 0) s.runs[i][1][1] = neg[i];
  }
  return s;
}

RunStats run_length_stats(const Recording& rec) {
  RunStats s;
  s.width = rec.width;
  s.height = rec.height;
  const std::size_t total = static_cast<std::size_t>(rec.pixel_count());
  std::vector<std::int64_t> slot(total, -1);
  for (int y = 0; y < rec.height; ++y) {
    for (int x = 0; x < rec.width; ++x) {
      if (rec.is_excluded(x, y)) continue;
      slot[static_cast<std::size_t>(y) * rec.width + x] = static_cast<std::int64_t>(s.pixels.size());
      s.pixels.push_back({x, y});
    }
  }
  s.runs.resize(s.pixels.size());

  struct Open {
    std::int64_t last_t = 0;
    int pol = 0;        // 0 when no run is open
    std::int64_t length = 0;
  };
  std::vector<Open> open(s.pixels.size());
  auto close = [&](std::size_t k) {
    if (open[k].pol != 0) {
      ++s.runs[k][open[k].pol > 0 ? 0 : 1][open[k].length];
    }
    open[k] = {};
  };

  for (const auto& e : rec.events) {
    const std::int64_t k = slot[static_cast<std::size_t>(e.y) * rec.width + e.x];
    if (k < 0) continue;
    auto& o = open[static_cast<std::size_t>(k)];
    if (o.pol == e.p && e.t - o.last_t <= 1) {
      ++o.length;
      o.last_t = e.t;
      continue;
    }
    close(static_cast<std::size_t>(k));
    o = {e.t, e.p, 1};
  }
  for (std::size_t k = 0; k < open.size(); ++k) close(k);
  return s;
}

std::string to_string(OutlierFlag flag) {
  switch (flag) {
    case OutlierFlag::Type2: return "type2";
    case OutlierFlag::HotCounts: return "hot";
    case OutlierFlag::Deviance: return "deviance";
  }
  return "?";
}

std::vector<FlaggedPixel> detect_type2(const RunStats& stats) {
  std::vector<FlaggedPixel> out;
  for (std::size_t i = 0; i < stats.pixels.size(); ++i) {
    for (Polarity pol : {Polarity::Positive, Polarity::Negative}) {
      const auto& m = stats.at(i, pol);
      if (!m.empty() && m.rbegin()->first >= 2) {
        out.push_back({stats.pixels[i], OutlierFlag::Type2, pol, static_cast<double>(m.rbegin()->first)});
      }
    }
  }
  return out;
}

std::vector<FlaggedPixel> detect_hot_counts(const RunStats& stats, double k_sigma) {
  if (stats.pixels.size() < 2) throw InsufficientData("hot-count test needs at least 2 pixels");
  std::vector<FlaggedPixel> out;
  for (Polarity pol : {Polarity::Positive, Polarity::Negative}) {
    const Eigen::ArrayXd l = stats.singles_array(pol);
    const double mean = l.mean();
    const double sd = std::sqrt((l - mean).square().sum() / static_cast<double>(l.size() - 1));
    if (sd == 0.0) continue;
    const double limit = mean + k_sigma * sd;
    for (Eigen::Index i = 0; i < l.size(); ++i) {
      if (l[i] > limit) out.push_back({stats.pixels[static_cast<std::size_t>(i)], OutlierFlag::HotCounts, pol, l[i]});
    }
  }
  return out;
}

double deviance_residual(double l, double mean) {
  if (!(mean > 0)) throw InsufficientData("deviance residual needs a positive mean frequency");
  const double term = l > 0 ? l * std::log(l / mean) : 0.0;
  const double dev = std::max(0.0, 2.0 * (term - (l - mean)));
  const double r = std::sqrt(dev);
  return l < mean ? -r : r;
}

Eigen::ArrayXd deviance_residuals(const RunStats& stats, Polarity pol) {
  const Eigen::ArrayXd l = stats.singles_array(pol);
  const double mean = l.size() ? l.mean() : 0.0;
  if (!(mean > 0)) {
    throw InsufficientData("deviance test not applicable: no " + to_string(pol) + " noise events");
  }
  return l.unaryExpr([mean](double v) { return deviance_residual(v, mean); });
}

double bonferroni_threshold(double a_hat, std::int64_t M) {
  if (!(a_hat > 0 && a_hat < 1)) throw std::domain_error("a_hat must lie in (0, 1)");
  if (M < 1) throw std::domain_error("pixel count must be at least 1");
  const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(boost::math::complement(standard, a_hat / (2.0 * static_cast<double>(M))));
}

std::set<Pixel> OutlierReport::excluded() const {
  std::set<Pixel> out;
  for (const auto& f : flags) out.insert(f.pixel);
  return out;
}

OutlierReport detect_outliers(const RunStats& stats, const OutlierConfig& config) {
  OutlierReport rep;
  rep.pixels = stats.pixels;
  if (stats.pixels.empty()) {
    rep.notes.push_back("no pixels to test");
    return rep;
  }
  rep.flags = detect_type2(stats);
  if (stats.pixels.size() >= 2) {
    auto hot = detect_hot_counts(stats, config.k_sigma);
    rep.flags.insert(rep.flags.end(), hot.begin(), hot.end());
  } else {
    rep.notes.push_back("hot-count test skipped: fewer than 2 pixels");
  }
  rep.threshold = bonferroni_threshold(config.a_hat, static_cast<std::int64_t>(stats.pixels.size()));
  for (Polarity pol : {Polarity::Positive, Polarity::Negative}) {
    try {
      Eigen::ArrayXd r = deviance_residuals(stats, pol);
      for (Eigen::Index i = 0; i < r.size(); ++i) {
        if (std::abs(r[i]) > rep.threshold) {
          rep.flags.push_back({stats.pixels[static_cast<std::size_t>(i)], OutlierFlag::Deviance, pol, r[i]});
        }
      }
      rep.residuals[RunStats::index(pol)] = std::move(r);
    } catch (const InsufficientData& e) {
      rep.notes.push_back(e.what());
    }
  }
  std::stable_sort(rep.flags.begin(), rep.flags.end(), [](const FlaggedPixel& a, const FlaggedPixel& b) {
    if (a.pixel.y != b.pixel.y) return a.pixel.y < b.pixel.y;
    if (a.pixel.x != b.pixel.x) return a.pixel.x < b.pixel.x;
    return a.flag < b.flag;
  });
  return rep;
}

OutlierReport detect_outliers(const Recording& rec, const OutlierConfig& config) {
  return detect_outliers(run_length_stats(rec), config);
}

void write_outlier_report(const std::filesystem::path& path, const OutlierReport& report) {
  std::ofstream out(path);
  if (!out) throw FormatError(path.string() + ": cannot write");
  out << "x,y,flag,polarity,value\n";
  char buf[64];
  for (const auto& f : report.flags) {
    std::snprintf(buf, sizeof buf, "%.10g", f.value);
    out << f.pixel.x << ',' << f.pixel.y << ',' << to_string(f.flag) << ','
        << (f.polarity == Polarity::Positive ? 1 : -1) << ',' << buf << '\n';
  }
}

}  // namespace ecnoise
