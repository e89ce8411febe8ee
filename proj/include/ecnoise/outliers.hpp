// outliers.hpp -- run-length statistics and outlier-pixel tests.
//
// A run is a stretch of same-polarity events on consecutive timesteps; events
// sharing a timestep extend the current run, so a pixel reporting two events
// in one microstep already has a run of length 2 (physically impossible for
// a healthy pixel).
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ecnoise/ingest.hpp"

namespace ecnoise {

/// Per included pixel (row-major order) and polarity: run length m -> count.
struct RunStats {
  int width = 0;
  int height = 0;
  std::vector<Pixel> pixels;                                   // included pixels, row-major
  std::vector<std::array<std::map<std::int64_t, std::int64_t>, 2>> runs;

  static constexpr int index(Polarity pol) { return pol == Polarity::Positive ? 0 : 1; }
  const std::map<std::int64_t, std::int64_t>& at(std::size_t i, Polarity pol) const {
    return runs[i][index(pol)];
  }
  std::int64_t singles(std::size_t i, Polarity pol) const;
  std::int64_t max_run(std::size_t i) const;
  /// Sum of m * frequency: the pixel's event count for that polarity.
  std::int64_t events(std::size_t i, Polarity pol) const;
  /// m = 1 frequencies of one polarity across all pixels.
  Eigen::ArrayXd singles_array(Polarity pol) const;

  /// Stats for count arrays where every event is its own run (row-major,
  /// size width*height).
  static RunStats from_counts(int width, int height, const std::vector<std::int64_t>& pos,
                              const std::vector<std::int64_t>& neg);
};

RunStats run_length_stats(const Recording& rec);

enum class OutlierFlag { Type2, HotCounts, Deviance };
std::string to_string(OutlierFlag flag);

struct FlaggedPixel {
  Pixel pixel;
  OutlierFlag flag = OutlierFlag::Type2;
  Polarity polarity = Polarity::Positive;
  double value = 0.0;   // longest run, m = 1 count, or deviance residual
};

/// Pixels with any run of length >= 2.
std::vector<FlaggedPixel> detect_type2(const RunStats& stats);

/// m = 1 frequencies above mean + k_sigma * std (sample std) per polarity.
/// An array with std = 0 has no outliers.
std::vector<FlaggedPixel> detect_hot_counts(const RunStats& stats, double k_sigma = 20.0);

/// Signed square-root Poisson deviance of l against the array mean.
double deviance_residual(double l, double mean);
/// Residuals of every included pixel's m = 1 frequency. Throws
/// InsufficientData when the mean frequency is 0.
Eigen::ArrayXd deviance_residuals(const RunStats& stats, Polarity pol);

/// Inverse-normal threshold for an expected false-positive rate a_hat spread
/// over M two-sided tests.
double bonferroni_threshold(double a_hat, std::int64_t M);

struct OutlierConfig {
  double a_hat = 0.01;
  double k_sigma = 20.0;
};

struct OutlierReport {
  std::vector<FlaggedPixel> flags;              // row-major, then flag order
  std::vector<Pixel> pixels;                    // every pixel the tests covered
  std::array<std::optional<Eigen::ArrayXd>, 2> residuals;   // empty when not applicable
  double threshold = 0.0;
  std::vector<std::string> notes;

  std::set<Pixel> excluded() const;
};

OutlierReport detect_outliers(const RunStats& stats, const OutlierConfig& config = {});
OutlierReport detect_outliers(const Recording& rec, const OutlierConfig& config = {});

/// Header x,y,flag,polarity,value; one row per flag.
void write_outlier_report(const std::filesystem::path& path, const OutlierReport& report);

}  // namespace ecnoise
