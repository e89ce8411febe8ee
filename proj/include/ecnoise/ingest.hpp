// ingest.hpp -- event recordings and empirical noise probabilities.
//
// Timestamps are integer microseconds and one timestep is 1 us, so every
// probability here is "per pixel per microsecond".
#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecnoise/keyvalue.hpp"
#include "ecnoise/model.hpp"

namespace ecnoise {

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// T*M <= R*N_tot: dead time swallows the whole recording.
class DegenerateRecording : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Pixel {
  int x = 0;
  int y = 0;
  auto operator<=>(const Pixel&) const = default;
};

struct EventRecord {
  int x = 0;
  int y = 0;
  std::int64_t t = 0;
  int p = 1;  // +1 or -1

  Polarity polarity() const { return p > 0 ? Polarity::Positive : Polarity::Negative; }
  bool operator==(const EventRecord&) const = default;
};

struct Recording {
  std::vector<EventRecord> events;   // sorted by t
  std::int64_t duration_us = 0;
  int width = 0;
  int height = 0;
  double refractory_us = 0.0;
  double intensity_lux = 0.0;
  std::set<Pixel> excluded;

  std::int64_t pixel_count() const { return static_cast<std::int64_t>(width) * height; }
  /// M: pixels not excluded.
  std::int64_t included_count() const {
    return pixel_count() - static_cast<std::int64_t>(excluded.size());
  }
  bool is_excluded(int x, int y) const { return excluded.count({x, y}) != 0; }

  /// Drops events at excluded pixels; call after changing `excluded`.
  void apply_exclusions();
  /// Throws FormatError on out-of-ROI or out-of-time events and unsorted input.
  void check() const;
};

/// Strict "x,y,t,p" reader. Malformed rows abort with their line number.
std::vector<EventRecord> read_events_csv(const std::filesystem::path& path);
void write_events_csv(const std::filesystem::path& path, const std::vector<EventRecord>& events);

std::set<Pixel> read_exclusions(const std::filesystem::path& path);
void write_exclusions(const std::filesystem::path& path, const std::set<Pixel>& pixels);

/// Metadata keys: duration_us, width, height, refractory_us, intensity_lux and
/// the optional "excluded" path (relative paths resolve next to the sidecar).
Recording load_recording(const std::filesystem::path& events_csv,
                         const std::filesystem::path& metadata,
                         const std::optional<std::filesystem::path>& exclusions = std::nullopt);
KeyValue recording_metadata(const Recording& rec);

/// N / (T M - R N_tot).
double estimate_probability(std::int64_t n_pol, std::int64_t n_tot, double duration_us,
                            double pixels, double refractory_us);
double estimate_probability(const Recording& rec, Polarity pol);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Splits [0, T) into floor(T / bin_us) bins (remainder dropped) and estimates
/// the probability in each one; the dead-time correction uses the bin's own
/// event total. Returns the mean and sample standard deviation over bins.
MeanStd temporal_variance(const Recording& rec, std::int64_t bin_us, Polarity pol);

/// Mean and sample standard deviation of per-pixel estimates (M = 1 each).
MeanStd spatial_variance(const Recording& rec, Polarity pol);

struct BinSweepRow {
  std::int64_t bin_us = 0;
  double mean = 0.0;
  double std = 0.0;
  double relative_std = 0.0;  // std / mean, 0 when the mean is 0
};

std::vector<BinSweepRow> bin_size_sweep(const Recording& rec, Polarity pol,
                                        const std::vector<std::int64_t>& bins);
void write_bin_sweep_csv(const std::filesystem::path& path, const std::vector<BinSweepRow>& rows);

struct CurvePoint {
  double intensity_lux = 0.0;
  double p_pos = 0.0;
  double p_neg = 0.0;
  double std_temporal_pos = 0.0;
  double std_temporal_neg = 0.0;
  double std_spatial_pos = 0.0;
  double std_spatial_neg = 0.0;
};

using EmpiricalCurve = std::vector<CurvePoint>;

/// Noise-curve point for one recording (temporal stats at bin_us).
CurvePoint summarize_recording(const Recording& rec, std::int64_t bin_us = 100);

/// Columns intensity_lux,p_pos,p_neg,std_pos,std_neg with the optional
/// std_spatial_pos,std_spatial_neg pair appended.
EmpiricalCurve read_curve_csv(const std::filesystem::path& path);
void write_curve_csv(const std::filesystem::path& path, const EmpiricalCurve& curve);

}  // namespace ecnoise
