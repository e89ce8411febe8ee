// synth.hpp -- synthetic noise-event images and event streams.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ecnoise/ingest.hpp"
#include "ecnoise/model.hpp"

namespace ecnoise {

/// Greyscale (0-255) to scene illuminance in lux, as a 256-entry table.
/// The default is the power law 2.15e-5 g^2.521 + 0.15 measured for a monitor
/// at full brightness; other screens can load their own table.
class GreyscaleMapping {
 public:
  static GreyscaleMapping power_law(double scale = 2.15e-5, double exponent = 2.521,
                                    double offset = 0.15);
  /// One "g,lux" row per grey level, all 256 present, lux strictly increasing.
  static GreyscaleMapping from_file(const std::filesystem::path& path);

  double operator()(int g) const;
  const std::array<double, 256>& table() const { return lux_; }

 private:
  std::array<double, 256> lux_{};
};

double greyscale_to_intensity(int g);

/// Per-pixel threshold B_i and leakage multiplier X_i, row-major.
struct PixelEnsemble {
  int width = 0;
  int height = 0;
  double mu_B = 0.0;
  double sigma_B = 0.0;
  double sigma_X = 0.0;
  std::uint64_t seed = 0;
  Eigen::ArrayXd B;
  Eigen::ArrayXd X;

  Eigen::Index size() const { return B.size(); }
  /// params with B_i and theta scaled by X_i.
  ModelParams pixel_params(const ModelParams& base, Eigen::Index i) const;
};

PixelEnsemble sample_ensemble(int width, int height, double mu_B, double sigma_B, double sigma_X,
                              std::uint64_t seed);

/// Heterogeneity knobs; defaults are the values tuned for the Gaussian and
/// saddle models. The Poisson model wants slightly smaller spreads.
struct EnsembleKnobs {
  double sigma_B = 0.0065;
  double sigma_X = 0.001;

  static EnsembleKnobs for_method(Method method);
};

/// Per-timestep probabilities corrected for refractory blindness.
std::pair<double, double> effective_probability(double p_pos, double p_neg, double refractory_us);

/// 8-bit greyscale image, row-major.
struct GreyImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  int at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  /// Centred crop; throws if the requested size exceeds the image.
  GreyImage center_crop(int w, int h) const;
};

GreyImage read_pgm(const std::filesystem::path& path);
void write_pgm8(const std::filesystem::path& path, const GreyImage& image);

using CountArray = Eigen::Array<std::uint32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct NoiseImage {
  int width = 0;
  int height = 0;
  CountArray counts_pos;   // height x width
  CountArray counts_neg;
  std::int64_t integration_us = 0;
  std::uint64_t seed = 0;
  ModelParams params;
  Method method = Method::Saddle;
  std::int64_t fallback_pixels = 0;  // saddle-degenerate pixels evaluated with the Gaussian
};

struct SynthOptions {
  EnsembleKnobs knobs{};
  Method method = Method::Saddle;
  bool allow_poisson = false;
  int roi_width = 0;    // 0 keeps the full image
  int roi_height = 0;
  GreyscaleMapping mapping = GreyscaleMapping::power_law();
};

NoiseImage synth_noise_image(const GreyImage& image, const ModelParams& params,
                             std::int64_t integration_us, std::uint64_t seed,
                             const SynthOptions& options = {});

/// Writes a 16-bit PGM, clamping at 65535. Returns the number of clamped pixels.
std::int64_t write_pgm16(const std::filesystem::path& path, const CountArray& counts);
void write_counts_csv(const std::filesystem::path& path, const NoiseImage& image);

struct SyntheticRecording {
  Recording recording;
  Eigen::ArrayXd p_pos;   // per-pixel generating probabilities (floor included)
  Eigen::ArrayXd p_neg;

  double mean_p(Polarity pol) const {
    return (pol == Polarity::Positive ? p_pos : p_neg).mean();
  }
};

struct RecordingOptions {
  int width = 64;
  int height = 64;
  EnsembleKnobs knobs{};
  Method method = Method::Saddle;
};

/// Event-stream realisation of a static scene. Each pixel fires at most one
/// event per 1 us timestep and stays blind for round(R) timesteps afterwards.
SyntheticRecording synth_recording(double intensity_lux, const ModelParams& params,
                                   std::int64_t duration_us, std::uint64_t seed,
                                   const RecordingOptions& options = {});

/// Same walk driven by explicit per-pixel probabilities (size width*height).
Recording synth_recording_from_probabilities(const Eigen::ArrayXd& p_pos, const Eigen::ArrayXd& p_neg,
                                             int width, int height, double refractory_us,
                                             std::int64_t duration_us, std::uint64_t seed);

}  // namespace ecnoise
