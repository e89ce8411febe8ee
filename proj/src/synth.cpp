#include "ecnoise/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "ecnoise/csv.hpp"
#include "ecnoise/parallel.hpp"
#include "ecnoise/random.hpp"

namespace ecnoise {

GreyscaleMapping GreyscaleMapping::power_law(double scale, double exponent, double offset) {
  GreyscaleMapping m;
  for (int g = 0; g < 256; ++g) m.lux_[g] = scale * std::pow(static_cast<double>(g), exponent) + offset;
  return m;
}

GreyscaleMapping GreyscaleMapping::from_file(const std::filesystem::path& path) {
  CsvReader csv(path);
  csv.expect_header({"g,lux"});
  GreyscaleMapping m;
  std::array<bool, 256> seen{};
  std::vector<std::string> f;
  while (csv.next(f)) {
    if (f.size() != 2) csv.fail("expected g,lux");
    const auto g = csv.to_int(f[0]);
    if (g < 0 || g > 255) csv.fail("grey level outside 0-255");
    if (seen[g]) csv.fail("duplicate grey level");
    seen[g] = true;
    m.lux_[g] = csv.to_double(f[1]);
  }
  for (int g = 0; g < 256; ++g) {
    if (!seen[g]) throw FormatError(path.string() + ": grey level " + std::to_string(g) + " missing");
    if (m.lux_[g] < 0 || (g > 0 && !(m.lux_[g] > m.lux_[g - 1]))) {
      throw FormatError(path.string() + ": lux must be non-negative and strictly increasing");
    }
  }
  return m;
}

double GreyscaleMapping::operator()(int g) const {
  if (g < 0 || g > 255) throw std::domain_error("grey level " + std::to_string(g) + " outside 0-255");
  return lux_[g];
}

double greyscale_to_intensity(int g) {
  static const GreyscaleMapping mapping = GreyscaleMapping::power_law();
  return mapping(g);
}

ModelParams PixelEnsemble::pixel_params(const ModelParams& base, Eigen::Index i) const {
  ModelParams p = base;
  p.B = B[i];
  p.theta_pos = base.theta_pos.scaled(X[i]);
  p.theta_neg = base.theta_neg.scaled(X[i]);
  return p;
}

PixelEnsemble sample_ensemble(int width, int height, double mu_B, double sigma_B, double sigma_X,
                              std::uint64_t seed) {
  if (width < 0 || height < 0) throw std::invalid_argument("negative ensemble size");
  if (sigma_B < 0 || sigma_X < 0) throw std::invalid_argument("ensemble spreads must be >= 0");
  PixelEnsemble e;
  e.width = width;
  e.height = height;
  e.mu_B = mu_B;
  e.sigma_B = sigma_B;
  e.sigma_X = sigma_X;
  e.seed = seed;
  const Eigen::Index n = static_cast<Eigen::Index>(width) * height;
  e.B.resize(n);
  e.X.resize(n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    auto rb = pixel_rng(seed, i, Stream::Threshold);
    e.B[i] = truncated_normal(rb, mu_B, sigma_B);
    if (sigma_X == 0.0) {
      e.X[i] = 1.0;
    } else {
      auto rx = pixel_rng(seed, i, Stream::Leakage);
      e.X[i] = std::normal_distribution<double>(1.0, sigma_X)(rx);
    }
  });
  return e;
}

EnsembleKnobs EnsembleKnobs::for_method(Method method) {
  if (method == Method::Poisson) return {0.006, 0.0005};
  return {};
}

std::pair<double, double> effective_probability(double p_pos, double p_neg, double refractory_us) {
  if (!(p_pos >= 0 && p_neg >= 0 && p_pos + p_neg < 1.0)) {
    throw std::domain_error("need p_pos, p_neg >= 0 and p_pos + p_neg < 1");
  }
  if (!(refractory_us >= 0)) throw std::domain_error("refractory time must be >= 0");
  const double d = 1.0 + (p_pos + p_neg) * refractory_us;
  return {p_pos / d, p_neg / d};
}

GreyImage GreyImage::center_crop(int w, int h) const {
  if (w > width || h > height) {
    throw std::invalid_argument("image " + std::to_string(width) + "x" + std::to_string(height) +
                                " is smaller than the " + std::to_string(w) + "x" +
                                std::to_string(h) + " ROI");
  }
  GreyImage out;
  out.width = w;
  out.height = h;
  out.pixels.resize(static_cast<std::size_t>(w) * h);
  const int x0 = (width - w) / 2;
  const int y0 = (height - h) / 2;
  for (int y = 0; y < h; ++y) {
    std::copy_n(pixels.begin() + static_cast<std::ptrdiff_t>((y0 + y)) * width + x0, w,
                out.pixels.begin() + static_cast<std::ptrdiff_t>(y) * w);
  }
  return out;
}

namespace {

// Next header token of a PGM, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

// Gaussian value with the pixel's floor when the saddle point degenerates.
double pixel_probability(const ModelParams& p, double lambda, Polarity pol, Method method,
                         std::atomic<std::int64_t>& fallbacks) {
  const IntensityPair pair = IntensityPair::static_scene(lambda);
  try {
    return event_prob(p, pair, pol, method, true).value;
  } catch (const SaddleDegenerate&) {
  } catch (const NoSaddle&) {
  }
  ++fallbacks;
  return event_prob(p, pair, pol, Method::Gaussian, true).value;
}

}  // namespace

GreyImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open");
  const std::string magic = pgm_token(in);
  if (magic != "P5" && magic != "P2") throw FormatError(path.string() + ": not a PGM file");
  GreyImage img;
  int maxval = 0;
  try {
    img.width = std::stoi(pgm_token(in));
    img.height = std::stoi(pgm_token(in));
    maxval = std::stoi(pgm_token(in));
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": malformed PGM header");
  }
  if (img.width <= 0 || img.height <= 0) throw FormatError(path.string() + ": bad PGM size");
  if (maxval <= 0 || maxval > 255) throw FormatError(path.string() + ": only 8-bit PGM input is supported");
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  img.pixels.resize(n);
  if (magic == "P5") {
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) throw FormatError(path.string() + ": truncated PGM");
  } else {
    for (auto& px : img.pixels) {
      int v = -1;
      if (!(in >> v) || v < 0 || v > maxval) throw FormatError(path.string() + ": bad PGM sample");
      px = static_cast<std::uint8_t>(v);
    }
  }
  if (maxval != 255) {
    for (auto& px : img.pixels) px = static_cast<std::uint8_t>(std::lround(px * 255.0 / maxval));
  }
  return img;
}

void write_pgm8(const std::filesystem::path& path, const GreyImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path.string() + ": cannot write");
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
}

std::int64_t write_pgm16(const std::filesystem::path& path, const CountArray& counts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path.string() + ": cannot write");
  out << "P5\n" << counts.cols() << ' ' << counts.rows() << "\n65535\n";
  std::int64_t clamped = 0;
  std::vector<unsigned char> row(static_cast<std::size_t>(counts.cols()) * 2);
  for (Eigen::Index y = 0; y < counts.rows(); ++y) {
    for (Eigen::Index x = 0; x < counts.cols(); ++x) {
      std::uint32_t v = counts(y, x);
      if (v > 65535u) {
        v = 65535u;
        ++clamped;
      }
      row[2 * x] = static_cast<unsigned char>(v >> 8);
      row[2 * x + 1] = static_cast<unsigned char>(v & 0xff);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  return clamped;
}

void write_counts_csv(const std::filesystem::path& path, const NoiseImage& image) {
  std::ofstream out(path);
  if (!out) throw FormatError(path.string() + ": cannot write");
  out << "x,y,count_pos,count_neg\n";
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      out << x << ',' << y << ',' << image.counts_pos(y, x) << ',' << image.counts_neg(y, x) << '\n';
    }
  }
}

NoiseImage synth_noise_image(const GreyImage& input, const ModelParams& params,
                             std::int64_t integration_us, std::uint64_t seed,
                             const SynthOptions& options) {
  if (integration_us < 0) throw std::invalid_argument("integration time must be >= 0");
  if (integration_us > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("integration time exceeds the 32-bit count range");
  }
  if (options.method == Method::Poisson && !options.allow_poisson) {
    throw std::invalid_argument("Poisson synthesis is slow; enable it explicitly");
  }
  const GreyImage image = (options.roi_width > 0 && options.roi_height > 0)
                              ? input.center_crop(options.roi_width, options.roi_height)
                              : input;

  NoiseImage out;
  out.width = image.width;
  out.height = image.height;
  out.integration_us = integration_us;
  out.seed = seed;
  out.params = params;
  out.method = options.method;
  out.counts_pos = CountArray::Zero(image.height, image.width);
  out.counts_neg = CountArray::Zero(image.height, image.width);

  const PixelEnsemble ens = sample_ensemble(image.width, image.height, params.B,
                                            options.knobs.sigma_B, options.knobs.sigma_X, seed);
  std::atomic<std::int64_t> fallbacks{0};
  parallel_for(static_cast<std::size_t>(ens.size()), [&](std::size_t i) {
    const int x = static_cast<int>(i % image.width);
    const int y = static_cast<int>(i / image.width);
    const double lambda = params.alpha * options.mapping(image.at(x, y));
    const ModelParams p = ens.pixel_params(params, static_cast<Eigen::Index>(i));
    const double pp = pixel_probability(p, lambda, Polarity::Positive, options.method, fallbacks);
    const double pn = pixel_probability(p, lambda, Polarity::Negative, options.method, fallbacks);
    const auto [ep, en] = effective_probability(pp, pn, params.refractory_us);
    if (integration_us == 0) return;
    auto rng = pixel_rng(seed, i, Stream::Counts);
    out.counts_pos(y, x) =
        static_cast<std::uint32_t>(std::binomial_distribution<std::int64_t>(integration_us, ep)(rng));
    out.counts_neg(y, x) =
        static_cast<std::uint32_t>(std::binomial_distribution<std::int64_t>(integration_us, en)(rng));
  });
  out.fallback_pixels = fallbacks;
  if (out.fallback_pixels > 0) {
    std::clog << "synth: " << out.fallback_pixels
              << " pixel evaluations fell back to the Gaussian model (degenerate saddle point)\n";
  }
  return out;
}

Recording synth_recording_from_probabilities(const Eigen::ArrayXd& p_pos, const Eigen::ArrayXd& p_neg,
                                             int width, int height, double refractory_us,
                                             std::int64_t duration_us, std::uint64_t seed) {
  if (duration_us < 1) throw std::invalid_argument("duration must be at least 1 us");
  const Eigen::Index n = static_cast<Eigen::Index>(width) * height;
  if (p_pos.size() != n || p_neg.size() != n) throw std::invalid_argument("probability arrays do not match the ROI");
  if (((p_pos < 0) || (p_neg < 0) || (p_pos + p_neg >= 1.0)).any()) {
    throw std::domain_error("per-timestep probabilities need p+ >= 0, p- >= 0 and p+ + p- < 1");
  }
  const std::int64_t blind = std::llround(refractory_us);

  std::vector<std::vector<EventRecord>> per_pixel(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    const double pp = p_pos[static_cast<Eigen::Index>(i)];
    const double p = pp + p_neg[static_cast<Eigen::Index>(i)];
    if (p <= 0.0) return;
    auto rng = pixel_rng(seed, i, Stream::Events);
    std::geometric_distribution<std::int64_t> gap(p);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int x = static_cast<int>(i % width);
    const int y = static_cast<int>(i / width);
    auto& out = per_pixel[i];
    // Live timesteps are Bernoulli(p) trials; the first success is an event.
    for (std::int64_t t = 0;;) {
      t += gap(rng);
      if (t >= duration_us) break;
      out.push_back({x, y, t, u(rng) * p < pp ? 1 : -1});
      t += blind + 1;
    }
  });

  Recording rec;
  rec.duration_us = duration_us;
  rec.width = width;
  rec.height = height;
  rec.refractory_us = refractory_us;
  std::size_t total = 0;
  for (const auto& v : per_pixel) total += v.size();
  rec.events.reserve(total);
  for (auto& v : per_pixel) rec.events.insert(rec.events.end(), v.begin(), v.end());
  std::sort(rec.events.begin(), rec.events.end(), [](const EventRecord& a, const EventRecord& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  return rec;
}

SyntheticRecording synth_recording(double intensity_lux, const ModelParams& params,
                                   std::int64_t duration_us, std::uint64_t seed,
                                   const RecordingOptions& options) {
  if (intensity_lux < 0) throw std::domain_error("intensity must be >= 0");
  const PixelEnsemble ens = sample_ensemble(options.width, options.height, params.B,
                                            options.knobs.sigma_B, options.knobs.sigma_X, seed);
  SyntheticRecording out;
  out.p_pos.resize(ens.size());
  out.p_neg.resize(ens.size());
  const double lambda = params.alpha * intensity_lux;
  std::atomic<std::int64_t> fallbacks{0};
  parallel_for(static_cast<std::size_t>(ens.size()), [&](std::size_t i) {
    const auto k = static_cast<Eigen::Index>(i);
    const ModelParams p = ens.pixel_params(params, k);
    out.p_pos[k] = pixel_probability(p, lambda, Polarity::Positive, options.method, fallbacks);
    out.p_neg[k] = pixel_probability(p, lambda, Polarity::Negative, options.method, fallbacks);
  });
  out.recording = synth_recording_from_probabilities(out.p_pos, out.p_neg, options.width,
                                                     options.height, params.refractory_us,
                                                     duration_us, seed);
  out.recording.intensity_lux = intensity_lux;
  return out;
}

}  // namespace ecnoise
