#include "ecnoise/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "ecnoise/csv.hpp"

namespace ecnoise {

namespace {

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return out;
}

}  // namespace

void Recording::apply_exclusions() {
  if (excluded.empty()) return;
  std::erase_if(events, [&](const EventRecord& e) { return is_excluded(e.x, e.y); });
}

void Recording::check() const {
  std::int64_t last = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.x < 0 || e.y < 0 || e.x >= width || e.y >= height) {
      throw FormatError("event " + std::to_string(i) + " at (" + std::to_string(e.x) + "," +
                        std::to_string(e.y) + ") lies outside the " + std::to_string(width) + "x" +
                        std::to_string(height) + " ROI");
    }
    if (e.t < 0 || e.t > duration_us) {
      throw FormatError("event " + std::to_string(i) + " at t=" + std::to_string(e.t) +
                        " lies outside [0, " + std::to_string(duration_us) + "]");
    }
    if (e.t < last) throw FormatError("event " + std::to_string(i) + " breaks time order");
    if (e.p != 1 && e.p != -1) throw FormatError("event " + std::to_string(i) + " has bad polarity");
    last = e.t;
  }
}

std::vector<EventRecord> read_events_csv(const std::filesystem::path& path) {
  CsvReader csv(path);
  csv.expect_header({"x,y,t,p"});
  std::vector<EventRecord> events;
  std::vector<std::string> f;
  std::int64_t last = 0;
  while (csv.next(f)) {
    if (f.size() != 4) csv.fail("expected 4 fields, got " + std::to_string(f.size()));
    EventRecord e;
    const auto x = csv.to_int(f[0]);
    const auto y = csv.to_int(f[1]);
    if (x < 0 || y < 0 || x > 1 << 20 || y > 1 << 20) csv.fail("pixel coordinate out of range");
    e.x = static_cast<int>(x);
    e.y = static_cast<int>(y);
    e.t = csv.to_int(f[2]);
    const auto p = csv.to_int(f[3]);
    if (p != 1 && p != -1) csv.fail("polarity must be 1 or -1");
    e.p = static_cast<int>(p);
    if (e.t < 0) csv.fail("negative timestamp");
    if (e.t < last) csv.fail("timestamps must be non-decreasing");
    last = e.t;
    events.push_back(e);
  }
  return events;
}

void write_events_csv(const std::filesystem::path& path, const std::vector<EventRecord>& events) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw FormatError(path.string() + ": cannot write");
  std::fputs("x,y,t,p\n", f);
  for (const auto& e : events) {
    std::fprintf(f, "%d,%d,%lld,%d\n", e.x, e.y, static_cast<long long>(e.t), e.p);
  }
  if (std::fclose(f) != 0) throw FormatError(path.string() + ": write failed");
}

std::set<Pixel> read_exclusions(const std::filesystem::path& path) {
  CsvReader csv(path);
  std::set<Pixel> pixels;
  std::vector<std::string> f;
  while (csv.next(f)) {
    if (f.size() == 2 && f[0] == "x" && f[1] == "y" && csv.line() == 1) continue;
    if (f.size() != 2) csv.fail("expected x,y");
    pixels.insert({static_cast<int>(csv.to_int(f[0])), static_cast<int>(csv.to_int(f[1]))});
  }
  return pixels;
}

void write_exclusions(const std::filesystem::path& path, const std::set<Pixel>& pixels) {
  std::ofstream out(path);
  if (!out) throw FormatError(path.string() + ": cannot write");
  for (const auto& px : pixels) out << px.x << ',' << px.y << '\n';
}

Recording load_recording(const std::filesystem::path& events_csv,
                         const std::filesystem::path& metadata,
                         const std::optional<std::filesystem::path>& exclusions) {
  const KeyValue meta = KeyValue::read(metadata);
  Recording rec;
  rec.duration_us = meta.integer("duration_us");
  rec.width = static_cast<int>(meta.integer("width"));
  rec.height = static_cast<int>(meta.integer("height"));
  rec.refractory_us = meta.number("refractory_us");
  rec.intensity_lux = meta.number("intensity_lux");
  if (rec.duration_us <= 0 || rec.width <= 0 || rec.height <= 0 || rec.refractory_us < 0) {
    throw FormatError(metadata.string() + ": duration, ROI and refractory time must be positive");
  }
  rec.events = read_events_csv(events_csv);
  rec.check();

  std::optional<std::filesystem::path> excl = exclusions;
  if (!excl) {
    if (auto listed = meta.find("excluded"); listed && !listed->empty()) {
      std::filesystem::path p(*listed);
      excl = p.is_absolute() ? p : metadata.parent_path() / p;
    }
  }
  if (excl) {
    rec.excluded = read_exclusions(*excl);
    for (const auto& px : rec.excluded) {
      if (px.x < 0 || px.y < 0 || px.x >= rec.width || px.y >= rec.height) {
        throw FormatError(excl->string() + ": excluded pixel outside the ROI");
      }
    }
    rec.apply_exclusions();
  }
  return rec;
}

KeyValue recording_metadata(const Recording& rec) {
  KeyValue kv;
  kv.set("duration_us", static_cast<long long>(rec.duration_us));
  kv.set("width", static_cast<long long>(rec.width));
  kv.set("height", static_cast<long long>(rec.height));
  kv.set("refractory_us", rec.refractory_us);
  kv.set("intensity_lux", rec.intensity_lux);
  return kv;
}

double estimate_probability(std::int64_t n_pol, std::int64_t n_tot, double duration_us,
                            double pixels, double refractory_us) {
  const double denom = duration_us * pixels - refractory_us * static_cast<double>(n_tot);
  if (!(denom > 0.0)) {
    throw DegenerateRecording("non-positive live time T*M - R*N_tot = " + format_double(denom));
  }
  return static_cast<double>(n_pol) / denom;
}

double estimate_probability(const Recording& rec, Polarity pol) {
  std::int64_t n_pol = 0;
  std::int64_t n_tot = 0;
  const int want = sign_of(pol);
  for (const auto& e : rec.events) {
    if (rec.is_excluded(e.x, e.y)) continue;
    ++n_tot;
    if (e.p == want) ++n_pol;
  }
  return estimate_probability(n_pol, n_tot, static_cast<double>(rec.duration_us),
                              static_cast<double>(rec.included_count()), rec.refractory_us);
}

MeanStd temporal_variance(const Recording& rec, std::int64_t bin_us, Polarity pol) {
  if (bin_us < 1) throw std::invalid_argument("bin width must be at least 1 us");
  if (rec.events.empty()) return {};
  const std::int64_t nbins = rec.duration_us / bin_us;
  if (nbins < 2) {
    throw InsufficientData("recording of " + std::to_string(rec.duration_us) +
                           " us holds fewer than 2 bins of " + std::to_string(bin_us) + " us");
  }
  std::vector<std::int64_t> n_pol(static_cast<std::size_t>(nbins), 0);
  std::vector<std::int64_t> n_tot(static_cast<std::size_t>(nbins), 0);
  const int want = sign_of(pol);
  for (const auto& e : rec.events) {
    const std::int64_t b = e.t / bin_us;
    if (b >= nbins || rec.is_excluded(e.x, e.y)) continue;
    ++n_tot[static_cast<std::size_t>(b)];
    if (e.p == want) ++n_pol[static_cast<std::size_t>(b)];
  }
  const double m = static_cast<double>(rec.included_count());
  std::vector<double> est(static_cast<std::size_t>(nbins));
  for (std::size_t b = 0; b < est.size(); ++b) {
    est[b] = estimate_probability(n_pol[b], n_tot[b], static_cast<double>(bin_us), m, rec.refractory_us);
  }
  return mean_std(est);
}

MeanStd spatial_variance(const Recording& rec, Polarity pol) {
  if (rec.included_count() < 2) throw InsufficientData("spatial variance needs at least 2 pixels");
  const std::size_t n = static_cast<std::size_t>(rec.pixel_count());
  std::vector<std::int64_t> n_pol(n, 0);
  std::vector<std::int64_t> n_tot(n, 0);
  const int want = sign_of(pol);
  for (const auto& e : rec.events) {
    const std::size_t i = static_cast<std::size_t>(e.y) * rec.width + e.x;
    ++n_tot[i];
    if (e.p == want) ++n_pol[i];
  }
  std::vector<double> est;
  est.reserve(static_cast<std::size_t>(rec.included_count()));
  for (int y = 0; y < rec.height; ++y) {
    for (int x = 0; x < rec.width; ++x) {
      if (rec.is_excluded(x, y)) continue;
      const std::size_t i = static_cast<std::size_t>(y) * rec.width + x;
      est.push_back(estimate_probability(n_pol[i], n_tot[i], static_cast<double>(rec.duration_us),
                                         1.0, rec.refractory_us));
    }
  }
  return mean_std(est);
}

std::vector<BinSweepRow> bin_size_sweep(const Recording& rec, Polarity pol,
                                        const std::vector<std::int64_t>& bins) {
  std::vector<BinSweepRow> rows;
  rows.reserve(bins.size());
  for (auto bin : bins) {
    const MeanStd s = temporal_variance(rec, bin, pol);
    rows.push_back({bin, s.mean, s.std, s.mean > 0.0 ? s.std / s.mean : 0.0});
  }
  return rows;
}

void write_bin_sweep_csv(const std::filesystem::path& path, const std::vector<BinSweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw FormatError(path.string() + ": cannot write");
  out << "bin_us,mean,std,relative_std\n";
  for (const auto& r : rows) {
    out << r.bin_us << ',' << format_sci(r.mean) << ',' << format_sci(r.std) << ','
        << format_sci(r.relative_std) << '\n';
  }
}

CurvePoint summarize_recording(const Recording& rec, std::int64_t bin_us) {
  CurvePoint pt;
  pt.intensity_lux = rec.intensity_lux;
  pt.p_pos = estimate_probability(rec, Polarity::Positive);
  pt.p_neg = estimate_probability(rec, Polarity::Negative);
  pt.std_temporal_pos = temporal_variance(rec, bin_us, Polarity::Positive).std;
  pt.std_temporal_neg = temporal_variance(rec, bin_us, Polarity::Negative).std;
  pt.std_spatial_pos = spatial_variance(rec, Polarity::Positive).std;
  pt.std_spatial_neg = spatial_variance(rec, Polarity::Negative).std;
  return pt;
}

EmpiricalCurve read_curve_csv(const std::filesystem::path& path) {
  CsvReader csv(path);
  const std::size_t kind = csv.expect_header(
      {"intensity_lux,p_pos,p_neg,std_pos,std_neg",
       "intensity_lux,p_pos,p_neg,std_pos,std_neg,std_spatial_pos,std_spatial_neg"});
  const std::size_t width = kind == 0 ? 5 : 7;
  EmpiricalCurve curve;
  std::vector<std::string> f;
  while (csv.next(f)) {
    if (f.size() != width) csv.fail("expected " + std::to_string(width) + " fields");
    CurvePoint pt;
    pt.intensity_lux = csv.to_double(f[0]);
    pt.p_pos = csv.to_double(f[1]);
    pt.p_neg = csv.to_double(f[2]);
    pt.std_temporal_pos = csv.to_double(f[3]);
    pt.std_temporal_neg = csv.to_double(f[4]);
    if (width == 7) {
      pt.std_spatial_pos = csv.to_double(f[5]);
      pt.std_spatial_neg = csv.to_double(f[6]);
    }
    if (pt.intensity_lux <= 0) csv.fail("intensity must be positive");
    if (pt.p_pos < 0 || pt.p_pos > 1 || pt.p_neg < 0 || pt.p_neg > 1) csv.fail("probability outside [0,1]");
    if (pt.std_temporal_pos < 0 || pt.std_temporal_neg < 0 || pt.std_spatial_pos < 0 ||
        pt.std_spatial_neg < 0) {
      csv.fail("negative standard deviation");
    }
    curve.push_back(pt);
  }
  return curve;
}

void write_curve_csv(const std::filesystem::path& path, const EmpiricalCurve& curve) {
  std::ofstream out(path);
  if (!out) throw FormatError(path.string() + ": cannot write");
  out << "intensity_lux,p_pos,p_neg,std_pos,std_neg,std_spatial_pos,std_spatial_neg\n";
  for (const auto& pt : curve) {
    out << format_double(pt.intensity_lux) << ',' << format_sci(pt.p_pos) << ','
        << format_sci(pt.p_neg) << ',' << format_sci(pt.std_temporal_pos) << ','
        << format_sci(pt.std_temporal_neg) << ',' << format_sci(pt.std_spatial_pos) << ','
        << format_sci(pt.std_spatial_neg) << '\n';
  }
}

}  // namespace ecnoise
