// ecnoise -- command-line front end for the event-camera noise model.
//
// Exit codes: 0 success, 1 usage error, 2 data or model error. Every output
// file gets a "<output>.meta" sidecar holding the resolved options, input
// digests, seed and tool version.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ecnoise/ingest.hpp"
#include "ecnoise/keyvalue.hpp"
#include "ecnoise/noise2params.hpp"
#include "ecnoise/outliers.hpp"
#include "ecnoise/parallel.hpp"
#include "ecnoise/params_io.hpp"
#include "ecnoise/random.hpp"
#include "ecnoise/scurve.hpp"
#include "ecnoise/synth.hpp"

#ifndef ECNOISE_VERSION
#define ECNOISE_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace ecnoise;

namespace {

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Method method_option(const std::string& name) {
  try {
    return parse_method(name);
  } catch (const std::exception&) {
    throw Usage("unknown method \"" + name + "\" (poisson, gaussian, saddle)");
  }
}

ModelParams load_params(const std::string& path) {
  return path.empty() ? default_bias_params() : read_params(path);
}

/// Resolved options of one subcommand plus input digests.
class Provenance {
 public:
  Provenance(const CLI::App& sub, std::uint64_t seed) {
    kv_.set("tool", std::string("ecnoise"));
    kv_.set("version", std::string(ECNOISE_VERSION));
    kv_.set("command", sub.get_name());
    kv_.set("seed", static_cast<long long>(seed));
    for (const CLI::Option* opt : sub.get_options()) {
      if (opt->get_lnames().empty()) continue;
      const std::string name = opt->get_lnames().front();
      if (name == "help") continue;
      std::string value;
      if (opt->count() > 0) {
        for (const auto& r : opt->results()) value += (value.empty() ? "" : " ") + r;
      } else {
        value = opt->get_default_str();
      }
      kv_.set("option." + name, value);
    }
  }

  void input(const std::string& name, const std::string& path) {
    if (!path.empty()) kv_.set("input." + name + ".sha", file_digest(path));
  }
  void set(const std::string& key, const std::string& value) { kv_.set(key, value); }
  void set(const std::string& key, double value) { kv_.set(key, value); }
  void set(const std::string& key, long long value) { kv_.set(key, value); }
  void merge(const KeyValue& other) {
    for (const auto& [k, v] : other.entries()) kv_.set(k, v);
  }

  void write_for(const fs::path& output) const { kv_.write(output.string() + ".meta"); }

 private:
  KeyValue kv_;
};

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g;
  if (n <= 0) return g;
  if (n == 1) return {lo};
  for (int i = 0; i < n; ++i) g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return g;
}

Recording load(const std::string& events, const std::string& meta, const std::string& exclude) {
  std::optional<fs::path> excl;
  if (!exclude.empty()) excl = exclude;
  return load_recording(events, meta, excl);
}

Polarity polarity_option(const std::string& s) {
  if (s == "pos" || s == "positive" || s == "1" || s == "+1") return Polarity::Positive;
  if (s == "neg" || s == "negative" || s == "-1") return Polarity::Negative;
  throw Usage("unknown polarity \"" + s + "\" (pos, neg)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-camera noise model: probabilities, calibration, outliers and synthesis"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI/TOML file with option overrides");
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  app.set_version_flag("--version", std::string(ECNOISE_VERSION));

  // eval
  auto* eval = app.add_subcommand("eval", "Static-scene event probability over an intensity grid");
  std::string e_params, e_method = "saddle", e_pol = "both", e_unit = "lux", e_out;
  double e_lo = 0.1, e_hi = 1000.0;
  int e_points = 60;
  bool e_no_floor = false;
  eval->add_option("--params", e_params, "Params file (default-bias values when omitted)");
  eval->add_option("--method", e_method, "poisson | gaussian | saddle")->capture_default_str();
  eval->add_option("--polarity", e_pol, "both | pos | neg")->capture_default_str();
  eval->add_option("--unit", e_unit, "Grid unit: lux | photons")->capture_default_str();
  eval->add_option("--min", e_lo, "Grid start")->capture_default_str();
  eval->add_option("--max", e_hi, "Grid end")->capture_default_str();
  eval->add_option("--points", e_points, "Log-spaced grid points")->capture_default_str();
  eval->add_flag("--no-floor", e_no_floor, "Leave out the c_V floor");
  eval->add_option("-o,--output", e_out, "Output CSV")->required();

  // scurve
  auto* sc = app.add_subcommand("scurve", "S-curve family for Heaviside steps");
  std::string s_params, s_method = "saddle", s_out;
  std::vector<double> s_baselines{0.304, 2.997, 30.409, 299.684};
  double s_cmin = 0.0, s_cmax = 1.0, s_sigma = 0.0045;
  int s_cpoints = 60, s_pixels = 1000, s_trials = 0;
  std::uint64_t s_seed = 0;
  bool s_no_floor = false;
  sc->add_option("--params", s_params, "Params file");
  sc->add_option("--baselines", s_baselines, "Baseline intensities in lux")->delimiter(',')->capture_default_str();
  sc->add_option("--contrast-min", s_cmin, "First log contrast")->capture_default_str();
  sc->add_option("--contrast-max", s_cmax, "Last log contrast")->capture_default_str();
  sc->add_option("--contrast-points", s_cpoints, "Contrast grid size")->capture_default_str();
  sc->add_option("--pixels", s_pixels, "Ensemble size")->capture_default_str();
  sc->add_option("--sigma-b", s_sigma, "Threshold spread")->capture_default_str();
  sc->add_option("--method", s_method, "poisson | gaussian | saddle")->capture_default_str();
  sc->add_option("--seed", s_seed, "RNG seed")->capture_default_str();
  sc->add_option("--observed-trials", s_trials,
                 "Append prob_observed drawn as Binomial(trials, mean)/trials (0: off)")
      ->capture_default_str();
  sc->add_flag("--no-floor", s_no_floor, "Leave out the c_V floor");
  sc->add_option("-o,--output", s_out, "Output CSV")->required();

  // estimate
  auto* est = app.add_subcommand("estimate", "Noise-curve point from a static-scene recording");
  std::string r_events, r_meta, r_exclude, r_out;
  std::int64_t r_bin = 100;
  for (auto* sub : {est}) {
    sub->add_option("--events", r_events, "Event CSV (x,y,t,p)")->required();
    sub->add_option("--meta", r_meta, "Recording metadata")->required();
    sub->add_option("--exclude", r_exclude, "Excluded-pixel file");
  }
  est->add_option("--bin-us", r_bin, "Temporal bin width")->capture_default_str();
  est->add_option("-o,--output", r_out, "Output noise-curve CSV")->required();

  // bin-sweep
  auto* sweep = app.add_subcommand("bin-sweep", "Relative temporal std against bin width");
  std::string b_events, b_meta, b_exclude, b_out, b_pol = "pos";
  std::vector<std::int64_t> b_bins{10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000};
  sweep->add_option("--events", b_events, "Event CSV")->required();
  sweep->add_option("--meta", b_meta, "Recording metadata")->required();
  sweep->add_option("--exclude", b_exclude, "Excluded-pixel file");
  sweep->add_option("--bins", b_bins, "Bin widths in us")->delimiter(',')->capture_default_str();
  sweep->add_option("--polarity", b_pol, "pos | neg")->capture_default_str();
  sweep->add_option("-o,--output", b_out, "Output CSV")->required();

  // outliers
  auto* outl = app.add_subcommand("outliers", "Flag outlier pixels");
  std::string o_events, o_meta, o_out, o_excl_out;
  double o_ahat = 0.01, o_k = 20.0;
  outl->add_option("--events", o_events, "Event CSV")->required();
  outl->add_option("--meta", o_meta, "Recording metadata")->required();
  outl->add_option("--a-hat", o_ahat, "Expected false-positive rate")->capture_default_str();
  outl->add_option("--k-sigma", o_k, "Hot-count threshold in standard deviations")->capture_default_str();
  outl->add_option("-o,--output", o_out, "Report CSV")->required();
  outl->add_option("--exclusions-out", o_excl_out, "Excluded-pixel file to write");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit model parameters to noise curves");
  std::string f_noise, f_scurve, f_bounds, f_method = "saddle", f_out, f_metrics, f_trace;
  int f_starts = 8, f_evals = 4000;
  std::uint64_t f_seed = 0;
  bool f_log = false, f_spatial = false, f_no_floor = false;
  double f_refr = 79.0;
  fit->add_option("--noise", f_noise, "Noise-curve CSV")->required();
  fit->add_option("--scurve", f_scurve, "Observed S-curve CSV");
  fit->add_option("--bounds", f_bounds, "Key-value file with bounds and optimiser settings");
  fit->add_option("--method", f_method, "poisson | gaussian | saddle")->capture_default_str();
  fit->add_option("--starts", f_starts, "Simplex starts")->capture_default_str();
  fit->add_option("--max-evals", f_evals, "Objective evaluations per start")->capture_default_str();
  fit->add_option("--seed", f_seed, "RNG seed")->capture_default_str();
  fit->add_option("--refractory-us", f_refr, "Refractory time written to the params file")->capture_default_str();
  fit->add_flag("--log-residuals", f_log, "Score residuals in log10 probability");
  fit->add_flag("--spatial", f_spatial, "Use spatial rather than temporal uncertainties");
  fit->add_flag("--no-floor", f_no_floor, "Keep c_V at 0");
  fit->add_option("-o,--output", f_out, "Output params file")->required();
  fit->add_option("--metrics", f_metrics, "Metrics CSV");
  fit->add_option("--trace", f_trace, "Objective trace CSV");

  // synth
  auto* syn = app.add_subcommand("synth", "Noise-event image from a greyscale image");
  std::string y_image, y_params, y_method = "saddle", y_mapping, y_out;
  std::int64_t y_T = 5000000;
  std::uint64_t y_seed = 0;
  double y_sb = 0.0, y_sx = 0.0;
  int y_rw = 0, y_rh = 0;
  bool y_poisson = false, y_csv = false;
  syn->add_option("--image", y_image, "8-bit PGM")->required();
  syn->add_option("--params", y_params, "Params file");
  syn->add_option("--integration-us", y_T, "Integration window")->capture_default_str();
  syn->add_option("--method", y_method, "gaussian | saddle (poisson needs --allow-poisson)")->capture_default_str();
  syn->add_flag("--allow-poisson", y_poisson, "Permit the slow exact model");
  syn->add_option("--seed", y_seed, "RNG seed")->capture_default_str();
  auto* y_sb_opt = syn->add_option("--sigma-b", y_sb, "Threshold spread (method default when omitted)");
  auto* y_sx_opt = syn->add_option("--sigma-x", y_sx, "Leakage spread (method default when omitted)");
  syn->add_option("--roi-width", y_rw, "Centre-crop width (0: whole image)")->capture_default_str();
  syn->add_option("--roi-height", y_rh, "Centre-crop height (0: whole image)")->capture_default_str();
  syn->add_option("--mapping", y_mapping, "Greyscale-to-lux table (g,lux)");
  syn->add_flag("--csv", y_csv, "Write x,y,count_pos,count_neg CSV instead of two PGMs");
  syn->add_option("-o,--output", y_out, "Output prefix")->required();

  // synth-rec
  auto* rec = app.add_subcommand("synth-rec", "Synthetic static-scene event recording");
  std::string w_params, w_method = "saddle", w_out;
  double w_lux = 1.0, w_sb = 0.0, w_sx = 0.0;
  std::int64_t w_T = 1000000;
  int w_w = 64, w_h = 64;
  std::uint64_t w_seed = 0;
  rec->add_option("--lux", w_lux, "Scene illuminance")->capture_default_str();
  rec->add_option("--params", w_params, "Params file");
  rec->add_option("--duration-us", w_T, "Recording length")->capture_default_str();
  rec->add_option("--width", w_w, "ROI width")->capture_default_str();
  rec->add_option("--height", w_h, "ROI height")->capture_default_str();
  rec->add_option("--method", w_method, "gaussian | saddle | poisson")->capture_default_str();
  rec->add_option("--seed", w_seed, "RNG seed")->capture_default_str();
  auto* w_sb_opt = rec->add_option("--sigma-b", w_sb, "Threshold spread");
  auto* w_sx_opt = rec->add_option("--sigma-x", w_sx, "Leakage spread");
  rec->add_option("-o,--output", w_out, "Output event CSV (metadata goes to <output>.meta)")->required();

  // bias-map
  auto* bias = app.add_subcommand("bias-map", "Tables of bias_diff -> B and bias_refr -> refractory time");
  int m_dlo = -200, m_dhi = 200, m_dstep = 10, m_rlo = 0, m_rhi = 200, m_rstep = 10;
  std::string m_out;
  bias->add_option("--diff-min", m_dlo)->capture_default_str();
  bias->add_option("--diff-max", m_dhi)->capture_default_str();
  bias->add_option("--diff-step", m_dstep)->capture_default_str()->check(CLI::PositiveNumber);
  bias->add_option("--refr-min", m_rlo)->capture_default_str();
  bias->add_option("--refr-max", m_rhi)->capture_default_str();
  bias->add_option("--refr-step", m_rstep)->capture_default_str()->check(CLI::PositiveNumber);
  bias->add_option("-o,--output", m_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  set_thread_count(threads);

  try {
    if (*eval) {
      const ModelParams params = load_params(e_params);
      const Method method = method_option(e_method);
      if (e_pol != "both") polarity_option(e_pol);
      if (!(e_lo > 0 && e_hi >= e_lo)) throw Usage("grid needs 0 < min <= max");
      if (e_unit != "lux" && e_unit != "photons") throw Usage("unit must be lux or photons");
      const std::vector<double> grid = log_grid(e_lo, e_hi, e_points);
      if (grid.empty()) std::cerr << "warning: empty grid, writing header only\n";
      std::FILE* f = std::fopen(e_out.c_str(), "w");
      if (!f) throw FormatError(e_out + ": cannot write");
      std::fputs("intensity_lux,p_pos,p_neg\n", f);
      for (double g : grid) {
        const double lux = e_unit == "lux" ? g : g / params.alpha;
        const IntensityPair pair = IntensityPair::static_scene(params.alpha * lux);
        std::string pos, neg;
        if (e_pol != "neg") pos = format_sci(event_prob(params, pair, Polarity::Positive, method, !e_no_floor).value);
        if (e_pol == "both" || polarity_option(e_pol) == Polarity::Negative) {
          neg = format_sci(event_prob(params, pair, Polarity::Negative, method, !e_no_floor).value);
        }
        std::fprintf(f, "%s,%s,%s\n", format_double(lux).c_str(), pos.c_str(), neg.c_str());
      }
      std::fclose(f);
      Provenance prov(*eval, 0);
      prov.input("params", e_params);
      prov.write_for(e_out);
    } else if (*sc) {
      const ModelParams params = load_params(s_params);
      SCurveRequest req;
      req.baseline_lux = s_baselines;
      req.contrast_grid = SCurveRequest::linear_grid(s_cmin, s_cmax, s_cpoints);
      req.n_pixels = s_pixels;
      req.seed = s_seed;
      req.sigma_B = s_sigma;
      req.method = method_option(s_method);
      req.apply_floor = !s_no_floor;
      const SCurveFamily fam = scurve_family(params, req);
      std::int64_t missing = 0;
      for (Eigen::Index i = 0; i < fam.mean.size(); ++i) missing += std::isnan(fam.mean(i)) ? 1 : 0;
      if (missing > 0) std::cerr << "warning: " << missing << " grid points degenerate, left empty\n";
      if (s_trials > 0) {
        Eigen::ArrayXXd observed(fam.mean.rows(), fam.mean.cols());
        for (Eigen::Index k = 0; k < observed.size(); ++k) {
          const Eigen::Index i = k / observed.cols();
          const Eigen::Index j = k % observed.cols();
          if (fam.missing(i, j)) {
            observed(i, j) = std::nan("");
            continue;
          }
          auto rng = pixel_rng(s_seed, static_cast<std::uint64_t>(k), Stream::Counts);
          observed(i, j) = static_cast<double>(std::binomial_distribution<int>(s_trials, fam.mean(i, j))(rng)) / s_trials;
        }
        write_scurve_csv(s_out, fam, &observed);
      } else {
        write_scurve_csv(s_out, fam);
      }
      Provenance prov(*sc, s_seed);
      prov.input("params", s_params);
      prov.write_for(s_out);
    } else if (*est) {
      const Recording r = load(r_events, r_meta, r_exclude);
      write_curve_csv(r_out, {summarize_recording(r, r_bin)});
      Provenance prov(*est, 0);
      prov.input("events", r_events);
      prov.input("meta", r_meta);
      prov.input("exclude", r_exclude);
      prov.set("pixels_included", static_cast<long long>(r.included_count()));
      prov.set("events", static_cast<long long>(r.events.size()));
      prov.write_for(r_out);
    } else if (*sweep) {
      const Recording r = load(b_events, b_meta, b_exclude);
      write_bin_sweep_csv(b_out, bin_size_sweep(r, polarity_option(b_pol), b_bins));
      Provenance prov(*sweep, 0);
      prov.input("events", b_events);
      prov.input("meta", b_meta);
      prov.write_for(b_out);
    } else if (*outl) {
      const Recording r = load(o_events, o_meta, "");
      if (r.events.empty()) throw InsufficientData(o_events + ": no events to analyse");
      OutlierConfig cfg;
      cfg.a_hat = o_ahat;
      cfg.k_sigma = o_k;
      const OutlierReport report = detect_outliers(r, cfg);
      write_outlier_report(o_out, report);
      if (!o_excl_out.empty()) write_exclusions(o_excl_out, report.excluded());
      for (const auto& note : report.notes) std::cerr << "note: " << note << '\n';
      Provenance prov(*outl, 0);
      prov.input("events", o_events);
      prov.input("meta", o_meta);
      prov.set("threshold", report.threshold);
      prov.set("flagged_pixels", static_cast<long long>(report.excluded().size()));
      prov.write_for(o_out);
    } else if (*fit) {
      FitDataset data;
      data.noise = read_curve_csv(f_noise);
      if (!f_scurve.empty()) data.scurves = read_scurve_observed(f_scurve);
      FitConfig cfg;
      if (!f_bounds.empty()) cfg = read_fit_config(KeyValue::read(f_bounds), cfg);
      if (fit->count("--starts")) cfg.n_starts = f_starts;
      if (fit->count("--max-evals")) cfg.max_evals = f_evals;
      cfg.method = method_option(f_method);
      cfg.seed = f_seed;
      cfg.log_residuals = f_log;
      cfg.spatial_uncertainty = f_spatial;
      cfg.fit_floor = !f_no_floor;
      cfg.check();
      FitResult res;
      int status = 0;
      try {
        res = fit_params(data, cfg);
      } catch (const NonConvergence& e) {
        std::cerr << "error: " << e.what() << "; writing best-so-far\n";
        res = e.best_so_far;
        status = 2;
      }
      res.params.refractory_us = f_refr;
      if (res.under_determined) {
        std::cerr << "warning: fewer than 5 intensities or under two decades; parameters are under-determined\n";
      }
      write_params(f_out, res.params);
      if (!f_metrics.empty()) write_metrics_csv(f_metrics, res);
      if (!f_trace.empty()) write_trace_csv(f_trace, res.trace);
      Provenance prov(*fit, f_seed);
      prov.input("noise", f_noise);
      prov.input("scurve", f_scurve);
      prov.input("bounds", f_bounds);
      prov.set("objective", res.objective);
      prov.set("converged_starts", static_cast<long long>(res.converged_starts));
      prov.set("fallback_points", static_cast<long long>(res.fallback_points));
      prov.set("under_determined", std::string(res.under_determined ? "true" : "false"));
      prov.write_for(f_out);
      return status;
    } else if (*syn) {
      const ModelParams params = load_params(y_params);
      SynthOptions opt;
      opt.method = method_option(y_method);
      opt.allow_poisson = y_poisson;
      opt.knobs = EnsembleKnobs::for_method(opt.method);
      if (y_sb_opt->count()) opt.knobs.sigma_B = y_sb;
      if (y_sx_opt->count()) opt.knobs.sigma_X = y_sx;
      opt.roi_width = y_rw;
      opt.roi_height = y_rh;
      if (!y_mapping.empty()) opt.mapping = GreyscaleMapping::from_file(y_mapping);
      const NoiseImage img = synth_noise_image(read_pgm(y_image), params, y_T, y_seed, opt);
      Provenance prov(*syn, y_seed);
      prov.input("image", y_image);
      prov.input("params", y_params);
      prov.input("mapping", y_mapping);
      prov.set("integration_us", static_cast<long long>(y_T));
      prov.set("params_digest", text_digest(params_to_kv(params).str()));
      prov.set("sigma_B", opt.knobs.sigma_B);
      prov.set("sigma_X", opt.knobs.sigma_X);
      prov.set("fallback_pixels", static_cast<long long>(img.fallback_pixels));
      if (y_csv) {
        write_counts_csv(y_out + ".csv", img);
      } else {
        const std::int64_t clamped =
            write_pgm16(y_out + "_pos.pgm", img.counts_pos) + write_pgm16(y_out + "_neg.pgm", img.counts_neg);
        if (clamped > 0) std::cerr << "warning: " << clamped << " counts clamped at 65535\n";
        prov.set("clamped_pixels", static_cast<long long>(clamped));
      }
      prov.write_for(y_out);
    } else if (*rec) {
      const ModelParams params = load_params(w_params);
      RecordingOptions opt;
      opt.width = w_w;
      opt.height = w_h;
      opt.method = method_option(w_method);
      opt.knobs = EnsembleKnobs::for_method(opt.method);
      if (w_sb_opt->count()) opt.knobs.sigma_B = w_sb;
      if (w_sx_opt->count()) opt.knobs.sigma_X = w_sx;
      const SyntheticRecording out = synth_recording(w_lux, params, w_T, w_seed, opt);
      write_events_csv(w_out, out.recording.events);
      Provenance prov(*rec, w_seed);
      prov.merge(recording_metadata(out.recording));
      prov.input("params", w_params);
      prov.set("params_digest", text_digest(params_to_kv(params).str()));
      prov.set("generating_p_pos", out.mean_p(Polarity::Positive));
      prov.set("generating_p_neg", out.mean_p(Polarity::Negative));
      prov.write_for(w_out);
    } else if (*bias) {
      std::FILE* f = std::fopen(m_out.c_str(), "w");
      if (!f) throw FormatError(m_out + ": cannot write");
      std::fputs("kind,setting,value\n", f);
      for (int k = m_dlo; k <= m_dhi; k += m_dstep) std::fprintf(f, "bias_diff,%d,%.10g\n", k, bias_to_B(k));
      for (int b = m_rlo; b <= m_rhi; b += m_rstep) {
        std::fprintf(f, "bias_refr,%d,%.10g\n", b, refractory_time(b));
      }
      std::fclose(f);
      Provenance(*bias, 0).write_for(m_out);
    }
  } catch (const Usage& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
