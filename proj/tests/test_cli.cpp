#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "ecnoise/csv.hpp"
#include "ecnoise/ingest.hpp"
#include "ecnoise/keyvalue.hpp"
#include "ecnoise/scurve.hpp"

using namespace ecnoise;
namespace fs = std::filesystem;

namespace {
const fs::path dir = [] {
  const fs::path d = fs::temp_directory_path() / "ecnoise_test_cli";
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}();

const std::string data_dir = ECNOISE_DATA_DIR;

int run(const std::string& args) {
  const std::string cmd = std::string(ECNOISE_CLI) + " " + args + " >" + (dir / "stdout").string() + " 2>" +
                          (dir / "stderr").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string out(const std::string& name) { return (dir / name).string(); }
}  // namespace

TEST_CASE("help, version and usage errors") {
  CHECK(run("--help") == 0);
  CHECK(run("--version") == 0);
  CHECK(run("") == 1);
  CHECK(run("eval --bogus") == 1);
  CHECK(run("eval --method nope -o " + out("x.csv")) == 1);
  CHECK(run("eval --min 10 --max 1 -o " + out("x.csv")) == 1);
}

TEST_CASE("eval curve peaks near 1e-7 and is deterministic") {
  REQUIRE(run("eval --params " + data_dir + "/default.params --min 0.1 --max 1000 -o " + out("curve.csv")) == 0);
  CsvReader reader(out("curve.csv"));
  reader.expect_header({"intensity_lux,p_pos,p_neg"});
  std::vector<std::string> f;
  double peak = 0;
  int rows = 0;
  while (reader.next(f)) {
    peak = std::max(peak, reader.to_double(f[1]));
    ++rows;
  }
  CHECK(rows == 60);
  CHECK(peak >= 1e-8);
  CHECK(peak <= 1e-6);
  CHECK(fs::exists(out("curve.csv.meta")));

  const std::string first = slurp(out("curve.csv")) + slurp(out("curve.csv.meta"));
  REQUIRE(run("eval --params " + data_dir + "/default.params --min 0.1 --max 1000 -o " + out("curve.csv")) == 0);
  CHECK(slurp(out("curve.csv")) + slurp(out("curve.csv.meta")) == first);
}

TEST_CASE("eval with an empty grid writes only the header") {
  REQUIRE(run("eval --points 0 -o " + out("empty.csv")) == 0);
  CHECK(slurp(out("empty.csv")) == "intensity_lux,p_pos,p_neg\n");
  CHECK(slurp(dir / "stderr").find("warning") != std::string::npos);
}

TEST_CASE("gaussian and saddle part ways at low light") {
  REQUIRE(run("eval --method gaussian --min 0.01 --max 0.01 --points 1 -o " + out("g.csv")) == 0);
  REQUIRE(run("eval --method saddle --min 0.01 --max 0.01 --points 1 -o " + out("s.csv")) == 0);
  CHECK(slurp(out("g.csv")) != slurp(out("s.csv")));
}

TEST_CASE("scurve command") {
  REQUIRE(run("scurve --pixels 20 --contrast-points 5 --seed 3 -o " + out("sc.csv")) == 0);
  const std::string a = slurp(out("sc.csv"));
  REQUIRE(run("scurve --pixels 20 --contrast-points 5 --seed 3 -o " + out("sc.csv")) == 0);
  CHECK(slurp(out("sc.csv")) == a);
  CHECK(a.rfind("baseline_lux,log_contrast,prob_mean,prob_std\n", 0) == 0);
  // last row: brightest baseline at contrast 1
  const auto last_line = a.substr(a.rfind('\n', a.size() - 2) + 1);
  CHECK(std::stod(split_commas(last_line)[2]) >= 0.999);
}

TEST_CASE("synthetic recording through estimate, bin sweep and outliers") {
  REQUIRE(run("synth-rec --lux 5 --width 32 --height 32 --duration-us 500000 --seed 4 -o " + out("rec.csv")) == 0);
  const std::string events = slurp(out("rec.csv"));
  REQUIRE(run("synth-rec --lux 5 --width 32 --height 32 --duration-us 500000 --seed 4 -o " + out("rec.csv")) == 0);
  CHECK(slurp(out("rec.csv")) == events);

  REQUIRE(run("estimate --events " + out("rec.csv") + " --meta " + out("rec.csv.meta") + " -o " + out("row.csv")) == 0);
  const auto curve = read_curve_csv(out("row.csv"));
  REQUIRE(curve.size() == 1);
  CHECK(curve[0].intensity_lux == 5.0);
  CHECK(curve[0].p_pos > 0);

  REQUIRE(run("bin-sweep --events " + out("rec.csv") + " --meta " + out("rec.csv.meta") +
              " --bins 10,100,1000 -o " + out("sweep.csv")) == 0);
  CHECK(slurp(out("sweep.csv")).rfind("bin_us,mean,std,relative_std\n", 0) == 0);

  REQUIRE(run("outliers --events " + out("rec.csv") + " --meta " + out("rec.csv.meta") + " -o " +
              out("report.csv") + " --exclusions-out " + out("excl.txt")) == 0);
  CHECK(slurp(out("report.csv")).rfind("x,y,flag,polarity,value\n", 0) == 0);
  const auto excluded = read_exclusions(out("excl.txt"));
  CHECK(excluded.size() <= static_cast<std::size_t>(2 * 0.01 * 1024) + 1);
  REQUIRE(run("estimate --events " + out("rec.csv") + " --meta " + out("rec.csv.meta") + " --exclude " +
              out("excl.txt") + " -o " + out("row2.csv")) == 0);
}

TEST_CASE("data errors exit with 2") {
  std::ofstream(out("meta_missing")) << "duration_us = 100\n";
  std::ofstream(out("ev.csv")) << "x,y,t,p\n";
  CHECK(run("estimate --events " + out("ev.csv") + " --meta " + out("meta_missing") + " -o " + out("r.csv")) == 2);
  CHECK(run("estimate --events " + out("ev.csv") + " --meta " + out("nonexistent") + " -o " + out("r.csv")) == 2);
  std::ofstream(out("meta_ok")) << "duration_us = 1000\nwidth = 4\nheight = 4\nrefractory_us = 0\nintensity_lux = 1\n";
  CHECK(run("outliers --events " + out("ev.csv") + " --meta " + out("meta_ok") + " -o " + out("o.csv")) == 2);
  CHECK(run("eval --params " + out("nonexistent") + " -o " + out("x.csv")) == 2);
}

TEST_CASE("fit flags under-determined input") {
  std::ofstream(out("one.csv")) << "intensity_lux,p_pos,p_neg,std_pos,std_neg\n10,1.7e-7,2.4e-7,1e-8,1e-8\n";
  const int code = run("fit --noise " + out("one.csv") + " --starts 1 --max-evals 200 -o " + out("one.params"));
  CHECK((code == 0 || code == 2));
  CHECK(fs::exists(out("one.params")));
  CHECK(KeyValue::read(out("one.params.meta")).get("under_determined") == "true");
}

TEST_CASE("synth writes two count images plus provenance") {
  std::ofstream(out("img.pgm"), std::ios::binary) << "P2\n4 2\n255\n0 50 100 150\n200 250 255 0\n";
  REQUIRE(run("synth --image " + out("img.pgm") + " --integration-us 100000 --seed 1 -o " + out("noise")) == 0);
  CHECK(fs::exists(out("noise_pos.pgm")));
  CHECK(fs::exists(out("noise_neg.pgm")));
  const auto meta = KeyValue::read(out("noise.meta"));
  CHECK(meta.integer("integration_us") == 100000);
  CHECK(meta.integer("seed") == 1);
  CHECK(meta.contains("params_digest"));
  REQUIRE(run("synth --image " + out("img.pgm") + " --csv --integration-us 100000 --seed 1 -o " + out("noise")) == 0);
  CHECK(slurp(out("noise.csv")).rfind("x,y,count_pos,count_neg\n", 0) == 0);
  CHECK(run("synth --image " + out("img.pgm") + " --method poisson -o " + out("noise")) != 0);
}

TEST_CASE("bias map table") {
  REQUIRE(run("bias-map --diff-min 0 --diff-max 0 --refr-min 0 --refr-max 200 --refr-step 200 -o " + out("bias.csv")) == 0);
  const std::string text = slurp(out("bias.csv"));
  CHECK(text.find("bias_diff,0,0.15\n") != std::string::npos);
  CHECK(text.find("bias_refr,0,79.") != std::string::npos);
}
