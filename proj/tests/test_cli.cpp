#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tsimg/imageio.hpp"
#include "tsimg/series.hpp"

using namespace tsimg;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status;
  std::string out;
};

// Runs the CLI with stderr folded into the captured output.
Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" TSIMG_CLI_PATH "\" " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  const int raw = pclose(pipe);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

fs::path scratch(const char* name) {
  const auto dir = fs::temp_directory_path() / "tsimg_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

void same_files(const fs::path& a, const fs::path& b, const std::string& skip) {
  std::size_t count = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    const auto name = e.path().filename().string();
    if (name == skip) continue;
    ++count;
    CHECK(read_file(e.path()) == read_file(b / name));
  }
  CHECK(count > 0);
}

double abs_err_max(const TimeSeries& a, const TimeSeries& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

}  // namespace

TEST_CASE("generate writes series plus manifest, deterministically") {
  const auto dir = scratch("generate");
  auto r = run("--seed 7 --out " + q(dir / "a") + " generate -n 3");
  REQUIRE(r.status == 0);
  for (int i = 0; i < 3; ++i) CHECK(fs::exists(dir / "a" / ("series_00000" + std::to_string(i) + ".csv")));
  const auto manifest = lines(read_file(dir / "a" / "manifest.csv"));
  CHECK(manifest.size() == 4);
  CHECK(manifest[0] == "id,seed,stream,hypothesis,behavior,length");
  CHECK(fs::exists(dir / "a" / "resolved_config.ini"));

  REQUIRE(run("--seed 7 --threads 1 --out " + q(dir / "b") + " generate -n 3").status == 0);
  same_files(dir / "a", dir / "b", "resolved_config.ini");

  // Replaying the snapshot reproduces the run.
  REQUIRE(run("--config " + q(dir / "a" / "resolved_config.ini") + " --out " + q(dir / "c") + " generate").status == 0);
  same_files(dir / "a", dir / "c", "resolved_config.ini");

  // An auto-chosen seed is recorded and replays too.
  REQUIRE(run("--out " + q(dir / "d") + " generate -n 2").status == 0);
  const auto snap = read_file(dir / "d" / "resolved_config.ini");
  CHECK(snap.find("seed = \"") != std::string::npos);
  REQUIRE(run("--config " + q(dir / "d" / "resolved_config.ini") + " --out " + q(dir / "e") + " generate").status == 0);
  same_files(dir / "d", dir / "e", "resolved_config.ini");
  fs::remove_all(dir);
}

TEST_CASE("generate at scale keeps the hypothesis split near alpha") {
  const auto dir = scratch("generate_big");
  REQUIRE(run("--seed 11 --out " + q(dir) + " generate -n 20000").status == 0);
  const auto manifest = lines(read_file(dir / "manifest.csv"));
  REQUIRE(manifest.size() == 20001);
  std::size_t periodic = 0;
  for (std::size_t i = 1; i < manifest.size(); ++i) periodic += manifest[i].find(",periodic,") != std::string::npos;
  const double n = 20000.0;
  CHECK(std::abs(periodic - 0.5 * n) <= 3.0 * std::sqrt(n * 0.25));
  fs::remove_all(dir);
}

TEST_CASE("output directory and threads come from the environment") {
  const auto dir = scratch("env");
  REQUIRE(run("--seed 1 generate -n 1", "TSIMG_OUT_DIR=" + q(dir / "x") + " TSIMG_THREADS=2").status == 0);
  CHECK(fs::exists(dir / "x" / "manifest.csv"));
  CHECK(read_file(dir / "x" / "resolved_config.ini").find("threads = \"2\"") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("encode/decode round-trip") {
  const auto dir = scratch("codec");
  REQUIRE(run("--seed 3 --out " + q(dir / "gen") + " generate -n 4").status == 0);
  for (int i = 0; i < 4; ++i) {
    const auto name = "series_00000" + std::to_string(i);
    const auto src = dir / "gen" / (name + ".csv");
    REQUIRE(run("--out " + q(dir / "img") + " encode " + q(src) + " --height 128 --ms 3.5").status == 0);
    REQUIRE(run("--out " + q(dir / "dec") + " decode " + q(dir / "img" / (name + ".meta"))).status == 0);
    const auto orig = read_series_csv(src);
    const auto back = read_series_csv(dir / "dec" / (name + ".csv"));
    const auto meta = parse_metadata(read_file(dir / "img" / (name + ".meta")));
    REQUIRE(meta.normalization);
    const double m = meta.normalization->mean[0], sd = meta.normalization->std[0];
    for (std::size_t t = 0; t < orig.length(); ++t) {
      const double z = (orig.at(0, t) - m) / sd;
      if (std::abs(z) < 3.5) CHECK(std::abs(back.at(0, t) - orig.at(0, t)) <= sd * 3.5 / 128 + 1e-7);
    }
  }

  SUBCASE("in-range data without normalisation obeys MS/h directly") {
    std::vector<double> x(300);
    for (std::size_t t = 0; t < 300; ++t) x[t] = 3.4 * std::sin(0.05 * t);
    std::ostringstream csv;
    write_series_csv(csv, TimeSeries::univariate(x));
    write_file_atomic(dir / "wave.csv", csv.str());
    REQUIRE(run("--out " + q(dir / "img") + " encode --no-normalize " + q(dir / "wave.csv")).status == 0);
    REQUIRE(run("--out " + q(dir / "dec") + " decode " + q(dir / "img" / "wave.meta")).status == 0);
    CHECK(abs_err_max(read_series_csv(dir / "dec" / "wave.csv"), TimeSeries::univariate(x)) <= 3.5 / 128 + 1e-9);
  }
  SUBCASE("constant zero series: one identical active row per column") {
    write_file_atomic(dir / "zero.csv", "t,ch0\n0,0\n1,0\n2,0\n3,0\n");
    REQUIRE(run("--out " + q(dir / "img") + " encode " + q(dir / "zero.csv")).status == 0);
    std::ifstream in(dir / "img" / "zero_ch0.pgm", std::ios::binary);
    const auto g = read_pgm(in);
    int active_row = -1;
    for (std::size_t col = 0; col < g.width; ++col) {
      int count = 0, row = -1;
      for (std::size_t r = 0; r < g.height; ++r) {
        if (g.at(r, col) == 255) {
          ++count;
          row = static_cast<int>(r);
        }
      }
      CHECK(count == 1);
      if (active_row < 0) active_row = row;
      CHECK(row == active_row);
    }
  }
  SUBCASE("decode rejects a non-one-hot image and names the file") {
    write_file_atomic(dir / "z.csv", "t,ch0\n0,0.5\n1,-0.5\n");
    REQUIRE(run("--out " + q(dir / "img") + " encode --no-normalize " + q(dir / "z.csv")).status == 0);
    const auto pgm = dir / "img" / "z_ch0.pgm";
    std::ifstream in(pgm, std::ios::binary);
    auto g = read_pgm(in);
    in.close();
    for (std::size_t r = 0; r < g.height; ++r) g.pixels[r * g.width] = 255;
    std::ostringstream bytes;
    write_pgm(bytes, g);
    write_file_atomic(pgm, bytes.str());
    const auto r = run("--out " + q(dir / "dec") + " decode " + q(dir / "img" / "z.meta"));
    CHECK(r.status != 0);
    CHECK(r.out.find("z_ch0.pgm") != std::string::npos);
  }
  SUBCASE("missing input file") {
    const auto r = run("--out " + q(dir / "img") + " encode " + q(dir / "nothing.csv"));
    CHECK(r.status != 0);
    CHECK(r.out.find("nothing.csv") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("solve-ms table") {
  const auto dir = scratch("solve");
  auto r = run("--out " + q(dir) + " solve-ms");
  REQUIRE(r.status == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 16);
  CHECK(rows[0] == "h,k,ms_star,residual");
  CHECK(r.out.find("\n128,1,2.64") != std::string::npos);
  CHECK(read_file(dir / "ms_star.csv") == r.out);

  r = run("--out " + q(dir) + " solve-ms --heights 32 --variances 2");
  REQUIRE(r.status == 0);
  const auto row = lines(r.out).at(1);
  CHECK(row.rfind("32,2,", 0) == 0);
  const double v = std::stod(row.substr(5, row.find(',', 5) - 5));
  CHECK(std::abs(v - 2.96677) < 1e-5);

  r = run("--out " + q(dir) + " solve-ms --heights \"\"");
  CHECK(r.status == 0);
  CHECK(r.out == "h,k,ms_star,residual\n");
  CHECK(run("--out " + q(dir) + " solve-ms --heights 12x").status != 0);
  fs::remove_all(dir);
}

TEST_CASE("evaluate") {
  const auto dir = scratch("evaluate");
  REQUIRE(run("--seed 5 --out " + q(dir / "data") + " generate -n 4 --length 1024").status == 0);
  const std::string common = " evaluate " + q(dir / "data") + " --lookback 256 --horizons 96,192";

  SUBCASE("oracle scores zero") {
    const auto r = run("--seed 1 --out " + q(dir / "o") + common + " --model oracle");
    REQUIRE(r.status == 0);
    CHECK(r.out.find("ReMSE=0.000000 ReMAE=0.000000") != std::string::npos);
    CHECK(r.out.find("ReMSE=0.0000001") == std::string::npos);
    CHECK(fs::exists(dir / "o" / "report.csv"));
  }
  SUBCASE("unknown model lists the registry") {
    const auto r = run("--seed 1 --out " + q(dir / "u") + common + " --model nope");
    CHECK(r.status != 0);
    CHECK(r.out.find("persistence") != std::string::npos);
    CHECK(r.out.find("img_seasonal_naive") != std::string::npos);
  }
  SUBCASE("input noise never helps persistence") {
    const auto r = run("--seed 2 --out " + q(dir / "n") + common +
                       " --model persistence --stride 1 --perturb none --perturb gn:0.1");
    REQUIRE(r.status == 0);
    for (const char* H : {"96", "192"}) {
      double clean = -1, noisy = -1;
      for (const auto& l : lines(r.out)) {
        if (l.find(std::string("horizon=") + H + " ") == std::string::npos) continue;
        const double v = std::stod(l.substr(l.find("ReMSE=") + 6));
        (l.find("scenario=none") != std::string::npos ? clean : noisy) = v;
      }
      CHECK(clean >= 0.0);
      CHECK(noisy >= clean);
    }
  }
  SUBCASE("deterministic and replayable") {
    REQUIRE(run("--seed 9 --out " + q(dir / "r1") + common + " --model img_seasonal_naive --perturb dm:0.2").status == 0);
    REQUIRE(run("--seed 9 --out " + q(dir / "r2") + common + " --model img_seasonal_naive --perturb dm:0.2").status == 0);
    CHECK(read_file(dir / "r1" / "report.csv") == read_file(dir / "r2" / "report.csv"));
    REQUIRE(run("--config " + q(dir / "r1" / "resolved_config.ini") + " --out " + q(dir / "r3") + " evaluate").status == 0);
    CHECK(read_file(dir / "r1" / "report.csv") == read_file(dir / "r3" / "report.csv"));
  }
  SUBCASE("unscorable configuration is an error") {
    const auto r = run("--seed 1 --out " + q(dir / "x") + " evaluate " + q(dir / "data") +
                       " --model persistence --lookback 512 --horizons 5000");
    CHECK(r.status != 0);
  }
  fs::remove_all(dir);
}

TEST_CASE("perturb and list-models") {
  const auto dir = scratch("perturb");
  write_file_atomic(dir / "s.csv", "t,ch0\n0,1\n1,2\n2,3\n3,4\n");
  auto r = run("--seed 4 --out " + q(dir / "p") + " perturb " + q(dir / "s.csv") + " --spec dm:1");
  REQUIRE(r.status == 0);
  CHECK(read_file(dir / "p" / "s_dm_1.mask.csv") == "t,ch0\n0,1\n1,1\n2,1\n3,1\n");
  CHECK(run("--out " + q(dir / "p") + " perturb " + q(dir / "s.csv") + " --spec bogus").status != 0);

  r = run("list-models");
  REQUIRE(r.status == 0);
  for (const char* id : {"persistence", "seasonal_naive", "linear_trend", "img_persistence", "oracle"}) {
    CHECK(r.out.find(id) != std::string::npos);
  }
  CHECK(run("no-such-command").status != 0);
  CHECK(run("").status != 0);
  fs::remove_all(dir);
}
