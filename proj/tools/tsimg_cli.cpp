// tsimg: synthetic generation, image encode/decode, MS* tables and
// rescale-based benchmarks from the command line.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tsimg/baseline.hpp"
#include "tsimg/error.hpp"
#include "tsimg/evalkit.hpp"
#include "tsimg/imageio.hpp"
#include "tsimg/imgspace.hpp"
#include "tsimg/realts.hpp"
#include "tsimg/se_theory.hpp"
#include "tsimg/series.hpp"

namespace fs = std::filesystem;
using namespace tsimg;

namespace {

int g_verbosity = 1;

void log(int level, const std::string& msg) {
  if (level <= g_verbosity) std::cerr << "tsimg: " << msg << '\n';
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    std::string item = text.substr(start, end - start);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) {
      T v{};
      auto res = std::from_chars(item.data(), item.data() + item.size(), v);
      if (res.ec != std::errc{} || res.ptr != item.data() + item.size()) {
        throw ConfigError(std::string("bad value '") + item + "' in " + what);
      }
      out.push_back(v);
    }
    start = end + 1;
  }
  return out;
}

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  unsigned threads = 0;
  int verbose = 0;
  bool quiet = false;
};

struct GenerateArgs {
  std::size_t n = 100;
  std::size_t length = 512;
  double alpha = 0.5;
  double noise_ratio = 0.05;
  bool augment = true;
  double augment_probability = 0.2;
};

struct EncodeArgs {
  std::vector<std::string> inputs;
  std::size_t h = 128;
  double ms = 3.5;
  bool normalize = true;
  std::size_t lookback = 0;
};

struct DecodeArgs {
  std::vector<std::string> inputs;
};

struct SolveArgs {
  std::string h_list = "32,64,128,256,512";
  std::string k_list = "1,1.5,2";
};

struct EvaluateArgs {
  std::string dataset;
  std::string model;
  std::size_t lookback = 512;
  std::string horizons = "96,192,336,720";
  std::string betas = "0.5,0.66,1,1.5,2";
  std::size_t stride = 0;
  std::vector<std::string> perturbations;
  std::string report = "report.csv";
};

struct PerturbArgs {
  std::vector<std::string> inputs;
  std::string spec = "none";
};

unsigned thread_count(const Globals& g, std::size_t work) {
  unsigned t = g.threads != 0 ? g.threads : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(t, std::max<std::size_t>(work, 1)));
}

fs::path ensure_out(const Globals& g) {
  fs::path dir(g.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  }
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  write_file_atomic(path, text);
  log(2, "wrote " + path.string());
}

std::string series_csv(const TimeSeries& s) {
  std::ostringstream out;
  write_series_csv(out, s);
  return out.str();
}

std::string mask_csv(const MaskedSeries& s) {
  std::ostringstream out;
  write_mask_csv(out, s);
  return out.str();
}

void run_generate(const Globals& g, const GenerateArgs& a) {
  realts::GeneratorConfig cfg;
  cfg.length = a.length;
  cfg.alpha = a.alpha;
  cfg.noise_ratio = a.noise_ratio;
  cfg.augment_enabled = a.augment;
  cfg.augment.probability = a.augment_probability;
  cfg.validate();
  const auto dir = ensure_out(g);
  const std::uint64_t seed = *g.seed;

  std::vector<std::string> manifest_rows(a.n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < a.n; i = next++) {
      try {
        const RngStream stream{seed, i};
        auto sample = realts::sample_series(cfg, stream);
        char name[32];
        std::snprintf(name, sizeof name, "series_%06zu.csv", i);
        write_file_atomic(dir / name, series_csv(sample.series));
        std::ostringstream row;
        row << i << ',' << seed << ',' << i << ',' << realts::to_string(sample.hypothesis) << ','
            << realts::to_string(sample.behavior) << ',' << sample.series.length() << '\n';
        manifest_rows[i] = row.str();
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = a.n;
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned nt = thread_count(g, a.n);
  for (unsigned t = 0; t < nt; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::string manifest = "id,seed,stream,hypothesis,behavior,length\n";
  for (const auto& r : manifest_rows) manifest += r;
  write_text(dir / "manifest.csv", manifest);
  log(1, "generated " + std::to_string(a.n) + " series in " + dir.string());
}

void run_encode(const Globals& g, const EncodeArgs& a) {
  SpaceParams params{a.h, a.ms};
  params.validate();
  const auto dir = ensure_out(g);
  for (const auto& input : a.inputs) {
    const auto series = read_series_csv(fs::path(input));
    std::optional<NormStats> stats;
    TimeSeries scaled = series;
    if (a.normalize) {
      const std::size_t lb = a.lookback == 0 ? series.length() : std::min(a.lookback, series.length());
      auto [norm, st] = normalize(series, lb);
      scaled = std::move(norm);
      stats = std::move(st);
    }
    const auto image = encode(scaled, params);
    const auto stem = dir / fs::path(input).stem();
    save_image(stem, image, stats);
    log(1, "encoded " + input + " -> " + metadata_path(stem).string());
  }
}

void run_decode(const Globals& g, const DecodeArgs& a) {
  const auto dir = ensure_out(g);
  for (const auto& input : a.inputs) {
    const auto loaded = load_image(fs::path(input));
    auto decoded = decode_masked(loaded.image);
    TimeSeries values = decoded.values;
    if (loaded.meta.normalization) values = denormalize(values, *loaded.meta.normalization);
    const auto stem = fs::path(input).stem().string();
    write_text(dir / (stem + ".csv"), series_csv(values));
    if (loaded.image.has_missing()) {
      write_text(dir / (stem + ".mask.csv"), mask_csv(MaskedSeries(values, decoded.missing)));
    }
    log(1, "decoded " + input + " -> " + (dir / (stem + ".csv")).string());
  }
}

void run_solve_ms(const Globals& g, const SolveArgs& a) {
  const auto hs = parse_list<std::size_t>(a.h_list, "--heights");
  const auto ks = parse_list<double>(a.k_list, "--variances");
  std::string table = "h,k,ms_star,residual\n";
  for (auto h : hs) {
    for (double k : ks) {
      const auto sol = se::optimal_ms(h, k);
      char line[160];
      std::snprintf(line, sizeof line, "%zu,%s,%.6f,%.3e\n", h, format_real(k).c_str(), sol.max_scale,
                    sol.residual);
      table += line;
    }
  }
  std::cout << table;
  write_text(ensure_out(g) / "ms_star.csv", table);
}

void run_evaluate(const Globals& g, const EvaluateArgs& a) {
  eval::EvalConfig cfg;
  cfg.lookback = a.lookback;
  cfg.horizons = parse_list<std::size_t>(a.horizons, "--horizons");
  cfg.betas = parse_list<double>(a.betas, "--betas");
  cfg.stride = a.stride;
  cfg.validate();
  std::vector<eval::PerturbationSpec> specs;
  for (const auto& p : a.perturbations) specs.push_back(eval::PerturbationSpec::parse(p));
  const auto report = eval::run_benchmark(fs::path(a.dataset), a.model, cfg, specs, *g.seed);
  const auto dir = ensure_out(g);
  write_text(dir / a.report, report.to_csv());
  std::cout << report.summary();
}

void run_perturb(const Globals& g, const PerturbArgs& a) {
  const auto spec = eval::PerturbationSpec::parse(a.spec);
  const auto dir = ensure_out(g);
  const RngStream root{*g.seed, 0};
  for (std::size_t i = 0; i < a.inputs.size(); ++i) {
    const auto series = read_series_csv(fs::path(a.inputs[i]));
    const auto out = eval::perturb(series, spec, root.child(i));
    const auto stem = fs::path(a.inputs[i]).stem().string() + "_" + spec.tag();
    write_text(dir / (stem + ".csv"), series_csv(out.values));
    write_text(dir / (stem + ".mask.csv"), mask_csv(out));
  }
}

void run_list_models() {
  std::printf("%-20s %-10s %-13s %-12s %s\n", "id", "space", "max_lookback", "max_horizon",
              "description");
  for (const auto& m : register_baselines()) {
    auto cap = [](std::size_t v) { return v == std::numeric_limits<std::size_t>::max() ? std::string("-") : std::to_string(v); };
    std::printf("%-20s %-10s %-13s %-12s %s\n", m.id.c_str(), std::string(to_string(m.space)).c_str(),
                cap(m.capability.max_lookback).c_str(), cap(m.capability.max_horizon).c_str(),
                m.description.c_str());
  }
}

std::string option_lines(const CLI::App& app) {
  std::string out;
  for (const CLI::Option* opt : app.get_options()) {
    const auto name = opt->get_single_name();
    if (name == "help" || name == "config" || name.empty()) continue;
    std::vector<std::string> values = opt->count() > 0 ? opt->reduced_results() : std::vector<std::string>{};
    if (values.empty()) {
      if (opt->get_default_str().empty()) continue;
      values.push_back(opt->get_default_str());
    }
    out += name + " =";
    for (const auto& v : values) out += " \"" + v + "\"";
    out += '\n';
  }
  return out;
}

/// Global options plus the active subcommand's section. Feeding the file back
/// through --config (with the same subcommand) replays the run.
std::string resolved_config(const CLI::App& app, const CLI::App& sub) {
  return option_lines(app) + "\n[" + sub.get_name() + "]\n" + option_lines(sub);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const InputError*>(&e) || dynamic_cast<const StructuralError*>(&e)) return 3;
  if (dynamic_cast<const EvaluationError*>(&e)) return 4;
  if (dynamic_cast<const IoError*>(&e)) return 5;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time series <-> binary image toolkit: synthetic data, encoding, MS* tables, benchmarks"};
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  app.set_config("--config", "", "Read options from an INI file (flags override it)");
  app.require_subcommand(1);

  Globals g;
  app.add_option("--seed", g.seed, "Master seed (chosen at random and recorded when omitted)");
  app.add_option("--out", g.out_dir, "Output directory")->envname("TSIMG_OUT_DIR")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = hardware)")->envname("TSIMG_THREADS")
      ->capture_default_str();
  app.add_flag("-v,--verbose", g.verbose, "More log output (repeatable)");
  app.add_flag("-q,--quiet", g.quiet, "Errors only");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write synthetic series plus manifest.csv")->configurable();
  generate->add_option("-n,--count", gen.n, "Number of series")->capture_default_str();
  generate->add_option("--length", gen.length, "Samples per series")->capture_default_str();
  generate->add_option("--alpha", gen.alpha, "Probability of the periodic hypothesis")->capture_default_str();
  generate->add_option("--noise-ratio", gen.noise_ratio, "Noise std relative to signal std")
      ->capture_default_str();
  generate->add_option("--augment", gen.augment, "Apply augmentation (true/false)")->capture_default_str();
  generate->add_option("--augment-probability", gen.augment_probability, "Per-transform probability")
      ->capture_default_str();

  EncodeArgs enc;
  auto* encode_cmd = app.add_subcommand("encode", "Series CSV -> binary image (PGM per channel + .meta)")
                         ->configurable();
  encode_cmd->add_option("inputs", enc.inputs, "Series CSV files")->required();
  encode_cmd->add_option("--height", enc.h, "Image height (bins)")->capture_default_str();
  encode_cmd->add_option("--ms", enc.ms, "Maximum scale")->capture_default_str();
  encode_cmd->add_flag("--normalize,!--no-normalize", enc.normalize, "Standardise before encoding")
      ->capture_default_str();
  encode_cmd->add_option("--lookback", enc.lookback, "Normalisation window (0 = whole series)")
      ->capture_default_str();

  DecodeArgs dec;
  auto* decode_cmd = app.add_subcommand("decode", "Binary image (.meta) -> series CSV")->configurable();
  decode_cmd->add_option("inputs", dec.inputs, "Image metadata files")->required();

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve-ms", "Tabulate the bound-minimising maximum scale")
                        ->configurable();
  solve_cmd->add_option("--heights", solve.h_list, "Comma-separated image heights")->capture_default_str();
  solve_cmd->add_option("--variances", solve.k_list, "Comma-separated data variances k")->capture_default_str();

  EvaluateArgs ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "ReMSE/ReMAE benchmark of a registered model")
                       ->configurable();
  eval_cmd->add_option("dataset", ev.dataset, "Series CSV or directory of CSVs")->required();
  eval_cmd->add_option("--model", ev.model, "Model id (see list-models)")->required();
  eval_cmd->add_option("--lookback", ev.lookback, "Lookback length")->capture_default_str();
  eval_cmd->add_option("--horizons", ev.horizons, "Comma-separated horizons")->capture_default_str();
  eval_cmd->add_option("--betas", ev.betas, "Comma-separated rescale factors")->capture_default_str();
  eval_cmd->add_option("--stride", ev.stride, "Window stride (0 = horizon)")->capture_default_str();
  eval_cmd->add_option("--perturb", ev.perturbations,
                       "Scenario: none, gn:<std>, harmonic[:<amp>[:<freq>]], dm:<p> (repeatable)");
  eval_cmd->add_option("--report", ev.report, "Report file name inside --out")->capture_default_str();

  PerturbArgs pert;
  auto* perturb_cmd = app.add_subcommand("perturb", "Apply a perturbation scenario to series CSVs")
                          ->configurable();
  perturb_cmd->add_option("inputs", pert.inputs, "Series CSV files")->required();
  perturb_cmd->add_option("--spec", pert.spec, "Scenario, e.g. gn:0.1 or dm:0.3")->capture_default_str();

  auto* list_cmd = app.add_subcommand("list-models", "Show the model registry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  g_verbosity = g.quiet ? 0 : 1 + g.verbose;

  try {
    if (!g.seed) {
      g.seed = std::uniform_int_distribution<std::uint64_t>()(*std::make_unique<std::random_device>());
      app.get_option("--seed")->add_result(std::to_string(*g.seed));
      log(2, "auto-selected seed " + std::to_string(*g.seed));
    }
    if (!list_cmd->parsed()) {
      const CLI::App* active = app.get_subcommands().front();
      write_text(ensure_out(g) / "resolved_config.ini", resolved_config(app, *active));
    }

    if (generate->parsed()) run_generate(g, gen);
    else if (encode_cmd->parsed()) run_encode(g, enc);
    else if (decode_cmd->parsed()) run_decode(g, dec);
    else if (solve_cmd->parsed()) run_solve_ms(g, solve);
    else if (eval_cmd->parsed()) run_evaluate(g, ev);
    else if (perturb_cmd->parsed()) run_perturb(g, pert);
    else if (list_cmd->parsed()) run_list_models();
  } catch (const std::exception& e) {
    std::cerr << "tsimg: error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}
