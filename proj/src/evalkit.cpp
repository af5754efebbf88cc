#include "tsimg/evalkit.hpp"

#include <algorithm>
#include <charconv>
#include <optional>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>

#include "tsimg/error.hpp"
#include "tsimg/fft.hpp"

namespace tsimg::eval {

void EvalConfig::validate() const {
  if (lookback < 1) throw ConfigError("lookback must be >= 1");
  if (horizons.empty()) throw ConfigError("at least one horizon is required");
  for (auto h : horizons) {
    if (h < 1) throw ConfigError("horizons must be >= 1");
  }
  if (betas.empty()) throw ConfigError("the rescale set must not be empty");
  for (double b : betas) {
    if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("rescale factors must be > 0");
  }
}

void PerturbationSpec::validate() const {
  if (!(noise_std >= 0.0)) throw ConfigError("noise std must be >= 0");
  if (!(harmonic_amplitude >= 0.0) || !(harmonic_frequency >= 0.0)) {
    throw ConfigError("harmonic amplitude and frequency must be >= 0");
  }
  if (!(missing_probability >= 0.0 && missing_probability <= 1.0)) {
    throw ConfigError("missing probability must lie in [0, 1]");
  }
}

std::string PerturbationSpec::tag() const {
  switch (kind) {
    case PerturbationKind::none: return "none";
    case PerturbationKind::gaussian_noise: return "gn_" + format_real(noise_std, 6);
    case PerturbationKind::harmonic:
      return "harmonic_" + (harmonic_amplitude > 0 ? format_real(harmonic_amplitude, 6) : "auto") +
             "_" + (harmonic_frequency > 0 ? format_real(harmonic_frequency, 6) : "auto");
    case PerturbationKind::missing: return "dm_" + format_real(missing_probability, 6);
  }
  return "?";
}

namespace {

double parse_real(std::string_view s, std::string_view context) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ConfigError("bad number '" + std::string(s) + "' in perturbation '" + std::string(context) + "'");
  }
  return v;
}

}  // namespace

PerturbationSpec PerturbationSpec::parse(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto colon = text.find(':', start);
    parts.push_back(text.substr(start, colon == std::string_view::npos ? colon : colon - start));
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  PerturbationSpec spec;
  const auto name = parts[0];
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (parts.size() < lo || parts.size() > hi) {
      throw ConfigError("wrong number of parameters in perturbation '" + std::string(text) + "'");
    }
  };
  if (name == "none") {
    need(1, 1);
  } else if (name == "gn" || name == "noise") {
    need(2, 2);
    spec.kind = PerturbationKind::gaussian_noise;
    spec.noise_std = parse_real(parts[1], text);
  } else if (name == "harmonic") {
    need(1, 3);
    spec.kind = PerturbationKind::harmonic;
    if (parts.size() > 1) spec.harmonic_amplitude = parse_real(parts[1], text);
    if (parts.size() > 2) spec.harmonic_frequency = parse_real(parts[2], text);
  } else if (name == "dm" || name == "missing") {
    need(2, 2);
    spec.kind = PerturbationKind::missing;
    spec.missing_probability = parse_real(parts[1], text);
  } else {
    throw ConfigError("unknown perturbation '" + std::string(text) +
                      "' (expected none, gn:<std>, harmonic[:<amp>[:<freq>]], dm:<p>)");
  }
  spec.validate();
  return spec;
}

std::size_t rescaled_length(std::size_t L, double beta) {
  // nearbyint honours the default round-to-nearest-even mode.
  return static_cast<std::size_t>(std::nearbyint(beta * static_cast<double>(L)));
}

namespace {

struct Knot {
  std::size_t index;
  double frac;
};

std::vector<Knot> knots(std::size_t L, double beta) {
  if (!(beta > 0.0)) throw InputError("rescale factor must be > 0");
  if (L < 2) throw InputError("TSI needs at least 2 samples");
  const std::size_t n = rescaled_length(L, beta);
  if (n < 2) throw InputError("rescaled length " + std::to_string(n) + " is below 2");
  std::vector<Knot> out(n);
  const double scale = static_cast<double>(L - 1);
  const double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) * scale / denom;
    auto k = static_cast<std::size_t>(std::floor(x));
    if (k >= L - 1) k = L - 1;
    out[i] = {k, x - static_cast<double>(k)};
  }
  out.back() = {L - 1, 0.0};
  return out;
}

double interpolate(std::span<const double> x, const Knot& kn) {
  if (kn.frac == 0.0) return x[kn.index];
  return x[kn.index] + kn.frac * (x[kn.index + 1] - x[kn.index]);
}

}  // namespace

TimeSeries tsi_rescale(const TimeSeries& series, double beta) {
  const auto ks = knots(series.length(), beta);
  std::vector<double> out;
  out.reserve(series.channels() * ks.size());
  for (std::size_t c = 0; c < series.channels(); ++c) {
    const auto ch = series.channel(c);
    for (const auto& kn : ks) out.push_back(interpolate(ch, kn));
  }
  return TimeSeries(series.channels(), ks.size(), std::move(out));
}

MaskedSeries tsi_rescale(const MaskedSeries& series, double beta) {
  const auto ks = knots(series.values.length(), beta);
  std::vector<std::uint8_t> missing;
  missing.reserve(series.values.channels() * ks.size());
  for (std::size_t c = 0; c < series.values.channels(); ++c) {
    const auto m = series.channel_mask(c);
    for (const auto& kn : ks) {
      const bool miss = m[kn.index] || (kn.frac > 0.0 && m[kn.index + 1]);
      missing.push_back(miss ? 1 : 0);
    }
  }
  return MaskedSeries(tsi_rescale(series.values, beta), std::move(missing));
}

namespace {

double dominant_frequency(std::span<const double> x) {
  const auto spec = rfft(x);
  std::size_t best = 1;
  double best_mag = -1.0;
  for (std::size_t k = 1; k < spec.size(); ++k) {
    const double mag = std::abs(spec[k]);
    if (mag > best_mag) {
      best_mag = mag;
      best = k;
    }
  }
  return static_cast<double>(best) / static_cast<double>(x.size());
}

}  // namespace

MaskedSeries perturb(const TimeSeries& series, const PerturbationSpec& spec, RngStream stream) {
  spec.validate();
  const std::size_t L = series.length();
  std::vector<double> values = series.values();
  std::vector<std::uint8_t> missing(values.size(), 0);
  Rng rng(stream);

  switch (spec.kind) {
    case PerturbationKind::none:
      break;
    case PerturbationKind::gaussian_noise:
      if (spec.noise_std > 0.0) {
        for (double& v : values) v += spec.noise_std * rng.normal();
      }
      break;
    case PerturbationKind::harmonic:
      for (std::size_t c = 0; c < series.channels(); ++c) {
        const auto ch = series.channel(c);
        const double amp = spec.harmonic_amplitude > 0.0 ? spec.harmonic_amplitude : 0.3 * stddev(ch);
        const double freq = spec.harmonic_frequency > 0.0
                                ? spec.harmonic_frequency
                                : (L >= 2 ? 2.0 * dominant_frequency(ch) : 0.0);
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        for (std::size_t t = 0; t < L; ++t) {
          values[c * L + t] +=
              amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(t) + phase);
        }
      }
      break;
    case PerturbationKind::missing:
      for (auto& m : missing) m = rng.uniform() < spec.missing_probability ? 1 : 0;
      for (std::size_t c = 0; c < series.channels(); ++c) {
        const auto off = c * L;
        auto filled = carry_forward(std::span<const double>(values).subspan(off, L),
                                    std::span<const std::uint8_t>(missing).subspan(off, L));
        std::copy(filled.begin(), filled.end(), values.begin() + static_cast<std::ptrdiff_t>(off));
      }
      break;
  }
  return MaskedSeries(TimeSeries(series.channels(), L, std::move(values)), std::move(missing));
}

void EvalReport::append(const EvalReport& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
  aggregates.insert(aggregates.end(), other.aggregates.begin(), other.aggregates.end());
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "dataset,horizon,beta,scenario,mse,mae,windows,status\n";
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.horizon << ',' << format_real(r.beta, 6) << ',' << r.scenario << ',';
    if (r.skipped) {
      out << ",," << r.windows << ",skipped\n";
    } else {
      out << format_real(r.mse) << ',' << format_real(r.mae) << ',' << r.windows << ",ok\n";
    }
  }
  out << "\ndataset,horizon,scenario,remse,remae,betas_used\n";
  for (const auto& a : aggregates) {
    out << a.dataset << ',' << a.horizon << ',' << a.scenario << ',' << format_real(a.remse) << ','
        << format_real(a.remae) << ',' << a.betas_used << '\n';
  }
  return out.str();
}

std::string EvalReport::summary() const {
  const bool has_all = std::any_of(aggregates.begin(), aggregates.end(),
                                   [](const AggregateRow& a) { return a.dataset == "ALL"; });
  std::string out;
  char line[512];
  for (const auto& a : aggregates) {
    if (has_all && a.dataset != "ALL") continue;
    std::snprintf(line, sizeof line, "%s horizon=%zu scenario=%s ReMSE=%.6f ReMAE=%.6f\n",
                  a.dataset.c_str(), a.horizon, a.scenario.c_str(), a.remse, a.remae);
    out += line;
  }
  return out;
}

EvalReport remetrics(const TimeSeries& truth, const ForecasterHandle& model, const EvalConfig& cfg,
                     std::string_view dataset, std::string_view scenario) {
  return remetrics(MaskedSeries(truth), truth, model, cfg, dataset, scenario);
}

EvalReport remetrics(const MaskedSeries& input, const TimeSeries& truth, const ForecasterHandle& model,
                     const EvalConfig& cfg, std::string_view dataset, std::string_view scenario) {
  cfg.validate();
  if (input.values.channels() != truth.channels() || input.values.length() != truth.length()) {
    throw InputError("perturbed input and truth differ in shape");
  }
  const std::size_t T = cfg.lookback;
  EvalReport report;

  // Rescaling is independent of the horizon; do it once per beta.
  struct Rescaled {
    MaskedSeries input;
    TimeSeries truth;
  };
  std::vector<std::optional<Rescaled>> rescaled;
  for (double beta : cfg.betas) {
    const auto n = rescaled_length(truth.length(), beta);
    if (truth.length() < 2 || n < 2) {
      rescaled.emplace_back(std::nullopt);
    } else {
      rescaled.emplace_back(Rescaled{tsi_rescale(input, beta), tsi_rescale(truth, beta)});
    }
  }

  for (std::size_t H : cfg.horizons) {
    const std::size_t stride = cfg.stride_for(H);
    AggregateRow agg{std::string(dataset), H, std::string(scenario), 0.0, 0.0, 0};
    for (std::size_t b = 0; b < cfg.betas.size(); ++b) {
      MetricRow row{std::string(dataset), H, cfg.betas[b], std::string(scenario)};
      double sq = 0.0, ab = 0.0;
      if (rescaled[b]) {
        const auto& rs = *rescaled[b];
        const std::size_t n = rs.truth.length();
        for (std::size_t start = 0; start + T + H <= n; start += stride) {
          ++row.windows;
          for (std::size_t c = 0; c < truth.channels(); ++c) {
            const auto in = rs.input.values.channel(c).subspan(start, T);
            const auto future = rs.truth.channel(c).subspan(start + T, H);
            const auto mask = rs.input.channel_mask(c).subspan(start + T, H);
            const auto pred = predict_series(model, in, H, future);
            for (std::size_t j = 0; j < H; ++j) {
              if (mask[j]) continue;
              const double e = pred[j] - future[j];
              sq += e * e;
              ab += std::abs(e);
              ++row.points;
            }
          }
        }
      }
      row.skipped = row.points == 0;
      if (!row.skipped) {
        row.mse = sq / static_cast<double>(row.points);
        row.mae = ab / static_cast<double>(row.points);
        agg.remse += row.mse;
        agg.remae += row.mae;
        ++agg.betas_used;
      }
      report.rows.push_back(std::move(row));
    }
    if (agg.betas_used == 0) {
      throw EvaluationError("dataset '" + std::string(dataset) + "': no scorable window for horizon " +
                            std::to_string(H) + " at any rescale factor (series length " +
                            std::to_string(truth.length()) + ", lookback " + std::to_string(T) + ")");
    }
    agg.remse /= static_cast<double>(agg.betas_used);
    agg.remae /= static_cast<double>(agg.betas_used);
    report.aggregates.push_back(std::move(agg));
  }
  return report;
}

std::vector<std::filesystem::path> dataset_files(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
      const auto name = entry.path().filename().string();
      if (name == "manifest.csv" || name.rfind("report", 0) == 0 || name.find(".mask.") != std::string::npos) {
        continue;
      }
      files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(path)) {
    files.push_back(path);
  }
  if (files.empty()) throw InputError("no dataset CSV found at " + path.string());
  return files;
}

EvalReport run_benchmark(const std::filesystem::path& dataset, std::string_view model_id,
                         const EvalConfig& cfg, std::span<const PerturbationSpec> perturbations,
                         std::uint64_t seed) {
  const auto& model = find_model(model_id);
  cfg.validate();
  std::vector<PerturbationSpec> scenarios(perturbations.begin(), perturbations.end());
  if (scenarios.empty()) scenarios.push_back({});
  for (const auto& s : scenarios) s.validate();

  const auto files = dataset_files(dataset);
  EvalReport report;
  const RngStream root{seed, 0};
  for (std::size_t d = 0; d < files.size(); ++d) {
    const auto truth = read_series_csv(files[d]);
    const auto name = files[d].stem().string();
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
      // Every scenario on a dataset draws from the same stream, so scenarios
      // are compared on common random numbers.
      const auto input = perturb(truth, scenarios[i], root.child(d));
      report.append(remetrics(input, truth, model, cfg, name, scenarios[i].tag()));
    }
  }

  if (files.size() > 1) {
    // Mean over datasets, in first-appearance order of (horizon, scenario).
    std::vector<AggregateRow> overall;
    std::vector<std::size_t> counts;
    for (const auto& a : report.aggregates) {
      auto it = std::find_if(overall.begin(), overall.end(), [&](const AggregateRow& o) {
        return o.horizon == a.horizon && o.scenario == a.scenario;
      });
      if (it == overall.end()) {
        overall.push_back({"ALL", a.horizon, a.scenario, 0.0, 0.0, 0});
        counts.push_back(0);
        it = std::prev(overall.end());
      }
      const auto idx = static_cast<std::size_t>(it - overall.begin());
      it->remse += a.remse;
      it->remae += a.remae;
      it->betas_used = std::max(it->betas_used, a.betas_used);
      ++counts[idx];
    }
    for (std::size_t i = 0; i < overall.size(); ++i) {
      overall[i].remse /= static_cast<double>(counts[i]);
      overall[i].remae /= static_cast<double>(counts[i]);
      report.aggregates.push_back(overall[i]);
    }
  }
  return report;
}

}  // namespace tsimg::eval
