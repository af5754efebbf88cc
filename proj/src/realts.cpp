#include "tsimg/realts.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "tsimg/error.hpp"
#include "tsimg/fft.hpp"

namespace tsimg::realts {
namespace {

// Child-stream tags. Stable values: changing them changes every dataset.
constexpr std::uint64_t kTagBehavior = 1;
constexpr std::uint64_t kTagAugment = 2;
constexpr std::uint64_t kTagWaves = 3;
constexpr std::uint64_t kTagNoise = 4;
constexpr std::uint64_t kTagReplicate = 10;
constexpr std::uint64_t kTagPerturb = 12;

void check_interval(const Interval& iv, const char* name) {
  if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi) {
    throw ConfigError(std::string(name) + ": interval bounds must be finite with lo <= hi");
  }
}

double draw(Rng& rng, const Interval& iv) {
  return iv.lo == iv.hi ? iv.lo : rng.uniform(iv.lo, iv.hi);
}

template <class T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[rng.uniform_int(0, items.size() - 1)];
}

std::size_t interior_bins(std::size_t L) { return (L - 1) / 2; }

}  // namespace

std::string_view to_string(Hypothesis h) {
  return h == Hypothesis::periodic ? "periodic" : "trend";
}

std::string_view to_string(Behavior b) {
  switch (b) {
    case Behavior::ifftb: return "IFFTB";
    case Behavior::pwb: return "PWB";
    case Behavior::rwb: return "RWB";
    case Behavior::lgb: return "LGB";
    case Behavior::twdb: return "TWDB";
  }
  return "?";
}

Hypothesis hypothesis_of(Behavior b) {
  return (b == Behavior::ifftb || b == Behavior::pwb) ? Hypothesis::periodic : Hypothesis::trend;
}

void GeneratorConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (length < 2) throw ConfigError("length must be at least 2");
  if (alpha > 0.0 && periodic_behaviors.empty()) {
    throw ConfigError("alpha > 0 requires at least one periodic behavior");
  }
  if (alpha < 1.0 && trend_behaviors.empty()) {
    throw ConfigError("alpha < 1 requires at least one trend behavior");
  }
  for (auto b : periodic_behaviors) {
    if (hypothesis_of(b) != Hypothesis::periodic) {
      throw ConfigError(std::string(to_string(b)) + " is not a periodic behavior");
    }
  }
  for (auto b : trend_behaviors) {
    if (hypothesis_of(b) != Hypothesis::trend) {
      throw ConfigError(std::string(to_string(b)) + " is not a trend behavior");
    }
  }
  check_interval(wave_amplitude, "wave_amplitude");
  if (wave_amplitude.lo < 0.0) throw ConfigError("wave_amplitude must be nonnegative");
  if (wave_log_wavelength) check_interval(*wave_log_wavelength, "wave_log_wavelength");
  if (wave_count_max < 1) throw ConfigError("wave_count_max must be at least 1");
  if (waveforms.empty()) throw ConfigError("waveforms must not be empty");
  if (!(rwb_sigma > 0.0) || !std::isfinite(rwb_sigma)) throw ConfigError("rwb_sigma must be > 0");
  check_interval(lgb_log_capacity, "lgb_log_capacity");
  check_interval(lgb_log_rate, "lgb_log_rate");
  check_interval(lgb_midpoint_fraction, "lgb_midpoint_fraction");
  check_interval(twdb_slope, "twdb_slope");
  check_interval(twdb_intercept, "twdb_intercept");
  if (!(noise_ratio >= 0.0) || !std::isfinite(noise_ratio)) {
    throw ConfigError("noise_ratio must be >= 0");
  }
  if (spectral_priors.empty()) throw ConfigError("spectral_priors must not be empty");
  check_interval(power_law_exponent, "power_law_exponent");
  if (!(amplitude_jitter >= 0.0)) throw ConfigError("amplitude_jitter must be >= 0");
  if (!(augment.probability >= 0.0 && augment.probability <= 1.0)) {
    throw ConfigError("augment.probability must lie in [0, 1]");
  }
  if (augment.max_replicas < 2) throw ConfigError("augment.max_replicas must be at least 2");
  if (augment.smooth_window < 1) throw ConfigError("augment.smooth_window must be at least 1");
  check_interval(augment.perturb_magnitude, "augment.perturb_magnitude");
}

Interval GeneratorConfig::log_wavelength(std::size_t L) const {
  if (wave_log_wavelength) return *wave_log_wavelength;
  return {std::log(11.0), std::log(2.0 * static_cast<double>(L))};
}

double periodic_value(Waveform shape, double phase) {
  switch (shape) {
    case Waveform::sine: return std::sin(phase);
    case Waveform::cosine: return std::cos(phase);
    case Waveform::triangle: return 2.0 / std::numbers::pi * std::asin(std::sin(phase));
    case Waveform::square: return std::sin(phase) >= 0.0 ? 1.0 : -1.0;
  }
  return 0.0;
}

std::vector<double> wave_sum(std::span<const WaveComponent> waves, std::size_t L) {
  std::vector<double> out(L, 0.0);
  for (const auto& w : waves) {
    const double omega = 2.0 * std::numbers::pi / w.wavelength;
    for (std::size_t t = 0; t < L; ++t) {
      out[t] += w.amplitude * periodic_value(w.shape, omega * static_cast<double>(t));
    }
  }
  return out;
}

std::vector<double> synthesize_spectrum(const Spectrum& spectrum, std::size_t L) {
  const std::size_t bins = L / 2 + 1;
  if (spectrum.amplitude.size() != bins || spectrum.phase.size() != bins) {
    throw InputError("spectrum must hold L/2+1 amplitude and phase bins");
  }
  const double n = static_cast<double>(L);
  std::vector<std::complex<double>> half(bins);
  for (std::size_t m = 0; m < bins; ++m) {
    const bool real_bin = m == 0 || (L % 2 == 0 && m == L / 2);
    const double a = spectrum.amplitude[m];
    if (real_bin) {
      half[m] = {n * a * std::cos(spectrum.phase[m]), 0.0};
    } else {
      half[m] = std::polar(0.5 * n * a, spectrum.phase[m]);
    }
  }
  return irfft(half, L);
}

std::vector<double> logistic_curve(const LogisticParams& p, std::size_t L) {
  std::vector<double> out(L);
  for (std::size_t t = 0; t < L; ++t) {
    out[t] = p.capacity / (1.0 + std::exp(-p.rate * (static_cast<double>(t) - p.midpoint)));
  }
  return out;
}

std::vector<double> trend_wave(const TrendWaveParams& p, std::size_t L) {
  auto out = wave_sum(p.waves, L);
  for (std::size_t t = 0; t < L; ++t) out[t] += p.slope * static_cast<double>(t) + p.intercept;
  return out;
}

std::vector<WaveComponent> sample_waves(const GeneratorConfig& cfg, std::size_t L, RngStream stream) {
  Rng rng(stream);
  const auto count = rng.uniform_int(1, static_cast<std::uint64_t>(cfg.wave_count_max));
  const Interval log_wl = cfg.log_wavelength(L);
  std::vector<WaveComponent> waves(count);
  for (auto& w : waves) {
    w.amplitude = draw(rng, cfg.wave_amplitude);
    w.wavelength = std::exp(draw(rng, log_wl));
    w.shape = pick(rng, cfg.waveforms);
  }
  return waves;
}

Spectrum sample_spectrum(const GeneratorConfig& cfg, std::size_t L, RngStream stream) {
  Rng rng(stream);
  Spectrum s;
  s.prior = pick(rng, cfg.spectral_priors);
  s.amplitude.assign(L / 2 + 1, 0.0);
  s.phase.assign(L / 2 + 1, 0.0);
  const std::size_t M = interior_bins(L);
  if (M == 0) return s;

  auto jitter = [&] { return std::abs(1.0 + cfg.amplitude_jitter * rng.normal()); };
  if (s.prior == SpectralPrior::power_law) {
    const double gamma = draw(rng, cfg.power_law_exponent);
    for (std::size_t m = 1; m <= M; ++m) {
      s.amplitude[m] = std::pow(static_cast<double>(m), -gamma) * jitter();
    }
  } else {
    const std::size_t lo = rng.uniform_int(1, M);
    const std::size_t width = rng.uniform_int(1, std::max<std::size_t>(1, M / 8));
    const std::size_t hi = std::min(M, lo + width - 1);
    for (std::size_t m = lo; m <= hi; ++m) s.amplitude[m] = jitter();
  }
  for (std::size_t m = 1; m <= M; ++m) s.phase[m] = rng.uniform(-std::numbers::pi, std::numbers::pi);
  return s;
}

LogisticParams sample_logistic(const GeneratorConfig& cfg, std::size_t L, RngStream stream) {
  Rng rng(stream);
  LogisticParams p;
  p.capacity = std::exp(draw(rng, cfg.lgb_log_capacity));
  p.rate = std::exp(draw(rng, cfg.lgb_log_rate));
  p.midpoint = draw(rng, cfg.lgb_midpoint_fraction) * static_cast<double>(L);
  return p;
}

TrendWaveParams sample_trend_wave(const GeneratorConfig& cfg, std::size_t L, RngStream stream) {
  Rng rng(stream);
  TrendWaveParams p;
  p.slope = draw(rng, cfg.twdb_slope);
  p.intercept = draw(rng, cfg.twdb_intercept);
  // Same child stream as gen_pwb, so a zero trend reproduces PWB exactly.
  p.waves = sample_waves(cfg, L, stream.child(kTagWaves));
  return p;
}

void add_noise(std::vector<double>& signal, double ratio, RngStream stream) {
  const double sigma = ratio * stddev(signal);
  if (!(sigma > 0.0)) return;
  Rng rng(stream);
  for (double& v : signal) v += sigma * rng.normal();
}

TimeSeries gen_ifftb(const GeneratorConfig& cfg, std::size_t L, RngStream rng) {
  if (L < 2) throw ConfigError("IFFTB needs L >= 2");
  return TimeSeries::univariate(synthesize_spectrum(sample_spectrum(cfg, L, rng), L));
}

TimeSeries gen_pwb(const GeneratorConfig& cfg, std::size_t L, RngStream rng) {
  if (L < 2) throw ConfigError("PWB needs L >= 2");
  auto signal = wave_sum(sample_waves(cfg, L, rng.child(kTagWaves)), L);
  add_noise(signal, cfg.noise_ratio, rng.child(kTagNoise));
  return TimeSeries::univariate(std::move(signal));
}

TimeSeries gen_rwb(double sigma, std::size_t L, RngStream stream) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("random walk sigma must be > 0");
  if (L < 1) throw ConfigError("random walk needs L >= 1");
  Rng rng(stream);
  std::vector<double> out(L, 0.0);
  for (std::size_t i = 1; i < L; ++i) out[i] = out[i - 1] + sigma * rng.normal();
  return TimeSeries::univariate(std::move(out));
}

TimeSeries gen_lgb(const GeneratorConfig& cfg, std::size_t L, RngStream rng) {
  if (L < 2) throw ConfigError("LGB needs L >= 2");
  auto signal = logistic_curve(sample_logistic(cfg, L, rng), L);
  add_noise(signal, cfg.noise_ratio, rng.child(kTagNoise));
  return TimeSeries::univariate(std::move(signal));
}

TimeSeries gen_twdb(const GeneratorConfig& cfg, std::size_t L, RngStream rng) {
  if (L < 2) throw ConfigError("TWDB needs L >= 2");
  auto signal = trend_wave(sample_trend_wave(cfg, L, rng), L);
  add_noise(signal, cfg.noise_ratio, rng.child(kTagNoise));
  return TimeSeries::univariate(std::move(signal));
}

std::vector<double> replicate(std::span<const double> x, int replicas) {
  if (replicas < 1) throw InputError("replicas must be >= 1");
  const std::size_t L = x.size();
  const std::size_t segment = std::max<std::size_t>(1, (L + replicas - 1) / replicas);
  std::vector<double> out(L);
  for (std::size_t t = 0; t < L; ++t) out[t] = x[t % segment];
  return out;
}

std::vector<double> flip(std::span<const double> x) {
  return std::vector<double>(x.rbegin(), x.rend());
}

std::vector<double> smooth_detrend(std::span<const double> x, std::size_t window) {
  const std::size_t L = x.size();
  const std::size_t half = std::min(window, L) / 2;
  std::vector<double> prefix(L + 1, 0.0);
  for (std::size_t i = 0; i < L; ++i) prefix[i + 1] = prefix[i] + x[i];
  std::vector<double> out(L);
  for (std::size_t t = 0; t < L; ++t) {
    const std::size_t lo = t >= half ? t - half : 0;
    const std::size_t hi = std::min(L, t + half + 1);
    const double trend = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
    out[t] = x[t] - trend;
  }
  return out;
}

std::vector<double> inject(std::span<const double> x, std::size_t index, double delta,
                           Disturbance kind) {
  if (index >= x.size()) throw InputError("disturbance index out of range");
  std::vector<double> out(x.begin(), x.end());
  if (kind == Disturbance::spike) {
    out[index] += delta;
  } else {
    for (std::size_t t = index; t < out.size(); ++t) out[t] += delta;
  }
  return out;
}

TimeSeries augment(const TimeSeries& series, const GeneratorConfig& cfg, RngStream stream) {
  const auto& a = cfg.augment;
  Rng gate(stream);
  // One gate draw per step regardless of the flags keeps streams aligned.
  const bool do_replicate = gate.uniform() < a.probability && a.replicate;
  const bool do_flip = gate.uniform() < a.probability && a.flip;
  const bool do_smooth = gate.uniform() < a.probability && a.smooth_detrend;
  const bool do_perturb = gate.uniform() < a.probability && a.perturb;
  if (!(do_replicate || do_flip || do_smooth || do_perturb)) return series;

  std::vector<std::vector<double>> channels;
  for (std::size_t c = 0; c < series.channels(); ++c) {
    auto ch = series.channel(c);
    std::vector<double> x(ch.begin(), ch.end());
    if (do_replicate) {
      Rng rng(stream.child(kTagReplicate));
      x = replicate(x, static_cast<int>(rng.uniform_int(2, a.max_replicas)));
    }
    if (do_flip) x = flip(x);
    if (do_smooth) x = smooth_detrend(x, a.smooth_window);
    if (do_perturb) {
      Rng rng(stream.child(kTagPerturb));
      const auto index = rng.uniform_int(0, x.size() - 1);
      const double scale = stddev(x) > 0.0 ? stddev(x) : 1.0;
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      const double delta = sign * draw(rng, a.perturb_magnitude) * scale;
      const auto kind = rng.uniform() < 0.5 ? Disturbance::spike : Disturbance::level_shift;
      x = inject(x, index, delta, kind);
    }
    channels.push_back(std::move(x));
  }
  return TimeSeries::from_channels(channels);
}

Sample sample_series(const GeneratorConfig& cfg, RngStream stream) {
  cfg.validate();
  Rng rng(stream);
  const bool periodic = rng.uniform() < cfg.alpha;
  const Behavior behavior = pick(rng, periodic ? cfg.periodic_behaviors : cfg.trend_behaviors);
  const std::size_t L = cfg.length;
  const RngStream sub = stream.child(kTagBehavior);

  auto series = [&] {
    switch (behavior) {
      case Behavior::ifftb: return gen_ifftb(cfg, L, sub);
      case Behavior::pwb: return gen_pwb(cfg, L, sub);
      case Behavior::rwb: return gen_rwb(cfg.rwb_sigma, L, sub);
      case Behavior::lgb: return gen_lgb(cfg, L, sub);
      case Behavior::twdb: return gen_twdb(cfg, L, sub);
    }
    throw InternalError("unknown behavior");
  }();
  if (cfg.augment_enabled) series = augment(series, cfg, stream.child(kTagAugment));
  return {std::move(series), periodic ? Hypothesis::periodic : Hypothesis::trend, behavior};
}

}  // namespace tsimg::realts
