#pragma once

// Synthetic series generator: a periodic/trend hypothesis mixture over five
// behaviour modes (inverse-FFT synthesis, periodic waves, random walk,
// logistic growth, trend plus waves), followed by optional augmentation.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tsimg/rng.hpp"
#include "tsimg/series.hpp"

namespace tsimg::realts {

enum class Hypothesis { periodic, trend };
enum class Behavior { ifftb, pwb, rwb, lgb, twdb };
enum class Waveform { sine, cosine, triangle, square };
enum class SpectralPrior { power_law, flat_band };

std::string_view to_string(Hypothesis h);
std::string_view to_string(Behavior b);
Hypothesis hypothesis_of(Behavior b);

/// Closed interval [lo, hi]; lo == hi pins the parameter.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct AugmentConfig {
  bool replicate = true;
  bool flip = true;
  bool smooth_detrend = true;
  bool perturb = true;
  /// Probability that each enabled augmentation fires on a given sample.
  double probability = 0.2;
  /// Replication factor drawn uniformly from {2..max_replicas}.
  int max_replicas = 4;
  /// Centred moving-average window used for detrending.
  std::size_t smooth_window = 25;
  /// Level-shift / spike size in units of the series std.
  Interval perturb_magnitude{1.0, 3.0};
};

struct GeneratorConfig {
  /// Probability of the periodic hypothesis.
  double alpha = 0.5;
  std::size_t length = 512;

  std::vector<Behavior> periodic_behaviors{Behavior::ifftb, Behavior::pwb};
  std::vector<Behavior> trend_behaviors{Behavior::rwb, Behavior::lgb, Behavior::twdb};

  Interval wave_amplitude{0.5, 5.0};
  /// Range of ln(wavelength in samples); unset means [ln 11, ln 2L].
  std::optional<Interval> wave_log_wavelength;
  int wave_count_max = 8;
  std::vector<Waveform> waveforms{Waveform::sine, Waveform::cosine, Waveform::triangle,
                                  Waveform::square};

  double rwb_sigma = 1.0;

  Interval lgb_log_capacity{0.0, 2.302585092994046};
  Interval lgb_log_rate{-6.907755278982137, -2.302585092994046};
  /// Midpoint L0 as a fraction of L.
  Interval lgb_midpoint_fraction{0.25, 0.75};

  Interval twdb_slope{-1.0, 1.0};
  Interval twdb_intercept{-10.0, 10.0};

  /// Observation noise sigma as a multiple of the noise-free signal std.
  double noise_ratio = 0.05;

  std::vector<SpectralPrior> spectral_priors{SpectralPrior::power_law, SpectralPrior::flat_band};
  Interval power_law_exponent{0.5, 1.5};
  /// Relative spread of per-bin amplitudes around the prior mean.
  double amplitude_jitter = 0.25;

  bool augment_enabled = true;
  AugmentConfig augment;

  /// Throws ConfigError when any field is outside its domain.
  void validate() const;
  [[nodiscard]] Interval log_wavelength(std::size_t L) const;
};

struct WaveComponent {
  double amplitude = 1.0;
  /// Period in samples; angular frequency per index is 2*pi/wavelength.
  double wavelength = 16.0;
  Waveform shape = Waveform::sine;
};

/// Half spectrum (bins 0..L/2) of an IFFT-synthesised series.
struct Spectrum {
  std::vector<double> amplitude;
  std::vector<double> phase;
  SpectralPrior prior = SpectralPrior::power_law;
};

struct LogisticParams {
  double capacity = 1.0;
  double rate = 0.01;
  double midpoint = 0.0;
};

struct TrendWaveParams {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<WaveComponent> waves;
};

struct Sample {
  TimeSeries series;
  Hypothesis hypothesis;
  Behavior behavior;
};

// Deterministic synthesis from explicit parameters, t = 0..L-1.
double periodic_value(Waveform shape, double phase);
std::vector<double> wave_sum(std::span<const WaveComponent> waves, std::size_t L);
std::vector<double> synthesize_spectrum(const Spectrum& spectrum, std::size_t L);
std::vector<double> logistic_curve(const LogisticParams& p, std::size_t L);
std::vector<double> trend_wave(const TrendWaveParams& p, std::size_t L);

// Parameter sampling from the configured priors.
std::vector<WaveComponent> sample_waves(const GeneratorConfig& cfg, std::size_t L, RngStream rng);
Spectrum sample_spectrum(const GeneratorConfig& cfg, std::size_t L, RngStream rng);
LogisticParams sample_logistic(const GeneratorConfig& cfg, std::size_t L, RngStream rng);
TrendWaveParams sample_trend_wave(const GeneratorConfig& cfg, std::size_t L, RngStream rng);

/// Adds N(0, (ratio * std(signal))^2) noise in place.
void add_noise(std::vector<double>& signal, double ratio, RngStream rng);

TimeSeries gen_ifftb(const GeneratorConfig& cfg, std::size_t L, RngStream rng);
TimeSeries gen_pwb(const GeneratorConfig& cfg, std::size_t L, RngStream rng);
TimeSeries gen_rwb(double sigma, std::size_t L, RngStream rng);
TimeSeries gen_lgb(const GeneratorConfig& cfg, std::size_t L, RngStream rng);
TimeSeries gen_twdb(const GeneratorConfig& cfg, std::size_t L, RngStream rng);

// Augmentations; each preserves length.
std::vector<double> replicate(std::span<const double> x, int replicas);
std::vector<double> flip(std::span<const double> x);
std::vector<double> smooth_detrend(std::span<const double> x, std::size_t window);
enum class Disturbance { spike, level_shift };
std::vector<double> inject(std::span<const double> x, std::size_t index, double delta,
                           Disturbance kind);

/// Applies enabled augmentations in the fixed order
/// replicate -> flip -> smooth/detrend -> perturb.
TimeSeries augment(const TimeSeries& series, const GeneratorConfig& cfg, RngStream rng);

/// Draws one sample from the hypothesis mixture and augments it.
Sample sample_series(const GeneratorConfig& cfg, RngStream rng);

}  // namespace tsimg::realts
