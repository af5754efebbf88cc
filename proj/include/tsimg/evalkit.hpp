#pragma once

// Rescale-based evaluation: TSI rescaling, ReMSE/ReMAE over a rescale set,
// robustness perturbations and benchmark sweeps.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsimg/baseline.hpp"
#include "tsimg/rng.hpp"
#include "tsimg/series.hpp"

namespace tsimg::eval {

struct EvalConfig {
  std::size_t lookback = 512;
  std::vector<std::size_t> horizons{96, 192, 336, 720};
  std::vector<double> betas{0.5, 0.66, 1.0, 1.5, 2.0};
  /// Window stride; 0 means "equal to the horizon" (non-overlapping windows).
  std::size_t stride = 0;

  void validate() const;
  [[nodiscard]] std::size_t stride_for(std::size_t horizon) const {
    return stride == 0 ? horizon : stride;
  }
};

enum class PerturbationKind { none, gaussian_noise, harmonic, missing };

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::none;
  double noise_std = 0.0;
  /// 0 selects 0.3 x the channel std.
  double harmonic_amplitude = 0.0;
  /// Cycles per sample; 0 selects twice the dominant FFT frequency.
  double harmonic_frequency = 0.0;
  double missing_probability = 0.0;

  void validate() const;
  /// Short CSV-safe scenario label, e.g. `gn_0.1`, `dm_0.3`.
  [[nodiscard]] std::string tag() const;
  /// Parses `none`, `gn:<std>`, `harmonic[:<amp>[:<freq>]]`, `dm:<p>`.
  static PerturbationSpec parse(std::string_view text);
};

/// round-half-to-even(beta * L).
std::size_t rescaled_length(std::size_t L, double beta);

/// Linear interpolation onto round(beta * L) points spanning the same
/// endpoints. Throws InputError when either length is below 2.
TimeSeries tsi_rescale(const TimeSeries& series, double beta);
/// Rescales values and mask; an output point is missing when any input point
/// it interpolates from with nonzero weight is missing.
MaskedSeries tsi_rescale(const MaskedSeries& series, double beta);

MaskedSeries perturb(const TimeSeries& series, const PerturbationSpec& spec, RngStream rng);

struct MetricRow {
  std::string dataset;
  std::size_t horizon = 0;
  double beta = 1.0;
  std::string scenario;
  double mse = 0.0;
  double mae = 0.0;
  std::size_t windows = 0;
  std::size_t points = 0;
  bool skipped = false;
};

struct AggregateRow {
  std::string dataset;
  std::size_t horizon = 0;
  std::string scenario;
  double remse = 0.0;
  double remae = 0.0;
  std::size_t betas_used = 0;
};

struct EvalReport {
  std::vector<MetricRow> rows;
  std::vector<AggregateRow> aggregates;

  void append(const EvalReport& other);
  /// Per-beta block followed by a blank line and the aggregate block.
  [[nodiscard]] std::string to_csv() const;
  [[nodiscard]] std::string summary() const;
};

/// Scores `model` on `truth`: for every horizon and beta, rescale, slide
/// lookback/horizon windows, forecast each channel independently, and pool
/// squared/absolute errors. Betas without a window are recorded as skipped;
/// a horizon with every beta skipped raises EvaluationError.
EvalReport remetrics(const TimeSeries& truth, const ForecasterHandle& model, const EvalConfig& cfg,
                     std::string_view dataset = "series", std::string_view scenario = "none");
/// As above, but forecasts from a perturbed `input`; positions flagged missing
/// in `input` are excluded from the error sums.
EvalReport remetrics(const MaskedSeries& input, const TimeSeries& truth, const ForecasterHandle& model,
                     const EvalConfig& cfg, std::string_view dataset, std::string_view scenario);

/// Lists dataset CSVs: the file itself, or every *.csv in a directory (sorted,
/// skipping manifest.csv and report*.csv).
std::vector<std::filesystem::path> dataset_files(const std::filesystem::path& path);

/// Full sweep over datasets x perturbation scenarios x horizons x betas.
/// Deterministic given `seed`. With several datasets an `ALL` aggregate
/// (mean over datasets) is appended.
EvalReport run_benchmark(const std::filesystem::path& dataset, std::string_view model_id,
                         const EvalConfig& cfg, std::span<const PerturbationSpec> perturbations,
                         std::uint64_t seed);

}  // namespace tsimg::eval
