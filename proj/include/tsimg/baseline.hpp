#pragma once

// Mask-and-fill forecasting contract in image space plus classical baselines.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsimg/imgspace.hpp"

namespace tsimg {

/// Prefix-visible temporal mask: bits[k] = 1 for k < T, 0 otherwise.
struct TemporalMask {
  std::vector<std::uint8_t> bits;
  std::size_t lookback = 0;

  [[nodiscard]] std::size_t length() const noexcept { return bits.size(); }
  [[nodiscard]] std::size_t horizon() const noexcept { return bits.size() - lookback; }
};

TemporalMask make_mask(std::size_t L, std::size_t lookback);

/// Hides every column k >= T.
BinaryImage apply_mask(const BinaryImage& image, const TemporalMask& mask);

struct Capability {
  std::size_t max_lookback = 0;
  std::size_t max_horizon = 0;
};

enum class ModelSpace { numerical, image };

std::string_view to_string(ModelSpace space);

/// Point forecaster on a single channel. `reference` carries the true future
/// when the caller has it; only the reference oracle reads it.
using PointForecast = std::function<std::vector<double>(std::span<const double> lookback,
                                                        std::size_t horizon,
                                                        std::span<const double> reference)>;

/// Settings for running a point forecaster through the image route.
struct ImagePipeline {
  SpaceParams params;
  bool upsample = false;
  std::optional<BlurKernel> blur;
};

struct ForecasterHandle {
  std::string id;
  std::string description;
  Capability capability;
  ModelSpace space = ModelSpace::numerical;
  PointForecast predict;
  /// Used when `space` is image.
  ImagePipeline pipeline;
};

/// Fills the masked columns of `image`. Visible columns pass through (blurred
/// when `blur` is set); predicted columns are the model's one-hot forecast of
/// the decoded visible prefix. Every nonempty column sums to 1.
SoftImage forecast(const ForecasterHandle& model, const BinaryImage& image, const TemporalMask& mask,
                   const std::optional<BlurKernel>& blur = std::nullopt);

/// Forecast in the numerical space, honouring the handle's space: image
/// models normalise the lookback, encode, fill, soft-decode and denormalise.
std::vector<double> predict_series(const ForecasterHandle& model, std::span<const double> lookback,
                                   std::size_t horizon, std::span<const double> reference = {});

struct PeriodEstimate {
  std::size_t lag = 0;
  double refined = 0.0;
  double acf = 0.0;
};

/// Dominant period from the lookback autocorrelation: argmax over lags in
/// [2, T/2] after the first non-positive autocorrelation, ties to the smaller
/// lag, with parabolic refinement. Empty when no lag qualifies.
std::optional<PeriodEstimate> detect_period(std::span<const double> x);

std::vector<double> persistence_forecast(std::span<const double> lookback, std::size_t horizon);
std::vector<double> seasonal_naive_forecast(std::span<const double> lookback, std::size_t horizon);
std::vector<double> linear_trend_forecast(std::span<const double> lookback, std::size_t horizon);

/// The immutable model registry, in stable order.
const std::vector<ForecasterHandle>& register_baselines();
/// Throws InputError naming all registered ids when `id` is unknown.
const ForecasterHandle& find_model(std::string_view id);

}  // namespace tsimg
