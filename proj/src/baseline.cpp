#include "tsimg/baseline.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "tsimg/error.hpp"

namespace tsimg {

TemporalMask make_mask(std::size_t L, std::size_t lookback) {
  if (lookback < 1 || lookback > L) {
    throw InputError("mask lookback T=" + std::to_string(lookback) + " must satisfy 1 <= T <= L=" +
                     std::to_string(L));
  }
  TemporalMask mask;
  mask.lookback = lookback;
  mask.bits.assign(L, 0);
  std::fill_n(mask.bits.begin(), lookback, std::uint8_t{1});
  return mask;
}

BinaryImage apply_mask(const BinaryImage& image, const TemporalMask& mask) {
  if (mask.length() != image.length()) throw InputError("mask length does not match image length");
  BinaryImage out = image;
  for (std::size_t c = 0; c < image.channels(); ++c) {
    for (std::size_t col = 0; col < image.length(); ++col) {
      if (!mask.bits[col]) out.set_row(c, col, kMissingRow);
    }
  }
  return out;
}

std::string_view to_string(ModelSpace space) {
  return space == ModelSpace::numerical ? "numerical" : "image";
}

SoftImage forecast(const ForecasterHandle& model, const BinaryImage& image, const TemporalMask& mask,
                   const std::optional<BlurKernel>& blur) {
  if (mask.length() != image.length()) throw InputError("mask length does not match image length");
  const std::size_t T = mask.lookback;
  const std::size_t H = mask.horizon();
  if (T > model.capability.max_lookback || H > model.capability.max_horizon) {
    throw InputError("model '" + model.id + "' capability exceeded: lookback " + std::to_string(T) +
                     "/" + std::to_string(model.capability.max_lookback) + ", horizon " +
                     std::to_string(H) + "/" + std::to_string(model.capability.max_horizon));
  }
  const BinaryImage masked = apply_mask(image, mask);
  const SoftImage visible = blur ? preprocess(masked, *blur) : masked.to_soft();
  const auto& params = image.params();

  SoftImage out(params, image.channels(), image.length());
  for (std::size_t c = 0; c < image.channels(); ++c) {
    for (std::size_t col = 0; col < T; ++col) {
      const auto src = visible.column(c, col);
      std::copy(src.begin(), src.end(), out.column(c, col).begin());
    }
    if (H == 0) continue;

    // Lookback as the model sees it: bin centres of the visible columns.
    BinaryImage prefix(params, 1, T);
    for (std::size_t col = 0; col < T; ++col) prefix.set_row(0, col, masked.row(c, col));
    const auto decoded = decode_masked(prefix);
    const auto lookback = decoded.values.channel(0);
    const auto prediction = model.predict(lookback, H, {});
    if (prediction.size() != H) throw InternalError("model '" + model.id + "' returned wrong horizon");
    for (std::size_t j = 0; j < H; ++j) {
      out.column(c, T + j)[static_cast<std::size_t>(value_to_row(prediction[j], params))] = 1.0;
    }
  }
  return out;
}

std::vector<double> predict_series(const ForecasterHandle& model, std::span<const double> lookback,
                                   std::size_t horizon, std::span<const double> reference) {
  if (lookback.empty()) throw InputError("empty lookback");
  if (model.space == ModelSpace::numerical) {
    if (lookback.size() > model.capability.max_lookback || horizon > model.capability.max_horizon) {
      throw InputError("model '" + model.id + "' capability exceeded");
    }
    auto out = model.predict(lookback, horizon, reference);
    if (out.size() != horizon) throw InternalError("model '" + model.id + "' returned wrong horizon");
    return out;
  }

  const auto& pipe = model.pipeline;
  const std::size_t T = lookback.size();
  auto [z, stats] = normalize(TimeSeries::univariate({lookback.begin(), lookback.end()}), T);
  if (pipe.upsample) z = upsample2x(z);
  const std::size_t factor = pipe.upsample ? 2 : 1;
  const std::size_t Tz = z.length();
  const std::size_t Hz = factor * horizon;

  std::vector<double> values(Tz + Hz, 0.0);
  std::copy(z.values().begin(), z.values().end(), values.begin());
  std::vector<std::uint8_t> missing(Tz + Hz, 0);
  std::fill(missing.begin() + static_cast<std::ptrdiff_t>(Tz), missing.end(), std::uint8_t{1});
  const auto image = encode(MaskedSeries(TimeSeries::univariate(std::move(values)), std::move(missing)),
                            pipe.params);
  const auto filled = forecast(model, image, make_mask(Tz + Hz, Tz), pipe.blur);
  const auto decoded_series = soft_decode_masked(filled);
  const auto decoded = decoded_series.values.channel(0);

  std::vector<double> out(horizon);
  for (std::size_t j = 0; j < horizon; ++j) {
    out[j] = decoded[Tz + factor * j] * stats.std[0] + stats.mean[0];
  }
  return out;
}

std::optional<PeriodEstimate> detect_period(std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t max_lag = n / 2;
  if (max_lag < 2) return std::nullopt;
  const double m = mean(x);
  double var = 0.0;
  for (double v : x) var += (v - m) * (v - m);
  if (!(var > 0.0)) return std::nullopt;

  std::vector<double> acf(max_lag + 1, 0.0);
  acf[0] = 1.0;
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    double s = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) s += (x[t] - m) * (x[t + lag] - m);
    acf[lag] = s / var;
  }
  std::size_t start = 2;
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    if (acf[lag] <= 0.0) {
      start = std::max<std::size_t>(2, lag);
      break;
    }
  }
  std::size_t best = start;
  for (std::size_t lag = start + 1; lag <= max_lag; ++lag) {
    if (acf[lag] > acf[best]) best = lag;
  }
  double refined = static_cast<double>(best);
  if (best > 1 && best < max_lag) {
    const double a = acf[best - 1], b = acf[best], c = acf[best + 1];
    const double denom = a - 2.0 * b + c;
    if (denom < 0.0) refined += 0.5 * (a - c) / denom;
  }
  return PeriodEstimate{best, refined, acf[best]};
}

std::vector<double> persistence_forecast(std::span<const double> lookback, std::size_t horizon) {
  if (lookback.empty()) throw InputError("empty lookback");
  return std::vector<double>(horizon, lookback.back());
}

std::vector<double> seasonal_naive_forecast(std::span<const double> lookback, std::size_t horizon) {
  const auto period = detect_period(lookback);
  if (!period) return persistence_forecast(lookback, horizon);
  const std::size_t P = period->lag;
  const std::size_t T = lookback.size();
  std::vector<double> out(horizon);
  for (std::size_t i = 0; i < horizon; ++i) out[i] = lookback[T - P + i % P];
  return out;
}

std::vector<double> linear_trend_forecast(std::span<const double> lookback, std::size_t horizon) {
  const std::size_t T = lookback.size();
  if (T < 2) return persistence_forecast(lookback, horizon);
  const double tn = static_cast<double>(T);
  const double t_mean = (tn - 1.0) / 2.0;
  const double y_mean = mean(lookback);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double dt = static_cast<double>(t) - t_mean;
    sxy += dt * (lookback[t] - y_mean);
    sxx += dt * dt;
  }
  const double slope = sxy / sxx;
  std::vector<double> out(horizon);
  for (std::size_t i = 0; i < horizon; ++i) {
    out[i] = y_mean + slope * (static_cast<double>(T + i) - t_mean);
  }
  return out;
}

namespace {

constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

PointForecast wrap(std::vector<double> (*fn)(std::span<const double>, std::size_t)) {
  return [fn](std::span<const double> lookback, std::size_t horizon, std::span<const double>) {
    return fn(lookback, horizon);
  };
}

std::vector<ForecasterHandle> build_registry() {
  const Capability numeric{kUnbounded, kUnbounded};
  const Capability image{512, 720};
  std::vector<ForecasterHandle> models;
  models.push_back({"persistence", "repeat the last observed value", numeric, ModelSpace::numerical,
                    wrap(persistence_forecast), {}});
  models.push_back({"seasonal_naive", "repeat the last detected period", numeric,
                    ModelSpace::numerical, wrap(seasonal_naive_forecast), {}});
  models.push_back({"linear_trend", "extrapolate the least-squares line", numeric,
                    ModelSpace::numerical, wrap(linear_trend_forecast), {}});
  models.push_back({"img_persistence", "persistence through the binary image space", image,
                    ModelSpace::image, wrap(persistence_forecast), {}});
  models.push_back({"img_seasonal_naive", "seasonal naive through the binary image space", image,
                    ModelSpace::image, wrap(seasonal_naive_forecast), {}});
  models.push_back({"img_linear_trend", "linear trend through the binary image space", image,
                    ModelSpace::image, wrap(linear_trend_forecast), {}});
  models.push_back({"oracle", "returns the true future (reference for harness checks)", numeric,
                    ModelSpace::numerical,
                    [](std::span<const double>, std::size_t horizon, std::span<const double> reference) {
                      if (reference.size() < horizon) {
                        throw InputError("oracle model needs the true future");
                      }
                      return std::vector<double>(reference.begin(),
                                                 reference.begin() + static_cast<std::ptrdiff_t>(horizon));
                    },
                    {}});
  return models;
}

}  // namespace

const std::vector<ForecasterHandle>& register_baselines() {
  static const std::vector<ForecasterHandle> registry = build_registry();
  return registry;
}

const ForecasterHandle& find_model(std::string_view id) {
  const auto& models = register_baselines();
  for (const auto& m : models) {
    if (m.id == id) return m;
  }
  std::string known;
  for (const auto& m : models) known += (known.empty() ? "" : ", ") + m.id;
  throw InputError("unknown model id '" + std::string(id) + "'; registered: " + known);
}

}  // namespace tsimg
