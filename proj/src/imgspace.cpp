#include "tsimg/imgspace.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tsimg/error.hpp"

namespace tsimg {

void SpaceParams::validate() const {
  if (h < 2) throw ConfigError("resolution h must be at least 2");
  if (!(max_scale > 0.0) || !std::isfinite(max_scale)) {
    throw ConfigError("maximum scale MS must be a positive finite number");
  }
}

BinaryImage::BinaryImage(SpaceParams params, std::size_t channels, std::size_t length)
    : BinaryImage(params, channels, length,
                  std::vector<std::int32_t>(channels * length, kMissingRow)) {}

BinaryImage::BinaryImage(SpaceParams params, std::size_t channels, std::size_t length,
                         std::vector<std::int32_t> rows)
    : params_(params), channels_(channels), length_(length), rows_(std::move(rows)) {
  params_.validate();
  if (channels_ == 0 || length_ == 0) throw InputError("image needs at least one channel and column");
  if (rows_.size() != channels_ * length_) throw InputError("row vector size mismatch");
  for (auto r : rows_) {
    if (r != kMissingRow && (r < 0 || r >= static_cast<std::int32_t>(params_.h))) {
      throw StructuralError("active row outside [0, h)");
    }
  }
}

void BinaryImage::set_row(std::size_t c, std::size_t col, std::int32_t row) {
  if (row != kMissingRow && (row < 0 || row >= static_cast<std::int32_t>(params_.h))) {
    throw StructuralError("active row outside [0, h)");
  }
  rows_.at(c * length_ + col) = row;
}

bool BinaryImage::has_missing() const noexcept {
  return std::find(rows_.begin(), rows_.end(), kMissingRow) != rows_.end();
}

SoftImage BinaryImage::to_soft() const {
  SoftImage soft(params_, channels_, length_);
  for (std::size_t c = 0; c < channels_; ++c) {
    for (std::size_t col = 0; col < length_; ++col) {
      const auto r = row(c, col);
      if (r != kMissingRow) soft.column(c, col)[static_cast<std::size_t>(r)] = 1.0;
    }
  }
  return soft;
}

SoftImage::SoftImage(SpaceParams params, std::size_t channels, std::size_t length)
    : params_(params), channels_(channels), length_(length),
      mass_(channels * length * params.h, 0.0) {
  params_.validate();
  if (channels_ == 0 || length_ == 0) throw InputError("image needs at least one channel and column");
}

std::span<const double> SoftImage::column(std::size_t c, std::size_t col) const {
  return std::span<const double>(mass_).subspan((c * length_ + col) * params_.h, params_.h);
}

std::span<double> SoftImage::column(std::size_t c, std::size_t col) {
  return std::span<double>(mass_).subspan((c * length_ + col) * params_.h, params_.h);
}

double SoftImage::column_mass(std::size_t c, std::size_t col) const {
  double s = 0.0;
  for (double v : column(c, col)) s += v;
  return s;
}

void SoftImage::normalize_columns() {
  for (std::size_t c = 0; c < channels_; ++c) {
    for (std::size_t col = 0; col < length_; ++col) {
      const double total = column_mass(c, col);
      if (total > 0.0) {
        for (double& v : column(c, col)) v /= total;
      }
    }
  }
}

std::pair<TimeSeries, NormStats> normalize(const TimeSeries& series, std::size_t lookback,
                                           double std_floor) {
  if (lookback < 1 || lookback > series.length()) {
    throw InputError("normalization lookback must satisfy 1 <= T <= L");
  }
  NormStats stats;
  std::vector<double> out;
  out.reserve(series.values().size());
  for (std::size_t c = 0; c < series.channels(); ++c) {
    const auto ch = series.channel(c);
    const auto window = ch.first(lookback);
    const double m = mean(window);
    double sd = stddev(window);
    const bool floored = !(sd >= std_floor);
    if (floored) sd = std_floor;
    stats.mean.push_back(m);
    stats.std.push_back(sd);
    stats.floored.push_back(floored);
    for (double v : ch) out.push_back((v - m) / sd);
  }
  return {TimeSeries(series.channels(), series.length(), std::move(out)), std::move(stats)};
}

TimeSeries denormalize(const TimeSeries& series, const NormStats& stats) {
  if (stats.mean.size() != series.channels() || stats.std.size() != series.channels()) {
    throw InputError("normalization stats do not match channel count");
  }
  std::vector<double> out;
  out.reserve(series.values().size());
  for (std::size_t c = 0; c < series.channels(); ++c) {
    for (double v : series.channel(c)) out.push_back(v * stats.std[c] + stats.mean[c]);
  }
  return TimeSeries(series.channels(), series.length(), std::move(out));
}

std::int32_t value_to_row(double value, const SpaceParams& params) {
  if (!std::isfinite(value)) throw InputError("cannot encode a non-finite value");
  const auto top = static_cast<std::int32_t>(params.h) - 1;
  const double ms = params.max_scale;
  if (value >= ms) return top;
  if (value <= -ms) return 0;
  const double w = params.bin_width();
  auto r = static_cast<std::int32_t>(std::floor((value + ms) / w));
  r = std::clamp(r, 0, top);
  // Settle rounding at bin edges against the half-open edges themselves.
  auto lower = [&](std::int32_t k) { return -ms + static_cast<double>(k) * w; };
  while (r > 0 && value < lower(r)) --r;
  while (r < top && value >= lower(r + 1)) ++r;
  return r;
}

BinaryImage encode(const TimeSeries& series, const SpaceParams& params) {
  return encode(MaskedSeries(series), params);
}

BinaryImage encode(const MaskedSeries& series, const SpaceParams& params) {
  params.validate();
  const auto& s = series.values;
  std::vector<std::int32_t> rows(s.channels() * s.length());
  for (std::size_t c = 0; c < s.channels(); ++c) {
    for (std::size_t t = 0; t < s.length(); ++t) {
      rows[c * s.length() + t] =
          series.is_missing(c, t) ? kMissingRow : value_to_row(s.at(c, t), params);
    }
  }
  return BinaryImage(params, s.channels(), s.length(), std::move(rows));
}

MaskedSeries decode_masked(const BinaryImage& image) {
  const auto& p = image.params();
  std::vector<double> values(image.channels() * image.length());
  std::vector<std::uint8_t> missing(values.size(), 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto r = image.rows()[i];
    if (r == kMissingRow) {
      missing[i] = 1;
    } else {
      values[i] = p.bin_center(static_cast<std::size_t>(r));
    }
  }
  for (std::size_t c = 0; c < image.channels(); ++c) {
    const auto off = c * image.length();
    auto filled = carry_forward(std::span<const double>(values).subspan(off, image.length()),
                                std::span<const std::uint8_t>(missing).subspan(off, image.length()));
    std::copy(filled.begin(), filled.end(), values.begin() + static_cast<std::ptrdiff_t>(off));
  }
  return MaskedSeries(TimeSeries(image.channels(), image.length(), std::move(values)),
                      std::move(missing));
}

TimeSeries decode(const BinaryImage& image) {
  for (std::size_t c = 0; c < image.channels(); ++c) {
    for (std::size_t col = 0; col < image.length(); ++col) {
      if (image.is_missing(c, col)) {
        throw StructuralError("column " + std::to_string(col) + " of channel " + std::to_string(c) +
                              " has no active row");
      }
    }
  }
  return decode_masked(image).values;
}

MaskedSeries soft_decode_masked(const SoftImage& image) {
  const auto& p = image.params();
  const std::size_t L = image.length();
  std::vector<double> values(image.channels() * L, 0.0);
  std::vector<std::uint8_t> missing(values.size(), 0);
  for (std::size_t c = 0; c < image.channels(); ++c) {
    for (std::size_t col = 0; col < L; ++col) {
      const auto column = image.column(c, col);
      double total = 0.0;
      double acc = 0.0;
      for (std::size_t r = 0; r < column.size(); ++r) {
        total += column[r];
        acc += column[r] * p.bin_center(r);
      }
      if (total > 0.0) {
        values[c * L + col] = acc / total;
      } else {
        missing[c * L + col] = 1;
      }
    }
    auto filled = carry_forward(std::span<const double>(values).subspan(c * L, L),
                                std::span<const std::uint8_t>(missing).subspan(c * L, L));
    std::copy(filled.begin(), filled.end(), values.begin() + static_cast<std::ptrdiff_t>(c * L));
  }
  return MaskedSeries(TimeSeries(image.channels(), L, std::move(values)), std::move(missing));
}

TimeSeries soft_decode(const SoftImage& image) {
  auto decoded = soft_decode_masked(image);
  if (std::find(decoded.missing.begin(), decoded.missing.end(), 1) != decoded.missing.end()) {
    throw StructuralError("soft image has an empty column");
  }
  return std::move(decoded.values);
}

double column_emd(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("EMD columns differ in height");
  double cdf_a = 0.0;
  double cdf_b = 0.0;
  double total = 0.0;
  // The final CDF difference is zero for normalised columns.
  for (std::size_t j = 0; j + 1 < a.size(); ++j) {
    cdf_a += a[j];
    cdf_b += b[j];
    total += std::abs(cdf_a - cdf_b);
  }
  return total;
}

namespace {

void check_same_shape(const SpaceParams& pa, std::size_t ca, std::size_t la, const SpaceParams& pb,
                      std::size_t cb, std::size_t lb) {
  if (!(pa == pb) || ca != cb || la != lb) {
    throw InputError("images differ in shape or space parameters");
  }
}

void check_normalized(const SoftImage& img, std::size_t c, std::size_t col) {
  if (std::abs(img.column_mass(c, col) - 1.0) > 1e-6) {
    throw InputError("EMD requires normalised columns (column " + std::to_string(col) + ")");
  }
}

}  // namespace

double emd(const SoftImage& a, const SoftImage& b) {
  check_same_shape(a.params(), a.channels(), a.length(), b.params(), b.channels(), b.length());
  double total = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c) {
    for (std::size_t col = 0; col < a.length(); ++col) {
      check_normalized(a, c, col);
      check_normalized(b, c, col);
      total += column_emd(a.column(c, col), b.column(c, col));
    }
  }
  return total;
}

double emd(const BinaryImage& a, const BinaryImage& b) {
  check_same_shape(a.params(), a.channels(), a.length(), b.params(), b.channels(), b.length());
  double total = 0.0;
  for (std::size_t i = 0; i < a.rows().size(); ++i) {
    const auto ra = a.rows()[i];
    const auto rb = b.rows()[i];
    if (ra == kMissingRow || rb == kMissingRow) throw InputError("EMD undefined on missing columns");
    total += std::abs(static_cast<double>(ra - rb));
  }
  return total;
}

double kld(const SoftImage& p, const SoftImage& q, double eps) {
  check_same_shape(p.params(), p.channels(), p.length(), q.params(), q.channels(), q.length());
  if (!(eps > 0.0)) throw ConfigError("KLD smoothing eps must be > 0");
  double total = 0.0;
  for (std::size_t c = 0; c < p.channels(); ++c) {
    for (std::size_t col = 0; col < p.length(); ++col) {
      const auto pc = p.column(c, col);
      const auto qc = q.column(c, col);
      const double pm = p.column_mass(c, col);
      const double qm = q.column_mass(c, col);
      const double pn = pm + static_cast<double>(p.height()) * eps;
      const double qn = qm + static_cast<double>(q.height()) * eps;
      double column = 0.0;
      for (std::size_t r = 0; r < pc.size(); ++r) {
        const double ps = (pc[r] + eps) / pn;
        const double qs = (qc[r] + eps) / qn;
        column += ps * std::log(ps / qs);
      }
      total += std::max(column, 0.0);
    }
  }
  return total;
}

double loss(const SoftImage& pred, const SoftImage& target, double alpha, double eps) {
  return emd(pred, target) + alpha * kld(pred, target, eps);
}

namespace {

std::vector<double> gaussian_weights(std::size_t extent, double sigma) {
  const auto half = static_cast<std::ptrdiff_t>(extent / 2);
  std::vector<double> w(extent);
  for (std::ptrdiff_t d = -half; d <= half; ++d) {
    const double x = static_cast<double>(d);
    w[static_cast<std::size_t>(d + half)] = extent == 1 ? 1.0 : std::exp(-x * x / (2.0 * sigma * sigma));
  }
  return w;
}

// Truncated convolution along one axis; weights renormalised to the in-range part.
void convolve(std::span<const double> in, std::span<double> out, std::size_t n, std::size_t stride,
              const std::vector<double>& w) {
  const auto half = static_cast<std::ptrdiff_t>(w.size() / 2);
  const auto len = static_cast<std::ptrdiff_t>(n);
  for (std::ptrdiff_t i = 0; i < len; ++i) {
    double acc = 0.0;
    double wsum = 0.0;
    for (std::ptrdiff_t d = -half; d <= half; ++d) {
      const auto j = i + d;
      if (j < 0 || j >= len) continue;
      const double wt = w[static_cast<std::size_t>(d + half)];
      acc += wt * in[static_cast<std::size_t>(j) * stride];
      wsum += wt;
    }
    out[static_cast<std::size_t>(i) * stride] = acc / wsum;
  }
}

}  // namespace

SoftImage preprocess(const BinaryImage& image, const BlurKernel& kernel) {
  if (kernel.rows == 0 || kernel.cols == 0 || kernel.rows % 2 == 0 || kernel.cols % 2 == 0) {
    throw ConfigError("blur kernel dimensions must be odd and positive");
  }
  if (kernel.sigma && !(*kernel.sigma > 0.0)) throw ConfigError("blur sigma must be > 0");
  const double sigma_rows = kernel.sigma.value_or(static_cast<double>(kernel.rows) / 6.0);
  const double sigma_cols = kernel.sigma.value_or(static_cast<double>(kernel.cols) / 6.0);
  const auto w_rows = gaussian_weights(kernel.rows, sigma_rows);
  const auto w_cols = gaussian_weights(kernel.cols, sigma_cols);

  SoftImage soft = image.to_soft();
  const std::size_t h = image.height();
  const std::size_t L = image.length();
  SoftImage out(image.params(), image.channels(), L);
  std::vector<double> tmp(h * L);
  for (std::size_t c = 0; c < image.channels(); ++c) {
    // Channel block is column-contiguous: element (row, col) at col * h + row.
    std::vector<double> block(h * L);
    for (std::size_t col = 0; col < L; ++col) {
      auto src = soft.column(c, col);
      std::copy(src.begin(), src.end(), block.begin() + static_cast<std::ptrdiff_t>(col * h));
    }
    for (std::size_t col = 0; col < L; ++col) {
      convolve(std::span<const double>(block).subspan(col * h), std::span<double>(tmp).subspan(col * h),
               h, 1, w_rows);
    }
    for (std::size_t r = 0; r < h; ++r) {
      convolve(std::span<const double>(tmp).subspan(r), std::span<double>(block).subspan(r), L, h,
               w_cols);
    }
    for (std::size_t col = 0; col < L; ++col) {
      auto dst = out.column(c, col);
      std::copy_n(block.begin() + static_cast<std::ptrdiff_t>(col * h), h, dst.begin());
    }
  }
  out.normalize_columns();
  return out;
}

TimeSeries upsample2x(const TimeSeries& series) {
  const std::size_t L = series.length();
  std::vector<double> out;
  out.reserve(series.channels() * 2 * L);
  for (std::size_t c = 0; c < series.channels(); ++c) {
    const auto x = series.channel(c);
    for (std::size_t i = 0; i < L; ++i) {
      out.push_back(x[i]);
      out.push_back(i + 1 < L ? 0.5 * (x[i] + x[i + 1]) : x[i]);
    }
  }
  return TimeSeries(series.channels(), 2 * L, std::move(out));
}

}  // namespace tsimg
