#pragma once

// Binary image space for time series: value <-> row-bin mapping, column EMD,
// KL divergence, the training loss, and the blur/interpolation pipeline.
//
// Rows are 0-based internally: row r covers the half-open value interval
// [-MS + r*w, -MS + (r+1)*w) with w = 2*MS/h, and decodes to its centre
// -MS + (r + 0.5)*w. Row 0 is the lowest-value bin.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tsimg/series.hpp"

namespace tsimg {

struct SpaceParams {
  std::size_t h = 128;
  double max_scale = 3.5;

  [[nodiscard]] double bin_width() const noexcept { return 2.0 * max_scale / static_cast<double>(h); }
  [[nodiscard]] double bin_center(std::size_t row) const noexcept {
    return -max_scale + (static_cast<double>(row) + 0.5) * bin_width();
  }
  void validate() const;

  friend bool operator==(const SpaceParams&, const SpaceParams&) = default;
};

/// Marks an all-zero (missing) column in a BinaryImage.
inline constexpr std::int32_t kMissingRow = -1;

class SoftImage;

/// c x h x L binary grid with exactly one active row per column, stored as the
/// active row index per (channel, column). A column may instead be explicitly
/// missing (all zero), which is how masked or absent observations are carried.
class BinaryImage {
 public:
  BinaryImage(SpaceParams params, std::size_t channels, std::size_t length);
  BinaryImage(SpaceParams params, std::size_t channels, std::size_t length,
              std::vector<std::int32_t> rows);

  [[nodiscard]] const SpaceParams& params() const noexcept { return params_; }
  [[nodiscard]] std::size_t channels() const noexcept { return channels_; }
  [[nodiscard]] std::size_t length() const noexcept { return length_; }
  [[nodiscard]] std::size_t height() const noexcept { return params_.h; }

  [[nodiscard]] std::int32_t row(std::size_t c, std::size_t col) const {
    return rows_[c * length_ + col];
  }
  void set_row(std::size_t c, std::size_t col, std::int32_t row);
  [[nodiscard]] bool is_missing(std::size_t c, std::size_t col) const {
    return row(c, col) == kMissingRow;
  }
  [[nodiscard]] bool has_missing() const noexcept;
  [[nodiscard]] std::uint8_t pixel(std::size_t c, std::size_t row, std::size_t col) const {
    return static_cast<std::int32_t>(row) == this->row(c, col) ? 1 : 0;
  }
  [[nodiscard]] const std::vector<std::int32_t>& rows() const noexcept { return rows_; }

  /// Each column becomes a one-hot distribution; missing columns stay zero.
  [[nodiscard]] SoftImage to_soft() const;

  friend bool operator==(const BinaryImage&, const BinaryImage&) = default;

 private:
  SpaceParams params_;
  std::size_t channels_;
  std::size_t length_;
  std::vector<std::int32_t> rows_;
};

/// c x h x L nonnegative grid whose columns are probability distributions over
/// rows. An all-zero column denotes a missing observation. Storage is
/// column-contiguous: element (c, row, col) lives at ((c * L) + col) * h + row.
class SoftImage {
 public:
  SoftImage(SpaceParams params, std::size_t channels, std::size_t length);

  [[nodiscard]] const SpaceParams& params() const noexcept { return params_; }
  [[nodiscard]] std::size_t channels() const noexcept { return channels_; }
  [[nodiscard]] std::size_t length() const noexcept { return length_; }
  [[nodiscard]] std::size_t height() const noexcept { return params_.h; }

  [[nodiscard]] std::span<const double> column(std::size_t c, std::size_t col) const;
  [[nodiscard]] std::span<double> column(std::size_t c, std::size_t col);
  [[nodiscard]] double at(std::size_t c, std::size_t row, std::size_t col) const {
    return column(c, col)[row];
  }
  [[nodiscard]] double column_mass(std::size_t c, std::size_t col) const;
  /// Rescales every nonzero column to sum to 1.
  void normalize_columns();

 private:
  SpaceParams params_;
  std::size_t channels_;
  std::size_t length_;
  std::vector<double> mass_;
};

struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;
  /// True where the lookback std fell below the floor and the floor was used.
  std::vector<bool> floored;
};

/// Standardises every channel with the mean/std of its first `lookback`
/// samples (population std, floored at `std_floor`).
std::pair<TimeSeries, NormStats> normalize(const TimeSeries& series, std::size_t lookback,
                                           double std_floor = 1e-8);
TimeSeries denormalize(const TimeSeries& series, const NormStats& stats);

std::int32_t value_to_row(double value, const SpaceParams& params);

BinaryImage encode(const TimeSeries& series, const SpaceParams& params);
/// Encodes with missing entries rendered as all-zero columns.
BinaryImage encode(const MaskedSeries& series, const SpaceParams& params);

/// Bin-centre reconstruction. Throws StructuralError on a missing column.
TimeSeries decode(const BinaryImage& image);
MaskedSeries decode_masked(const BinaryImage& image);

/// Per-column expectation of bin centres.
TimeSeries soft_decode(const SoftImage& image);
MaskedSeries soft_decode_masked(const SoftImage& image);

/// 1-D Wasserstein-1 distance between two distributions over the same rows,
/// in row-index units.
double column_emd(std::span<const double> a, std::span<const double> b);
/// Sum of column EMDs over channels and columns.
double emd(const SoftImage& a, const SoftImage& b);
double emd(const BinaryImage& a, const BinaryImage& b);

/// Column-wise KL(p || q) after eps-smoothing, summed over channels/columns.
double kld(const SoftImage& p, const SoftImage& q, double eps = 1e-8);

/// emd(pred, target) + alpha * kld(pred, target).
double loss(const SoftImage& pred, const SoftImage& target, double alpha = 0.2, double eps = 1e-8);

struct BlurKernel {
  std::size_t rows = 31;
  std::size_t cols = 31;
  /// Unset: each axis uses extent / 6.
  std::optional<double> sigma;
};

/// 2-D Gaussian blur of the binary grid (truncated kernel renormalised at the
/// borders), then column renormalisation. Columns left with zero mass stay
/// zero (missing).
SoftImage preprocess(const BinaryImage& image, const BlurKernel& kernel = {});

/// Exact 2x temporal upsampling by linear interpolation: even samples are the
/// originals, odd samples are midpoints, the final sample is repeated.
TimeSeries upsample2x(const TimeSeries& series);

}  // namespace tsimg
