#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tsimg {

/// Multichannel real-valued sequence stored channel-major (c x L).
/// Every entry is finite; construction rejects NaN/Inf.
class TimeSeries {
 public:
  TimeSeries(std::size_t channels, std::size_t length, std::vector<double> values);

  static TimeSeries univariate(std::vector<double> values);
  static TimeSeries from_channels(const std::vector<std::vector<double>>& channels);

  [[nodiscard]] std::size_t channels() const noexcept { return channels_; }
  [[nodiscard]] std::size_t length() const noexcept { return length_; }

  [[nodiscard]] std::span<const double> channel(std::size_t c) const;
  [[nodiscard]] double at(std::size_t c, std::size_t t) const { return channel(c)[t]; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

  friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

 private:
  std::size_t channels_;
  std::size_t length_;
  std::vector<double> values_;
};

/// A series together with a per-entry missingness flag (same c x L layout).
/// Missing entries hold the last valid value of their channel (or the first
/// valid one for a missing prefix, 0 when the whole channel is missing).
struct MaskedSeries {
  TimeSeries values;
  std::vector<std::uint8_t> missing;

  explicit MaskedSeries(TimeSeries s);
  MaskedSeries(TimeSeries s, std::vector<std::uint8_t> mask);

  [[nodiscard]] bool is_missing(std::size_t c, std::size_t t) const {
    return missing[c * values.length() + t] != 0;
  }
  [[nodiscard]] std::span<const std::uint8_t> channel_mask(std::size_t c) const;
};

/// Replaces flagged entries by carrying the last valid value forward.
std::vector<double> carry_forward(std::span<const double> values,
                                  std::span<const std::uint8_t> missing);

/// Shortest-roundtrip-free formatting with `digits` significant digits,
/// '.' decimal separator regardless of locale.
std::string format_real(double value, int digits = 9);

/// Writes `t,ch0[,ch1,...]` CSV, one row per time index.
void write_series_csv(std::ostream& out, const TimeSeries& series);
/// Writes the missingness mask as `t,ch0,...` CSV of 0/1 flags.
void write_mask_csv(std::ostream& out, const MaskedSeries& series);

/// Reads a CSV whose first column is a time index or timestamp (ignored) and
/// whose remaining columns are numeric channels. A header row is required.
TimeSeries read_series_csv(std::istream& in, std::string_view origin = "<stream>");
TimeSeries read_series_csv(const std::filesystem::path& path);

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

double mean(std::span<const double> x);
/// Population standard deviation.
double stddev(std::span<const double> x);

}  // namespace tsimg
