#include "tsimg/series.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tsimg/error.hpp"

namespace tsimg {

TimeSeries::TimeSeries(std::size_t channels, std::size_t length, std::vector<double> values)
    : channels_(channels), length_(length), values_(std::move(values)) {
  if (channels_ == 0 || length_ == 0) {
    throw InputError("time series needs at least one channel and one sample");
  }
  if (values_.size() != channels_ * length_) {
    throw InputError("time series value count does not match channels x length");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw InputError("time series contains a non-finite value");
  }
}

TimeSeries TimeSeries::univariate(std::vector<double> values) {
  const std::size_t n = values.size();
  return TimeSeries(1, n, std::move(values));
}

TimeSeries TimeSeries::from_channels(const std::vector<std::vector<double>>& channels) {
  if (channels.empty()) throw InputError("time series needs at least one channel");
  const std::size_t n = channels.front().size();
  std::vector<double> flat;
  flat.reserve(channels.size() * n);
  for (const auto& ch : channels) {
    if (ch.size() != n) throw InputError("channels have different lengths");
    flat.insert(flat.end(), ch.begin(), ch.end());
  }
  return TimeSeries(channels.size(), n, std::move(flat));
}

std::span<const double> TimeSeries::channel(std::size_t c) const {
  if (c >= channels_) throw InputError("channel index out of range");
  return std::span<const double>(values_).subspan(c * length_, length_);
}

MaskedSeries::MaskedSeries(TimeSeries s)
    : values(std::move(s)), missing(values.channels() * values.length(), 0) {}

MaskedSeries::MaskedSeries(TimeSeries s, std::vector<std::uint8_t> mask)
    : values(std::move(s)), missing(std::move(mask)) {
  if (missing.size() != values.channels() * values.length()) {
    throw InputError("missingness mask size does not match series");
  }
}

std::span<const std::uint8_t> MaskedSeries::channel_mask(std::size_t c) const {
  return std::span<const std::uint8_t>(missing).subspan(c * values.length(), values.length());
}

std::vector<double> carry_forward(std::span<const double> values,
                                  std::span<const std::uint8_t> missing) {
  std::vector<double> out(values.begin(), values.end());
  std::size_t first_valid = 0;
  while (first_valid < out.size() && missing[first_valid]) ++first_valid;
  const double lead = first_valid < out.size() ? out[first_valid] : 0.0;
  double last = lead;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (missing[i]) {
      out[i] = last;
    } else {
      last = out[i];
    }
  }
  return out;
}

std::string format_real(double value, int digits) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, digits);
  if (res.ec != std::errc{}) throw InternalError("number formatting failed");
  std::string s(buf, res.ptr);
  if (s == "-0") s = "0";
  return s;
}

void write_series_csv(std::ostream& out, const TimeSeries& series) {
  out << "t";
  for (std::size_t c = 0; c < series.channels(); ++c) out << ",ch" << c;
  out << '\n';
  for (std::size_t t = 0; t < series.length(); ++t) {
    out << t;
    for (std::size_t c = 0; c < series.channels(); ++c) out << ',' << format_real(series.at(c, t));
    out << '\n';
  }
}

void write_mask_csv(std::ostream& out, const MaskedSeries& series) {
  const auto& s = series.values;
  out << "t";
  for (std::size_t c = 0; c < s.channels(); ++c) out << ",ch" << c;
  out << '\n';
  for (std::size_t t = 0; t < s.length(); ++t) {
    out << t;
    for (std::size_t c = 0; c < s.channels(); ++c) out << ',' << (series.is_missing(c, t) ? 1 : 0);
    out << '\n';
  }
}

namespace {

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

TimeSeries read_series_csv(std::istream& in, std::string_view origin) {
  std::string line;
  if (!std::getline(in, line)) throw InputError(std::string(origin) + ": empty CSV");
  const std::size_t columns = split_csv_line(trim(line)).size();
  if (columns < 2) throw InputError(std::string(origin) + ": CSV needs an index column and a channel");
  std::vector<std::vector<double>> channels(columns - 1);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto fields = split_csv_line(body);
    if (fields.size() != columns) {
      throw InputError(std::string(origin) + ": row " + std::to_string(row) + " has " +
                       std::to_string(fields.size()) + " fields, expected " + std::to_string(columns));
    }
    for (std::size_t c = 1; c < columns; ++c) {
      const auto field = trim(fields[c]);
      double v = 0.0;
      auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (res.ec != std::errc{} || res.ptr != field.data() + field.size() || !std::isfinite(v)) {
        throw InputError(std::string(origin) + ": row " + std::to_string(row) +
                         " has a non-numeric value '" + std::string(field) + "'");
      }
      channels[c - 1].push_back(v);
    }
  }
  if (channels.front().empty()) throw InputError(std::string(origin) + ": CSV has no data rows");
  return TimeSeries::from_channels(channels);
}

TimeSeries read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_series_csv(in, path.string());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

}  // namespace tsimg
