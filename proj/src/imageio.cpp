#include "tsimg/imageio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "tsimg/error.hpp"

namespace tsimg {

void write_pgm(std::ostream& out, const Graymap& map) {
  out << "P5\n" << map.width << ' ' << map.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(map.pixels.data()),
            static_cast<std::streamsize>(map.pixels.size()));
}

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (std::isspace(ch)) {
      if (!token.empty()) break;
    } else {
      token.push_back(static_cast<char>(ch));
    }
    ch = in.get();
  }
  return token;
}

std::size_t parse_size(const std::string& token, std::string_view origin, const char* what) {
  std::size_t v = 0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
    throw InputError(std::string(origin) + ": bad PGM " + what + " '" + token + "'");
  }
  return v;
}

}  // namespace

Graymap read_pgm(std::istream& in, std::string_view origin) {
  if (next_token(in) != "P5") throw InputError(std::string(origin) + ": not a binary PGM (P5)");
  Graymap map;
  map.width = parse_size(next_token(in), origin, "width");
  map.height = parse_size(next_token(in), origin, "height");
  const auto maxval = parse_size(next_token(in), origin, "maxval");
  if (maxval != 255) throw InputError(std::string(origin) + ": PGM maxval must be 255");
  if (map.width == 0 || map.height == 0) throw InputError(std::string(origin) + ": empty PGM");
  map.pixels.resize(map.width * map.height);
  in.read(reinterpret_cast<char*>(map.pixels.data()), static_cast<std::streamsize>(map.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(map.pixels.size())) {
    throw InputError(std::string(origin) + ": truncated PGM pixel data");
  }
  return map;
}

Graymap to_graymap(const BinaryImage& image, std::size_t channel) {
  Graymap map{image.length(), image.height(), {}};
  map.pixels.assign(map.width * map.height, 0);
  for (std::size_t col = 0; col < image.length(); ++col) {
    const auto r = image.row(channel, col);
    if (r != kMissingRow) map.pixels[static_cast<std::size_t>(r) * map.width + col] = 255;
  }
  return map;
}

Graymap to_graymap(const SoftImage& image, std::size_t channel) {
  Graymap map{image.length(), image.height(), {}};
  map.pixels.assign(map.width * map.height, 0);
  for (std::size_t col = 0; col < image.length(); ++col) {
    const auto column = image.column(channel, col);
    for (std::size_t r = 0; r < column.size(); ++r) {
      const double scaled = std::round(255.0 * std::clamp(column[r], 0.0, 1.0));
      map.pixels[r * map.width + col] = static_cast<std::uint8_t>(scaled);
    }
  }
  return map;
}

BinaryImage binary_from_graymaps(const std::vector<Graymap>& maps, const SpaceParams& params,
                                 bool allow_missing, const std::vector<std::string>& origins) {
  if (maps.empty()) throw InputError("no channel graymaps given");
  const std::size_t L = maps.front().width;
  std::vector<std::int32_t> rows(maps.size() * L, kMissingRow);
  for (std::size_t c = 0; c < maps.size(); ++c) {
    const auto& map = maps[c];
    const std::string origin = c < origins.size() ? origins[c] : "channel " + std::to_string(c);
    if (map.height != params.h || map.width != L) {
      throw StructuralError(origin + ": graymap is " + std::to_string(map.width) + "x" +
                            std::to_string(map.height) + ", expected " + std::to_string(L) + "x" +
                            std::to_string(params.h));
    }
    for (std::size_t col = 0; col < L; ++col) {
      int active = 0;
      for (std::size_t r = 0; r < map.height; ++r) {
        const auto px = map.at(r, col);
        if (px == 255) {
          ++active;
          rows[c * L + col] = static_cast<std::int32_t>(r);
        } else if (px != 0) {
          throw StructuralError(origin + ": column " + std::to_string(col) +
                                " has a non-binary pixel value " + std::to_string(px));
        }
      }
      if (active > 1 || (active == 0 && !allow_missing)) {
        throw StructuralError(origin + ": column " + std::to_string(col) + " has " +
                              std::to_string(active) + " active rows, expected exactly one");
      }
    }
  }
  return BinaryImage(params, maps.size(), L, std::move(rows));
}

std::string format_metadata(const ImageMetadata& meta) {
  std::ostringstream out;
  out << "kind = " << meta.kind << '\n';
  out << "h = " << meta.params.h << '\n';
  out << "max_scale = " << format_real(meta.params.max_scale, 17) << '\n';
  out << "length = " << meta.length << '\n';
  out << "channels = " << meta.channels << '\n';
  out << "allow_missing = " << (meta.allow_missing ? 1 : 0) << '\n';
  out << "normalized = " << (meta.normalization ? 1 : 0) << '\n';
  if (meta.normalization) {
    const auto& n = *meta.normalization;
    for (std::size_t c = 0; c < n.mean.size(); ++c) {
      out << "mean." << c << " = " << format_real(n.mean[c], 17) << '\n';
      out << "std." << c << " = " << format_real(n.std[c], 17) << '\n';
      out << "std_floored." << c << " = " << (n.floored[c] ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

namespace {

template <class T>
T parse_number(const std::map<std::string, std::string>& kv, const std::string& key,
               std::string_view origin) {
  auto it = kv.find(key);
  if (it == kv.end()) throw InputError(std::string(origin) + ": missing key '" + key + "'");
  T v{};
  const auto& s = it->second;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw InputError(std::string(origin) + ": bad value for '" + key + "': " + s);
  }
  return v;
}

}  // namespace

ImageMetadata parse_metadata(std::string_view text, std::string_view origin) {
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError(std::string(origin) + ": malformed line '" + line + "'");
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    kv[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
  }
  ImageMetadata meta;
  meta.kind = kv.count("kind") ? kv["kind"] : "binary";
  meta.params.h = parse_number<std::size_t>(kv, "h", origin);
  meta.params.max_scale = parse_number<double>(kv, "max_scale", origin);
  meta.length = parse_number<std::size_t>(kv, "length", origin);
  meta.channels = parse_number<std::size_t>(kv, "channels", origin);
  meta.allow_missing = kv.count("allow_missing") && parse_number<int>(kv, "allow_missing", origin) != 0;
  if (kv.count("normalized") && parse_number<int>(kv, "normalized", origin) != 0) {
    NormStats stats;
    for (std::size_t c = 0; c < meta.channels; ++c) {
      const auto idx = std::to_string(c);
      stats.mean.push_back(parse_number<double>(kv, "mean." + idx, origin));
      stats.std.push_back(parse_number<double>(kv, "std." + idx, origin));
      stats.floored.push_back(kv.count("std_floored." + idx) &&
                              parse_number<int>(kv, "std_floored." + idx, origin) != 0);
    }
    meta.normalization = std::move(stats);
  }
  try {
    meta.params.validate();
  } catch (const ConfigError& e) {
    throw InputError(std::string(origin) + ": " + e.what());
  }
  return meta;
}

std::filesystem::path metadata_path(const std::filesystem::path& stem) {
  auto p = stem;
  p += ".meta";
  return p;
}

std::filesystem::path channel_path(const std::filesystem::path& stem, std::size_t channel) {
  auto p = stem;
  p += "_ch" + std::to_string(channel) + ".pgm";
  return p;
}

void save_image(const std::filesystem::path& stem, const BinaryImage& image,
                const std::optional<NormStats>& normalization) {
  ImageMetadata meta{"binary", image.params(), image.length(), image.channels(), image.has_missing(),
                     normalization};
  for (std::size_t c = 0; c < image.channels(); ++c) {
    std::ostringstream out;
    write_pgm(out, to_graymap(image, c));
    write_file_atomic(channel_path(stem, c), out.str());
  }
  write_file_atomic(metadata_path(stem), format_metadata(meta));
}

void save_image(const std::filesystem::path& stem, const SoftImage& image) {
  ImageMetadata meta{"soft", image.params(), image.length(), image.channels(), true, std::nullopt};
  for (std::size_t c = 0; c < image.channels(); ++c) {
    std::ostringstream out;
    write_pgm(out, to_graymap(image, c));
    write_file_atomic(channel_path(stem, c), out.str());
  }
  write_file_atomic(metadata_path(stem), format_metadata(meta));
}

LoadedImage load_image(const std::filesystem::path& meta_path) {
  auto meta = parse_metadata(read_file(meta_path), meta_path.string());
  if (meta.kind != "binary") {
    throw InputError(meta_path.string() + ": only binary images can be decoded exactly");
  }
  auto stem = meta_path;
  stem.replace_extension();
  std::vector<Graymap> maps;
  std::vector<std::string> origins;
  for (std::size_t c = 0; c < meta.channels; ++c) {
    const auto path = channel_path(stem, c);
    std::istringstream in(read_file(path));
    maps.push_back(read_pgm(in, path.string()));
    origins.push_back(path.string());
  }
  auto image = binary_from_graymaps(maps, meta.params, meta.allow_missing, origins);
  if (image.length() != meta.length) {
    throw StructuralError(meta_path.string() + ": image length disagrees with metadata");
  }
  return {std::move(image), std::move(meta)};
}

}  // namespace tsimg
