#pragma once

// Portable graymap (P5, maxval 255) serialisation of image-space tensors, one
// file per channel, plus a `key = value` sidecar describing the space.
// File row 0 is the lowest-value bin.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tsimg/imgspace.hpp"

namespace tsimg {

struct Graymap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, height x width

  [[nodiscard]] std::uint8_t at(std::size_t row, std::size_t col) const {
    return pixels[row * width + col];
  }
};

void write_pgm(std::ostream& out, const Graymap& map);
Graymap read_pgm(std::istream& in, std::string_view origin = "<stream>");

/// Binary channel as 0/255 pixels; missing columns are all zero.
Graymap to_graymap(const BinaryImage& image, std::size_t channel);
/// Soft channel scaled to round(255 * mass).
Graymap to_graymap(const SoftImage& image, std::size_t channel);

/// Rebuilds a binary image from per-channel graymaps. Pixels must be 0 or 255
/// and each column must hold exactly one 255, except that all-zero columns are
/// accepted as missing when `allow_missing` is set. `origins` names each map
/// in error messages.
BinaryImage binary_from_graymaps(const std::vector<Graymap>& maps, const SpaceParams& params,
                                 bool allow_missing, const std::vector<std::string>& origins);

struct ImageMetadata {
  std::string kind = "binary";
  SpaceParams params;
  std::size_t length = 0;
  std::size_t channels = 0;
  bool allow_missing = false;
  std::optional<NormStats> normalization;
};

std::string format_metadata(const ImageMetadata& meta);
ImageMetadata parse_metadata(std::string_view text, std::string_view origin = "<metadata>");

/// Paths used for an encoded image with the given stem:
/// `<stem>.meta` and `<stem>_ch<i>.pgm`.
std::filesystem::path metadata_path(const std::filesystem::path& stem);
std::filesystem::path channel_path(const std::filesystem::path& stem, std::size_t channel);

void save_image(const std::filesystem::path& stem, const BinaryImage& image,
                const std::optional<NormStats>& normalization);
void save_image(const std::filesystem::path& stem, const SoftImage& image);

struct LoadedImage {
  BinaryImage image;
  ImageMetadata meta;
};

/// Loads a binary image from its sidecar path; channel files are resolved next
/// to it.
LoadedImage load_image(const std::filesystem::path& meta_path);

}  // namespace tsimg
