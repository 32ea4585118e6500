#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ava/image.hpp"

namespace ava {

/// Reads an 8-bit PNG or a binary PGM (P5) / PPM (P6). Values map to v/255;
/// gray becomes 1 channel, color 3 (PNG alpha is dropped). Throws IoError
/// naming the path on any failure.
ImageTensor load_image(const std::filesystem::path& path);

/// Writes round(v*255) with ties away from zero. The format follows the
/// extension: .pgm/.ppm write binary PNM, anything else writes PNG.
void save_image(const ImageTensor& image, const std::filesystem::path& path);

struct ManifestRecord {
  std::filesystem::path path;
  int label = 0;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestRecord> records;
  int class_count = 0;
};

/// Parses a `path,label` CSV. Relative paths resolve against the CSV's
/// directory. `class_count` bounds the labels when positive; otherwise it is
/// inferred as max label + 1. Throws ParseError with the offending line number.
DatasetManifest load_manifest(const std::filesystem::path& csv, int class_count = 0);

/// Text grid: a `H W` line, then H lines of W decimal values.
void write_float_grid(const std::filesystem::path& path, std::size_t height, std::size_t width,
                      std::span<const double> values);
std::vector<double> read_float_grid(const std::filesystem::path& path, std::size_t* height,
                                    std::size_t* width);

/// Shortest decimal form that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace ava
