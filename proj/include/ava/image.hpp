#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ava {

struct ImageShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  std::size_t pixels() const { return height * width; }
  std::size_t size() const { return height * width * channels; }
  std::string to_string() const;

  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

/// H x W x C intensities in [0,1], row-major, channel-last.
///
/// The range invariant is checked on construction. Code that writes through
/// mutable_values() is responsible for keeping it.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(std::size_t height, std::size_t width, std::size_t channels, double fill = 0.0);
  ImageTensor(ImageShape shape, std::vector<double> values);

  const ImageShape& shape() const { return shape_; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t channels() const { return shape_.channels; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }

  double at(std::size_t row, std::size_t col, std::size_t ch = 0) const {
    return values_[(row * shape_.width + col) * shape_.channels + ch];
  }
  double& at(std::size_t row, std::size_t col, std::size_t ch = 0) {
    return values_[(row * shape_.width + col) * shape_.channels + ch];
  }

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  ImageShape shape_;
  std::vector<double> values_;
};

/// Throws InvalidArgument unless channels is 1 or 3, dimensions are non-zero
/// and every value lies in [0,1].
void validate_image(const ImageShape& shape, std::span<const double> values);

/// Snaps every value to the nearest multiple of 1/255 (ties away from zero).
/// This is exactly what survives an 8-bit save/load round trip.
ImageTensor quantize_8bit(const ImageTensor& image);

std::uint8_t to_byte(double value);

}  // namespace ava
