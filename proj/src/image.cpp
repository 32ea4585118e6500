#include "ava/image.hpp"

#include <cmath>
#include <sstream>

#include "ava/error.hpp"

namespace ava {

std::string ImageShape::to_string() const {
  std::ostringstream os;
  os << height << "x" << width << "x" << channels;
  return os.str();
}

void validate_image(const ImageShape& shape, std::span<const double> values) {
  if (shape.height == 0 || shape.width == 0) {
    throw InvalidArgument("image has a zero-size dimension: " + shape.to_string());
  }
  if (shape.channels != 1 && shape.channels != 3) {
    throw InvalidArgument("image must have 1 or 3 channels, got " + shape.to_string());
  }
  if (values.size() != shape.size()) {
    throw InvalidArgument("image data length " + std::to_string(values.size()) +
                          " does not match shape " + shape.to_string());
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    // Negated comparison also rejects NaN.
    if (!(values[i] >= 0.0 && values[i] <= 1.0)) {
      throw InvalidArgument("image value at index " + std::to_string(i) + " is outside [0,1]");
    }
  }
}

ImageTensor::ImageTensor(std::size_t height, std::size_t width, std::size_t channels, double fill)
    : shape_{height, width, channels}, values_(height * width * channels, fill) {
  validate_image(shape_, values_);
}

ImageTensor::ImageTensor(ImageShape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  validate_image(shape_, values_);
}

std::uint8_t to_byte(double value) {
  const long q = std::lround(value * 255.0);
  return static_cast<std::uint8_t>(q < 0 ? 0 : (q > 255 ? 255 : q));
}

ImageTensor quantize_8bit(const ImageTensor& image) {
  ImageTensor out = image;
  for (double& v : out.mutable_values()) v = to_byte(v) / 255.0;
  return out;
}

}  // namespace ava
