#pragma once

#include "ava/image.hpp"

namespace ava {

/// PSNR (dB) on the [0,1] scale. Identical images give +infinity.
double psnr(const ImageTensor& a, const ImageTensor& b);

/// Reported in place of +infinity in CSV output.
inline constexpr double kPsnrCap = 99.0;

/// Mean SSIM over every 8x8 window (stride 1) and channel, with
/// C1 = 0.01^2 and C2 = 0.03^2. Needs both dimensions >= 8.
double ssim(const ImageTensor& a, const ImageTensor& b);

double mean_abs_delta(const ImageTensor& a, const ImageTensor& b);

struct QualityMetrics {
  double psnr = 0.0;
  double ssim = 0.0;  // NaN when the image is smaller than one window
  double mean_abs_delta = 0.0;
};

QualityMetrics quality(const ImageTensor& clean, const ImageTensor& adversarial);

}  // namespace ava
