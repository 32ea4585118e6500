#include "ava/metrics.hpp"

#include <cmath>
#include <limits>

#include "ava/error.hpp"

namespace ava {

namespace {

void check_same_shape(const ImageTensor& a, const ImageTensor& b) {
  if (a.shape() != b.shape()) {
    throw InvalidArgument("image shapes differ: " + a.shape().to_string() + " vs " +
                          b.shape().to_string());
  }
}

constexpr std::size_t kWindow = 8;

}  // namespace

double psnr(const ImageTensor& a, const ImageTensor& b) {
  check_same_shape(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    sum += d * d;
  }
  if (sum == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sum / static_cast<double>(a.size());
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const ImageTensor& a, const ImageTensor& b) {
  check_same_shape(a, b);
  if (a.height() < kWindow || a.width() < kWindow) {
    throw InvalidArgument("SSIM needs at least 8x8 pixels, got " + a.shape().to_string());
  }
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  constexpr double n = static_cast<double>(kWindow * kWindow);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t ch = 0; ch < a.channels(); ++ch) {
    for (std::size_t r0 = 0; r0 + kWindow <= a.height(); ++r0) {
      for (std::size_t c0 = 0; c0 + kWindow <= a.width(); ++c0) {
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        for (std::size_t r = r0; r < r0 + kWindow; ++r) {
          for (std::size_t c = c0; c < c0 + kWindow; ++c) {
            const double x = a.at(r, c, ch);
            const double y = b.at(r, c, ch);
            sa += x;
            sb += y;
            saa += x * x;
            sbb += y * y;
            sab += x * y;
          }
        }
        const double ma = sa / n;
        const double mb = sb / n;
        const double va = std::max(saa / n - ma * ma, 0.0);
        const double vb = std::max(sbb / n - mb * mb, 0.0);
        const double cov = sab / n - ma * mb;
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

double mean_abs_delta(const ImageTensor& a, const ImageTensor& b) {
  check_same_shape(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a.values()[i] - b.values()[i]);
  return sum / static_cast<double>(a.size());
}

QualityMetrics quality(const ImageTensor& clean, const ImageTensor& adversarial) {
  QualityMetrics q;
  q.psnr = psnr(clean, adversarial);
  q.mean_abs_delta = mean_abs_delta(clean, adversarial);
  q.ssim = (clean.height() >= kWindow && clean.width() >= kWindow)
               ? ssim(clean, adversarial)
               : std::numeric_limits<double>::quiet_NaN();
  return q;
}

}  // namespace ava
