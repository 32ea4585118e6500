#include "toy_suite.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace ava::toy {

namespace {

struct Features {
  double lr = 0.0;    // mean(left half) - mean(right half)
  double mean = 0.0;  // mean over the central disc
};

Features features(const ImageTensor& img, double center_radius) {
  const CoordGrid grid = build_coord_grid(img.height(), img.width());
  const std::size_t w = img.width();
  double left = 0.0, right = 0.0, center = 0.0;
  std::size_t n_center = 0;
  for (std::size_t r = 0; r < img.height(); ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      (c < w / 2 ? left : right) += img.at(r, c);
      if (grid.r[r * w + c] < center_radius) {
        center += img.at(r, c);
        ++n_center;
      }
    }
  }
  const double half = static_cast<double>(img.height() * (w / 2));
  return {(left - right) / half, center / static_cast<double>(n_center)};
}

}  // namespace

ReferenceClassifier make_classifier(const Options& opt) {
  const std::size_t n = opt.size;
  const std::size_t d = n * n;
  const double half = static_cast<double>(d / 2);
  const CoordGrid grid = build_coord_grid(n, n);
  double n_center = 0.0;
  for (double r : grid.r) n_center += r < opt.center_radius ? 1.0 : 0.0;
  if (n_center == 0.0) throw std::invalid_argument("center_radius selects no pixels");
  std::vector<double> w(3 * d), b(3, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t i = r * n + c;
      const double side = c < n / 2 ? 1.0 : -1.0;
      w[left_lit * d + i] = opt.gain * side / half;
      w[right_lit * d + i] = -opt.gain * side / half;
      if (grid.r[i] < opt.center_radius) w[even * d + i] = opt.gain * opt.even_share / n_center;
    }
  }
  return ReferenceClassifier::linear(ImageShape{n, n, 1}, w, b);
}

Suite make_suite(const Options& opt) {
  if (opt.size < 8 || opt.size % 2 != 0) throw std::invalid_argument("size must be even and >= 8");
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const std::size_t n = opt.size;
  const double mid = (static_cast<double>(n) - 1.0) / 2.0;

  Suite suite{make_classifier(opt), {}};
  ReferenceOracle oracle(suite.model);

  const auto scene = [&](int label) {
    for (int attempt = 0; attempt < 100000; ++attempt) {
      // Exposure plus smooth texture, symmetric or not.
      const double base = uniform(0.35, 0.65);
      const double fx = uniform(0.5, 2.0), fy = uniform(0.5, 2.0);
      const double px = uniform(0, 6.3), py = uniform(0, 6.3);
      const double amp = uniform(0.0, 0.06);
      const double blob = uniform(-0.15, 0.15);
      std::vector<double> texture(n * n);
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
          const double x = (static_cast<double>(c) - mid) / mid;
          const double y = (static_cast<double>(r) - mid) / mid;
          texture[r * n + c] = base + amp * std::cos(fx * 3.14159 * x + px) *
                                          std::cos(fy * 3.14159 * y + py) +
                               blob * std::exp(-2.0 * (x * x + y * y)) + uniform(-0.02, 0.02);
        }
      }
      // Light from one side.
      const double peak = uniform(opt.peak_lo, opt.peak_hi);
      const double width = uniform(opt.width_lo, opt.width_hi);
      std::vector<double> ramp(n * n);
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
          ramp[r * n + c] = std::max(0.0, 1.0 - std::abs(static_cast<double>(c) - peak) / width);
        }
      }
      const bool mirror = label == right_lit || (label == even && unit(rng) < 0.5);
      const double target = label == even ? uniform(0.0, opt.even_ratio_hi)
                                          : uniform(opt.lit_ratio_lo, opt.lit_ratio_hi);

      // Solve for the ramp height giving lr = sign * target * share * mean.
      const double sign = mirror ? -1.0 : 1.0;
      ImageTensor t(n, n, 1), rp(n, n, 1);
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
          t.at(r, c) = std::clamp(texture[r * n + c], 0.0, 1.0);
          rp.at(r, c) = ramp[r * n + (mirror ? n - 1 - c : c)];
        }
      }
      const Features ft = features(t, opt.center_radius);
      const Features fr = features(rp, opt.center_radius);
      const double k = sign * target * opt.even_share;
      const double h = (k * ft.mean - ft.lr) / (fr.lr - k * fr.mean);
      if (!(h >= 0.0) || h > 0.5) continue;

      ImageTensor img(n, n, 1);
      for (std::size_t i = 0; i < n * n; ++i) {
        img.mutable_values()[i] = std::clamp(texture[i] + h * rp.values()[i], 0.0, 1.0);
      }
      img = quantize_8bit(img);
      if (predict(oracle, img) == label) return img;
    }
    throw std::runtime_error("options admit no scene of class " + std::to_string(label));
  };

  int index = 0;
  for (int k = 0; k < opt.per_class; ++k) {
    for (int label : {left_lit, right_lit, even}) {
      char id[32];
      std::snprintf(id, sizeof id, "img_%03d", index++);
      suite.samples.push_back({id, scene(label), label});
    }
  }
  return suite;
}

}  // namespace ava::toy
