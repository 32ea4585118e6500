#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "ava/image.hpp"
#include "ava/reference_classifier.hpp"

namespace ava::test {

// Full-precision oracle, so finite differences see the exact loss.
class DoubleOracle final : public GradientOracle {
 public:
  explicit DoubleOracle(ReferenceClassifier model)
      : model_(std::move(model)),
        info_{model_.input_shape(), static_cast<int>(model_.classes()), true} {}

  const OracleInfo& info() const override { return info_; }
  LossAndGrad loss_and_grad(const ImageTensor& image, int label) override {
    return reference_loss_and_grad(model_, image, label);
  }
  Scores scores(const ImageTensor& image) override {
    const auto act = model_.forward(image.values());
    return {argmax_lowest(act.logits), act.logits};
  }

 private:
  ReferenceClassifier model_;
  OracleInfo info_;
};

inline ImageTensor random_image(std::mt19937_64& rng, std::size_t h, std::size_t w, std::size_t c,
                                double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  ImageTensor img(h, w, c);
  for (double& v : img.mutable_values()) v = d(rng);
  return img;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline ReferenceClassifier random_linear(std::mt19937_64& rng, ImageShape shape, int classes,
                                         double scale = 1.0) {
  const auto w = random_vector(rng, static_cast<std::size_t>(classes) * shape.size(), scale);
  const auto b = random_vector(rng, static_cast<std::size_t>(classes), scale);
  return ReferenceClassifier::linear(shape, w, b);
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ava-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace ava::test
