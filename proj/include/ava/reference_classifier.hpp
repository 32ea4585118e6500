#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "ava/image.hpp"
#include "ava/oracle.hpp"

namespace ava {

/// Two-layer rectifier network with a softmax cross-entropy loss:
///   logits = W2^T relu(W1^T x + b1) + b2
/// W1 is D_in x D_h and W2 is D_h x K, both row-major. Small enough to ship
/// as JSON next to a dataset and stand in for a real image model in tests.
class ReferenceClassifier {
 public:
  ReferenceClassifier(ImageShape input, std::size_t hidden, std::size_t classes,
                      std::vector<double> w1, std::vector<double> b1, std::vector<double> w2,
                      std::vector<double> b2);

  /// A purely linear classifier logits = W x + b (W is K x D_in), embedded
  /// exactly through pairs of rectifiers relu(z) - relu(-z).
  static ReferenceClassifier linear(ImageShape input, std::span<const double> weights,
                                    std::span<const double> bias);

  static ReferenceClassifier load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  const ImageShape& input_shape() const { return input_; }
  std::size_t input_size() const { return input_.size(); }
  std::size_t hidden() const { return hidden_; }
  std::size_t classes() const { return classes_; }

  struct Activations {
    std::vector<double> pre;     // W1^T x + b1
    std::vector<double> logits;
  };
  Activations forward(std::span<const double> x) const;

  /// Weight at row i (input index), column j (hidden unit) of W1.
  double w1(std::size_t i, std::size_t j) const { return w1t_[j * input_.size() + i]; }

  friend bool operator==(const ReferenceClassifier&, const ReferenceClassifier&) = default;

 private:
  friend LossAndGrad reference_loss_and_grad(const ReferenceClassifier&, const ImageTensor&, int);

  ImageShape input_;
  std::size_t hidden_;
  std::size_t classes_;
  std::vector<double> w1t_;  // transposed: D_h rows of D_in
  std::vector<double> b1_;
  std::vector<double> w2_;
  std::vector<double> b2_;
};

/// Softmax cross-entropy of the true label and its analytic gradient with
/// respect to every input value, in full double precision. A rectifier with
/// a pre-activation of exactly 0 passes half the gradient.
LossAndGrad reference_loss_and_grad(const ReferenceClassifier& model, const ImageTensor& image,
                                    int label);

/// In-process oracle around a ReferenceClassifier.
///
/// Inputs and gradients cross the oracle boundary at 32-bit float precision,
/// the same as the wire protocol, so that in-process and remote runs of the
/// same model produce identical attacks. Pure, so it is reentrant.
class ReferenceOracle final : public GradientOracle {
 public:
  explicit ReferenceOracle(ReferenceClassifier model);

  const OracleInfo& info() const override { return info_; }
  LossAndGrad loss_and_grad(const ImageTensor& image, int label) override;
  Scores scores(const ImageTensor& image) override;

  const ReferenceClassifier& model() const { return model_; }

 private:
  ReferenceClassifier model_;
  OracleInfo info_;
};

/// Rounds every value to the nearest float and back.
ImageTensor round_to_float32(const ImageTensor& image);

}  // namespace ava
