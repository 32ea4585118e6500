#pragma once

// The classifier under attack, seen only through its loss and the gradient of
// that loss with respect to the input image.

#include <span>
#include <vector>

#include "ava/image.hpp"

namespace ava {

struct OracleInfo {
  ImageShape shape;
  int classes = 0;
  bool reentrant = false;
};

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;  // same layout as the image
};

struct Scores {
  int label = 0;
  std::vector<double> scores;
};

class GradientOracle {
 public:
  virtual ~GradientOracle() = default;

  virtual const OracleInfo& info() const = 0;
  virtual LossAndGrad loss_and_grad(const ImageTensor& image, int label) = 0;
  virtual Scores scores(const ImageTensor& image) = 0;
};

/// Index of the largest score; ties go to the lowest index.
int argmax_lowest(std::span<const double> scores);

/// Predicted class of `image`. Throws InvalidArgument on a shape mismatch.
int predict(GradientOracle& oracle, const ImageTensor& image);

/// Throws InvalidArgument if `image` does not match the oracle's advertised
/// shape, or `label` is not a valid class (pass -1 to skip the label check).
void check_oracle_input(const OracleInfo& info, const ImageTensor& image, int label = -1);

/// Throws OracleError unless `result` holds exactly shape.size() finite values
/// and a finite loss.
void check_oracle_reply(const OracleInfo& info, const LossAndGrad& result);

}  // namespace ava
