#include "ava/oracle.hpp"

#include <cmath>
#include <string>

#include "ava/error.hpp"

namespace ava {

int argmax_lowest(std::span<const double> scores) {
  if (scores.empty()) throw InvalidArgument("argmax of an empty score vector");
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  return static_cast<int>(best);
}

void check_oracle_input(const OracleInfo& info, const ImageTensor& image, int label) {
  if (image.shape() != info.shape) {
    throw InvalidArgument("image shape " + image.shape().to_string() +
                          " does not match oracle input " + info.shape.to_string());
  }
  if (label != -1 && (label < 0 || label >= info.classes)) {
    throw InvalidArgument("label " + std::to_string(label) + " outside [0, " +
                          std::to_string(info.classes) + ")");
  }
}

void check_oracle_reply(const OracleInfo& info, const LossAndGrad& result) {
  if (result.grad.size() != info.shape.size()) {
    throw OracleError("oracle gradient has " + std::to_string(result.grad.size()) +
                      " values, expected " + std::to_string(info.shape.size()));
  }
  if (!std::isfinite(result.loss)) throw OracleError("oracle returned a non-finite loss");
  for (double g : result.grad) {
    if (!std::isfinite(g)) throw OracleError("oracle returned a non-finite gradient value");
  }
}

int predict(GradientOracle& oracle, const ImageTensor& image) {
  check_oracle_input(oracle.info(), image);
  return oracle.scores(image).label;
}

}  // namespace ava
