#include "ava/reference_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "ava/error.hpp"
#include "ava/kernels.hpp"

namespace ava {

namespace {

constexpr const char* kFormatTag = "ava-reference-classifier/1";

void require_finite(const std::vector<double>& values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgument(std::string(what) + " contains non-finite values");
  }
}

}  // namespace

ReferenceClassifier::ReferenceClassifier(ImageShape input, std::size_t hidden,
                                         std::size_t classes, std::vector<double> w1,
                                         std::vector<double> b1, std::vector<double> w2,
                                         std::vector<double> b2)
    : input_(input), hidden_(hidden), classes_(classes), b1_(std::move(b1)), w2_(std::move(w2)),
      b2_(std::move(b2)) {
  const std::size_t d_in = input_.size();
  if (d_in == 0 || hidden_ == 0) throw InvalidArgument("classifier dimensions must be non-zero");
  if (classes_ < 2) throw InvalidArgument("classifier needs at least 2 classes");
  if (w1.size() != d_in * hidden_ || b1_.size() != hidden_ || w2_.size() != hidden_ * classes_ ||
      b2_.size() != classes_) {
    throw InvalidArgument("classifier weight sizes do not match its dimensions");
  }
  require_finite(w1, "W1");
  require_finite(b1_, "b1");
  require_finite(w2_, "W2");
  require_finite(b2_, "b2");
  w1t_.resize(w1.size());
  for (std::size_t i = 0; i < d_in; ++i) {
    for (std::size_t j = 0; j < hidden_; ++j) w1t_[j * d_in + i] = w1[i * hidden_ + j];
  }
}

ReferenceClassifier ReferenceClassifier::linear(ImageShape input, std::span<const double> weights,
                                                std::span<const double> bias) {
  const std::size_t d_in = input.size();
  const std::size_t k = bias.size();
  if (weights.size() != k * d_in) throw InvalidArgument("linear weights must be K x D_in");
  const std::size_t hidden = 2 * k;
  std::vector<double> w1(d_in * hidden), b1(hidden), w2(hidden * k, 0.0), b2(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < d_in; ++i) {
      w1[i * hidden + 2 * c] = weights[c * d_in + i];
      w1[i * hidden + 2 * c + 1] = -weights[c * d_in + i];
    }
    b1[2 * c] = bias[c];
    b1[2 * c + 1] = -bias[c];
    w2[(2 * c) * k + c] = 1.0;
    w2[(2 * c + 1) * k + c] = -1.0;
  }
  return ReferenceClassifier(input, hidden, k, std::move(w1), std::move(b1), std::move(w2),
                             std::move(b2));
}

ReferenceClassifier ReferenceClassifier::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open classifier weights: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    if (j.value("format", std::string()) != kFormatTag) {
      throw ParseError("unrecognized weights format in " + path.string());
    }
    const auto shape = j.at("input_shape").get<std::vector<std::size_t>>();
    if (shape.size() != 3) throw ParseError("input_shape must be [H,W,C] in " + path.string());
    return ReferenceClassifier(ImageShape{shape[0], shape[1], shape[2]},
                               j.at("hidden").get<std::size_t>(), j.at("classes").get<std::size_t>(),
                               j.at("w1").get<std::vector<double>>(),
                               j.at("b1").get<std::vector<double>>(),
                               j.at("w2").get<std::vector<double>>(),
                               j.at("b2").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed classifier weights " + path.string() + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError("invalid classifier weights " + path.string() + ": " + e.what());
  }
}

void ReferenceClassifier::save(const std::filesystem::path& path) const {
  const std::size_t d_in = input_.size();
  std::vector<double> w1(d_in * hidden_);
  for (std::size_t i = 0; i < d_in; ++i) {
    for (std::size_t j = 0; j < hidden_; ++j) w1[i * hidden_ + j] = w1t_[j * d_in + i];
  }
  nlohmann::json j{{"format", kFormatTag},
                   {"input_shape", {input_.height, input_.width, input_.channels}},
                   {"hidden", hidden_},
                   {"classes", classes_},
                   {"w1", w1},
                   {"b1", b1_},
                   {"w2", w2_},
                   {"b2", b2_}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write classifier weights: " + path.string());
  out << j.dump() << '\n';
  if (!out) throw IoError("failed writing classifier weights: " + path.string());
}

ReferenceClassifier::Activations ReferenceClassifier::forward(std::span<const double> x) const {
  const kernels::KernelTable& k = kernels::active();
  const std::size_t d_in = input_.size();
  if (x.size() != d_in) throw InvalidArgument("classifier input has the wrong length");
  Activations act;
  act.pre.resize(hidden_);
  for (std::size_t j = 0; j < hidden_; ++j) {
    act.pre[j] = k.dot(&w1t_[j * d_in], x.data(), d_in) + b1_[j];
  }
  act.logits = b2_;
  for (std::size_t j = 0; j < hidden_; ++j) {
    const double h = std::max(act.pre[j], 0.0);
    if (h != 0.0) k.axpy(h, &w2_[j * classes_], act.logits.data(), classes_);
  }
  return act;
}

LossAndGrad reference_loss_and_grad(const ReferenceClassifier& model, const ImageTensor& image,
                                    int label) {
  if (image.size() != model.input_size()) {
    throw InvalidArgument("image " + image.shape().to_string() + " does not fit classifier input " +
                          model.input_shape().to_string());
  }
  if (label < 0 || static_cast<std::size_t>(label) >= model.classes()) {
    throw InvalidArgument("label " + std::to_string(label) + " out of range");
  }
  const kernels::KernelTable& k = kernels::active();
  const auto act = model.forward(image.values());
  const std::size_t classes = model.classes();

  const double peak = *std::max_element(act.logits.begin(), act.logits.end());
  std::vector<double> prob(classes);
  double z = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    prob[c] = std::exp(act.logits[c] - peak);
    z += prob[c];
  }
  LossAndGrad out;
  out.loss = std::log(z) + peak - act.logits[static_cast<std::size_t>(label)];

  // d loss / d logits = softmax - onehot
  for (double& p : prob) p /= z;
  prob[static_cast<std::size_t>(label)] -= 1.0;

  const std::size_t d_in = model.input_size();
  out.grad.assign(d_in, 0.0);
  for (std::size_t j = 0; j < model.hidden(); ++j) {
    if (act.pre[j] < 0.0) continue;
    // relu'(0) = 1/2 keeps the relu(z) - relu(-z) pairs of linear() exact at z = 0.
    const double slope = act.pre[j] > 0.0 ? 1.0 : 0.5;
    const double dh = slope * k.dot(&model.w2_[j * classes], prob.data(), classes);
    if (dh != 0.0) k.axpy(dh, &model.w1t_[j * d_in], out.grad.data(), d_in);
  }
  return out;
}

ImageTensor round_to_float32(const ImageTensor& image) {
  ImageTensor out = image;
  for (double& v : out.mutable_values()) v = static_cast<double>(static_cast<float>(v));
  return out;
}

ReferenceOracle::ReferenceOracle(ReferenceClassifier model)
    : model_(std::move(model)),
      info_{model_.input_shape(), static_cast<int>(model_.classes()), true} {}

LossAndGrad ReferenceOracle::loss_and_grad(const ImageTensor& image, int label) {
  check_oracle_input(info_, image, label);
  LossAndGrad out = reference_loss_and_grad(model_, round_to_float32(image), label);
  for (double& g : out.grad) g = static_cast<double>(static_cast<float>(g));
  return out;
}

Scores ReferenceOracle::scores(const ImageTensor& image) {
  check_oracle_input(info_, image);
  Scores out;
  out.scores = model_.forward(round_to_float32(image).values()).logits;
  out.label = argmax_lowest(out.scores);
  return out;
}

}  // namespace ava
