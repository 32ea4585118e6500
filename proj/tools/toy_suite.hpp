#pragma once

// Synthetic 3-class suite: left-lit, right-lit and evenly lit scenes, with a
// linear classifier built by hand rather than trained.
//
// The classifier compares the left-minus-right mean brightness against a
// fixed fraction of the central mean, so it ignores global exposure. Every
// radially symmetric vignette keeps a scene's left/right balance in sign, so
// isotropic vignetting can only push a lit scene toward "even"; reaching the
// opposite side or leaving "even" takes an anisotropic field.

#include <cstdint>
#include <vector>

#include "ava/eval.hpp"
#include "ava/reference_classifier.hpp"

namespace ava::toy {

enum Label : int { left_lit = 0, right_lit = 1, even = 2 };

struct Options {
  std::size_t size = 16;
  int per_class = 20;
  std::uint64_t seed = 1;
  double gain = 132.2;       // logit units per unit of mean-brightness difference
  double even_share = 0.063;  // "even" logit is gain * even_share * central mean brightness
  double center_radius = 0.33;  // R below which a pixel counts as central
  double lit_ratio_lo = 1.27;   // lit scenes: (L - R) / (even_share * central mean)
  double lit_ratio_hi = 3.41;
  double even_ratio_hi = 0.79;  // even scenes: |L - R| / (even_share * central mean)
  // Side light: a triangular column profile peaking at column `peak` (drawn
  // from [peak_lo, peak_hi]) with half-width drawn from [width_lo, width_hi].
  double peak_lo = 1.1;
  double peak_hi = 1.2;
  double width_lo = 1.7;
  double width_hi = 5.3;
};

ReferenceClassifier make_classifier(const Options& opt);

struct Suite {
  ReferenceClassifier model;
  std::vector<Sample> samples;
};

/// Deterministic for a given Options. Images are already 8-bit quantized.
Suite make_suite(const Options& opt);

}  // namespace ava::toy
