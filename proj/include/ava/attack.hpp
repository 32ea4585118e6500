#pragma once

// Radial-isotropic (RI) and radial-anisotropic (RA) adversarial vignetting
// attacks: signed-gradient ascent on the vignetting parameters (and, for RA,
// on the element-wise geometry field) with projection after every step.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ava/image.hpp"
#include "ava/levelset.hpp"
#include "ava/metrics.hpp"
#include "ava/oracle.hpp"
#include "ava/vignette.hpp"

namespace ava {

enum class AttackMode { ri, ra };

std::string_view to_string(AttackMode mode);
AttackMode parse_attack_mode(std::string_view text);

struct StepSizes {
  double f_inv = 0.0125;
  double alpha = 0.0125;
  double tau = 0.01;
  double chi = 0.01;
  double geometry = 0.0125;

  double operator[](Param p) const;
};

struct AttackConfig {
  AttackMode mode = AttackMode::ra;
  StepSizes steps;
  int max_iters = 40;
  double lambda_f = 1.0;
  double lambda_alpha = 1.0;
  double lambda_g = 1.0;
  ParamBounds bounds;
  LevelSetConfig levelset;
  bool early_stop = true;

  /// Throws InvalidArgument on negative steps/lambdas, max_iters < 1, or
  /// invalid bounds / level-set settings. A zero step freezes that variable.
  void validate() const;
};

struct ObjectiveTerms {
  double classification = 0.0;  // J(phi(vig(I,P)), y)
  double regularizer = 0.0;     // sum (G - G0)^2 H(G), before lambda_g
  double focal_penalty = 0.0;   // f_inv^2, before lambda_f
  double alpha_penalty = 0.0;   // alpha^2, before lambda_alpha
};

struct ObjectiveValue {
  double total = 0.0;
  ObjectiveTerms terms;
  PhysicalParams grad_params;
  std::vector<double> grad_geometry;  // empty when G is pinned to G0(alpha)
};

/// total = J - lambda_g Reg(G) - lambda_f f_inv^2 - lambda_alpha alpha^2
///
/// `geometry == nullptr` evaluates the physical model (G = G0(alpha), no
/// regularizer). Otherwise the image uses geometry->g, G0 is rebuilt from the
/// current alpha, and alpha's gradient flows only through the regularizer and
/// its own penalty. Oracle failures propagate as OracleError with context.
ObjectiveValue objective(const CoordGrid& grid, const ImageTensor& image, int label,
                         GradientOracle& oracle, const PhysicalParams& params,
                         const GeometryField* geometry, const AttackConfig& cfg);
ObjectiveValue objective(const ImageTensor& image, int label, GradientOracle& oracle,
                         const PhysicalParams& params, const GeometryField* geometry,
                         const AttackConfig& cfg);

struct AttackResult {
  ImageTensor adversarial;  // 8-bit quantized vig(I, P)
  PhysicalParams final_params;
  std::optional<GeometryField> final_geometry;  // RA only
  bool success = false;
  int label = 0;
  int clean_prediction = -1;
  int adversarial_prediction = -1;
  int iterations_used = 0;
  std::vector<double> loss_trace;  // objective total at each iteration
  QualityMetrics quality;
  std::optional<std::string> error;  // set when the oracle failed mid-attack
};

/// Called after every projected update. `geometry` is null in RI mode.
using IterationObserver =
    std::function<void(int iteration, const PhysicalParams& params, const GeometryField* geometry)>;

AttackResult ri_ava_attack(const ImageTensor& image, int label, GradientOracle& oracle,
                           const AttackConfig& cfg, const IterationObserver& observer = {});
AttackResult ra_ava_attack(const ImageTensor& image, int label, GradientOracle& oracle,
                           const AttackConfig& cfg, const IterationObserver& observer = {});

/// Dispatches on cfg.mode.
AttackResult run_attack(const ImageTensor& image, int label, GradientOracle& oracle,
                        const AttackConfig& cfg, const IterationObserver& observer = {});

/// sign(x) with sign(0) = 0.
inline double signum(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace ava
