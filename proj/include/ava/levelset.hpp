#pragma once

// Level-set view of the geometry field: the region of G above a threshold is
// held near the physical reference G0 through a smoothed Heaviside mask, the
// rest is free. The boundary curve is never materialized.

#include <cstddef>
#include <span>
#include <vector>

#include "ava/vignette.hpp"

namespace ava {

struct LevelSetConfig {
  /// Alternative threshold at the top of the G range. With G clamped to
  /// [0,1] it leaves the mask nearly constant, so it is not the default.
  static constexpr double kUpperZLevel = 1.0;

  double z_level = 0.5;
  double h_eps = 0.05;

  void validate() const;
};

/// Element-wise tunable geometry matrix G and its physical reference G0.
struct GeometryField {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> g;
  std::vector<double> g0;

  /// G = G0 = 1 - alpha R.
  static GeometryField physical(const CoordGrid& grid, double alpha);

  friend bool operator==(const GeometryField&, const GeometryField&) = default;
};

/// 0.5 (1 + (2/pi) atan((x - threshold) / h_eps))
double smoothed_heaviside(double x, double threshold, double h_eps);
/// h_eps / (pi (h_eps^2 + (x - threshold)^2))
double smoothed_heaviside_derivative(double x, double threshold, double h_eps);

struct RegularizerValue {
  double value = 0.0;
  std::vector<double> grad;  // d value / dG, including the mask's own dependence on G
};

/// sum_i (G[i] - G0[i])^2 H(G[i])
RegularizerValue levelset_regularizer(const GeometryField& field, const LevelSetConfig& cfg);

/// d value / d alpha through G0 = 1 - alpha R: sum_i 2 (G - G0) R H(G).
double levelset_regularizer_alpha_partial(const GeometryField& field, const CoordGrid& grid,
                                          const LevelSetConfig& cfg);

/// Clamps every parameter into its feasible interval and every G entry into [0,1].
void project(PhysicalParams& params, const ParamBounds& bounds, GeometryField* field = nullptr);

}  // namespace ava
