#pragma once

// Physical vignetting model: V = A * G * T applied multiplicatively to an
// image, plus the analytic chain rule back to the model parameters.

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "ava/image.hpp"

namespace ava {

/// Pixel-center coordinates relative to the principal point (image center),
/// scaled so the corner pixel centers sit at R = 1. Row index grows along +v.
struct CoordGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<double> r;

  std::size_t size() const { return r.size(); }
};

CoordGrid build_coord_grid(std::size_t height, std::size_t width);

enum class Param : std::size_t { f_inv = 0, alpha = 1, tau = 2, chi = 3 };
inline constexpr std::size_t kParamCount = 4;
inline constexpr std::array<Param, kParamCount> kAllParams{Param::f_inv, Param::alpha, Param::tau,
                                                           Param::chi};
std::string_view param_name(Param p);

/// The physical parameter set {f^-1, alpha, tau, chi}. Value-initialized to
/// the identity transform (no vignetting).
struct PhysicalParams {
  double f_inv = 0.0;
  double alpha = 0.0;
  double tau = 0.0;
  double chi = 0.0;

  /// Starting point of both attacks: {1, 0, 0, 0}.
  static constexpr PhysicalParams attack_init() { return {1.0, 0.0, 0.0, 0.0}; }

  double& operator[](Param p);
  double operator[](Param p) const;

  friend bool operator==(const PhysicalParams&, const PhysicalParams&) = default;
};

/// Throws InvalidArgument when the parameters leave the model's domain:
/// f_inv < 0, alpha outside [0,1], |tau| >= pi/2, or any non-finite value.
void validate_params(const PhysicalParams& params);

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Per-parameter L-infinity ball around an initial value, intersected with
/// the parameter's validity interval.
struct ParamBounds {
  PhysicalParams init = PhysicalParams::attack_init();
  PhysicalParams radius{0.5, 0.5, kPi / 6.0, kPi / 6.0};

  static constexpr double kPi = 3.14159265358979323846;

  Interval feasible(Param p) const;
  static Interval validity(Param p);
  /// Throws InvalidArgument on negative radius or an empty feasible set.
  void validate() const;
};

struct VignetteFields {
  std::vector<double> a;
  std::vector<double> g;
  std::vector<double> t;
  std::vector<double> v;
};

std::vector<double> illumination_field(const CoordGrid& grid, double f_inv);
std::vector<double> geometry_field_init(const CoordGrid& grid, double alpha);
std::vector<double> tilt_field(const CoordGrid& grid, double f_inv, double tau, double chi);

/// Builds A, G, T and V in one pass. An empty `geometry` means the physical
/// G0 = 1 - alpha R; otherwise it must hold one value per pixel.
VignetteFields build_fields(const CoordGrid& grid, const PhysicalParams& params,
                            std::span<const double> geometry = {});

/// vig(I, P) = clamp(I * V, 0, 1), one V shared across channels.
ImageTensor apply_vignette(const ImageTensor& image, const PhysicalParams& params,
                           std::span<const double> geometry = {});
ImageTensor apply_vignette(const CoordGrid& grid, const ImageTensor& image,
                           const PhysicalParams& params, std::span<const double> geometry = {});

struct VignetteGradients {
  PhysicalParams params;          // dJ/d rho for each physical parameter
  std::vector<double> geometry;   // dJ/dG per pixel
};

/// Back-propagates dJ/d(output image) to the parameters and to G.
///
/// With an empty `geometry` the image was produced by the physical G0(alpha)
/// and alpha receives sum_i dJ/dG[i] * (-R[i]); with an explicit G, alpha has
/// no path through the image and its partial is zero. Output pixels that hit
/// the [0,1] clamp contribute nothing.
VignetteGradients vignette_gradients(const CoordGrid& grid, const ImageTensor& image,
                                     std::span<const double> loss_grad,
                                     const PhysicalParams& params,
                                     std::span<const double> geometry = {});
VignetteGradients vignette_gradients(const ImageTensor& image, std::span<const double> loss_grad,
                                     const PhysicalParams& params,
                                     std::span<const double> geometry = {});

}  // namespace ava
