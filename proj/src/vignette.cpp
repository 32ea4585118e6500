#include "ava/vignette.hpp"

#include <cmath>
#include <string>

#include "ava/error.hpp"
#include "ava/kernels.hpp"

namespace ava {

CoordGrid build_coord_grid(std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) {
    throw InvalidArgument("coordinate grid needs non-zero dimensions, got " +
                          std::to_string(height) + "x" + std::to_string(width));
  }
  const double cy = (static_cast<double>(height) - 1.0) / 2.0;
  const double cx = (static_cast<double>(width) - 1.0) / 2.0;
  double scale = std::sqrt(cx * cx + cy * cy);
  if (scale == 0.0) scale = 1.0;  // 1x1: the single pixel is the principal point

  CoordGrid grid;
  grid.height = height;
  grid.width = width;
  const std::size_t n = height * width;
  grid.u.resize(n);
  grid.v.resize(n);
  grid.r.resize(n);
  for (std::size_t row = 0; row < height; ++row) {
    for (std::size_t col = 0; col < width; ++col) {
      const std::size_t i = row * width + col;
      const double x = static_cast<double>(col) - cx;
      const double y = static_cast<double>(row) - cy;
      grid.u[i] = x / scale;
      grid.v[i] = y / scale;
      grid.r[i] = std::sqrt(grid.u[i] * grid.u[i] + grid.v[i] * grid.v[i]);
    }
  }
  return grid;
}

std::string_view param_name(Param p) {
  switch (p) {
    case Param::f_inv: return "f_inv";
    case Param::alpha: return "alpha";
    case Param::tau: return "tau";
    case Param::chi: return "chi";
  }
  return "?";
}

double& PhysicalParams::operator[](Param p) {
  switch (p) {
    case Param::f_inv: return f_inv;
    case Param::alpha: return alpha;
    case Param::tau: return tau;
    case Param::chi: return chi;
  }
  throw InvalidArgument("unknown parameter");
}

double PhysicalParams::operator[](Param p) const {
  return const_cast<PhysicalParams&>(*this)[p];
}

void validate_params(const PhysicalParams& params) {
  for (Param p : kAllParams) {
    if (!std::isfinite(params[p])) {
      throw InvalidArgument(std::string(param_name(p)) + " is not finite");
    }
  }
  if (params.f_inv < 0.0) throw InvalidArgument("f_inv must be >= 0");
  if (params.alpha < 0.0 || params.alpha > 1.0) throw InvalidArgument("alpha must lie in [0,1]");
  if (!(std::abs(params.tau) < ParamBounds::kPi / 2.0)) {
    throw InvalidArgument("|tau| must be < pi/2");
  }
}

Interval ParamBounds::validity(Param p) {
  switch (p) {
    case Param::f_inv: return {0.0, std::numeric_limits<double>::infinity()};
    case Param::alpha: return {0.0, 1.0};
    case Param::tau: {
      const double edge = std::nextafter(kPi / 2.0, 0.0);
      return {-edge, edge};
    }
    case Param::chi: return {};
  }
  return {};
}

Interval ParamBounds::feasible(Param p) const {
  const Interval valid = validity(p);
  return {std::max(init[p] - radius[p], valid.lo), std::min(init[p] + radius[p], valid.hi)};
}

void ParamBounds::validate() const {
  for (Param p : kAllParams) {
    if (!(radius[p] >= 0.0)) {
      throw InvalidArgument("bound radius for " + std::string(param_name(p)) + " must be >= 0");
    }
    const Interval box = feasible(p);
    if (!(box.lo <= box.hi)) {
      throw InvalidArgument("feasible set for " + std::string(param_name(p)) + " is empty");
    }
  }
}

namespace {

kernels::FieldCoeffs coeffs_for(const PhysicalParams& p) {
  return {p.f_inv, std::cos(p.tau), std::sin(p.tau), std::tan(p.tau), std::sin(p.chi),
          std::cos(p.chi)};
}

void check_geometry(const CoordGrid& grid, std::span<const double> geometry) {
  if (!geometry.empty() && geometry.size() != grid.size()) {
    throw InvalidArgument("geometry field has " + std::to_string(geometry.size()) +
                          " entries, image has " + std::to_string(grid.size()) + " pixels");
  }
}

void check_grid(const CoordGrid& grid, const ImageShape& shape) {
  if (grid.height != shape.height || grid.width != shape.width) {
    throw InvalidArgument("coordinate grid does not match image " + shape.to_string());
  }
}

// Repeats the per-pixel field across channels so the element-wise kernels can
// run on the flat channel-last buffer.
std::vector<double> broadcast_channels(const std::vector<double>& field, std::size_t channels) {
  if (channels == 1) return field;
  std::vector<double> out(field.size() * channels);
  for (std::size_t i = 0; i < field.size(); ++i) {
    for (std::size_t c = 0; c < channels; ++c) out[i * channels + c] = field[i];
  }
  return out;
}

}  // namespace

std::vector<double> illumination_field(const CoordGrid& grid, double f_inv) {
  if (!(f_inv >= 0.0)) throw InvalidArgument("f_inv must be >= 0");
  PhysicalParams p;
  p.f_inv = f_inv;
  return build_fields(grid, p).a;
}

std::vector<double> geometry_field_init(const CoordGrid& grid, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in [0,1]");
  std::vector<double> g(grid.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = 1.0 - alpha * grid.r[i];
  return g;
}

std::vector<double> tilt_field(const CoordGrid& grid, double f_inv, double tau, double chi) {
  if (!(std::abs(tau) < ParamBounds::kPi / 2.0)) {
    throw InvalidArgument("|tau| must be < pi/2 (tangent singularity)");
  }
  if (!(f_inv >= 0.0)) throw InvalidArgument("f_inv must be >= 0");
  return build_fields(grid, PhysicalParams{f_inv, 0.0, tau, chi}).t;
}

VignetteFields build_fields(const CoordGrid& grid, const PhysicalParams& params,
                            std::span<const double> geometry) {
  validate_params(params);
  check_geometry(grid, geometry);
  VignetteFields f;
  const std::size_t n = grid.size();
  if (geometry.empty()) {
    f.g = geometry_field_init(grid, params.alpha);
  } else {
    f.g.assign(geometry.begin(), geometry.end());
  }
  f.a.resize(n);
  f.t.resize(n);
  f.v.resize(n);
  kernels::active().fields(grid.u.data(), grid.v.data(), grid.r.data(), f.g.data(), n,
                           coeffs_for(params), f.a.data(), f.t.data(), f.v.data());
  return f;
}

ImageTensor apply_vignette(const CoordGrid& grid, const ImageTensor& image,
                           const PhysicalParams& params, std::span<const double> geometry) {
  check_grid(grid, image.shape());
  const VignetteFields fields = build_fields(grid, params, geometry);
  const std::vector<double> scale = broadcast_channels(fields.v, image.channels());
  std::vector<double> out(image.size());
  kernels::active().mul_clamp(image.values().data(), scale.data(), out.size(), out.data());
  return ImageTensor(image.shape(), std::move(out));
}

ImageTensor apply_vignette(const ImageTensor& image, const PhysicalParams& params,
                           std::span<const double> geometry) {
  return apply_vignette(build_coord_grid(image.height(), image.width()), image, params, geometry);
}

VignetteGradients vignette_gradients(const CoordGrid& grid, const ImageTensor& image,
                                     std::span<const double> loss_grad,
                                     const PhysicalParams& params,
                                     std::span<const double> geometry) {
  check_grid(grid, image.shape());
  if (loss_grad.size() != image.size()) {
    throw InvalidArgument("loss gradient has " + std::to_string(loss_grad.size()) +
                          " entries, image has " + std::to_string(image.size()));
  }
  const kernels::KernelTable& k = kernels::active();
  const VignetteFields fields = build_fields(grid, params, geometry);
  const std::size_t n = grid.size();
  const std::size_t channels = image.channels();

  // dJ/dV per pixel: sum over channels of dJ/dout * I, masked where clamped.
  const std::vector<double> scale = broadcast_channels(fields.v, channels);
  std::vector<double> per_element(image.size());
  k.masked_product(loss_grad.data(), image.values().data(), scale.data(), per_element.size(),
                   per_element.data());
  std::vector<double> gv(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < channels; ++c) gv[i] += per_element[i * channels + c];
  }

  VignetteGradients out;
  out.geometry.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.geometry[i] = gv[i] * fields.a[i] * fields.t[i];

  const kernels::ParamPartialSums sums =
      k.param_partials(gv.data(), grid.u.data(), grid.v.data(), grid.r.data(), fields.a.data(),
                       fields.g.data(), fields.t.data(), n, coeffs_for(params));
  out.params.f_inv = sums.f_inv;
  out.params.tau = sums.tau;
  out.params.chi = sums.chi;
  out.params.alpha = geometry.empty() ? sums.alpha : 0.0;
  return out;
}

VignetteGradients vignette_gradients(const ImageTensor& image, std::span<const double> loss_grad,
                                     const PhysicalParams& params,
                                     std::span<const double> geometry) {
  return vignette_gradients(build_coord_grid(image.height(), image.width()), image, loss_grad,
                            params, geometry);
}

}  // namespace ava
