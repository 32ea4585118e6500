#include "ava/levelset.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ava/error.hpp"

namespace ava {

void LevelSetConfig::validate() const {
  if (!(h_eps > 0.0) || !std::isfinite(h_eps)) throw InvalidArgument("h_eps must be > 0");
  if (!std::isfinite(z_level)) throw InvalidArgument("z_level must be finite");
}

GeometryField GeometryField::physical(const CoordGrid& grid, double alpha) {
  GeometryField f;
  f.height = grid.height;
  f.width = grid.width;
  f.g0 = geometry_field_init(grid, alpha);
  f.g = f.g0;
  return f;
}

double smoothed_heaviside(double x, double threshold, double h_eps) {
  return 0.5 * (1.0 + (2.0 / std::numbers::pi) * std::atan((x - threshold) / h_eps));
}

double smoothed_heaviside_derivative(double x, double threshold, double h_eps) {
  const double d = x - threshold;
  return h_eps / (std::numbers::pi * (h_eps * h_eps + d * d));
}

namespace {

void check_field(const GeometryField& field) {
  const std::size_t n = field.height * field.width;
  if (field.g.size() != n || field.g0.size() != n) {
    throw InvalidArgument("geometry field G/G0 sizes do not match " + std::to_string(field.height) +
                          "x" + std::to_string(field.width));
  }
}

}  // namespace

RegularizerValue levelset_regularizer(const GeometryField& field, const LevelSetConfig& cfg) {
  check_field(field);
  cfg.validate();
  RegularizerValue out;
  out.grad.resize(field.g.size());
  for (std::size_t i = 0; i < field.g.size(); ++i) {
    const double dev = field.g[i] - field.g0[i];
    const double h = smoothed_heaviside(field.g[i], cfg.z_level, cfg.h_eps);
    const double dh = smoothed_heaviside_derivative(field.g[i], cfg.z_level, cfg.h_eps);
    out.value += dev * dev * h;
    out.grad[i] = 2.0 * dev * h + dev * dev * dh;
  }
  return out;
}

double levelset_regularizer_alpha_partial(const GeometryField& field, const CoordGrid& grid,
                                          const LevelSetConfig& cfg) {
  check_field(field);
  if (grid.size() != field.g.size()) throw InvalidArgument("grid does not match geometry field");
  double sum = 0.0;
  for (std::size_t i = 0; i < field.g.size(); ++i) {
    const double h = smoothed_heaviside(field.g[i], cfg.z_level, cfg.h_eps);
    sum += 2.0 * (field.g[i] - field.g0[i]) * grid.r[i] * h;
  }
  return sum;
}

void project(PhysicalParams& params, const ParamBounds& bounds, GeometryField* field) {
  for (Param p : kAllParams) params[p] = bounds.feasible(p).clamp(params[p]);
  if (field != nullptr) {
    for (double& g : field->g) g = g < 0.0 ? 0.0 : (g > 1.0 ? 1.0 : g);
  }
}

}  // namespace ava
