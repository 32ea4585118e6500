#include "ava/attack.hpp"

#include <cmath>

#include "ava/error.hpp"

namespace ava {

std::string_view to_string(AttackMode mode) { return mode == AttackMode::ri ? "ri" : "ra"; }

AttackMode parse_attack_mode(std::string_view text) {
  if (text == "ri") return AttackMode::ri;
  if (text == "ra") return AttackMode::ra;
  throw InvalidArgument("attack mode must be 'ri' or 'ra', got '" + std::string(text) + "'");
}

double StepSizes::operator[](Param p) const {
  switch (p) {
    case Param::f_inv: return f_inv;
    case Param::alpha: return alpha;
    case Param::tau: return tau;
    case Param::chi: return chi;
  }
  return 0.0;
}

void AttackConfig::validate() const {
  for (Param p : kAllParams) {
    if (!(steps[p] >= 0.0) || !std::isfinite(steps[p])) {
      throw InvalidArgument("step size for " + std::string(param_name(p)) + " must be >= 0");
    }
  }
  if (!(steps.geometry >= 0.0) || !std::isfinite(steps.geometry)) {
    throw InvalidArgument("geometry step size must be >= 0");
  }
  if (max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
  if (!(lambda_f >= 0.0) || !(lambda_alpha >= 0.0) || !(lambda_g >= 0.0)) {
    throw InvalidArgument("lambda values must be >= 0");
  }
  bounds.validate();
  levelset.validate();
}

ObjectiveValue objective(const CoordGrid& grid, const ImageTensor& image, int label,
                         GradientOracle& oracle, const PhysicalParams& params,
                         const GeometryField* geometry, const AttackConfig& cfg) {
  const std::span<const double> g =
      geometry != nullptr ? std::span<const double>(geometry->g) : std::span<const double>();
  const ImageTensor vignetted = apply_vignette(grid, image, params, g);

  LossAndGrad lg;
  try {
    lg = oracle.loss_and_grad(vignetted, label);
    check_oracle_reply(oracle.info(), lg);
  } catch (const OracleError& e) {
    throw OracleError(std::string("objective evaluation failed: ") + e.what());
  }

  const VignetteGradients vg = vignette_gradients(grid, image, lg.grad, params, g);

  ObjectiveValue out;
  out.terms.classification = lg.loss;
  out.terms.focal_penalty = params.f_inv * params.f_inv;
  out.terms.alpha_penalty = params.alpha * params.alpha;
  out.grad_params = vg.params;
  out.grad_params.f_inv -= 2.0 * cfg.lambda_f * params.f_inv;
  out.grad_params.alpha -= 2.0 * cfg.lambda_alpha * params.alpha;

  if (geometry != nullptr) {
    // G0 always follows the current alpha.
    GeometryField current{grid.height, grid.width, geometry->g,
                          geometry_field_init(grid, params.alpha)};
    const RegularizerValue reg = levelset_regularizer(current, cfg.levelset);
    out.terms.regularizer = reg.value;
    out.grad_geometry.resize(reg.grad.size());
    for (std::size_t i = 0; i < reg.grad.size(); ++i) {
      out.grad_geometry[i] = vg.geometry[i] - cfg.lambda_g * reg.grad[i];
    }
    out.grad_params.alpha -=
        cfg.lambda_g * levelset_regularizer_alpha_partial(current, grid, cfg.levelset);
  }

  out.total = out.terms.classification - cfg.lambda_g * out.terms.regularizer -
              cfg.lambda_f * out.terms.focal_penalty - cfg.lambda_alpha * out.terms.alpha_penalty;
  return out;
}

ObjectiveValue objective(const ImageTensor& image, int label, GradientOracle& oracle,
                         const PhysicalParams& params, const GeometryField* geometry,
                         const AttackConfig& cfg) {
  return objective(build_coord_grid(image.height(), image.width()), image, label, oracle, params,
                   geometry, cfg);
}

namespace {

AttackResult attack_loop(const ImageTensor& image, int label, GradientOracle& oracle,
                         const AttackConfig& cfg, bool free_geometry,
                         const IterationObserver& observer) {
  cfg.validate();
  check_oracle_input(oracle.info(), image, label);
  const CoordGrid grid = build_coord_grid(image.height(), image.width());

  AttackResult result;
  result.label = label;
  PhysicalParams params = cfg.bounds.init;
  project(params, cfg.bounds);
  std::optional<GeometryField> field;
  if (free_geometry) field = GeometryField::physical(grid, params.alpha);

  const auto vignetted = [&] {
    return quantize_8bit(apply_vignette(grid, image, params,
                                        field ? std::span<const double>(field->g)
                                              : std::span<const double>()));
  };

  ImageTensor adversarial = image;
  int prediction = -1;
  try {
    result.clean_prediction = predict(oracle, image);
    adversarial = vignetted();
    prediction = predict(oracle, adversarial);
    const bool already_fooled = prediction != label;

    for (int t = 0; t < cfg.max_iters && !(cfg.early_stop && already_fooled); ++t) {
      const ObjectiveValue obj =
          objective(grid, image, label, oracle, params, field ? &*field : nullptr, cfg);
      result.loss_trace.push_back(obj.total);

      for (Param p : kAllParams) params[p] += cfg.steps[p] * signum(obj.grad_params[p]);
      if (field) {
        for (std::size_t i = 0; i < field->g.size(); ++i) {
          field->g[i] += cfg.steps.geometry * signum(obj.grad_geometry[i]);
        }
      }
      project(params, cfg.bounds, field ? &*field : nullptr);
      if (field) field->g0 = geometry_field_init(grid, params.alpha);
      result.iterations_used = t + 1;
      if (observer) observer(t, params, field ? &*field : nullptr);

      if (cfg.early_stop || t + 1 == cfg.max_iters) {
        adversarial = vignetted();
        prediction = predict(oracle, adversarial);
        if (cfg.early_stop && prediction != label) break;
      }
    }
  } catch (const OracleError& e) {
    result.error = e.what();
  }

  result.adversarial = adversarial;
  result.adversarial_prediction = prediction;
  result.success = !result.error && prediction != label;
  result.final_params = params;
  if (field) {
    result.final_geometry = std::move(field);
  }
  result.quality = quality(image, adversarial);
  return result;
}

}  // namespace

AttackResult ri_ava_attack(const ImageTensor& image, int label, GradientOracle& oracle,
                           const AttackConfig& cfg, const IterationObserver& observer) {
  return attack_loop(image, label, oracle, cfg, false, observer);
}

AttackResult ra_ava_attack(const ImageTensor& image, int label, GradientOracle& oracle,
                           const AttackConfig& cfg, const IterationObserver& observer) {
  // A zero geometry step leaves G with no freedom of its own: it stays pinned
  // to the physical G0(alpha), which is exactly the radial-isotropic problem.
  if (cfg.steps.geometry == 0.0) {
    AttackResult result = attack_loop(image, label, oracle, cfg, false, observer);
    result.final_geometry =
        GeometryField::physical(build_coord_grid(image.height(), image.width()),
                                result.final_params.alpha);
    return result;
  }
  return attack_loop(image, label, oracle, cfg, true, observer);
}

AttackResult run_attack(const ImageTensor& image, int label, GradientOracle& oracle,
                        const AttackConfig& cfg, const IterationObserver& observer) {
  return cfg.mode == AttackMode::ri ? ri_ava_attack(image, label, oracle, cfg, observer)
                                    : ra_ava_attack(image, label, oracle, cfg, observer);
}

}  // namespace ava
