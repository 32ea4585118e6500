#include "ava/eval.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <thread>

#include "ava/error.hpp"

namespace ava {

std::string_view to_string(SampleFilter filter) {
  return filter == SampleFilter::all ? "all" : "initially-correct";
}

SampleFilter parse_sample_filter(std::string_view text) {
  if (text == "all") return SampleFilter::all;
  if (text == "initially-correct") return SampleFilter::initially_correct;
  throw ConfigError("filter must be 'all' or 'initially-correct', got '" + std::string(text) + "'");
}

SampleOutcome outcome_of(const AttackResult& result) {
  SampleOutcome o;
  o.label = result.label;
  o.clean_prediction = result.clean_prediction;
  o.adversarial_prediction = result.adversarial_prediction;
  o.success = result.success;
  o.failed = result.error.has_value();
  return o;
}

double SuccessCounts::rate() const {
  if (considered == 0) return 0.0;
  return 100.0 * static_cast<double>(succeeded) / static_cast<double>(considered);
}

SuccessCounts count_success(std::span<const SampleOutcome> outcomes, SampleFilter filter) {
  if (outcomes.empty()) throw InvalidArgument("success rate of an empty result list");
  SuccessCounts counts;
  for (const SampleOutcome& o : outcomes) {
    ++counts.attacked;
    if (o.initially_correct()) ++counts.initially_correct;
    if (filter == SampleFilter::initially_correct && !o.initially_correct()) continue;
    ++counts.considered;
    if (o.success && !o.failed) ++counts.succeeded;
  }
  return counts;
}

double attack_success_rate(std::span<const SampleOutcome> outcomes, SampleFilter filter) {
  return count_success(outcomes, filter).rate();
}

double attack_success_rate(std::span<const AttackResult> results, SampleFilter filter) {
  std::vector<SampleOutcome> outcomes;
  outcomes.reserve(results.size());
  for (const AttackResult& r : results) outcomes.push_back(outcome_of(r));
  return attack_success_rate(outcomes, filter);
}

std::vector<AttackResult> attack_all(std::span<const Sample> samples, GradientOracle& oracle,
                                     const AttackConfig& cfg, int jobs) {
  cfg.validate();
  std::vector<AttackResult> results(samples.size());
  std::vector<std::exception_ptr> errors(samples.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < samples.size(); i = next++) {
      try {
        results[i] = run_attack(samples[i].image, samples[i].label, oracle, cfg);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  std::size_t workers = oracle.info().reentrant ? static_cast<std::size_t>(std::max(jobs, 1)) : 1;
  workers = std::min(workers, std::max<std::size_t>(samples.size(), 1));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

QualityMetrics mean_quality(std::span<const AttackResult> results) {
  QualityMetrics mean;
  std::size_t n = 0;
  for (const AttackResult& r : results) {
    if (r.error) continue;
    mean.psnr += std::isfinite(r.quality.psnr) ? r.quality.psnr : kPsnrCap;
    mean.ssim += r.quality.ssim;
    mean.mean_abs_delta += r.quality.mean_abs_delta;
    ++n;
  }
  if (n == 0) return QualityMetrics{};
  mean.psnr /= static_cast<double>(n);
  mean.ssim /= static_cast<double>(n);
  mean.mean_abs_delta /= static_cast<double>(n);
  return mean;
}

std::vector<double> transfer_eval(std::span<const AttackResult> source_results,
                                  const OracleInfo& source_info,
                                  std::span<GradientOracle* const> targets, SampleFilter filter) {
  if (source_results.empty()) throw InvalidArgument("transfer evaluation of an empty result list");
  for (GradientOracle* target : targets) {
    const OracleInfo& info = target->info();
    if (info.shape != source_info.shape || info.classes != source_info.classes) {
      throw InvalidArgument("transfer target expects " + info.shape.to_string() + " with " +
                            std::to_string(info.classes) + " classes, source has " +
                            source_info.shape.to_string() + " with " +
                            std::to_string(source_info.classes));
    }
  }

  std::vector<double> row;
  row.reserve(targets.size());
  for (GradientOracle* target : targets) {
    std::vector<SampleOutcome> outcomes;
    outcomes.reserve(source_results.size());
    for (const AttackResult& r : source_results) {
      SampleOutcome o = outcome_of(r);
      if (!o.failed) {
        o.adversarial_prediction = predict(*target, r.adversarial);
        o.success = o.adversarial_prediction != o.label;
      }
      outcomes.push_back(o);
    }
    row.push_back(attack_success_rate(outcomes, filter));
  }
  return row;
}

namespace {

constexpr std::size_t kRings = 8;

// Solves the 3x3 system in place by partial pivoting. False when singular.
bool solve3(std::array<std::array<double, 4>, 3>& m, std::array<double, 3>& x) {
  double scale = 0.0;
  for (const auto& row : m) {
    for (std::size_t j = 0; j < 3; ++j) scale = std::max(scale, std::abs(row[j]));
  }
  if (scale == 0.0) return false;
  for (std::size_t col = 0; col < 3; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < 3; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    if (std::abs(m[pivot][col]) <= 1e-12 * scale) return false;
    std::swap(m[col], m[pivot]);
    for (std::size_t r = col + 1; r < 3; ++r) {
      const double f = m[r][col] / m[col][col];
      for (std::size_t j = col; j < 4; ++j) m[r][j] -= f * m[col][j];
    }
  }
  for (std::size_t i = 3; i-- > 0;) {
    double s = m[i][3];
    for (std::size_t j = i + 1; j < 3; ++j) s -= m[i][j] * x[j];
    x[i] = s / m[i][i];
  }
  return true;
}

}  // namespace

CorrectionResult radial_correction(const ImageTensor& image) {
  validate_image(image.shape(), image.values());
  CorrectionResult out{image, true, 0.0, 0.0};
  const CoordGrid grid = build_coord_grid(image.height(), image.width());
  const std::size_t channels = image.channels();

  // Per ring: mean intensity and mean R^2, R^4 of its pixels.
  std::array<double, kRings> sum_i{}, sum_r2{}, sum_r4{};
  std::array<std::size_t, kRings> count{};
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const double r = grid.r[p];
    const std::size_t ring = std::min(kRings - 1, static_cast<std::size_t>(r * kRings));
    double intensity = 0.0;
    for (std::size_t c = 0; c < channels; ++c) intensity += image.values()[p * channels + c];
    sum_i[ring] += intensity / static_cast<double>(channels);
    sum_r2[ring] += r * r;
    sum_r4[ring] += r * r * r * r;
    ++count[ring];
  }

  std::array<std::array<double, 4>, 3> normal{};
  std::size_t rings_used = 0;
  for (std::size_t k = 0; k < kRings; ++k) {
    if (count[k] == 0) continue;
    ++rings_used;
    const double n = static_cast<double>(count[k]);
    const std::array<double, 3> basis{1.0, sum_r2[k] / n, sum_r4[k] / n};
    const double m = sum_i[k] / n;
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) normal[i][j] += basis[i] * basis[j];
      normal[i][3] += basis[i] * m;
    }
  }
  std::array<double, 3> beta{};
  if (rings_used < 3 || !solve3(normal, beta) || !(beta[0] > 0.0)) return out;

  const double c1 = beta[1] / beta[0];
  const double c2 = beta[2] / beta[0];
  std::vector<double> gain(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const double r2 = grid.r[p] * grid.r[p];
    gain[p] = 1.0 + c1 * r2 + c2 * r2 * r2;
    if (!(gain[p] > 0.05)) return out;
  }

  std::vector<double> values(image.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t i = p * channels + c;
      values[i] = std::clamp(image.values()[i] / gain[p], 0.0, 1.0);
    }
  }
  out.image = ImageTensor(image.shape(), std::move(values));
  out.degenerate = false;
  out.c1 = c1;
  out.c2 = c2;
  return out;
}

CorrectionAccuracy correction_accuracy(std::span<const Sample> samples,
                                       std::span<const AttackResult> results,
                                       GradientOracle& oracle) {
  if (samples.size() != results.size() || samples.empty()) {
    throw InvalidArgument("correction accuracy needs one result per sample");
  }
  std::size_t clean = 0, adversarial = 0, corrected = 0;
  CorrectionAccuracy acc;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const int y = samples[i].label;
    clean += predict(oracle, samples[i].image) == y;
    adversarial += predict(oracle, results[i].adversarial) == y;
    const CorrectionResult fixed = radial_correction(results[i].adversarial);
    acc.degenerate_fits += fixed.degenerate;
    corrected += predict(oracle, quantize_8bit(fixed.image)) == y;
  }
  const double n = static_cast<double>(samples.size());
  acc.clean = 100.0 * static_cast<double>(clean) / n;
  acc.adversarial = 100.0 * static_cast<double>(adversarial) / n;
  acc.corrected = 100.0 * static_cast<double>(corrected) / n;
  return acc;
}

namespace {

constexpr std::array<std::string_view, 19> kKeys{
    "attack.step_f_inv", "attack.step_alpha", "attack.step_tau",  "attack.step_chi",
    "attack.step_g",     "attack.max_iters",  "attack.lambda_f",  "attack.lambda_alpha",
    "attack.lambda_g",   "bounds.eps_f_inv",  "bounds.eps_alpha", "bounds.eps_tau",
    "bounds.eps_chi",    "bounds.init_f_inv", "bounds.init_alpha", "bounds.init_tau",
    "bounds.init_chi",   "levelset.z_level",  "levelset.h_eps",
};

}  // namespace

std::span<const std::string_view> attack_parameter_keys() { return kKeys; }

void set_attack_parameter(AttackConfig& cfg, std::string_view key, double value) {
  if (!std::isfinite(value)) {
    throw ConfigError("value for '" + std::string(key) + "' must be finite");
  }
  if (key == "attack.max_iters") {
    if (value < 1 || value != std::floor(value) || value > 1e9) {
      throw ConfigError("attack.max_iters must be a positive integer");
    }
    cfg.max_iters = static_cast<int>(value);
    return;
  }
  double* target = nullptr;
  if (key == "attack.step_f_inv") target = &cfg.steps.f_inv;
  else if (key == "attack.step_alpha") target = &cfg.steps.alpha;
  else if (key == "attack.step_tau") target = &cfg.steps.tau;
  else if (key == "attack.step_chi") target = &cfg.steps.chi;
  else if (key == "attack.step_g") target = &cfg.steps.geometry;
  else if (key == "attack.lambda_f") target = &cfg.lambda_f;
  else if (key == "attack.lambda_alpha") target = &cfg.lambda_alpha;
  else if (key == "attack.lambda_g") target = &cfg.lambda_g;
  else if (key == "bounds.eps_f_inv") target = &cfg.bounds.radius.f_inv;
  else if (key == "bounds.eps_alpha") target = &cfg.bounds.radius.alpha;
  else if (key == "bounds.eps_tau") target = &cfg.bounds.radius.tau;
  else if (key == "bounds.eps_chi") target = &cfg.bounds.radius.chi;
  else if (key == "bounds.init_f_inv") target = &cfg.bounds.init.f_inv;
  else if (key == "bounds.init_alpha") target = &cfg.bounds.init.alpha;
  else if (key == "bounds.init_tau") target = &cfg.bounds.init.tau;
  else if (key == "bounds.init_chi") target = &cfg.bounds.init.chi;
  else if (key == "levelset.z_level") target = &cfg.levelset.z_level;
  else if (key == "levelset.h_eps") target = &cfg.levelset.h_eps;
  if (target == nullptr) throw ConfigError("unknown parameter '" + std::string(key) + "'");
  *target = value;
}

std::vector<SweepRow> sweep(std::span<const SweepAxis> axes, const AttackConfig& base,
                            std::span<const Sample> samples, GradientOracle& oracle,
                            SampleFilter filter, int jobs) {
  if (axes.empty()) throw ConfigError("sweep grid is empty");
  std::size_t cells = 1;
  for (const SweepAxis& axis : axes) {
    if (axis.values.empty()) throw ConfigError("sweep axis '" + axis.key + "' has no values");
    AttackConfig probe = base;
    set_attack_parameter(probe, axis.key, axis.values.front());
    cells *= axis.values.size();
  }

  std::vector<SweepRow> rows;
  rows.reserve(cells);
  std::vector<std::size_t> index(axes.size(), 0);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    AttackConfig cfg = base;
    SweepRow row;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      row.values.push_back(axes[a].values[index[a]]);
      set_attack_parameter(cfg, axes[a].key, row.values.back());
    }
    try {
      cfg.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("invalid sweep cell: ") + e.what());
    }
    const std::vector<AttackResult> results = attack_all(samples, oracle, cfg, jobs);
    std::vector<SampleOutcome> outcomes;
    for (const AttackResult& r : results) outcomes.push_back(outcome_of(r));
    row.counts = count_success(outcomes, filter);
    rows.push_back(std::move(row));

    for (std::size_t a = axes.size(); a-- > 0;) {
      if (++index[a] < axes[a].values.size()) break;
      index[a] = 0;
    }
  }
  return rows;
}

std::string format_csv_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) value = value > 0 ? kPsnrCap : -kPsnrCap;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

std::string sweep_csv(std::span<const SweepAxis> axes, std::span<const SweepRow> rows) {
  std::string csv;
  for (const SweepAxis& axis : axes) csv += axis.key + ",";
  csv += "succ_rate\n";
  for (const SweepRow& row : rows) {
    for (double v : row.values) csv += format_csv_number(v) + ",";
    csv += format_csv_number(row.counts.rate()) + "\n";
  }
  return csv;
}

}  // namespace ava
