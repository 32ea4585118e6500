#pragma once

// Whitebox and transfer success rates, image-quality summaries, the radial
// correction baseline and hyperparameter sweeps.

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ava/attack.hpp"
#include "ava/image.hpp"
#include "ava/oracle.hpp"

namespace ava {

enum class SampleFilter { all, initially_correct };

std::string_view to_string(SampleFilter filter);
/// Accepts "all" and "initially-correct". Throws ConfigError otherwise.
SampleFilter parse_sample_filter(std::string_view text);

/// The part of an attack result that success counting needs; also what the
/// per-sample report stores, so a report can be recounted without rerunning.
struct SampleOutcome {
  int label = 0;
  int clean_prediction = -1;
  int adversarial_prediction = -1;
  bool success = false;
  bool failed = false;  // the oracle errored on this sample

  bool initially_correct() const { return clean_prediction == label; }
};

SampleOutcome outcome_of(const AttackResult& result);

struct SuccessCounts {
  std::size_t attacked = 0;
  std::size_t initially_correct = 0;
  std::size_t considered = 0;
  std::size_t succeeded = 0;

  /// 100 * succeeded / considered, or 0 when nothing was considered.
  double rate() const;
};

/// Samples whose oracle call failed stay in the denominator as failures.
/// Throws InvalidArgument on an empty list.
SuccessCounts count_success(std::span<const SampleOutcome> outcomes, SampleFilter filter);
double attack_success_rate(std::span<const SampleOutcome> outcomes, SampleFilter filter);
double attack_success_rate(std::span<const AttackResult> results, SampleFilter filter);

struct Sample {
  std::string id;
  ImageTensor image;
  int label = 0;
};

/// Attacks every sample with `jobs` workers (forced to 1 when the oracle is
/// not reentrant). Results are in sample order regardless of scheduling.
std::vector<AttackResult> attack_all(std::span<const Sample> samples, GradientOracle& oracle,
                                     const AttackConfig& cfg, int jobs = 1);

/// Mean quality over samples that produced an adversarial image. PSNR of an
/// unchanged image counts as kPsnrCap.
QualityMetrics mean_quality(std::span<const AttackResult> results);

/// One source model's row of the transfer matrix: for every target, the
/// percentage of the considered set (filtered on the source's clean
/// predictions) that the target misclassifies. A sample whose source attack
/// failed counts as not transferred. Throws InvalidArgument when a target
/// disagrees with the source on shape or class count.
std::vector<double> transfer_eval(std::span<const AttackResult> source_results,
                                  const OracleInfo& source_info,
                                  std::span<GradientOracle* const> targets, SampleFilter filter);

struct CorrectionResult {
  ImageTensor image;
  bool degenerate = false;  // fit rejected; `image` is the input unchanged
  double c1 = 0.0;
  double c2 = 0.0;
};

/// Fits g(R) = 1 + c1 R^2 + c2 R^4 to the mean intensity of 8 equal-width
/// rings over R in [0,1] and divides it out, clamping to [0,1].
CorrectionResult radial_correction(const ImageTensor& image);

/// Accuracy (percent of all samples) on the clean images, the adversarial
/// images, and the adversarial images after radial_correction and 8-bit
/// quantization. `results[i]` must belong to `samples[i]`.
struct CorrectionAccuracy {
  double clean = 0.0;
  double adversarial = 0.0;
  double corrected = 0.0;
  std::size_t degenerate_fits = 0;
};

CorrectionAccuracy correction_accuracy(std::span<const Sample> samples,
                                       std::span<const AttackResult> results,
                                       GradientOracle& oracle);

/// Sets one numeric hyperparameter by its config key (for example
/// "bounds.eps_alpha" or "attack.lambda_g"). Throws ConfigError for an
/// unknown key or a value the key cannot hold.
void set_attack_parameter(AttackConfig& cfg, std::string_view key, double value);

/// Every key accepted by set_attack_parameter, in a stable order.
std::span<const std::string_view> attack_parameter_keys();

struct SweepAxis {
  std::string key;
  std::vector<double> values;
};

struct SweepRow {
  std::vector<double> values;  // one per axis
  SuccessCounts counts;
};

/// Cartesian product of the axes, first axis slowest. Throws ConfigError on
/// an empty grid, an empty axis or an unknown key.
std::vector<SweepRow> sweep(std::span<const SweepAxis> axes, const AttackConfig& base,
                            std::span<const Sample> samples, GradientOracle& oracle,
                            SampleFilter filter, int jobs = 1);

/// CSV helpers shared by the CLI writers. Non-finite PSNR is written as
/// kPsnrCap; every number uses fixed 6-decimal formatting.
std::string format_csv_number(double value);
std::string sweep_csv(std::span<const SweepAxis> axes, std::span<const SweepRow> rows);

}  // namespace ava
