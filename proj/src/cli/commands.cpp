#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>

#include "ava/cli.hpp"
#include "ava/error.hpp"
#include "ava/reference_classifier.hpp"
#include "ava/wire.hpp"
#include "json.hpp"

namespace ava::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kBuiltin = "builtin:";
constexpr std::string_view kRemote = "remote:";

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string model_name(const RunConfig& cfg) {
  return cfg.model_name.empty() ? model_name_for(cfg.oracle) : cfg.model_name;
}

double capped(double psnr) { return std::isfinite(psnr) ? psnr : kPsnrCap; }

// The JSON library writes non-finite doubles as null; keep the field numeric.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

const std::string kSummaryHeader = "model,attack,succ_rate,psnr,ssim,mean_abs_delta\n";

std::string summary_row(const std::string& model, AttackMode mode, double rate,
                        const QualityMetrics& q) {
  return model + "," + std::string(to_string(mode)) + "," + format_csv_number(rate) + "," +
         format_csv_number(q.psnr) + "," + format_csv_number(q.ssim) + "," +
         format_csv_number(q.mean_abs_delta) + "\n";
}

Json params_json(const PhysicalParams& p) {
  return Json{{"f_inv", p.f_inv}, {"alpha", p.alpha}, {"tau", p.tau}, {"chi", p.chi}};
}

Json config_json(const RunConfig& cfg) {
  const AttackConfig& a = cfg.attack;
  return Json{{"mode", to_string(a.mode)},
              {"seed", cfg.seed},
              {"filter", to_string(cfg.filter)},
              {"steps",
               {{"f_inv", a.steps.f_inv},
                {"alpha", a.steps.alpha},
                {"tau", a.steps.tau},
                {"chi", a.steps.chi},
                {"g", a.steps.geometry}}},
              {"max_iters", a.max_iters},
              {"lambda", {{"f", a.lambda_f}, {"alpha", a.lambda_alpha}, {"g", a.lambda_g}}},
              {"bounds", {{"init", params_json(a.bounds.init)}, {"eps", params_json(a.bounds.radius)}}},
              {"levelset", {{"z_level", a.levelset.z_level}, {"h_eps", a.levelset.h_eps}}},
              {"early_stop", a.early_stop}};
}

struct Prepared {
  std::unique_ptr<GradientOracle> oracle;
  std::vector<Sample> samples;
};

void check_samples(const GradientOracle& oracle, std::span<const Sample> samples) {
  for (const Sample& s : samples) {
    try {
      check_oracle_input(oracle.info(), s.image, s.label);
    } catch (const InvalidArgument& e) {
      throw ConfigError("sample " + s.id + ": " + e.what());
    }
  }
}

Prepared prepare(const RunConfig& cfg) {
  validate(cfg);
  require(!cfg.manifest.empty(), "run.manifest is not set");
  require(!cfg.oracle.empty(), "run.oracle is not set");
  const DatasetManifest manifest = load_manifest(cfg.manifest);
  Prepared p;
  p.samples = load_samples(manifest, cfg.seed);
  p.oracle = open_oracle(cfg.oracle);
  check_samples(*p.oracle, p.samples);
  return p;
}

// Sample ids are file stems, made unique by appending the manifest index.
std::vector<std::string> sample_ids(const DatasetManifest& manifest) {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    std::string id = manifest.records[i].path.stem().string();
    if (!seen.insert(id).second) {
      id += "-" + std::to_string(i);
      seen.insert(id);
    }
    ids.push_back(std::move(id));
  }
  return ids;
}

}  // namespace

std::unique_ptr<GradientOracle> open_oracle(const std::string& spec) {
  if (spec.rfind(kBuiltin, 0) == 0) {
    return std::make_unique<ReferenceOracle>(
        ReferenceClassifier::load(fs::path(spec.substr(kBuiltin.size()))));
  }
  if (spec.rfind(kRemote, 0) == 0) {
    return std::make_unique<wire::RemoteOracle>(wire::connect(spec.substr(kRemote.size())));
  }
  throw ConfigError("oracle spec must start with 'builtin:' or 'remote:', got '" + spec + "'");
}

std::string model_name_for(const std::string& spec) {
  if (spec.rfind(kBuiltin, 0) == 0) return fs::path(spec.substr(kBuiltin.size())).stem().string();
  if (spec.rfind(kRemote, 0) == 0) return spec.substr(kRemote.size());
  return spec;
}

std::vector<Sample> load_samples(const DatasetManifest& manifest, std::uint64_t seed) {
  if (manifest.records.empty()) throw ConfigError("manifest lists no samples");
  std::vector<Sample> samples;
  const std::vector<std::string> ids = sample_ids(manifest);
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    samples.push_back({ids[i], load_image(manifest.records[i].path), manifest.records[i].label});
  }
  // Fisher-Yates on the raw engine output so the order is the same with
  // every standard library.
  std::mt19937_64 rng(seed);
  for (std::size_t i = samples.size(); i > 1; --i) {
    std::swap(samples[i - 1], samples[rng() % i]);
  }
  return samples;
}

void cmd_render(const fs::path& input, const PhysicalParams& params, const fs::path& out) {
  const ImageTensor image = load_image(input);
  validate_params(params);
  const CoordGrid grid = build_coord_grid(image.height(), image.width());
  const VignetteFields fields = build_fields(grid, params);
  save_image(apply_vignette(grid, image, params), out);
  fs::path field = out;
  field.replace_filename(out.stem().string() + ".field.txt");
  write_float_grid(field, image.height(), image.width(), fields.v);
}

int cmd_attack(const RunConfig& cfg, std::ostream& out) {
  Prepared p = prepare(cfg);
  const std::string model = model_name(cfg);
  const std::vector<AttackResult> results =
      attack_all(p.samples, *p.oracle, cfg.attack, cfg.jobs);

  fs::create_directories(cfg.out / "adversarial");
  const DatasetManifest manifest = load_manifest(cfg.manifest);
  std::map<std::string, fs::path> clean_path;
  const std::vector<std::string> ids = sample_ids(manifest);
  for (std::size_t i = 0; i < ids.size(); ++i) clean_path[ids[i]] = manifest.records[i].path;

  std::vector<SampleOutcome> outcomes;
  Json records = Json::array();
  std::string samples_csv =
      "sample,label,clean_prediction,adversarial_prediction,success,iterations_used,psnr,ssim,"
      "mean_abs_delta\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const Sample& s = p.samples[i];
    const AttackResult& r = results[i];
    outcomes.push_back(outcome_of(r));
    const std::string adv_name = "adversarial/" + s.id + ".png";
    if (!r.error) save_image(r.adversarial, cfg.out / adv_name);
    Json rec{{"id", s.id},
             {"path", clean_path[s.id].string()},
             {"label", s.label},
             {"clean_prediction", r.clean_prediction},
             {"adversarial_prediction", r.adversarial_prediction},
             {"success", r.success},
             {"iterations_used", r.iterations_used},
             {"final_params", params_json(r.final_params)},
             {"psnr", capped(r.quality.psnr)},
             {"ssim", number(r.quality.ssim)},
             {"mean_abs_delta", r.quality.mean_abs_delta},
             {"adversarial", r.error ? Json(nullptr) : Json(adv_name)},
             {"error", r.error ? Json(*r.error) : Json(nullptr)}};
    records.push_back(std::move(rec));
    samples_csv += s.id + "," + std::to_string(s.label) + "," +
                   std::to_string(r.clean_prediction) + "," +
                   std::to_string(r.adversarial_prediction) + "," + (r.success ? "1" : "0") + "," +
                   std::to_string(r.iterations_used) + "," + format_csv_number(r.quality.psnr) +
                   "," + format_csv_number(r.quality.ssim) + "," +
                   format_csv_number(r.quality.mean_abs_delta) + "\n";
  }

  const SuccessCounts counts = count_success(outcomes, cfg.filter);
  const QualityMetrics q = mean_quality(results);
  Json report{{"model", model},
              {"oracle", cfg.oracle},
              {"attack", to_string(cfg.attack.mode)},
              {"config", config_json(cfg)},
              {"summary",
               {{"succ_rate", counts.rate()},
                {"attacked", counts.attacked},
                {"initially_correct", counts.initially_correct},
                {"considered", counts.considered},
                {"succeeded", counts.succeeded},
                {"psnr", q.psnr},
                {"ssim", number(q.ssim)},
                {"mean_abs_delta", q.mean_abs_delta}}},
              {"samples", std::move(records)}};
  write_text(cfg.out / "report.json", report.dump(2) + "\n");
  write_text(cfg.out / "samples.csv", samples_csv);
  write_text(cfg.out / "summary.csv",
             kSummaryHeader + summary_row(model, cfg.attack.mode, counts.rate(), q));

  std::size_t failed = 0;
  for (const SampleOutcome& o : outcomes) failed += o.failed;
  out << model << " " << to_string(cfg.attack.mode) << ": " << counts.succeeded << "/"
      << counts.considered << " succeeded (" << format_csv_number(counts.rate()) << "%)";
  if (failed) out << ", " << failed << " oracle failures";
  out << "\n";
  return kOk;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  require(!cfg.sweep.empty(), "sweep grid is empty: add sweep.<parameter> = v1, v2, ...");
  Prepared p = prepare(cfg);
  const std::vector<SweepRow> rows =
      sweep(cfg.sweep, cfg.attack, p.samples, *p.oracle, cfg.filter, cfg.jobs);
  fs::create_directories(cfg.out);
  const std::string csv = sweep_csv(cfg.sweep, rows);
  write_text(cfg.out / "sweep.csv", csv);
  out << csv;
  return kOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  validate(cfg);
  require(!cfg.eval_input.empty(), "eval.input is not set (directory written by 'attack')");
  const Json report = read_json(cfg.eval_input / "report.json");
  std::string spec = cfg.oracle;
  try {
    if (spec.empty()) spec = report.at("oracle").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("report.json: " + std::string(e.what()));
  }
  const std::unique_ptr<GradientOracle> oracle = open_oracle(spec);
  std::string model = cfg.model_name;
  if (model.empty()) {
    model = cfg.oracle.empty() ? report.value("model", model_name_for(spec)) : model_name_for(spec);
  }

  std::vector<SampleOutcome> outcomes;
  std::vector<AttackResult> results;
  std::size_t clean_ok = 0, adv_ok = 0, corrected_ok = 0;
  AttackMode mode = AttackMode::ra;
  double stored_rate = 0.0;
  try {
    mode = parse_attack_mode(report.at("attack").get<std::string>());
    stored_rate = report.at("summary").at("succ_rate").get<double>();
    for (const Json& rec : report.at("samples")) {
      const ImageTensor clean = load_image(rec.at("path").get<std::string>());
      SampleOutcome o;
      o.label = rec.at("label").get<int>();
      check_oracle_input(oracle->info(), clean, o.label);
      o.clean_prediction = predict(*oracle, clean);
      AttackResult r;
      r.label = o.label;
      if (rec.at("error").is_null()) {
        r.adversarial = load_image(cfg.eval_input / rec.at("adversarial").get<std::string>());
        o.adversarial_prediction = predict(*oracle, r.adversarial);
        o.success = o.adversarial_prediction != o.label;
        r.quality = quality(clean, r.adversarial);
      } else {
        o.failed = true;
        r.adversarial = clean;
        o.adversarial_prediction = o.clean_prediction;
        r.error = rec.at("error").get<std::string>();
      }
      clean_ok += o.clean_prediction == o.label;
      adv_ok += o.adversarial_prediction == o.label;
      corrected_ok +=
          predict(*oracle, quantize_8bit(radial_correction(r.adversarial).image)) == o.label;
      outcomes.push_back(o);
      results.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("report.json: " + std::string(e.what()));
  }

  const SuccessCounts counts = count_success(outcomes, cfg.filter);
  const QualityMetrics q = mean_quality(results);
  const double n = static_cast<double>(outcomes.size());
  const double clean_acc = 100.0 * static_cast<double>(clean_ok) / n;
  const double adv_acc = 100.0 * static_cast<double>(adv_ok) / n;
  const double corrected_acc = 100.0 * static_cast<double>(corrected_ok) / n;

  fs::create_directories(cfg.out);
  write_text(cfg.out / "eval_summary.csv",
             kSummaryHeader + summary_row(model, mode, counts.rate(), q));
  write_text(cfg.out / "correction.csv",
             "model,attack,clean_acc,adversarial_acc,corrected_acc\n" + model + "," +
                 std::string(to_string(mode)) + "," + format_csv_number(clean_acc) + "," +
                 format_csv_number(adv_acc) + "," + format_csv_number(corrected_acc) + "\n");
  Json result{{"model", model},
           {"attack", to_string(mode)},
           {"filter", to_string(cfg.filter)},
           {"succ_rate", counts.rate()},
           {"stored_succ_rate", stored_rate},
           {"attacked", counts.attacked},
           {"considered", counts.considered},
           {"succeeded", counts.succeeded},
           {"clean_acc", clean_acc},
           {"adversarial_acc", adv_acc},
           {"corrected_acc", corrected_acc}};
  write_text(cfg.out / "eval.json", result.dump(2) + "\n");
  out << model << " " << to_string(mode) << ": succ_rate " << format_csv_number(counts.rate())
      << "% (stored " << format_csv_number(stored_rate) << "%), accuracy clean "
      << format_csv_number(clean_acc) << "% adversarial " << format_csv_number(adv_acc)
      << "% corrected " << format_csv_number(corrected_acc) << "%\n";
  return kOk;
}

int cmd_transfer(const RunConfig& cfg, std::ostream& out) {
  std::vector<std::string> specs = cfg.transfer_models;
  if (specs.empty() && !cfg.oracle.empty()) specs.push_back(cfg.oracle);
  require(!specs.empty(), "transfer.models lists no models");
  RunConfig base = cfg;
  base.oracle = specs.front();
  Prepared p = prepare(base);

  std::vector<std::unique_ptr<GradientOracle>> oracles;
  std::vector<GradientOracle*> targets;
  std::vector<std::string> names;
  for (const std::string& spec : specs) {
    oracles.push_back(open_oracle(spec));
    check_samples(*oracles.back(), p.samples);
    targets.push_back(oracles.back().get());
    names.push_back(model_name_for(spec));
  }

  std::string matrix = "source";
  for (const std::string& name : names) matrix += "," + name;
  matrix += "\n";
  std::string summary = kSummaryHeader;
  for (std::size_t s = 0; s < oracles.size(); ++s) {
    const std::vector<AttackResult> results =
        attack_all(p.samples, *oracles[s], cfg.attack, cfg.jobs);
    const std::vector<double> row = transfer_eval(results, oracles[s]->info(), targets, cfg.filter);
    summary += summary_row(names[s], cfg.attack.mode, attack_success_rate(results, cfg.filter),
                           mean_quality(results));
    matrix += names[s];
    for (double v : row) matrix += "," + format_csv_number(v);
    matrix += "\n";
  }
  fs::create_directories(cfg.out);
  write_text(cfg.out / "transfer.csv", matrix);
  write_text(cfg.out / "summary.csv", summary);
  out << matrix;
  return kOk;
}

}  // namespace ava::cli
