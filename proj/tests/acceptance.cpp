// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Usage: ava_acceptance <toy suite dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "ava/cli.hpp"
#include "ava/levelset.hpp"
#include "gradient_check.hpp"
#include "support.hpp"
#include "toy_suite.hpp"

using namespace ava;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = limit_s <= 0.0 || secs < limit_s;
  const bool pass = o.pass && in_time;
  failures += !pass;
  char timing[96];
  if (limit_s > 0.0) {
    std::snprintf(timing, sizeof timing, "%.2f s (limit %.0f s)", secs, limit_s);
  } else {
    std::snprintf(timing, sizeof timing, "%.2f s", secs);
  }
  std::printf("%s [%d] %s: %s; %s\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), timing);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ava");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err,
                            [](const char*) -> const char* { return nullptr; });
  if (code != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

struct Toy {
  cli::RunConfig cfg;
  std::unique_ptr<GradientOracle> oracle;
  std::vector<Sample> samples;
};

Toy load_toy(const fs::path& dir, std::uint64_t seed) {
  Toy t;
  t.cfg = cli::load_config(dir / "attack.conf");
  t.cfg.seed = seed;
  t.oracle = cli::open_oracle(t.cfg.oracle);
  t.samples = cli::load_samples(load_manifest(t.cfg.manifest), seed);
  return t;
}

double rate(const Toy& t, AttackMode mode) {
  AttackConfig cfg = t.cfg.attack;
  cfg.mode = mode;
  return attack_success_rate(attack_all(t.samples, *t.oracle, cfg), t.cfg.filter);
}

double max_abs_diff(const ImageTensor& a, const ImageTensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
  }
  return worst;
}

Outcome identity(const fs::path& toy) {
  std::mt19937_64 rng(1);
  const ImageTensor img = test::random_image(rng, 24, 32, 3);
  const PhysicalParams zero{0.0, 0.0, 0.0, 0.0};
  const double pre = max_abs_diff(apply_vignette(img, zero), img);

  test::TempDir dir;
  save_image(img, dir / "in.png");
  const ImageTensor stored = load_image(dir / "in.png");
  if (run_cli({"render", "-i", (dir / "in.png").string(), "-o", (dir / "out.png").string(),
               "--f-inv", "0", "--alpha", "0", "--tau", "0", "--chi", "0"}) != 0) {
    return {false, "render exited non-zero"};
  }
  const double post = max_abs_diff(load_image(dir / "out.png"), img);
  const double cli_exact = max_abs_diff(load_image(dir / "out.png"), stored);

  const fs::path toy_png = toy / "images" / "img_000.png";
  if (run_cli({"render", "-i", toy_png.string(), "-o", (dir / "toy.png").string()}) != 0) {
    return {false, "render of toy image exited non-zero"};
  }
  const double toy_diff = max_abs_diff(load_image(dir / "toy.png"), load_image(toy_png));
  return {pre == 0.0 && post <= 1.0 / 510.0 && cli_exact == 0.0 && toy_diff == 0.0,
          fmt("pre-quantization max diff %g (must be 0), post round trip %.6f <= 1/510, "
              "render vs its input %g",
              pre, post, std::max(cli_exact, toy_diff))};
}

Outcome gradients() {
  const test::GradientReport rep = test::check_objective_gradients(120, 2024);
  const int used = rep.configs - rep.clamped_configs;
  return {used >= 100 && rep.failed == 0,
          fmt("%d configurations, %ld partials, %ld outside rel %.0e / abs %.0e (h=%.0e), worst "
              "abs error %.2e%s%s",
              used, rep.checked, rep.failed, test::kRelTol, test::kAbsFloor, test::kFdStep,
              rep.worst_abs, rep.failed ? "; first: " : "", rep.first_failure.c_str())};
}

Outcome hand_values() {
  constexpr double pi = std::numbers::pi;
  const CoordGrid at_corner{1, 1, {1.0}, {0.0}, {1.0}};
  const CoordGrid below{1, 1, {0.0}, {1.0}, {1.0}};
  const double a = illumination_field(at_corner, 1.0)[0];
  const double t = tilt_field(below, 1.0, pi / 6.0, 0.0)[0];
  const double h = smoothed_heaviside(0.5, 0.5, 0.05);
  const bool ok = a == 0.25 && std::abs(t - 1.36603) <= 1e-5 && static_cast<float>(h) == 0.5f;
  return {ok, fmt("A(1,1) = %.17g, T = %.7f (1.36603 +- 1e-5), H(threshold) = %.17g", a, t, h)};
}

Outcome ra_beats_ri(const fs::path& toy) {
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed : {1, 2, 3}) {
    const Toy t = load_toy(toy, seed);
    const double ri = rate(t, AttackMode::ri);
    const double ra = rate(t, AttackMode::ra);
    ok &= ra - ri >= 5.0;
    detail += fmt("%sseed %llu: RA %.2f%% vs RI %.2f%%", detail.empty() ? "" : ", ",
                  static_cast<unsigned long long>(seed), ra, ri);
  }
  return {ok, detail + " (margin >= 5 points)"};
}

Outcome sweep_trends(const fs::path& toy) {
  const Toy t = load_toy(toy, 1);
  constexpr double slack = 2.0;

  AttackConfig ri = t.cfg.attack;
  ri.mode = AttackMode::ri;
  const std::vector<SweepAxis> eps{{"bounds.eps_alpha", {0.1, 0.3, 0.5}}};
  const auto eps_rows = sweep(eps, ri, t.samples, *t.oracle, t.cfg.filter);

  AttackConfig ra = t.cfg.attack;
  ra.mode = AttackMode::ra;
  const std::vector<SweepAxis> lam{{"attack.lambda_g", {0.0, 1.0, 10.0}}};
  const auto lam_rows = sweep(lam, ra, t.samples, *t.oracle, t.cfg.filter);

  bool ok = true;
  for (std::size_t i = 1; i < 3; ++i) {
    ok &= eps_rows[i].counts.rate() >= eps_rows[i - 1].counts.rate() - slack;
    ok &= lam_rows[i].counts.rate() <= lam_rows[i - 1].counts.rate() + slack;
  }
  return {ok, fmt("RI eps_alpha 0.1/0.3/0.5 -> %.2f/%.2f/%.2f (non-decreasing), RA lambda_g "
                  "0/1/10 -> %.2f/%.2f/%.2f (non-increasing), slack %.0f points",
                  eps_rows[0].counts.rate(), eps_rows[1].counts.rate(), eps_rows[2].counts.rate(),
                  lam_rows[0].counts.rate(), lam_rows[1].counts.rate(), lam_rows[2].counts.rate(),
                  slack)};
}

// 2x2 grey image, two classes, with a clean margin small enough that the
// attack sometimes wins. Every pixel of a 2x2 grid sits at R = 1.
struct TinyFixture {
  ImageTensor image;
  std::unique_ptr<ReferenceOracle> oracle;
  int label;
};

TinyFixture tiny_fixture(std::mt19937_64& rng) {
  const ImageShape shape{2, 2, 1};
  TinyFixture f;
  f.image = quantize_8bit(test::random_image(rng, 2, 2, 1, 0.2, 0.8));
  std::vector<double> w = test::random_vector(rng, 8);
  std::normal_distribution<double> margin(0.0, 0.3);
  double d = 0.0;
  for (std::size_t i = 0; i < 4; ++i) d += (w[4 + i] - w[i]) * f.image.values()[i];
  const std::vector<double> b{0.0, margin(rng) - d};
  f.oracle = std::make_unique<ReferenceOracle>(ReferenceClassifier::linear(shape, w, b));
  f.label = predict(*f.oracle, f.image);
  return f;
}

Outcome brute_force() {
  std::mt19937_64 rng(606);
  AttackConfig cfg;
  cfg.mode = AttackMode::ri;
  cfg.steps.tau = cfg.steps.chi = 0.0;
  cfg.bounds.radius.tau = cfg.bounds.radius.chi = 0.0;
  constexpr double step = 0.0125;
  int agree = 0, attack_wins = 0, grid_wins = 0;
  for (int k = 0; k < 20; ++k) {
    const TinyFixture f = tiny_fixture(rng);
    const AttackResult r = ri_ava_attack(f.image, f.label, *f.oracle, cfg);
    const Interval fi = cfg.bounds.feasible(Param::f_inv);
    const Interval al = cfg.bounds.feasible(Param::alpha);
    bool found = false;
    for (int i = 0; fi.lo + i * step <= fi.hi + 1e-12 && !found; ++i) {
      for (int j = 0; al.lo + j * step <= al.hi + 1e-12 && !found; ++j) {
        const PhysicalParams p{fi.lo + i * step, al.lo + j * step, 0.0, 0.0};
        found = predict(*f.oracle, quantize_8bit(apply_vignette(f.image, p))) != f.label;
      }
    }
    attack_wins += r.success;
    grid_wins += found;
    agree += !r.success || found;
  }
  return {agree == 20, fmt("%d/20 fixtures agree (attack succeeded on %d, grid search found a "
                           "misclassifying point on %d)",
                           agree, attack_wins, grid_wins)};
}

Outcome feasibility() {
  toy::Options opt;
  opt.seed = 7;
  opt.per_class = 34;
  toy::Suite suite = toy::make_suite(opt);
  suite.samples.resize(100);
  ReferenceOracle oracle(suite.model);
  long checks = 0, violations = 0, iterations = 0;
  for (AttackMode mode : {AttackMode::ri, AttackMode::ra}) {
    AttackConfig cfg;
    cfg.mode = mode;
    cfg.early_stop = false;
    for (const Sample& s : suite.samples) {
      const AttackResult r = run_attack(
          s.image, s.label, oracle, cfg,
          [&](int, const PhysicalParams& p, const GeometryField* g) {
            ++iterations;
            for (Param q : kAllParams) {
              ++checks;
              violations += !cfg.bounds.feasible(q).contains(p[q]);
            }
            if (g != nullptr) {
              for (double v : g->g) {
                ++checks;
                violations += !(v >= 0.0 && v <= 1.0);
              }
            }
          });
      violations += r.iterations_used != cfg.max_iters;
    }
  }
  return {violations == 0 && iterations == 2 * 100 * 40,
          fmt("%ld iterations over 100 samples x {RI, RA}, %ld checks, %ld violations", iterations,
              checks, violations)};
}

Outcome correction(const fs::path& toy) {
  const Toy t = load_toy(toy, 1);
  const auto results = attack_all(t.samples, *t.oracle, t.cfg.attack);
  const CorrectionAccuracy acc = correction_accuracy(t.samples, results, *t.oracle);
  constexpr double gap = 2.0;
  return {acc.clean - acc.corrected >= gap && acc.corrected - acc.adversarial >= gap,
          fmt("accuracy clean %.2f%% > corrected %.2f%% > adversarial %.2f%% (gaps >= %.0f "
              "points, %zu degenerate fits)",
              acc.clean, acc.corrected, acc.adversarial, gap, acc.degenerate_fits)};
}

Outcome determinism(const fs::path& toy) {
  test::TempDir dir;
  const std::string conf = (toy / "attack.conf").string();
  for (const char* run : {"a", "b"}) {
    if (run_cli({"attack", "-c", conf, "--seed", "5", "-o", (dir / run).string()}) != 0) {
      return {false, "attack exited non-zero"};
    }
  }
  const std::string a = slurp(dir / "a" / "summary.csv");
  const std::string b = slurp(dir / "b" / "summary.csv");
  const bool samples_same = slurp(dir / "a" / "samples.csv") == slurp(dir / "b" / "samples.csv");
  return {!a.empty() && a == b,
          fmt("summary.csv %s (%zu bytes); samples.csv %s", a == b ? "identical" : "differs",
              a.size(), samples_same ? "identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <toy suite dir>\n", argv[0]);
    return 2;
  }
  const fs::path toy = argv[1];
  report(1, "identity render", 1.0, [&] { return identity(toy); });
  report(2, "analytic gradients vs finite differences", 30.0, gradients);
  report(3, "hand values", 0.0, hand_values);
  report(4, "RA beats RI", 120.0, [&] { return ra_beats_ri(toy); });
  report(5, "sweep trends", 300.0, [&] { return sweep_trends(toy); });
  report(6, "brute-force equivalence", 10.0, brute_force);
  report(7, "feasibility invariant", 0.0, feasibility);
  report(8, "correction robustness", 0.0, [&] { return correction(toy); });
  report(9, "determinism", 0.0, [&] { return determinism(toy); });
  return failures == 0 ? 0 : 1;
}
