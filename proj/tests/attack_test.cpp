#include <cmath>

#include "ava/attack.hpp"
#include "ava/error.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace ava;

namespace {

// Always predicts `label`; the loss still depends on the image.
ReferenceClassifier constant_classifier(ImageShape shape, int classes, int label) {
  std::vector<double> w(static_cast<std::size_t>(classes) * shape.size(), 0.0);
  std::vector<double> b(static_cast<std::size_t>(classes), 0.0);
  b[static_cast<std::size_t>(label)] = 10.0;
  for (std::size_t i = 0; i < shape.size(); ++i) w[i] = 0.01;
  return ReferenceClassifier::linear(shape, w, b);
}

class FailingOracle final : public GradientOracle {
 public:
  FailingOracle(GradientOracle& inner, int calls_before_failure)
      : inner_(inner), remaining_(calls_before_failure) {}
  const OracleInfo& info() const override { return inner_.info(); }
  LossAndGrad loss_and_grad(const ImageTensor& image, int label) override {
    tick();
    return inner_.loss_and_grad(image, label);
  }
  Scores scores(const ImageTensor& image) override {
    tick();
    return inner_.scores(image);
  }

 private:
  void tick() {
    if (remaining_-- <= 0) throw ConnectionError("peer went away");
  }
  GradientOracle& inner_;
  int remaining_;
};

struct Fixture {
  std::mt19937_64 rng{31};
  ImageTensor image = test::random_image(rng, 9, 9, 3, 0.1, 0.9);
  ReferenceOracle oracle{test::random_linear(rng, {9, 9, 3}, 3, 3.0)};
  int label = predict(oracle, image);
};

}  // namespace

TEST_SUITE("attack") {
  TEST_CASE("mode names") {
    CHECK(parse_attack_mode("ri") == AttackMode::ri);
    CHECK(parse_attack_mode("ra") == AttackMode::ra);
    CHECK(to_string(AttackMode::ri) == "ri");
    CHECK_THROWS_AS(parse_attack_mode("rx"), InvalidArgument);
  }

  TEST_CASE("config validation") {
    AttackConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.max_iters = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.steps.tau = -0.1;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.lambda_g = -1.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  }

  TEST_CASE("without early stop every iteration runs and stays feasible") {
    Fixture fx;
    for (AttackMode mode : {AttackMode::ri, AttackMode::ra}) {
      AttackConfig cfg;
      cfg.mode = mode;
      cfg.early_stop = false;
      int calls = 0;
      const AttackResult r = run_attack(
          fx.image, fx.label, fx.oracle, cfg,
          [&](int t, const PhysicalParams& p, const GeometryField* g) {
            CHECK(t == calls++);
            for (Param q : kAllParams) CHECK(cfg.bounds.feasible(q).contains(p[q]));
            CHECK((g != nullptr) == (mode == AttackMode::ra));
            if (g) {
              for (double v : g->g) CHECK((v >= 0.0 && v <= 1.0));
            }
          });
      CHECK(calls == 40);
      CHECK(r.iterations_used == 40);
      CHECK(r.loss_trace.size() == 40);
      CHECK_FALSE(r.error);
      CHECK(r.success == (r.adversarial_prediction != fx.label));
      CHECK(r.adversarial == quantize_8bit(r.adversarial));
    }
  }

  TEST_CASE("one iteration is one signed step from the start point") {
    Fixture fx;
    AttackConfig cfg;
    cfg.mode = AttackMode::ri;
    cfg.max_iters = 1;
    cfg.early_stop = false;
    cfg.bounds.init = {1.0, 0.2, 0.1, 0.1};
    const ObjectiveValue obj =
        objective(fx.image, fx.label, fx.oracle, cfg.bounds.init, nullptr, cfg);
    const AttackResult r = ri_ava_attack(fx.image, fx.label, fx.oracle, cfg);
    for (Param q : kAllParams) {
      CAPTURE(param_name(q));
      CHECK(r.final_params[q] ==
            doctest::Approx(cfg.bounds.init[q] + cfg.steps[q] * signum(obj.grad_params[q])));
    }
  }

  TEST_CASE("a sample already misclassified succeeds without iterating") {
    std::mt19937_64 rng(2);
    const ImageTensor img = test::random_image(rng, 4, 4, 1);
    ReferenceOracle oracle(constant_classifier({4, 4, 1}, 3, 1));
    const AttackResult r = ra_ava_attack(img, 0, oracle, AttackConfig{});
    CHECK(r.success);
    CHECK(r.clean_prediction == 1);
    CHECK(r.iterations_used == 0);
    CHECK(r.loss_trace.empty());
  }

  TEST_CASE("RA with a zero geometry step is RI") {
    Fixture fx;
    AttackConfig ri;
    ri.mode = AttackMode::ri;
    ri.early_stop = false;
    AttackConfig ra = ri;
    ra.mode = AttackMode::ra;
    ra.steps.geometry = 0.0;
    const AttackResult a = run_attack(fx.image, fx.label, fx.oracle, ri);
    const AttackResult b = run_attack(fx.image, fx.label, fx.oracle, ra);
    CHECK(a.final_params == b.final_params);
    CHECK(a.adversarial == b.adversarial);
    CHECK(a.loss_trace == b.loss_trace);
    REQUIRE(b.final_geometry);
    const CoordGrid grid = build_coord_grid(9, 9);
    CHECK(b.final_geometry->g == geometry_field_init(grid, b.final_params.alpha));
  }

  TEST_CASE("a huge geometry penalty keeps G near G0 above the threshold") {
    Fixture fx;
    AttackConfig cfg;
    cfg.early_stop = false;
    cfg.lambda_g = 1e6;
    const AttackResult r = ra_ava_attack(fx.image, fx.label, fx.oracle, cfg);
    REQUIRE(r.final_geometry);
    const GeometryField& g = *r.final_geometry;
    double worst = 0.0;
    for (std::size_t i = 0; i < g.g.size(); ++i) {
      if (g.g0[i] > 0.6) worst = std::max(worst, std::abs(g.g[i] - g.g0[i]));
    }
    // Signed steps cannot settle closer than one step; alpha moves G0 by up to one more.
    CHECK(worst <= 2.0 * cfg.steps.geometry + 1e-12);
  }

  TEST_CASE("oracle failures are recorded, not thrown") {
    Fixture fx;
    FailingOracle flaky(fx.oracle, 5);
    AttackConfig cfg;
    cfg.early_stop = false;
    const AttackResult r = ra_ava_attack(fx.image, fx.label, flaky, cfg);
    REQUIRE(r.error);
    CHECK(r.error->find("peer went away") != std::string::npos);
    CHECK_FALSE(r.success);
  }

  TEST_CASE("attacks are deterministic") {
    Fixture fx;
    AttackConfig cfg;
    const AttackResult a = run_attack(fx.image, fx.label, fx.oracle, cfg);
    const AttackResult b = run_attack(fx.image, fx.label, fx.oracle, cfg);
    CHECK(a.final_params == b.final_params);
    CHECK(a.adversarial == b.adversarial);
    CHECK(a.loss_trace == b.loss_trace);
  }

  TEST_CASE("a corner-only flip is out of RI reach but not RA's") {
    // Class 1 fires when the top-left corner is darker than the bottom-right
    // one. Every RI field is centrally symmetric, so it cannot tell them apart.
    const ImageShape shape{4, 4, 1};
    std::vector<double> w(2 * 16, 0.0);
    w[16 + 15] = 10.0;
    w[16 + 0] = -10.0;
    const ReferenceClassifier model =
        ReferenceClassifier::linear(shape, w, std::vector<double>{0.5, 0.0});
    ReferenceOracle oracle(model);
    const ImageTensor img(4, 4, 1, 0.8);
    REQUIRE(predict(oracle, img) == 0);

    AttackConfig cfg;
    cfg.mode = AttackMode::ri;
    const AttackResult ri = run_attack(img, 0, oracle, cfg);
    CHECK_FALSE(ri.success);
    bool grid_found = false;
    for (double f = 0.5; f <= 1.5 + 1e-9; f += 0.0625) {
      for (double a = 0.0; a <= 0.5 + 1e-9; a += 0.0625) {
        for (double t = -0.5; t <= 0.5 + 1e-9; t += 0.125) {
          for (double c = -0.5; c <= 0.5 + 1e-9; c += 0.125) {
            grid_found |= predict(oracle, quantize_8bit(apply_vignette(img, {f, a, t, c}))) != 0;
          }
        }
      }
    }
    CHECK_FALSE(grid_found);

    cfg.mode = AttackMode::ra;
    const AttackResult ra = run_attack(img, 0, oracle, cfg);
    CHECK(ra.success);
    REQUIRE(ra.final_geometry);
    CHECK(ra.final_geometry->g[0] < ra.final_geometry->g[15]);
  }
}
