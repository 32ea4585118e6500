#include "ava/reference_classifier.hpp"
#include "doctest.h"
#include "gradient_check.hpp"

using namespace ava;

TEST_SUITE("gradients") {
  TEST_CASE("objective partials match central differences") {
    const test::GradientReport rep = test::check_objective_gradients(120, 2024);
    INFO(rep.first_failure);
    CHECK(rep.failed == 0);
    CHECK(rep.clamped_configs == 0);
    CHECK(rep.configs - rep.clamped_configs >= 100);
    CHECK(rep.checked > 1000);
  }

  TEST_CASE("reference classifier input gradient matches central differences") {
    std::mt19937_64 rng(77);
    const ImageShape shape{4, 3, 3};
    const std::size_t d = shape.size(), hidden = 6, classes = 4;
    ReferenceClassifier model(shape, hidden, classes, test::random_vector(rng, d * hidden),
                              test::random_vector(rng, hidden), test::random_vector(rng, hidden * classes),
                              test::random_vector(rng, classes));
    test::GradientReport rep;
    for (int trial = 0; trial < 20; ++trial) {
      const ImageTensor img = test::random_image(rng, 4, 3, 3);
      const int label = trial % 4;
      // Skip points within reach of a rectifier kink.
      bool near_kink = false;
      for (double z : model.forward(img.values()).pre) near_kink |= std::abs(z) < 1e-2;
      if (near_kink) continue;
      const LossAndGrad lg = reference_loss_and_grad(model, img, label);
      for (std::size_t i = 0; i < d; ++i) {
        const double numeric = test::central_difference(
            [&](double x) {
              ImageTensor probe = img;
              probe.mutable_values()[i] = x;
              return reference_loss_and_grad(model, probe, label).loss;
            },
            img.values()[i]);
        test::compare(rep, lg.grad[i], numeric, "input " + std::to_string(i));
      }
    }
    INFO(rep.first_failure);
    CHECK(rep.checked > 100);
    CHECK(rep.failed == 0);
  }
}
