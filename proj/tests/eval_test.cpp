#include <algorithm>
#include <cmath>

#include "ava/error.hpp"
#include "ava/eval.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace ava;

namespace {

SampleOutcome outcome(int label, int clean, int adv, bool failed = false) {
  return {label, clean, adv, !failed && adv != label, failed};
}

std::vector<Sample> random_samples(std::mt19937_64& rng, GradientOracle& oracle, int n) {
  std::vector<Sample> out;
  const ImageShape s = oracle.info().shape;
  for (int i = 0; i < n; ++i) {
    ImageTensor img = quantize_8bit(test::random_image(rng, s.height, s.width, s.channels, 0.1, 0.9));
    // Half the labels agree with the model, half are random.
    const int label = i % 2 == 0 ? predict(oracle, img) : static_cast<int>(rng() % 3);
    out.push_back({"s" + std::to_string(i), std::move(img), label});
  }
  return out;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("success rate arithmetic") {
    std::vector<SampleOutcome> v;
    for (int i = 0; i < 10000; ++i) v.push_back(outcome(0, 0, i < 936 ? 1 : 0));
    CHECK(attack_success_rate(v, SampleFilter::all) == doctest::Approx(9.36));
  }

  TEST_CASE("filters and failed samples") {
    const std::vector<SampleOutcome> v{
        outcome(0, 0, 1),        // correct, fooled
        outcome(0, 0, 0),        // correct, resisted
        outcome(1, 0, 0),        // initially wrong
        outcome(2, 2, 2, true),  // oracle failed
    };
    const SuccessCounts all = count_success(v, SampleFilter::all);
    CHECK(all.considered == 4);
    CHECK(all.succeeded == 2);  // the initially wrong sample stays misclassified
    CHECK(all.rate() == doctest::Approx(50.0));
    const SuccessCounts ic = count_success(v, SampleFilter::initially_correct);
    CHECK(ic.initially_correct == 3);
    CHECK(ic.considered == 3);
    CHECK(ic.succeeded == 1);
    CHECK(ic.rate() == doctest::Approx(100.0 / 3.0));

    const std::vector<SampleOutcome> none{outcome(1, 0, 0)};
    CHECK(count_success(none, SampleFilter::initially_correct).rate() == 0.0);
    CHECK_THROWS_AS(count_success(std::span<const SampleOutcome>{}, SampleFilter::all),
                    InvalidArgument);
  }

  TEST_CASE("filter names") {
    CHECK(parse_sample_filter("all") == SampleFilter::all);
    CHECK(parse_sample_filter("initially-correct") == SampleFilter::initially_correct);
    CHECK(to_string(SampleFilter::initially_correct) == "initially-correct");
    CHECK_THROWS_AS(parse_sample_filter("some"), ConfigError);
  }

  TEST_CASE("parallel attacks match the serial run") {
    std::mt19937_64 rng(40);
    test::DoubleOracle oracle(test::random_linear(rng, {8, 8, 1}, 3, 2.0));
    const auto samples = random_samples(rng, oracle, 12);
    const AttackConfig cfg;
    const auto serial = attack_all(samples, oracle, cfg, 1);
    const auto parallel = attack_all(samples, oracle, cfg, 4);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
      CHECK(serial[i].adversarial == parallel[i].adversarial);
      CHECK(serial[i].final_params == parallel[i].final_params);
    }
  }

  TEST_CASE("transfer matrix entries") {
    std::mt19937_64 rng(41);
    const ImageShape shape{8, 8, 1};
    ReferenceOracle source(test::random_linear(rng, shape, 3, 2.0));
    const std::vector<double> zeros(3 * shape.size(), 0.0);
    ReferenceOracle always_zero(ReferenceClassifier::linear(shape, zeros, std::vector<double>{1, 0, 0}));
    const auto samples = random_samples(rng, source, 20);
    const auto results = attack_all(samples, source, AttackConfig{});

    GradientOracle* targets[] = {&source, &always_zero, &always_zero};
    const auto row = transfer_eval(results, source.info(), targets, SampleFilter::initially_correct);
    REQUIRE(row.size() == 3);
    CHECK(row[0] == doctest::Approx(attack_success_rate(results, SampleFilter::initially_correct)));
    std::size_t considered = 0, nonzero = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (results[i].clean_prediction != samples[i].label) continue;
      ++considered;
      nonzero += samples[i].label != 0;
    }
    REQUIRE(considered > 0);
    CHECK(row[1] == doctest::Approx(100.0 * static_cast<double>(nonzero) / static_cast<double>(considered)));
    CHECK(row[1] == row[2]);

    ReferenceOracle wrong_shape(test::random_linear(rng, {4, 4, 1}, 3));
    GradientOracle* bad[] = {&wrong_shape};
    CHECK_THROWS_AS(transfer_eval(results, source.info(), bad, SampleFilter::all), InvalidArgument);
  }

  TEST_CASE("radial correction leaves a flat image alone") {
    const ImageTensor flat(16, 16, 3, 0.4);
    const CorrectionResult c = radial_correction(flat);
    CHECK_FALSE(c.degenerate);
    CHECK(c.c1 == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
    CHECK(c.c2 == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
    for (std::size_t i = 0; i < flat.size(); ++i) {
      CHECK(c.image.values()[i] == doctest::Approx(0.4).epsilon(1e-9));
    }
  }

  TEST_CASE("radial correction removes an illumination falloff") {
    const ImageTensor flat(32, 32, 1, 0.6);
    const ImageTensor dark = apply_vignette(flat, {0.5, 0.0, 0.0, 0.0});
    const CorrectionResult c = radial_correction(dark);
    CHECK_FALSE(c.degenerate);
    auto values = std::vector<double>(c.image.values().begin(), c.image.values().end());
    std::nth_element(values.begin(), values.begin() + values.size() / 2, values.end());
    const double median = values[values.size() / 2];
    double worst = 0.0;
    for (double v : c.image.values()) worst = std::max(worst, std::abs(v - median) / median);
    CHECK(worst < 0.05);
    double before = 0.0;
    for (double v : dark.values()) before = std::max(before, std::abs(v - 0.6) / 0.6);
    CHECK(before > 0.3);
  }

  TEST_CASE("radial correction on tiny and black images is degenerate") {
    CHECK(radial_correction(ImageTensor(1, 1, 1, 0.5)).degenerate);
    CHECK(radial_correction(ImageTensor(1, 1, 1, 0.5)).image == ImageTensor(1, 1, 1, 0.5));
    CHECK(radial_correction(ImageTensor(16, 16, 1, 0.0)).degenerate);
  }

  TEST_CASE("parameter keys") {
    AttackConfig cfg;
    set_attack_parameter(cfg, "bounds.eps_alpha", 0.3);
    CHECK(cfg.bounds.radius.alpha == 0.3);
    set_attack_parameter(cfg, "attack.lambda_g", 10.0);
    CHECK(cfg.lambda_g == 10.0);
    set_attack_parameter(cfg, "attack.max_iters", 12.0);
    CHECK(cfg.max_iters == 12);
    CHECK_THROWS_AS(set_attack_parameter(cfg, "attack.max_iters", 2.5), ConfigError);
    CHECK_THROWS_AS(set_attack_parameter(cfg, "attack.nope", 1.0), ConfigError);
    CHECK_THROWS_AS(set_attack_parameter(cfg, "attack.lambda_f", INFINITY), ConfigError);
    CHECK(attack_parameter_keys().size() == 19);
    for (std::string_view k : attack_parameter_keys()) {
      AttackConfig probe;
      CHECK_NOTHROW(set_attack_parameter(probe, k, 1.0));
    }
  }

  TEST_CASE("sweeps") {
    std::mt19937_64 rng(42);
    test::DoubleOracle oracle(test::random_linear(rng, {8, 8, 1}, 3, 2.0));
    const auto samples = random_samples(rng, oracle, 10);
    AttackConfig base;
    base.mode = AttackMode::ri;

    const std::vector<SweepAxis> one{{"bounds.eps_alpha", {0.3}}};
    const auto rows = sweep(one, base, samples, oracle, SampleFilter::all);
    REQUIRE(rows.size() == 1);
    AttackConfig direct = base;
    direct.bounds.radius.alpha = 0.3;
    CHECK(rows[0].counts.rate() ==
          attack_success_rate(attack_all(samples, oracle, direct), SampleFilter::all));

    const std::vector<SweepAxis> two{{"attack.lambda_f", {0.0, 1.0}}, {"attack.max_iters", {1, 2, 3}}};
    const auto grid = sweep(two, base, samples, oracle, SampleFilter::all);
    REQUIRE(grid.size() == 6);
    CHECK(grid[1].values == std::vector<double>{0.0, 2.0});
    CHECK(grid[3].values == std::vector<double>{1.0, 1.0});

    CHECK_THROWS_AS(sweep({}, base, samples, oracle, SampleFilter::all), ConfigError);
    const std::vector<SweepAxis> empty_axis{{"attack.lambda_f", {}}};
    CHECK_THROWS_AS(sweep(empty_axis, base, samples, oracle, SampleFilter::all), ConfigError);
    const std::vector<SweepAxis> bad_value{{"attack.max_iters", {0}}};
    CHECK_THROWS_AS(sweep(bad_value, base, samples, oracle, SampleFilter::all), ConfigError);

    const std::string csv = sweep_csv(two, grid);
    CHECK(csv.rfind("attack.lambda_f,attack.max_iters,succ_rate\n0.000000,1.000000,", 0) == 0);
  }

  TEST_CASE("CSV numbers") {
    CHECK(format_csv_number(9.36) == "9.360000");
    CHECK(format_csv_number(NAN) == "nan");
    CHECK(format_csv_number(INFINITY) == "99.000000");
    CHECK(format_csv_number(-INFINITY) == "-99.000000");
  }

  TEST_CASE("correction accuracy counts every sample") {
    std::mt19937_64 rng(43);
    ReferenceOracle oracle(test::random_linear(rng, {8, 8, 1}, 3, 2.0));
    const auto samples = random_samples(rng, oracle, 10);
    const auto results = attack_all(samples, oracle, AttackConfig{});
    const CorrectionAccuracy acc = correction_accuracy(samples, results, oracle);
    std::size_t clean = 0, adv = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      clean += results[i].clean_prediction == samples[i].label;
      adv += results[i].adversarial_prediction == samples[i].label;
    }
    CHECK(acc.clean == doctest::Approx(10.0 * static_cast<double>(clean)));
    CHECK(acc.adversarial == doctest::Approx(10.0 * static_cast<double>(adv)));
    CHECK(acc.corrected >= 0.0);
    CHECK(acc.corrected <= 100.0);
    CHECK_THROWS_AS(correction_accuracy(samples, std::span(results).first(3), oracle),
                    InvalidArgument);
  }
}
