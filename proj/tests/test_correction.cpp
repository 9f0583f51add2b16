#include <cmath>

#include <gtest/gtest.h>

#include "pcaai/analytics.hpp"
#include "pcaai/circuit_io.hpp"
#include "pcaai/correction.hpp"
#include "pcaai/generate.hpp"
#include "support.hpp"

using namespace pcaai;
using namespace testing_support;

TEST(Correction, ExactPlanNeedsNone) {
  const Circuit c = generate_random_tree_pc(3, 8, 3, 2);
  const CorrectionTerm t = estimate_log_epsilon(c, baseline_config(), MultiplierPlan::all_exact(c), 500, 1);
  EXPECT_EQ(t.log2_epsilon, 0.0);
  EXPECT_EQ(t.n_calibration, 500u);
  EXPECT_EQ(t.method, CorrectionMethod::MonteCarlo);
}

TEST(Correction, PowerOfTwoCircuitNeedsNone) {
  const Circuit c = load_circuit(data_path("pow2.json"));
  EXPECT_EQ(estimate_log_epsilon(c, FloatConfig::make(8, 12), MultiplierPlan::all_aai(c), 500, 2).log2_epsilon, 0.0);
  EXPECT_EQ(closed_form_log_epsilon_det(c, FloatConfig::make(8, 12)).log2_epsilon, 0.0);
}

TEST(Correction, MonteCarloAgreesWithClosedForm) {
  const auto cfg = FloatConfig::make(11, 30);
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const Circuit c = generate_random_deterministic_pc(seed, 8, 3);
    const CorrectionTerm mc = estimate_log_epsilon(c, cfg, MultiplierPlan::all_aai(c), 5000, seed, LogReadout::Mitchell);
    const CorrectionTerm cf = closed_form_log_epsilon_det(c, cfg);
    EXPECT_EQ(cf.method, CorrectionMethod::ClosedFormDet);
    EXPECT_LE(std::abs(mc.log2_epsilon - cf.log2_epsilon), 3 * mc.std_error + 1e-12) << "seed " << seed;
  }
  EXPECT_THROW(closed_form_log_epsilon_det(generate_random_tree_pc(0, 8, 3, 2), cfg), DomainError);
}

TEST(Correction, CalibrationSetIsCentred) {
  const Circuit c = generate_random_tree_pc(5, 8, 3, 2);
  const auto cfg = FloatConfig::make(8, 10);
  const auto p = MultiplierPlan::all_aai(c);
  const CorrectionTerm t = estimate_log_epsilon(c, cfg, p, 2000, 17);
  EXPECT_GT(t.log2_epsilon, 0.0);

  // same seed reproduces the calibration set
  const Evaluator approx(c, cfg, p);
  double sum = 0.0;
  const auto xs = sample(c, 17, 2000);
  for (const auto& x : xs) sum += std::log2(evaluate(c, x)) - apply_correction(log2_value(approx.evaluate(x), cfg), t);
  EXPECT_NEAR(sum / static_cast<double>(xs.size()), 0.0, 1e-9);
}

TEST(Correction, TowardZeroNeverOverestimates) {
  const auto cfg = FloatConfig::make(8, 12, Rounding::TowardZero);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Circuit c = generate_random_tree_pc(seed, 8, 3, 2);
    const Evaluator approx(c, cfg, MultiplierPlan::all_aai(c));
    const Evaluator base(c, baseline_config(), MultiplierPlan::all_exact(c));
    for (const auto& x : sample(c, seed, 500))
      EXPECT_GE(log2_value(base.evaluate(x), baseline_config()) - log2_value(approx.evaluate(x), cfg), 0.0);
  }
}

TEST(Correction, ShiftHelpsOneSidedErrors) {
  const auto cfg = FloatConfig::make(8, 10, Rounding::TowardZero);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Circuit c = generate_random_tree_pc(10 + seed, 8, 3, 2);
    const auto p = MultiplierPlan::all_aai(c);
    const CorrectionTerm t = estimate_log_epsilon(c, cfg, p, 2000, seed);
    const Evaluator approx(c, cfg, p);
    double before = 0.0, after = 0.0;
    for (const auto& x : sample(c, seed, 2000)) {
      const double exact = std::log2(evaluate(c, x)), raw = log2_value(approx.evaluate(x), cfg);
      before += std::abs(exact - raw);
      after += std::abs(exact - apply_correction(raw, t));
    }
    EXPECT_LE(after, before);
  }
}

TEST(Correction, ApplyIsAShift) {
  EXPECT_EQ(apply_correction(-3.25, CorrectionTerm{}), -3.25);
  EXPECT_EQ(apply_correction(-3.25, CorrectionTerm{0.5, 100, 0.0, CorrectionMethod::MonteCarlo, 0}), -2.75);
  // an underflowed approximation stays at -inf
  EXPECT_EQ(apply_correction(log2_value(CustomFloat::zero(), FloatConfig::make(8, 8)), CorrectionTerm{0.5, 1, 0, CorrectionMethod::MonteCarlo, 0}),
            -INFINITY);
}

TEST(Correction, Errors) {
  const Circuit c = generate_random_tree_pc(2, 8, 3, 2);
  EXPECT_THROW(estimate_log_epsilon(c, FloatConfig::make(8, 10), MultiplierPlan::all_aai(c), 99, 1), DomainError);
  EXPECT_THROW(estimate_log_epsilon(c, FloatConfig::make(3, 8), MultiplierPlan::all_aai(c), 200, 1), EvaluationError);
}

TEST(Correction, JsonRoundTrip) {
  const CorrectionTerm t{0.0123, 5000, 1e-4, CorrectionMethod::MonteCarlo, 99};
  const CorrectionTerm u = correction_from_json(to_json(t));
  EXPECT_EQ(u.log2_epsilon, t.log2_epsilon);
  EXPECT_EQ(u.n_calibration, t.n_calibration);
  EXPECT_EQ(u.std_error, t.std_error);
  EXPECT_EQ(u.method, t.method);
  EXPECT_EQ(u.seed, t.seed);
  EXPECT_EQ(correction_from_json(nlohmann::json{{"log2_epsilon", 1.5}}).log2_epsilon, 1.5);
  EXPECT_THROW(correction_from_json(nlohmann::json{{"seed", 1}}), FormatError);
  EXPECT_THROW(correction_from_json(nlohmann::json{{"log2_epsilon", 1.0}, {"method", "magic"}}), FormatError);
  EXPECT_TRUE(std::isinf(apply_correction(-INFINITY, t)));
}
