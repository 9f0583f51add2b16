#include <cmath>

#include <boost/multiprecision/cpp_int.hpp>
#include <gtest/gtest.h>

#include "oracles/rational_float.hpp"
#include "oracles/reference_eval.hpp"
#include "pcaai/analytics.hpp"
#include "pcaai/circuit_io.hpp"
#include "pcaai/generate.hpp"
#include "pcaai/inference.hpp"
#include "support.hpp"

using namespace pcaai;
using namespace testing_support;
using oracle::cpp_rational;

namespace {

std::vector<Assignment> all_states(const Circuit& c) {
  std::vector<Assignment> out;
  for_each_state(c, [&](const Assignment& x) { out.push_back(x); });
  return out;
}

// p(x) of the example circuit with root weights 1/3 and inner weights 1/2, by hand:
// X1 = 0 is reachable through s2 only, X1 = 1 through s2 and s3.
cpp_rational fig2a_probability(const Assignment& x) {
  const cpp_rational third(1, 3), half(1, 2);
  const int x1 = x[0], x2 = x[1], x3 = x[2];
  const cpp_rational s2 = (x3 == 0 && x2 == 0) || (x3 == 1 && x2 == 1) ? half : cpp_rational(0);
  const cpp_rational s3 = (x2 == 1 && x3 == 0) || (x3 == 1 && x2 == 0) ? half : cpp_rational(0);
  if (x1 == 0) return third * s2;
  return cpp_rational(third * s2 + third * s3);
}

}  // namespace

TEST(EvalMar, IndicatorRoot) {
  const Circuit c(binary_vars(1), {ind(1, 0, 1)}, 1);
  const MultResult r = eval_mar(c, Assignment{1}, FloatConfig::make(5, 10), MultiplierPlan::all_exact(c));
  EXPECT_EQ(decode(r.value, FloatConfig::make(5, 10)), 1.0);
  EXPECT_TRUE(eval_mar(c, Assignment{0}, FloatConfig::make(5, 10), MultiplierPlan::all_aai(c)).value.is_zero);
}

TEST(EvalMar, PowerOfTwoCircuitIsUnaffectedByAai) {
  const Circuit c = load_circuit(data_path("pow2.json"));
  const auto cfg = FloatConfig::make(8, 10);
  for (const auto& x : all_states(c)) {
    const MultResult e = eval_mar(c, x, cfg, MultiplierPlan::all_exact(c));
    const MultResult a = eval_mar(c, x, cfg, MultiplierPlan::all_aai(c));
    EXPECT_EQ(e.value, a.value);
    EXPECT_EQ(decode(e.value, cfg), evaluate(c, x));
  }
}

TEST(EvalMar, Fig2aMatchesRationalHandComputation) {
  const Circuit c = fig2a();
  const auto cfg = baseline_config();
  int sixths = 0;
  for (const auto& x : all_states(c)) {
    const double got = decode(eval_mar(c, x, cfg, MultiplierPlan::all_exact(c)).value, cfg);
    const double want = static_cast<double>(fig2a_probability(x));
    EXPECT_NEAR(got, want, 1e-12);
    sixths += std::abs(want - 1.0 / 6.0) < 1e-15;
  }
  EXPECT_EQ(sixths, 6);
}

TEST(EvalMar, RejectsIncompleteOrInvalidAssignments) {
  const Circuit c = fig2a();
  const auto cfg = FloatConfig::make(8, 12);
  EXPECT_THROW(eval_mar(c, Assignment{0, kUnobserved, 1}, cfg, MultiplierPlan::all_exact(c)), DomainError);
  EXPECT_THROW(eval_mar(c, Assignment{0, 1}, cfg, MultiplierPlan::all_exact(c)), DomainError);
  EXPECT_THROW(eval_mar(c, Assignment{0, 2, 1}, cfg, MultiplierPlan::all_exact(c)), DomainError);
  EXPECT_THROW(eval_mar(c, Assignment{0, 1, 1}, cfg, MultiplierPlan(2, 1)), DomainError);
}

TEST(EvalMar, BaselineMatchesDoublePrecision) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Circuit c = generate_random_tree_pc(seed, 8, 3, 2);
    const Evaluator ev(c, baseline_config(), MultiplierPlan::all_exact(c));
    for (const auto& x : all_states(c)) {
      const double want = evaluate(c, x);
      EXPECT_NEAR(decode(ev.evaluate(x), baseline_config()), want, 1e-12 * want);
    }
  }
}

TEST(EvalMar, AaiNeverExceedsExactUnderTowardZero) {
  const auto cfg = FloatConfig::make(8, 10, Rounding::TowardZero);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Circuit c = generate_random_tree_pc(seed, 8, 2, 3);
    const Evaluator exact(c, cfg, MultiplierPlan::all_exact(c));
    const Evaluator aai(c, cfg, MultiplierPlan::all_aai(c));
    for (const auto& x : all_states(c)) {
      const double e = decode(exact.evaluate(x), cfg);
      EXPECT_LE(decode(aai.evaluate(x), cfg), e);
      EXPECT_LE(e, evaluate(c, x));
    }
  }
}

TEST(EvalMar, MatchesIndependentReferenceImplementation) {
  const oracle::RefFormat fmt{8, 12, false};
  const auto cfg = FloatConfig::make(8, 12);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Circuit c = generate_random_tree_pc(seed, 8, 3, 2);
    SplitMix64 rng(seed);
    std::vector<bool> modes(c.num_sites());
    MultiplierPlan mixed = MultiplierPlan::all_exact(c);
    for (std::size_t s = 0; s < c.num_sites(); ++s) {
      modes[s] = rng() & 1;
      if (modes[s]) mixed.set(s, MulMode::AAI);
    }
    const Evaluator ev(c, cfg, mixed);
    for (const auto& x : all_states(c)) EXPECT_EQ(decode(ev.evaluate(x), cfg), oracle::ref_evaluate(c, x, fmt, modes));
  }
}

TEST(EvalMap, BernoulliPicksTheHeavierState) {
  const Circuit c = bernoulli(0.9);
  const MapResult r = eval_map(c, Assignment{kUnobserved}, FloatConfig::make(8, 12), MultiplierPlan::all_exact(c));
  EXPECT_EQ(r.assignment, (Assignment{0}));
  EXPECT_NEAR(r.log2_value, std::log2(0.9), 1e-3);
}

TEST(EvalMap, TiesGoToTheLowestChild) {
  const Circuit c = bernoulli(0.5);
  EXPECT_EQ(eval_map(c, Assignment{kUnobserved}, FloatConfig::make(8, 12), MultiplierPlan::all_aai(c)).assignment, (Assignment{0}));
}

TEST(EvalMap, PowerOfTwoCircuitArgmaxIsUnaffectedByAai) {
  const Circuit c = load_circuit(data_path("pow2.json"));
  const auto cfg = FloatConfig::make(8, 4);
  for (int a = -1; a < 2; ++a)
    for (int b = -1; b < 4; ++b)
      for (int d = -1; d < 2; ++d) {
        const Assignment e{a, b, d};
        const MapResult ex = eval_map(c, e, cfg, MultiplierPlan::all_exact(c));
        const MapResult ap = eval_map(c, e, cfg, MultiplierPlan::all_aai(c));
        EXPECT_EQ(ex.assignment, ap.assignment);
        EXPECT_EQ(ex.trace, ap.trace);
        EXPECT_EQ(ex.log2_value, ap.log2_value);
      }
}

TEST(EvalMap, MatchesBruteForceMaxProduct) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Circuit c = generate_random_tree_pc(seed, 6, 2, 3);
    const Evaluator ev(c, baseline_config(), MultiplierPlan::all_exact(c));
    SplitMix64 rng(seed + 100);
    for (int trial = 0; trial < 4; ++trial) {
      Assignment evidence(6, kUnobserved);
      if (trial > 0)
        for (auto& v : evidence)
          if (rng.uniform() < 0.4) v = static_cast<int>(rng() & 1);
      double best = -1.0;
      Assignment arg;
      for (const auto& x : all_states(c)) {
        bool consistent = true;
        for (std::size_t v = 0; v < x.size(); ++v) consistent &= evidence[v] == kUnobserved || evidence[v] == x[v];
        if (!consistent) continue;
        const double s = oracle::max_product(c, x);
        if (s > best) {
          best = s;
          arg = x;
        }
      }
      const MapResult r = ev.map(evidence);
      EXPECT_EQ(r.assignment, arg) << "seed " << seed << " trial " << trial;
      EXPECT_NEAR(std::exp2(r.log2_value), best, 1e-12 * best);
    }
  }
}

TEST(EvalMap, TraceReproducesTheValue) {
  const auto cfg = FloatConfig::make(8, 7);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Circuit c = generate_random_tree_pc(seed, 8, 3, 2);
    for (const MultiplierPlan& p : {MultiplierPlan::all_exact(c), MultiplierPlan::all_aai(c)}) {
      const Evaluator ev(c, cfg, p);
      const MapResult r = ev.map(Assignment(8, kUnobserved));
      EXPECT_EQ(log2_value(ev.evaluate_tree(r.trace, r.assignment), cfg), r.log2_value);
      for (VarId v : c.scope(c.root())) EXPECT_NE(r.assignment[static_cast<std::size_t>(v)], kUnobserved);
    }
  }
}

TEST(EvalMap, ClampsObservedVariables) {
  const Circuit c = fig2a(0.2, 0.3, 0.6, 0.1);
  const auto cfg = FloatConfig::make(8, 12);
  for (int x1 = 0; x1 < 2; ++x1) EXPECT_EQ(eval_map(c, Assignment{x1, kUnobserved, kUnobserved}, cfg, MultiplierPlan::all_exact(c)).assignment[0], x1);
  EXPECT_THROW(eval_map(c, Assignment{0, 0}, cfg, MultiplierPlan::all_exact(c)), DomainError);
}

TEST(CompareQueries, SelfComparisonIsExact) {
  const Circuit c = generate_random_tree_pc(4, 8, 3, 2);
  const auto data = sample(c, 1, 300);
  const QueryMetrics m = compare_queries(c, data, baseline_config(), MultiplierPlan::all_exact(c));
  EXPECT_EQ(m.mean_log_error, 0.0);
  EXPECT_EQ(m.map_accuracy, 1.0);
  EXPECT_EQ(m.n_mar, 300u);
  EXPECT_EQ(m.underflow_count, 0u);
  EXPECT_THROW(compare_queries(c, {}, baseline_config(), MultiplierPlan::all_exact(c)), DomainError);
}

TEST(CompareQueries, PowerOfTwoCircuitHasNoAaiError) {
  const Circuit c = load_circuit(data_path("pow2.json"));
  const QueryMetrics m = compare_queries(c, all_states(c), FloatConfig::make(8, 6), MultiplierPlan::all_aai(c));
  EXPECT_EQ(m.mean_log_error, 0.0);
  EXPECT_EQ(m.map_accuracy, 1.0);
}

TEST(CompareQueries, MatchesScriptedReference) {
  const Circuit c = generate_random_tree_pc(11, 10, 3, 2);
  const auto data = sample(c, 5, 1000);
  const oracle::RefFormat fmt{8, 12, false};
  const std::vector<bool> all_aai(c.num_sites(), true);
  double total = 0.0;
  for (const auto& x : data) total += std::abs(std::log2(evaluate(c, x)) - std::log2(oracle::ref_evaluate(c, x, fmt, all_aai)));
  QueryOptions opt;
  opt.queries = QueryKind::Mar;
  const QueryMetrics m = compare_queries(c, data, FloatConfig::make(8, 12), MultiplierPlan::all_aai(c), opt);
  EXPECT_NEAR(m.mean_log_error, total / 1000.0, 1e-12);
  EXPECT_GT(m.mean_log_error, 0.0);
  EXPECT_TRUE(std::isnan(m.map_accuracy));
}

TEST(CompareQueries, MoreMantissaBitsReduceError) {
  const Circuit c = generate_random_tree_pc(2, 10, 3, 3);
  const auto data = sample(c, 8, 500);
  QueryOptions opt;
  opt.queries = QueryKind::Mar;
  for (int M : {4, 8, 12, 16, 24, 32}) {
    const double coarse = compare_queries(c, data, FloatConfig::make(11, M), MultiplierPlan::all_exact(c), opt).mean_log_error;
    const double fine = compare_queries(c, data, FloatConfig::make(11, M + 8), MultiplierPlan::all_exact(c), opt).mean_log_error;
    EXPECT_LT(fine, coarse) << "M=" << M;
  }
}

TEST(CompareQueries, ZeroBaselineIsReportedAndExcluded) {
  const Circuit c = fig2a();
  const auto states = all_states(c);  // two states have probability zero
  const QueryMetrics m = compare_queries(c, states, FloatConfig::make(8, 12), MultiplierPlan::all_exact(c));
  EXPECT_EQ(m.failures.size(), 2u);
  EXPECT_EQ(m.n_mar, 6u);
  EXPECT_TRUE(std::isfinite(m.mean_log_error));
}

TEST(CompareQueries, CorrectionShiftsTheReadout) {
  const Circuit c = bernoulli(0.75);
  const auto cfg = FloatConfig::make(8, 20);
  QueryOptions opt;
  opt.queries = QueryKind::Mar;
  opt.readout = LogReadout::Mitchell;
  const std::vector<Assignment> zero{{0}};
  const double raw = compare_queries(c, zero, cfg, MultiplierPlan::all_aai(c), opt).mean_log_error;
  EXPECT_NEAR(raw, std::log2(1.5) - 0.5, 1e-6);
  opt.log2_epsilon = raw;
  EXPECT_NEAR(compare_queries(c, zero, cfg, MultiplierPlan::all_aai(c), opt).mean_log_error, 0.0, 1e-6);
}

TEST(CompareQueries, CountsUnderflows) {
  const Circuit c = generate_random_tree_pc(3, 16, 4, 2);
  const auto data = sample(c, 2, 50);
  const QueryMetrics m = compare_queries(c, data, FloatConfig::make(3, 8), MultiplierPlan::all_exact(c));
  EXPECT_GT(m.underflow_count, 0u);
}
