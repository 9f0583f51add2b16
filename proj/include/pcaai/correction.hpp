#pragma once

// Expected log-error correction: a single scalar log2 eps per (circuit, cfg,
// plan), added to the approximate log2 probability of every query.

#include <cmath>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "pcaai/analytics.hpp"
#include "pcaai/error_analysis.hpp"
#include "pcaai/inference.hpp"
#include "pcaai/structure.hpp"

namespace pcaai {

enum class CorrectionMethod { MonteCarlo, ClosedFormDet };

inline const char* to_string(CorrectionMethod m) noexcept {
  return m == CorrectionMethod::MonteCarlo ? "monte-carlo" : "closed-form-det";
}

// log2_epsilon = E_x[log2 p(x) - log2 p~(x)]: the mean amount by which the
// approximation underestimates, >= 0 when the approximation never exceeds
// the exact value.
struct CorrectionTerm {
  double log2_epsilon = 0.0;
  std::size_t n_calibration = 0;
  double std_error = 0.0;
  CorrectionMethod method = CorrectionMethod::MonteCarlo;
  std::uint64_t seed = 0;
};

// Calibrates on n samples from the exact model. p~ is evaluated at cfg under
// `plan` and read per `readout`; the reference is the 64-bit exact value.
inline CorrectionTerm estimate_log_epsilon(const Circuit& c, const FloatConfig& cfg, const MultiplierPlan& plan, std::size_t n,
                                           std::uint64_t seed, LogReadout readout = LogReadout::Linear) {
  if (n < 100) throw DomainError("estimate_log_epsilon needs at least 100 calibration samples");
  const Evaluator approx(c, cfg, plan);
  const Evaluator base(c, baseline_config(), MultiplierPlan::all_exact(c));
  const auto xs = sample(c, seed, n);
  std::vector<double> diff(n);
  parallel_for(n, [&](std::size_t i) {
    const CustomFloat p = approx.evaluate(xs[i]);
    if (p.is_zero) throw EvaluationError("approximate probability is zero; correction undefined", i);
    diff[i] = log2_value(base.evaluate(xs[i]), baseline_config()) - read_log2(p, cfg, readout);
  });
  RunningStats stats;
  for (double d : diff) stats.add(d);
  return {stats.mean(), n, stats.std_error(), CorrectionMethod::MonteCarlo, seed};
}

// For deterministic circuits the expectation is the tree-mass weighted sum of
// per-weight Mitchell errors.
inline CorrectionTerm closed_form_log_epsilon_det(const Circuit& c, const FloatConfig& cfg) {
  if (!validate(c).deterministic) throw DomainError("closed-form correction requires a deterministic circuit");
  return {delta_det(c, cfg).delta_det, 0, 0.0, CorrectionMethod::ClosedFormDet, 0};
}

// Corrected log2 probability. A zero approximation (-inf) stays -inf: there is
// nothing to correct.
inline double apply_correction(double log2_p_tilde, const CorrectionTerm& term) {
  return log2_p_tilde + term.log2_epsilon;
}

inline nlohmann::json to_json(const CorrectionTerm& t) {
  return {{"log2_epsilon", t.log2_epsilon},
          {"n_calibration", t.n_calibration},
          {"std_error", t.std_error},
          {"method", to_string(t.method)},
          {"seed", t.seed}};
}

inline CorrectionTerm correction_from_json(const nlohmann::json& j) {
  try {
    CorrectionTerm t;
    t.log2_epsilon = j.at("log2_epsilon").get<double>();
    t.n_calibration = j.value("n_calibration", std::size_t{0});
    t.std_error = j.value("std_error", 0.0);
    const std::string m = j.value("method", std::string("monte-carlo"));
    if (m == "monte-carlo") {
      t.method = CorrectionMethod::MonteCarlo;
    } else if (m == "closed-form-det") {
      t.method = CorrectionMethod::ClosedFormDet;
    } else {
      throw FormatError("unknown correction method \"" + m + "\"");
    }
    t.seed = j.value("seed", std::uint64_t{0});
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed correction document: ") + e.what());
  }
}

}  // namespace pcaai
