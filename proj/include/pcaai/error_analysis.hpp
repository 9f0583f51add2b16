#pragma once

// Error of all-AAI evaluation: per-weight Mitchell errors weighted by induced
// tree mass (deterministic circuits), a Monte-Carlo surrogate for
// non-deterministic circuits, a brute-force KL oracle and MAP failure rates.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcaai/analytics.hpp"
#include "pcaai/circuit.hpp"
#include "pcaai/custom_float.hpp"
#include "pcaai/inference.hpp"
#include "pcaai/parallel.hpp"
#include "pcaai/rng.hpp"
#include "pcaai/structure.hpp"

namespace pcaai {

struct WeightContribution {
  std::size_t edge = 0;
  double delta_w = 0.0;  // Mitchell error of the quantized weight
  double mass = 0.0;     // induced-tree mass through the edge
  double contribution = 0.0;
};

struct AnalysisReport {
  double delta_det = 0.0;
  bool exact = true;  // false: the circuit is not (verifiably) deterministic and delta_det is a bound
  double delta_dc = std::numeric_limits<double>::quiet_NaN();  // MC surrogate, constant term dropped
  double delta_dc_std_error = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_samples = 0;
  std::vector<WeightContribution> contributions;
  std::vector<double> top_tree_frequency;  // per edge: share of samples whose top tree uses it (MC only)
};

// Mitchell error of one quantized weight; zero weights contribute nothing.
inline double weight_delta(const CustomFloat& w, const FloatConfig& cfg) {
  return w.is_zero ? 0.0 : mitchell_delta(mantissa_fraction(w, cfg));
}

inline AnalysisReport delta_det(const Circuit& c, const FloatConfig& cfg) {
  cfg.validate();
  AnalysisReport r;
  r.exact = validate(c).deterministic;
  const auto mass = weight_tree_masses(c);
  r.contributions.reserve(c.num_edges());
  for (std::size_t e = 0; e < c.num_edges(); ++e) {
    WeightContribution w{e, weight_delta(encode(c.weight(e), cfg).value, cfg), mass[e], 0.0};
    w.contribution = w.delta_w * w.mass;
    r.delta_det += w.contribution;
    r.contributions.push_back(w);
  }
  return r;
}

// Monte-Carlo estimate of E_x[ sum of delta_w over the top induced tree of x
// - (p~(x) - p~(top tree)) ] with x drawn from the exact model and the top
// tree found by a max-product pass under all-AAI arithmetic at cfg.
inline AnalysisReport delta_nondet_mc(const Circuit& c, const FloatConfig& cfg, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 2) throw DomainError("delta_nondet_mc needs at least 2 samples");
  AnalysisReport r = delta_det(c, cfg);
  const Evaluator ev(c, cfg, MultiplierPlan::all_aai(c));
  std::vector<double> deltas(c.num_edges());
  for (std::size_t e = 0; e < c.num_edges(); ++e) deltas[e] = r.contributions[e].delta_w;

  const auto xs = sample(c, seed, n_samples);
  std::vector<double> values(n_samples);
  std::vector<std::vector<std::size_t>> used(n_samples);
  parallel_for(n_samples, [&](std::size_t i) {
    const MapResult top = ev.map(xs[i]);
    double along = 0.0;
    std::vector<UnitIndex> stack{c.root()};
    while (!stack.empty()) {
      const UnitIndex u = stack.back();
      stack.pop_back();
      const Unit& unit = c.unit(u);
      if (unit.kind == UnitKind::Sum) {
        const std::size_t e = c.edge_offset(u) + static_cast<std::size_t>(top.trace[u]);
        along += deltas[e];
        used[i].push_back(e);
        stack.push_back(c.edge_child(e));
      } else if (unit.kind == UnitKind::Product) {
        for (UnitIndex ch : unit.children) stack.push_back(ch);
      }
    }
    const double tail = decode(ev.evaluate(xs[i]), cfg) - decode(ev.evaluate_tree(top.trace, xs[i]), cfg);
    values[i] = along - tail;
  });

  RunningStats stats;
  r.top_tree_frequency.assign(c.num_edges(), 0.0);
  for (std::size_t i = 0; i < n_samples; ++i) {
    stats.add(values[i]);
    for (std::size_t e : used[i]) r.top_tree_frequency[e] += 1.0;
  }
  for (double& f : r.top_tree_frequency) f /= static_cast<double>(n_samples);
  r.delta_dc = stats.mean();
  r.delta_dc_std_error = stats.std_error();
  r.n_samples = n_samples;
  return r;
}

// sum_x p64(x) (log2 p64(x) - log2 p~(x)) by enumeration, with p~ evaluated
// under `plan` at cfg and read out per `readout`.
inline double kl_bruteforce(const Circuit& c, const FloatConfig& cfg, const MultiplierPlan& plan, LogReadout readout) {
  if (c.joint_state_count() > kExhaustiveStateLimit) throw DomainError("kl_bruteforce: joint state space exceeds 2^20 states");
  const Evaluator ev(c, cfg, plan);
  double kl = 0.0;
  std::size_t index = 0;
  for_each_state(c, [&](const Assignment& x) {
    const double p = evaluate(c, x);
    if (p > 0.0) {
      const CustomFloat q = ev.evaluate(x);
      if (q.is_zero) throw EvaluationError("kl_bruteforce: divergence is infinite, approximate probability is zero where p > 0", index);
      kl += p * (std::log2(p) - read_log2(q, cfg, readout));
    }
    ++index;
  });
  return kl;
}

// Default oracle: all-AAI plan, root read as a Mitchell logarithm. For
// deterministic circuits this matches delta_det up to weight quantization.
inline double kl_bruteforce(const Circuit& c, const FloatConfig& cfg) {
  return kl_bruteforce(c, cfg, MultiplierPlan::all_aai(c), LogReadout::Mitchell);
}

struct FailureEstimate {
  int delta_E = 0;
  int n_mults_per_branch = 1;
  std::size_t n_samples = 0;
  double probability = 0.0;
  double std_error = 0.0;
};

// Probability that AAI and exact multiplication disagree on which of two
// branches is larger. Each branch multiplies n_mults + 1 operands with uniform
// mantissas; the branches' exponents differ by delta_E. Exact compares
// delta_E + sum log2(1 + m) differences, AAI compares delta_E + sum m differences.
inline FailureEstimate map_failure_prob(int delta_E, int n_mults, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 10'000) throw DomainError("map_failure_prob needs at least 10^4 samples");
  if (n_mults < 1) throw DomainError("map_failure_prob needs at least one multiplication per branch");
  const double de = std::abs(static_cast<double>(delta_E));
  const int operands = n_mults + 1;

  constexpr std::size_t kChunk = 1 << 14;
  const std::size_t chunks = (n_samples + kChunk - 1) / kChunk;
  std::vector<std::uint64_t> failures(chunks, 0);
  parallel_for(chunks, [&](std::size_t k) {
    const std::size_t end = std::min(n_samples, (k + 1) * kChunk);
    for (std::size_t i = k * kChunk; i < end; ++i) {
      SplitMix64 rng = derive_stream(seed, i);
      double d_exact = de, d_aai = de;
      for (int side = 0; side < 2; ++side) {
        const double sign = side == 0 ? 1.0 : -1.0;
        for (int j = 0; j < operands; ++j) {
          const double m = rng.uniform();
          d_exact += sign * std::log2(1.0 + m);
          d_aai += sign * m;
        }
      }
      failures[k] += d_exact * d_aai <= 0.0;
    }
  });
  std::uint64_t total = 0;
  for (auto f : failures) total += f;
  FailureEstimate r;
  r.delta_E = static_cast<int>(de);
  r.n_mults_per_branch = n_mults;
  r.n_samples = n_samples;
  r.probability = static_cast<double>(total) / static_cast<double>(n_samples);
  r.std_error = std::sqrt(r.probability * (1.0 - r.probability) / static_cast<double>(n_samples));
  return r;
}

inline nlohmann::json to_json(const AnalysisReport& r, const Circuit& c) {
  nlohmann::json j;
  j["delta_det"] = r.delta_det;
  j["delta_det_kind"] = r.exact ? "exact" : "bound, not equality";
  if (r.n_samples) {
    j["delta_dc"] = {{"estimate", r.delta_dc}, {"std_error", r.delta_dc_std_error}, {"samples", r.n_samples}, {"kind", "surrogate"}};
  }
  auto& contrib = j["contributions"] = nlohmann::json::object();
  for (const auto& w : r.contributions)
    contrib[c.edge_label(w.edge)] = {{"delta_w", w.delta_w}, {"mass", w.mass}, {"contribution", w.contribution}};
  return j;
}

}  // namespace pcaai
