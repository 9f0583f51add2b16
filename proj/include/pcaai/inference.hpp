#pragma once

// MAR and MAP evaluation at a given resolution, with every multiplication
// routed through a per-site exact/AAI plan, plus comparison metrics against a
// 64-bit exact baseline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pcaai/circuit.hpp"
#include "pcaai/custom_float.hpp"
#include "pcaai/parallel.hpp"

namespace pcaai {

enum class MulMode : std::uint8_t { Exact, AAI };

inline const char* to_string(MulMode m) noexcept { return m == MulMode::Exact ? "exact" : "aai"; }

// How a reduced-precision root value is turned into a log2 probability.
// Linear decodes the value and takes its logarithm. Mitchell reads the bit
// pattern as a fixed-point logarithm (exponent + mantissa fraction), which is
// what a log-domain consumer of AAI hardware sees.
enum class LogReadout { Linear, Mitchell };

inline const char* to_string(LogReadout r) noexcept { return r == LogReadout::Linear ? "linear" : "mitchell"; }

inline double read_log2(const CustomFloat& v, const FloatConfig& cfg, LogReadout readout) {
  return readout == LogReadout::Linear ? log2_value(v, cfg) : mitchell_log2(v, cfg);
}

// One mode per multiplier site, in the circuit's site order (weight sites,
// then product sites).
class MultiplierPlan {
 public:
  MultiplierPlan() = default;
  MultiplierPlan(std::size_t weight_sites, std::size_t product_sites, MulMode mode = MulMode::Exact)
      : modes_(weight_sites + product_sites, mode), weight_sites_(weight_sites) {}

  static MultiplierPlan all_exact(const Circuit& c) { return {c.num_weight_sites(), c.num_product_sites(), MulMode::Exact}; }
  static MultiplierPlan all_aai(const Circuit& c) { return {c.num_weight_sites(), c.num_product_sites(), MulMode::AAI}; }

  std::size_t size() const noexcept { return modes_.size(); }
  std::size_t num_weight_sites() const noexcept { return weight_sites_; }
  MulMode operator[](std::size_t site) const { return modes_[site]; }
  MulMode mode(std::size_t site) const { return modes_.at(site); }
  void set(std::size_t site, MulMode m) { modes_.at(site) = m; }

  std::size_t count(MulMode m) const { return static_cast<std::size_t>(std::count(modes_.begin(), modes_.end(), m)); }

  bool fits(const Circuit& c) const noexcept {
    return weight_sites_ == c.num_weight_sites() && modes_.size() == c.num_sites();
  }

  friend bool operator==(const MultiplierPlan&, const MultiplierPlan&) = default;

 private:
  std::vector<MulMode> modes_;
  std::size_t weight_sites_ = 0;
};

struct OpCounts {
  std::uint64_t underflows = 0;
  std::uint64_t overflows = 0;

  void note(const MultResult& r) noexcept {
    underflows += r.underflowed;
    overflows += r.overflowed;
  }
  OpCounts& operator+=(const OpCounts& o) noexcept {
    underflows += o.underflows;
    overflows += o.overflows;
    return *this;
  }
};

struct MapResult {
  Assignment assignment;
  double log2_value = -INFINITY;
  std::vector<int> trace;  // chosen child position per sum unit (by unit index), -1 elsewhere
};

// Reusable evaluator for one (circuit, cfg, plan): weights are quantized once.
class Evaluator {
 public:
  Evaluator(const Circuit& c, const FloatConfig& cfg, MultiplierPlan plan) : c_(&c), cfg_(cfg), plan_(std::move(plan)) {
    cfg_.validate();
    if (!plan_.fits(c)) throw DomainError("multiplier plan has " + std::to_string(plan_.size()) + " sites, circuit has " + std::to_string(c.num_sites()));
    weights_.reserve(c.num_edges());
    for (std::size_t e = 0; e < c.num_edges(); ++e) {
      const MultResult q = encode(c.weight(e), cfg_);
      weight_counts_.note(q);
      weights_.push_back(q.value);
    }
    one_ = encode(1.0, cfg_).value;
  }

  const Circuit& circuit() const noexcept { return *c_; }
  const FloatConfig& config() const noexcept { return cfg_; }
  const MultiplierPlan& plan() const noexcept { return plan_; }
  const CustomFloat& quantized_weight(std::size_t edge) const { return weights_.at(edge); }
  // Saturation events while quantizing the weights (once per evaluator).
  const OpCounts& weight_counts() const noexcept { return weight_counts_; }

  // Root value; unobserved variables (kUnobserved) leave their indicators at one.
  CustomFloat evaluate(std::span<const int> x, OpCounts* counts = nullptr) const {
    std::vector<CustomFloat> v;
    upward(x, v, nullptr, counts);
    return v[c_->root()];
  }

  // Max-product pass and back-tracking. Observed variables clamp their indicators.
  MapResult map(std::span<const int> evidence, OpCounts* counts = nullptr) const {
    std::vector<CustomFloat> v;
    MapResult r;
    r.trace.assign(c_->num_units(), -1);
    upward(evidence, v, &r.trace, counts);
    r.log2_value = log2_value(v[c_->root()], cfg_);
    r.assignment = backtrack(r.trace);
    return r;
  }

  // Value of the induced tree selected by `trace` under x, with the same
  // arithmetic as the max pass.
  CustomFloat evaluate_tree(std::span<const int> trace, std::span<const int> x) const {
    check_assignment(x);
    std::vector<CustomFloat> v(c_->num_units());
    for (UnitIndex u : c_->topological_order()) {
      const Unit& unit = c_->unit(u);
      if (unit.kind == UnitKind::Sum) {
        const auto i = static_cast<std::size_t>(trace[u]);
        v[u] = mul(c_->edge_offset(u) + i, weights_[c_->edge_offset(u) + i], v[unit.children[i]], nullptr).value;
      } else {
        v[u] = node(u, x, v, nullptr);
      }
    }
    return v[c_->root()];
  }

 private:
  void check_assignment(std::span<const int> x) const {
    if (x.size() != c_->num_variables())
      throw DomainError("assignment has " + std::to_string(x.size()) + " entries for " + std::to_string(c_->num_variables()) + " variables");
    for (std::size_t v = 0; v < x.size(); ++v)
      if (x[v] < kUnobserved || x[v] >= c_->variables()[v].cardinality)
        throw DomainError("variable " + std::to_string(v) + " has no state " + std::to_string(x[v]));
  }

  MultResult mul(std::size_t site, const CustomFloat& a, const CustomFloat& b, OpCounts* counts) const {
    const MultResult r = plan_[site] == MulMode::Exact ? exact_mul(a, b, cfg_) : aai_mul(a, b, cfg_);
    if (counts) counts->note(r);
    return r;
  }

  // Indicator or product value.
  CustomFloat node(UnitIndex u, std::span<const int> x, const std::vector<CustomFloat>& v, OpCounts* counts) const {
    const Unit& unit = c_->unit(u);
    if (unit.kind == UnitKind::Indicator) return indicator_on(unit, x) ? one_ : CustomFloat::zero();
    CustomFloat acc = v[unit.children[0]];
    const std::size_t base = c_->product_site_offset(u);
    for (std::size_t j = 1; j < unit.children.size(); ++j) acc = mul(base + j - 1, acc, v[unit.children[j]], counts).value;
    return acc;
  }

  void upward(std::span<const int> x, std::vector<CustomFloat>& v, std::vector<int>* trace, OpCounts* counts) const {
    check_assignment(x);
    v.assign(c_->num_units(), CustomFloat::zero());
    for (UnitIndex u : c_->topological_order()) {
      const Unit& unit = c_->unit(u);
      if (unit.kind != UnitKind::Sum) {
        v[u] = node(u, x, v, counts);
        continue;
      }
      const std::size_t base = c_->edge_offset(u);
      if (!trace) {
        CustomFloat acc = CustomFloat::zero();
        for (std::size_t i = 0; i < unit.children.size(); ++i) {
          const MultResult term = mul(base + i, weights_[base + i], v[unit.children[i]], counts);
          const MultResult s = exact_add(acc, term.value, cfg_);
          if (counts) counts->note(s);
          acc = s.value;
        }
        v[u] = acc;
      } else {
        CustomFloat best = mul(base, weights_[base], v[unit.children[0]], counts).value;
        int arg = 0;
        for (std::size_t i = 1; i < unit.children.size(); ++i) {
          const CustomFloat term = mul(base + i, weights_[base + i], v[unit.children[i]], counts).value;
          if (term > best) {
            best = term;
            arg = static_cast<int>(i);
          }
        }
        v[u] = best;
        (*trace)[u] = arg;
      }
    }
  }

  // Fig. 2b: follow the recorded choice at every sum, take every branch of a
  // product, and read the state off each reached indicator.
  Assignment backtrack(const std::vector<int>& trace) const {
    Assignment a(c_->num_variables(), kUnobserved);
    std::vector<UnitIndex> stack{c_->root()};
    while (!stack.empty()) {
      const Unit& unit = c_->unit(stack.back());
      const UnitIndex u = stack.back();
      stack.pop_back();
      switch (unit.kind) {
        case UnitKind::Indicator: {
          int& slot = a[static_cast<std::size_t>(unit.var)];
          if (slot != kUnobserved && slot != unit.value) throw DomainError("MAP back-tracking reached two states of variable " + std::to_string(unit.var));
          slot = unit.value;
          break;
        }
        case UnitKind::Product:
          for (UnitIndex ch : unit.children) stack.push_back(ch);
          break;
        case UnitKind::Sum: stack.push_back(unit.children[static_cast<std::size_t>(trace[u])]); break;
      }
    }
    for (VarId v : c_->scope(c_->root()))
      if (a[static_cast<std::size_t>(v)] == kUnobserved) throw DomainError("MAP back-tracking left variable " + std::to_string(v) + " unassigned");
    return a;
  }

  const Circuit* c_;
  FloatConfig cfg_;
  MultiplierPlan plan_;
  std::vector<CustomFloat> weights_;
  CustomFloat one_;
  OpCounts weight_counts_;
};

// Root value for a complete assignment; flags report any saturation on the way.
inline MultResult eval_mar(const Circuit& c, std::span<const int> x, const FloatConfig& cfg, const MultiplierPlan& plan) {
  for (VarId v : c.scope(c.root()))
    if (static_cast<std::size_t>(v) < x.size() && x[static_cast<std::size_t>(v)] == kUnobserved)
      throw DomainError("eval_mar needs a complete assignment; variable " + std::to_string(v) + " is unobserved");
  const Evaluator ev(c, cfg, plan);
  OpCounts counts = ev.weight_counts();
  const CustomFloat root = ev.evaluate(x, &counts);
  return {root, counts.underflows > 0, counts.overflows > 0};
}

inline MapResult eval_map(const Circuit& c, std::span<const int> evidence, const FloatConfig& cfg, const MultiplierPlan& plan) {
  return Evaluator(c, cfg, plan).map(evidence);
}

enum class QueryKind { Mar, Map, Both };

struct QueryOptions {
  QueryKind queries = QueryKind::Both;
  double log2_epsilon = 0.0;                // added to every approximate log2 probability
  LogReadout readout = LogReadout::Linear;  // how the approximate root is read
  FloatConfig baseline = baseline_config(); // reference resolution (all-Exact plan)
};

struct InstanceFailure {
  std::size_t instance = 0;
  std::string reason;
};

struct QueryMetrics {
  double mean_log_error = 0.0;  // NaN when no MAR instance was scored
  double map_accuracy = 0.0;    // NaN when MAP was not evaluated
  std::uint64_t underflow_count = 0;
  std::uint64_t overflow_count = 0;
  std::size_t n_mar = 0;  // instances contributing to mean_log_error
  std::size_t n_map = 0;
  std::vector<InstanceFailure> failures;  // instances excluded because the baseline is zero
};

// MAR: mean over complete rows of |log2 p64(x) - (log2 p~(x) + log2 eps)|,
// skipping rows whose baseline value is zero. MAP: each row is evidence
// (kUnobserved entries are free); accuracy is the share of rows whose
// assignment equals the baseline's.
inline QueryMetrics compare_queries(const Circuit& c, const std::vector<Assignment>& data, const FloatConfig& cfg,
                                    const MultiplierPlan& plan, const QueryOptions& opt = {}) {
  if (data.empty()) throw DomainError("compare_queries needs at least one instance");
  const Evaluator approx(c, cfg, plan);
  const Evaluator base(c, opt.baseline, MultiplierPlan::all_exact(c));
  const bool do_mar = opt.queries != QueryKind::Map;
  const bool do_map = opt.queries != QueryKind::Mar;

  struct Row {
    bool scored = false;
    double error = 0.0;
    std::string failure;
    bool map_scored = false;
    bool map_match = false;
    OpCounts counts;
  };
  std::vector<Row> rows(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    Row& r = rows[i];
    const Assignment& x = data[i];
    if (do_mar && std::find(x.begin(), x.end(), kUnobserved) == x.end()) {
      const CustomFloat p64 = base.evaluate(x);
      const CustomFloat p = approx.evaluate(x, &r.counts);
      if (p64.is_zero) {
        r.failure = "baseline value is zero";
      } else {
        r.scored = true;
        r.error = std::abs(log2_value(p64, opt.baseline) - (read_log2(p, cfg, opt.readout) + opt.log2_epsilon));
      }
    }
    if (do_map) {
      const MapResult ref = base.map(x);
      const MapResult got = approx.map(x, &r.counts);
      r.map_scored = true;
      r.map_match = ref.assignment == got.assignment;
    }
  });

  QueryMetrics m;
  m.underflow_count = approx.weight_counts().underflows;
  m.overflow_count = approx.weight_counts().overflows;
  double total = 0.0;
  std::size_t matches = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    m.underflow_count += r.counts.underflows;
    m.overflow_count += r.counts.overflows;
    if (r.scored) {
      total += r.error;
      ++m.n_mar;
    }
    if (!r.failure.empty()) m.failures.push_back({i, r.failure});
    if (r.map_scored) {
      ++m.n_map;
      matches += r.map_match;
    }
  }
  m.mean_log_error = m.n_mar ? total / static_cast<double>(m.n_mar) : std::numeric_limits<double>::quiet_NaN();
  m.map_accuracy = m.n_map ? static_cast<double>(matches) / static_cast<double>(m.n_map) : std::numeric_limits<double>::quiet_NaN();
  return m;
}

}  // namespace pcaai
