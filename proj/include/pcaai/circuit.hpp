#pragma once

// Probabilistic circuit data model: an immutable DAG of sum, product and
// indicator units over discrete variables.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iterator>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pcaai/error.hpp"

namespace pcaai {

enum class UnitKind { Sum, Product, Indicator };

inline const char* to_string(UnitKind k) noexcept {
  switch (k) {
    case UnitKind::Sum: return "sum";
    case UnitKind::Product: return "product";
    case UnitKind::Indicator: return "indicator";
  }
  return "?";
}

using UnitIndex = std::uint32_t;
using VarId = int;

// A complete or partial assignment: one state per variable id, kUnobserved for
// variables that are marginalized (MAR) or free (MAP).
using Assignment = std::vector<int>;
inline constexpr int kUnobserved = -1;

struct Variable {
  VarId id = 0;
  int cardinality = 2;
};

// Input description of a unit; children are referenced by unit id.
struct UnitSpec {
  std::int64_t id = 0;
  UnitKind kind = UnitKind::Indicator;
  std::vector<std::int64_t> children;
  std::vector<double> weights;
  VarId var = -1;
  int value = -1;
};

// Stored unit; children are indices into Circuit::units().
struct Unit {
  std::int64_t id = 0;
  UnitKind kind = UnitKind::Indicator;
  std::vector<UnitIndex> children;
  std::vector<double> weights;
  VarId var = -1;
  int value = -1;
};

// A weighted (sum unit, child position) edge.
struct EdgeId {
  UnitIndex sum = 0;
  std::uint32_t child = 0;
  friend auto operator<=>(const EdgeId&, const EdgeId&) = default;
};

inline constexpr double kWeightSumTolerance = 1e-12;

class Circuit {
 public:
  Circuit(std::vector<Variable> variables, const std::vector<UnitSpec>& units, std::int64_t root_id) {
    build_variables(std::move(variables));
    build_units(units);
    auto root = find(root_id);
    if (!root) throw CircuitError("root id does not name a unit", root_id);
    root_ = *root;
    build_order();
    check_reachability();
    build_scopes();
    build_sites();
  }

  const std::vector<Variable>& variables() const noexcept { return variables_; }
  std::size_t num_variables() const noexcept { return variables_.size(); }
  int cardinality(VarId v) const { return variables_.at(static_cast<std::size_t>(v)).cardinality; }

  const std::vector<Unit>& units() const noexcept { return units_; }
  const Unit& unit(UnitIndex i) const { return units_.at(i); }
  std::size_t num_units() const noexcept { return units_.size(); }
  UnitIndex root() const noexcept { return root_; }

  std::optional<UnitIndex> find(std::int64_t id) const {
    auto it = index_of_.find(id);
    if (it == index_of_.end()) return std::nullopt;
    return it->second;
  }

  // Children before parents; ties broken by ascending unit id.
  const std::vector<UnitIndex>& topological_order() const noexcept { return order_; }

  // Sorted variable ids in the unit's scope.
  const std::vector<VarId>& scope(UnitIndex u) const { return scopes_.at(u); }

  // Weighted edges in (sum unit id, child position) order. The position of an
  // edge in this list is its edge index.
  const std::vector<EdgeId>& edges() const noexcept { return edges_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  std::size_t edge_index(EdgeId e) const { return edge_offset_.at(e.sum) + e.child; }
  std::size_t edge_offset(UnitIndex sum) const { return edge_offset_.at(sum); }
  double weight(std::size_t edge) const {
    const EdgeId& e = edges_.at(edge);
    return units_[e.sum].weights[e.child];
  }
  UnitIndex edge_child(std::size_t edge) const {
    const EdgeId& e = edges_.at(edge);
    return units_[e.sum].children[e.child];
  }
  std::string edge_label(std::size_t edge) const {
    const EdgeId& e = edges_.at(edge);
    return std::to_string(units_[e.sum].id) + ":" + std::to_string(e.child);
  }
  std::optional<std::size_t> find_edge(std::int64_t sum_id, std::uint32_t child) const {
    auto u = find(sum_id);
    if (!u || units_[*u].kind != UnitKind::Sum || child >= units_[*u].children.size()) return std::nullopt;
    return edge_offset_[*u] + child;
  }

  // Multiplier sites: one per weighted edge (indices [0, num_edges)), followed
  // by one per binary multiplication of each product unit (k children give
  // k - 1 sites, folded left to right).
  std::size_t num_weight_sites() const noexcept { return edges_.size(); }
  std::size_t num_product_sites() const noexcept { return num_product_sites_; }
  std::size_t num_sites() const noexcept { return edges_.size() + num_product_sites_; }
  std::size_t product_site_offset(UnitIndex product) const { return product_offset_.at(product); }

  // Number of complete states, saturating at +inf for huge spaces.
  double joint_state_count() const noexcept {
    double n = 1.0;
    for (const auto& v : variables_) n *= v.cardinality;
    return n;
  }

 private:
  void build_variables(std::vector<Variable> variables) {
    std::sort(variables.begin(), variables.end(), [](const Variable& a, const Variable& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < variables.size(); ++i) {
      if (variables[i].id != static_cast<VarId>(i)) throw CircuitError("variable ids must be dense 0..d-1 (missing or duplicate id " + std::to_string(i) + ")");
      if (variables[i].cardinality < 2) throw CircuitError("variable " + std::to_string(i) + " has cardinality < 2");
    }
    variables_ = std::move(variables);
  }

  void build_units(const std::vector<UnitSpec>& specs) {
    if (specs.empty()) throw CircuitError("circuit has no units");
    std::vector<const UnitSpec*> sorted;
    sorted.reserve(specs.size());
    for (const auto& s : specs) sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (i > 0 && sorted[i]->id == sorted[i - 1]->id) throw CircuitError("duplicate unit id", sorted[i]->id);
      index_of_.emplace(sorted[i]->id, static_cast<UnitIndex>(i));
    }
    units_.reserve(sorted.size());
    for (const UnitSpec* s : sorted) {
      Unit u;
      u.id = s->id;
      u.kind = s->kind;
      switch (s->kind) {
        case UnitKind::Indicator:
          if (!s->children.empty()) throw CircuitError("indicator must not have children", s->id);
          if (s->var < 0 || static_cast<std::size_t>(s->var) >= variables_.size()) throw CircuitError("indicator references unknown variable " + std::to_string(s->var), s->id);
          if (s->value < 0 || s->value >= variables_[static_cast<std::size_t>(s->var)].cardinality)
            throw CircuitError("indicator value " + std::to_string(s->value) + " outside the variable's states", s->id);
          u.var = s->var;
          u.value = s->value;
          break;
        case UnitKind::Product:
          if (s->children.size() < 2) throw CircuitError("product needs at least two children", s->id);
          if (!s->weights.empty()) throw CircuitError("product must not carry weights", s->id);
          break;
        case UnitKind::Sum: {
          if (s->children.empty()) throw CircuitError("sum needs at least one child", s->id);
          if (s->weights.size() != s->children.size()) throw CircuitError("sum has " + std::to_string(s->weights.size()) + " weights for " + std::to_string(s->children.size()) + " children", s->id);
          double total = 0.0;
          for (double w : s->weights) {
            if (!std::isfinite(w) || w < 0.0) throw CircuitError("weights must be finite and non-negative", s->id);
            total += w;
          }
          if (std::abs(total - 1.0) > kWeightSumTolerance) throw CircuitError("weights sum to " + std::to_string(total) + ", not 1", s->id);
          u.weights = s->weights;
          break;
        }
      }
      for (std::int64_t child : s->children) {
        auto it = index_of_.find(child);
        if (it == index_of_.end()) throw CircuitError("dangling child id " + std::to_string(child), s->id);
        u.children.push_back(it->second);
      }
      units_.push_back(std::move(u));
    }
  }

  void build_order() {
    const std::size_t n = units_.size();
    std::vector<std::vector<UnitIndex>> parents(n);
    std::vector<std::size_t> pending(n, 0);
    for (UnitIndex u = 0; u < n; ++u) {
      pending[u] = units_[u].children.size();
      for (UnitIndex c : units_[u].children) parents[c].push_back(u);
    }
    std::priority_queue<UnitIndex, std::vector<UnitIndex>, std::greater<>> ready;
    for (UnitIndex u = 0; u < n; ++u)
      if (pending[u] == 0) ready.push(u);
    order_.reserve(n);
    while (!ready.empty()) {
      const UnitIndex u = ready.top();
      ready.pop();
      order_.push_back(u);
      for (UnitIndex p : parents[u])
        if (--pending[p] == 0) ready.push(p);
    }
    if (order_.size() != n) {
      for (UnitIndex u = 0; u < n; ++u)
        if (pending[u] != 0) throw CircuitError("cyclic reference", units_[u].id);
    }
  }

  void check_reachability() const {
    std::vector<char> seen(units_.size(), 0);
    std::vector<UnitIndex> stack{root_};
    seen[root_] = 1;
    while (!stack.empty()) {
      const UnitIndex u = stack.back();
      stack.pop_back();
      for (UnitIndex c : units_[u].children)
        if (!seen[c]) {
          seen[c] = 1;
          stack.push_back(c);
        }
    }
    for (UnitIndex u = 0; u < units_.size(); ++u)
      if (!seen[u]) throw CircuitError("unit is not reachable from the root", units_[u].id);
  }

  void build_scopes() {
    scopes_.resize(units_.size());
    for (UnitIndex u : order_) {
      const Unit& unit = units_[u];
      if (unit.kind == UnitKind::Indicator) {
        scopes_[u] = {unit.var};
        continue;
      }
      std::vector<VarId> merged;
      for (UnitIndex c : unit.children) {
        std::vector<VarId> next;
        std::set_union(merged.begin(), merged.end(), scopes_[c].begin(), scopes_[c].end(), std::back_inserter(next));
        merged = std::move(next);
      }
      scopes_[u] = std::move(merged);
    }
  }

  void build_sites() {
    edge_offset_.assign(units_.size(), 0);
    product_offset_.assign(units_.size(), 0);
    for (UnitIndex u = 0; u < units_.size(); ++u) {
      if (units_[u].kind != UnitKind::Sum) continue;
      edge_offset_[u] = edges_.size();
      for (std::uint32_t i = 0; i < units_[u].children.size(); ++i) edges_.push_back({u, i});
    }
    for (UnitIndex u = 0; u < units_.size(); ++u) {
      if (units_[u].kind != UnitKind::Product) continue;
      product_offset_[u] = edges_.size() + num_product_sites_;
      num_product_sites_ += units_[u].children.size() - 1;
    }
  }

  std::vector<Variable> variables_;
  std::vector<Unit> units_;
  std::unordered_map<std::int64_t, UnitIndex> index_of_;
  UnitIndex root_ = 0;
  std::vector<UnitIndex> order_;
  std::vector<std::vector<VarId>> scopes_;
  std::vector<EdgeId> edges_;
  std::vector<std::size_t> edge_offset_;
  std::vector<std::size_t> product_offset_;
  std::size_t num_product_sites_ = 0;
};

inline std::vector<UnitIndex> topological_order(const Circuit& c) { return c.topological_order(); }

// Indicator value under a (possibly partial) assignment: unobserved variables
// leave every indicator at one.
inline bool indicator_on(const Unit& u, std::span<const int> x) {
  const int observed = x[static_cast<std::size_t>(u.var)];
  return observed == kUnobserved || observed == u.value;
}

// All unit values at 64-bit precision.
inline std::vector<double> evaluate_units(const Circuit& c, std::span<const int> x) {
  if (x.size() != c.num_variables()) throw DomainError("assignment has " + std::to_string(x.size()) + " entries for " + std::to_string(c.num_variables()) + " variables");
  std::vector<double> v(c.num_units(), 0.0);
  for (UnitIndex u : c.topological_order()) {
    const Unit& unit = c.unit(u);
    switch (unit.kind) {
      case UnitKind::Indicator: v[u] = indicator_on(unit, x) ? 1.0 : 0.0; break;
      case UnitKind::Sum: {
        double s = 0.0;
        for (std::size_t i = 0; i < unit.children.size(); ++i) s += unit.weights[i] * v[unit.children[i]];
        v[u] = s;
        break;
      }
      case UnitKind::Product: {
        double p = v[unit.children[0]];
        for (std::size_t i = 1; i < unit.children.size(); ++i) p *= v[unit.children[i]];
        v[u] = p;
        break;
      }
    }
  }
  return v;
}

inline double evaluate(const Circuit& c, std::span<const int> x) { return evaluate_units(c, x)[c.root()]; }

// Visits every complete state in mixed-radix order (variable 0 fastest).
template <typename Fn>
void for_each_state(const Circuit& c, Fn&& fn) {
  Assignment x(c.num_variables(), 0);
  while (true) {
    fn(std::as_const(x));
    std::size_t v = 0;
    for (; v < x.size(); ++v) {
      if (++x[v] < c.variables()[v].cardinality) break;
      x[v] = 0;
    }
    if (v == x.size()) return;
  }
}

}  // namespace pcaai
