#pragma once

// Random circuit generators over binary variables. Both produce smooth,
// decomposable, tree-shaped circuits with Dirichlet(1) sum weights and are
// reproducible per seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "pcaai/circuit.hpp"
#include "pcaai/rng.hpp"

namespace pcaai {

namespace detail {

class CircuitBuilder {
 public:
  CircuitBuilder(std::size_t n_vars, std::uint64_t seed) : n_vars_(n_vars), rng_(seed) {}

  std::int64_t indicator(VarId var, int value) {
    UnitSpec u;
    u.id = next_id_++;
    u.kind = UnitKind::Indicator;
    u.var = var;
    u.value = value;
    units_.push_back(std::move(u));
    return units_.back().id;
  }

  std::int64_t product(std::vector<std::int64_t> children) {
    UnitSpec u;
    u.id = next_id_++;
    u.kind = UnitKind::Product;
    u.children = std::move(children);
    units_.push_back(std::move(u));
    return units_.back().id;
  }

  std::int64_t sum(std::vector<std::int64_t> children) {
    UnitSpec u;
    u.id = next_id_++;
    u.kind = UnitKind::Sum;
    u.weights = dirichlet(children.size());
    u.children = std::move(children);
    units_.push_back(std::move(u));
    return units_.back().id;
  }

  // Sum over the two indicators of a binary variable.
  std::int64_t univariate(VarId var) { return sum({indicator(var, 0), indicator(var, 1)}); }

  std::vector<double> dirichlet(std::size_t k) {
    std::vector<double> w(k);
    double total = 0.0;
    for (double& x : w) {
      x = -std::log(1.0 - rng_.uniform());  // Exp(1) = Gamma(1, 1)
      total += x;
    }
    for (double& x : w) x /= total;
    return w;
  }

  // Random balanced two-way split.
  std::pair<std::vector<VarId>, std::vector<VarId>> split(std::vector<VarId> scope) {
    shuffle(scope);
    const auto half = static_cast<std::ptrdiff_t>(scope.size() / 2);
    std::vector<VarId> a(scope.begin(), scope.begin() + half), b(scope.begin() + half, scope.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return {std::move(a), std::move(b)};
  }

  void shuffle(std::vector<VarId>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng_() % i]);
  }

  SplitMix64& rng() { return rng_; }

  Circuit finish(std::int64_t root) {
    std::vector<Variable> vars;
    for (std::size_t i = 0; i < n_vars_; ++i) vars.push_back({static_cast<VarId>(i), 2});
    return Circuit(std::move(vars), units_, root);
  }

 private:
  std::size_t n_vars_;
  SplitMix64 rng_;
  std::vector<UnitSpec> units_;
  std::int64_t next_id_ = 0;
};

inline std::vector<VarId> all_vars(std::size_t n) {
  std::vector<VarId> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace detail

// Alternating sum/product layers: `depth` sum layers above fully factorized
// leaf blocks. Every product splits its scope into two balanced random halves,
// so depth d needs n_vars >= 2^d.
inline Circuit generate_random_tree_pc(std::uint64_t seed, int n_vars, int depth, int sum_fanout) {
  if (n_vars < 2) throw DomainError("generate_random_tree_pc: n_vars must be >= 2");
  if (depth < 1) throw DomainError("generate_random_tree_pc: depth must be >= 1");
  if (sum_fanout < 1) throw DomainError("generate_random_tree_pc: sum_fanout must be >= 1");
  if (depth >= 31 || (std::int64_t{1} << depth) > n_vars)
    throw DomainError("generate_random_tree_pc: depth " + std::to_string(depth) + " needs at least " + std::to_string(depth >= 31 ? -1 : (1 << depth)) + " variables");

  detail::CircuitBuilder b(static_cast<std::size_t>(n_vars), seed);

  // Children a product contributes for one half of its scope.
  auto block = [&](auto&& self, const std::vector<VarId>& scope, int d, std::vector<std::int64_t>& out) -> void {
    if (d == 0 || scope.size() == 1) {
      for (VarId v : scope) out.push_back(b.univariate(v));
      return;
    }
    std::vector<std::int64_t> products;
    for (int k = 0; k < sum_fanout; ++k) {
      auto [lhs, rhs] = b.split(scope);
      std::vector<std::int64_t> factors;
      self(self, lhs, d - 1, factors);
      self(self, rhs, d - 1, factors);
      products.push_back(b.product(std::move(factors)));
    }
    out.push_back(b.sum(std::move(products)));
  };

  std::vector<std::int64_t> root;
  block(block, detail::all_vars(static_cast<std::size_t>(n_vars)), depth, root);
  return b.finish(root.front());
}

// Deterministic variant: sums condition on one variable (child k carries the
// indicator of state k), occasionally interleaved with product splits.
// `depth` bounds the number of conditioning levels before the remaining scope
// is fully factorized.
inline Circuit generate_random_deterministic_pc(std::uint64_t seed, int n_vars, int depth) {
  if (n_vars < 1) throw DomainError("generate_random_deterministic_pc: n_vars must be >= 1");
  if (depth < 0) throw DomainError("generate_random_deterministic_pc: depth must be >= 0");

  detail::CircuitBuilder b(static_cast<std::size_t>(n_vars), seed);

  auto node = [&](auto&& self, std::vector<VarId> scope, int d) -> std::int64_t {
    if (scope.size() == 1) return b.univariate(scope.front());
    if (d == 0) {
      std::vector<std::int64_t> factors;
      for (VarId v : scope) factors.push_back(b.univariate(v));
      return b.product(std::move(factors));
    }
    if (scope.size() >= 4 && b.rng().uniform() < 0.3) {
      auto [lhs, rhs] = b.split(scope);
      return b.product({self(self, lhs, d - 1), self(self, rhs, d - 1)});
    }
    const std::size_t pick = b.rng()() % scope.size();
    const VarId v = scope[pick];
    scope.erase(scope.begin() + static_cast<std::ptrdiff_t>(pick));
    std::vector<std::int64_t> branches;
    for (int state = 0; state < 2; ++state) branches.push_back(b.product({b.indicator(v, state), self(self, scope, d - 1)}));
    return b.sum(std::move(branches));
  };

  const std::int64_t root = node(node, detail::all_vars(static_cast<std::size_t>(n_vars)), depth);
  return b.finish(root);
}

}  // namespace pcaai
