#pragma once

// Structural analytics at 64-bit precision: induced-tree masses, the smallest
// positive root value, and ancestral sampling.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pcaai/circuit.hpp"
#include "pcaai/parallel.hpp"
#include "pcaai/rng.hpp"

namespace pcaai {

// Total weight of the induced trees containing each edge, i.e. sum over trees
// T that use edge w of the product of T's weights. With every indicator at one
// a unit's value is the total mass of the sub-trees below it, and the mass
// flowing into it from above is its partial derivative; an edge's tree mass is
// (mass above the sum) * w * (mass below the child).
inline std::vector<double> weight_tree_masses(const Circuit& c) {
  const auto& order = c.topological_order();
  std::vector<double> up(c.num_units(), 0.0);
  for (UnitIndex u : order) {
    const Unit& unit = c.unit(u);
    switch (unit.kind) {
      case UnitKind::Indicator: up[u] = 1.0; break;
      case UnitKind::Sum:
        for (std::size_t i = 0; i < unit.children.size(); ++i) up[u] += unit.weights[i] * up[unit.children[i]];
        break;
      case UnitKind::Product:
        up[u] = 1.0;
        for (UnitIndex ch : unit.children) up[u] *= up[ch];
        break;
    }
  }

  std::vector<double> down(c.num_units(), 0.0);
  down[c.root()] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Unit& unit = c.unit(*it);
    const double d = down[*it];
    if (d == 0.0) continue;
    if (unit.kind == UnitKind::Sum) {
      for (std::size_t i = 0; i < unit.children.size(); ++i) down[unit.children[i]] += d * unit.weights[i];
    } else if (unit.kind == UnitKind::Product) {
      for (std::size_t i = 0; i < unit.children.size(); ++i) {
        double others = d;
        for (std::size_t j = 0; j < unit.children.size(); ++j)
          if (j != i) others *= up[unit.children[j]];
        down[unit.children[i]] += others;
      }
    }
  }

  std::vector<double> mass(c.num_edges());
  for (std::size_t e = 0; e < c.num_edges(); ++e) {
    const EdgeId& id = c.edges()[e];
    mass[e] = down[id.sum] * c.weight(e) * up[c.edge_child(e)];
  }
  return mass;
}

inline double weight_tree_mass(const Circuit& c, std::size_t edge) {
  if (edge >= c.num_edges()) throw DomainError("unknown edge " + std::to_string(edge));
  return weight_tree_masses(c)[edge];
}

// MV: the smallest positive root value, from a pass with every indicator at one,
// sums replaced by a min over their positive weighted children. For
// deterministic circuits this is the smallest positive p(x).
inline double min_positive_value(const Circuit& c) {
  std::vector<double> v(c.num_units(), 0.0);
  for (UnitIndex u : c.topological_order()) {
    const Unit& unit = c.unit(u);
    switch (unit.kind) {
      case UnitKind::Indicator: v[u] = 1.0; break;
      case UnitKind::Sum: {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < unit.children.size(); ++i) {
          const double term = unit.weights[i] * v[unit.children[i]];
          if (term > 0.0) best = std::min(best, term);
        }
        v[u] = std::isinf(best) ? 0.0 : best;
        break;
      }
      case UnitKind::Product:
        v[u] = 1.0;
        for (UnitIndex ch : unit.children) v[u] *= v[ch];
        break;
    }
  }
  if (v[c.root()] <= 0.0) throw DomainError("circuit has no positive value (all-zero circuit)");
  return v[c.root()];
}

// Ancestral sampling: one child per sum (by weight), every child of a product,
// and the indicator's state at leaves. Sample i uses its own stream derived
// from (seed, i), so results do not depend on the thread count.
inline std::vector<Assignment> sample(const Circuit& c, std::uint64_t seed, std::size_t n) {
  for (std::size_t v = 0; v < c.num_variables(); ++v)
    if (!std::binary_search(c.scope(c.root()).begin(), c.scope(c.root()).end(), static_cast<VarId>(v)))
      throw DomainError("variable " + std::to_string(v) + " is outside the root scope and would stay unassigned");

  std::vector<Assignment> out(n);
  parallel_for(n, [&](std::size_t i) {
    SplitMix64 rng = derive_stream(seed, i);
    Assignment x(c.num_variables(), kUnobserved);
    std::vector<UnitIndex> stack{c.root()};
    while (!stack.empty()) {
      const Unit& unit = c.unit(stack.back());
      stack.pop_back();
      switch (unit.kind) {
        case UnitKind::Indicator: {
          int& slot = x[static_cast<std::size_t>(unit.var)];
          if (slot != kUnobserved) throw DomainError("variable " + std::to_string(unit.var) + " assigned twice (circuit not decomposable)");
          slot = unit.value;
          break;
        }
        case UnitKind::Product:
          for (auto it = unit.children.rbegin(); it != unit.children.rend(); ++it) stack.push_back(*it);
          break;
        case UnitKind::Sum: {
          const double u = rng.uniform();
          double acc = 0.0;
          std::size_t pick = unit.children.size() - 1;
          for (std::size_t k = 0; k < unit.children.size(); ++k) {
            acc += unit.weights[k];
            if (u < acc) {
              pick = k;
              break;
            }
          }
          while (unit.weights[pick] == 0.0 && pick > 0) --pick;  // never take a zero-weight edge through round-off
          stack.push_back(unit.children[pick]);
          break;
        }
      }
    }
    for (std::size_t v = 0; v < x.size(); ++v)
      if (x[v] == kUnobserved) throw DomainError("variable " + std::to_string(v) + " left unassigned by sample " + std::to_string(i));
    out[i] = std::move(x);
  });
  return out;
}

}  // namespace pcaai
