#pragma once

// Structural checks: smoothness, decomposability and determinism.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pcaai/circuit.hpp"

namespace pcaai {

enum class DeterminismCheck { Exhaustive, Syntactic };

inline const char* to_string(DeterminismCheck c) noexcept {
  return c == DeterminismCheck::Exhaustive ? "exhaustive" : "syntactic";
}

struct Violation {
  std::int64_t unit = 0;
  std::string reason;
};

struct StructureReport {
  bool smooth = true;
  bool decomposable = true;
  bool deterministic = true;
  DeterminismCheck determinism_check = DeterminismCheck::Exhaustive;
  std::vector<Violation> violations;
};

// Joint state spaces up to this size are checked for determinism by enumeration.
inline constexpr double kExhaustiveStateLimit = 1 << 20;

namespace detail {

// Per-variable set of states under which a unit can be positive. Variables
// absent from the map are unrestricted.
using SupportMap = std::map<VarId, std::vector<bool>>;

inline std::vector<SupportMap> indicator_supports(const Circuit& c) {
  std::vector<SupportMap> support(c.num_units());
  for (UnitIndex u : c.topological_order()) {
    const Unit& unit = c.unit(u);
    SupportMap& s = support[u];
    switch (unit.kind) {
      case UnitKind::Indicator: {
        std::vector<bool> states(static_cast<std::size_t>(c.cardinality(unit.var)), false);
        states[static_cast<std::size_t>(unit.value)] = true;
        s.emplace(unit.var, std::move(states));
        break;
      }
      case UnitKind::Product:
        for (UnitIndex ch : unit.children)
          for (const auto& [var, states] : support[ch]) {
            auto [it, inserted] = s.emplace(var, states);
            if (!inserted)
              for (std::size_t k = 0; k < states.size(); ++k) it->second[k] = it->second[k] && states[k];
          }
        break;
      case UnitKind::Sum:
        for (const auto& [var, states] : support[unit.children[0]]) {
          std::vector<bool> merged = states;
          bool everywhere = true;
          for (std::size_t i = 1; i < unit.children.size() && everywhere; ++i) {
            auto it = support[unit.children[i]].find(var);
            if (it == support[unit.children[i]].end()) {
              everywhere = false;
              break;
            }
            for (std::size_t k = 0; k < merged.size(); ++k) merged[k] = merged[k] || it->second[k];
          }
          if (everywhere) s.emplace(var, std::move(merged));
        }
        break;
    }
  }
  return support;
}

// True if some variable splits the sum's children into pairwise disjoint supports.
inline bool separated_by_some_variable(const Unit& sum, const std::vector<SupportMap>& support) {
  for (const auto& [var, first] : support[sum.children[0]]) {
    std::vector<int> owners(first.size(), 0);
    bool ok = true;
    for (UnitIndex ch : sum.children) {
      auto it = support[ch].find(var);
      if (it == support[ch].end()) {
        ok = false;
        break;
      }
      for (std::size_t k = 0; k < it->second.size(); ++k)
        if (it->second[k] && ++owners[k] > 1) ok = false;
    }
    if (ok) return true;
  }
  return false;
}

}  // namespace detail

inline StructureReport validate(const Circuit& c) {
  StructureReport report;
  for (UnitIndex u = 0; u < c.num_units(); ++u) {
    const Unit& unit = c.unit(u);
    if (unit.kind == UnitKind::Sum) {
      for (UnitIndex ch : unit.children)
        if (c.scope(ch) != c.scope(unit.children[0])) {
          report.smooth = false;
          report.violations.push_back({unit.id, "not smooth: children have different scopes"});
          break;
        }
    } else if (unit.kind == UnitKind::Product) {
      std::vector<int> seen(c.num_variables(), 0);
      bool overlap = false;
      for (UnitIndex ch : unit.children)
        for (VarId v : c.scope(ch))
          if (seen[static_cast<std::size_t>(v)]++) overlap = true;
      if (overlap) {
        report.decomposable = false;
        report.violations.push_back({unit.id, "not decomposable: children share variables"});
      }
    }
  }

  if (c.joint_state_count() <= kExhaustiveStateLimit) {
    report.determinism_check = DeterminismCheck::Exhaustive;
    std::vector<char> flagged(c.num_units(), 0);
    for_each_state(c, [&](const Assignment& x) {
      const auto values = evaluate_units(c, x);
      for (UnitIndex u = 0; u < c.num_units(); ++u) {
        const Unit& unit = c.unit(u);
        if (unit.kind != UnitKind::Sum || flagged[u]) continue;
        int positive = 0;
        for (UnitIndex ch : unit.children) positive += values[ch] > 0.0;
        if (positive > 1) flagged[u] = 1;
      }
    });
    for (UnitIndex u = 0; u < c.num_units(); ++u)
      if (flagged[u]) {
        report.deterministic = false;
        report.violations.push_back({c.unit(u).id, "not deterministic: several children positive for one state"});
      }
  } else {
    report.determinism_check = DeterminismCheck::Syntactic;
    const auto support = detail::indicator_supports(c);
    for (UnitIndex u = 0; u < c.num_units(); ++u) {
      const Unit& unit = c.unit(u);
      if (unit.kind != UnitKind::Sum || unit.children.size() < 2) continue;
      if (!detail::separated_by_some_variable(unit, support)) {
        report.deterministic = false;
        report.violations.push_back({unit.id, "determinism unverified: no variable separates the children's indicator supports"});
      }
    }
  }
  return report;
}

}  // namespace pcaai
