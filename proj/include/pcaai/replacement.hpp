#pragma once

// Greedy replacement of exact multipliers by AAI: rank sites by their share
// of the divergence, replace the cheapest prefix, and trace the resulting
// error/energy trade-off against random replacement.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "pcaai/analytics.hpp"
#include "pcaai/circuit_io.hpp"
#include "pcaai/energy.hpp"
#include "pcaai/error_analysis.hpp"
#include "pcaai/inference.hpp"

namespace pcaai {

enum class Criterion { Det, Dc };

inline const char* to_string(Criterion c) noexcept { return c == Criterion::Det ? "det" : "dc"; }

struct McParams {
  std::size_t samples = 10'000;
  std::uint64_t seed = 0;
};

struct RankOptions {
  std::optional<McParams> mc;          // required for Criterion::Dc and for product sites
  bool include_product_sites = false;  // rank product-unit multiplications too
};

struct ReplacementStep {
  std::size_t site = 0;  // multiplier site; weight sites coincide with edge ids
  double contribution = 0.0;
  double cumulative_contribution = 0.0;
  double cumulative_energy_normalized = 0.0;  // all sites up to here AAI, everything else exact
};

namespace detail {

// E_x[ v_p * d root / d v_p / root * local AAI log2 error ] for every binary
// multiplication of every product unit p, with x drawn from the model.
inline std::vector<double> product_site_contributions(const Circuit& c, const FloatConfig& cfg, const McParams& mc) {
  const auto xs = sample(c, mc.seed, mc.samples);
  const auto& order = c.topological_order();
  std::vector<std::vector<double>> per(xs.size(), std::vector<double>(c.num_product_sites(), 0.0));
  parallel_for(xs.size(), [&](std::size_t i) {
    const auto v = evaluate_units(c, xs[i]);
    const double root = v[c.root()];
    if (root <= 0.0) return;
    std::vector<double> down(c.num_units(), 0.0);
    down[c.root()] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const Unit& unit = c.unit(*it);
      if (unit.kind == UnitKind::Sum) {
        for (std::size_t k = 0; k < unit.children.size(); ++k) down[unit.children[k]] += down[*it] * unit.weights[k];
      } else if (unit.kind == UnitKind::Product) {
        for (std::size_t k = 0; k < unit.children.size(); ++k) {
          double others = down[*it];
          for (std::size_t j = 0; j < unit.children.size(); ++j)
            if (j != k) others *= v[unit.children[j]];
          down[unit.children[k]] += others;
        }
        const double share = v[*it] * down[*it] / root;
        if (share == 0.0) continue;
        CustomFloat acc = encode(v[unit.children[0]], cfg).value;
        for (std::size_t j = 1; j < unit.children.size(); ++j) {
          const CustomFloat b = encode(v[unit.children[j]], cfg).value;
          const CustomFloat exact = exact_mul(acc, b, cfg).value;
          const CustomFloat approx = aai_mul(acc, b, cfg).value;
          const double err = exact.is_zero || approx.is_zero ? 0.0 : log2_value(exact, cfg) - log2_value(approx, cfg);
          per[i][c.product_site_offset(*it) - c.num_weight_sites() + j - 1] = share * std::max(0.0, err);
          acc = exact;
        }
      }
    }
  });
  std::vector<double> mean(c.num_product_sites(), 0.0);
  for (const auto& row : per)
    for (std::size_t s = 0; s < row.size(); ++s) mean[s] += row[s];
  for (double& m : mean) m /= static_cast<double>(xs.size());
  return mean;
}

inline std::vector<ReplacementStep> accumulate(const Circuit& c, const FloatConfig& cfg, std::vector<ReplacementStep> steps) {
  std::stable_sort(steps.begin(), steps.end(), [](const ReplacementStep& a, const ReplacementStep& b) {
    return a.contribution != b.contribution ? a.contribution < b.contribution : a.site < b.site;
  });
  const double exact = exact_mult_power(cfg.exp_bits, cfg.man_bits);
  const double aai = aai_mult_power(cfg.exp_bits, cfg.man_bits);
  const double n = static_cast<double>(c.num_sites());
  double total = exact * n, cumulative = 0.0;
  for (auto& s : steps) {
    cumulative += s.contribution;
    total += aai - exact;
    s.cumulative_contribution = cumulative;
    s.cumulative_energy_normalized = n > 0 ? total / n / baseline_power() : 0.0;
  }
  return steps;
}

}  // namespace detail

// Sites in ascending order of divergence contribution, ties by site id.
// det: delta_w * tree mass. dc: delta_w * Monte-Carlo frequency of the edge
// on the top induced tree.
inline std::vector<ReplacementStep> rank_sites(const Circuit& c, const FloatConfig& cfg, Criterion criterion, const RankOptions& opt = {}) {
  if ((criterion == Criterion::Dc || opt.include_product_sites) && !opt.mc)
    throw DomainError("this ranking needs Monte-Carlo parameters (samples, seed)");
  std::vector<ReplacementStep> steps;
  if (criterion == Criterion::Det) {
    for (const auto& w : delta_det(c, cfg).contributions) steps.push_back({w.edge, w.contribution, 0.0, 0.0});
  } else {
    const AnalysisReport r = delta_nondet_mc(c, cfg, opt.mc->samples, opt.mc->seed);
    for (const auto& w : r.contributions) steps.push_back({w.edge, w.delta_w * r.top_tree_frequency[w.edge], 0.0, 0.0});
  }
  if (opt.include_product_sites) {
    const auto prod = detail::product_site_contributions(c, cfg, *opt.mc);
    for (std::size_t s = 0; s < prod.size(); ++s) steps.push_back({c.num_weight_sites() + s, prod[s], 0.0, 0.0});
  }
  return detail::accumulate(c, cfg, std::move(steps));
}

// Number of ranked sites replaced at a fraction; guards against 0.7 * 10 = 6.999...
inline std::size_t replaced_count(double fraction, std::size_t n) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw DomainError("fraction must be in [0, 1]");
  return std::min(n, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9)));
}

// The first floor(fraction * n) ranked sites become AAI; every other site,
// product multiplications included, stays exact.
inline MultiplierPlan plan(const Circuit& c, const std::vector<ReplacementStep>& ranked, double fraction) {
  if (ranked.empty()) throw DomainError("cannot plan from an empty ranking");
  const std::size_t k = replaced_count(fraction, ranked.size());
  MultiplierPlan p = MultiplierPlan::all_exact(c);
  for (std::size_t i = 0; i < k; ++i) p.set(ranked[i].site, MulMode::AAI);
  return p;
}

// Uniform random subset of weight sites (product sites too if requested) of
// the same size greedy would replace.
inline MultiplierPlan random_plan(const Circuit& c, double fraction, std::uint64_t seed, bool include_product_sites = false) {
  std::vector<std::size_t> sites(include_product_sites ? c.num_sites() : c.num_weight_sites());
  std::iota(sites.begin(), sites.end(), 0);
  SplitMix64 rng(seed);
  std::shuffle(sites.begin(), sites.end(), rng);
  MultiplierPlan p = MultiplierPlan::all_exact(c);
  const std::size_t k = replaced_count(fraction, sites.size());
  for (std::size_t i = 0; i < k; ++i) p.set(sites[i], MulMode::AAI);
  return p;
}

struct TradeoffOptions {
  bool det = true;
  bool dc = false;
  int random_seeds = 6;            // random strategy uses seeds base_seed .. base_seed + k - 1
  std::uint64_t base_seed = 0;
  std::optional<McParams> mc;      // required for dc
  bool include_product_sites = false;
};

struct TradeoffRow {
  std::string strategy;  // det, dc or random
  std::int64_t seed = -1;  // random strategy only
  double fraction = 0.0;
  double replaced_ratio_of_all_mults = 0.0;
  double normalized_energy = 0.0;
  double mean_log_error = 0.0;
};

// Error is measured against the all-Exact plan at the same cfg, without
// correction, so every strategy starts from exactly zero at fraction 0.
inline std::vector<TradeoffRow> tradeoff_curve(const Circuit& c, const FloatConfig& cfg, const std::vector<Assignment>& data,
                                               const std::vector<double>& fractions, const TradeoffOptions& opt = {}) {
  if (data.empty()) throw DomainError("tradeoff_curve needs data");
  QueryOptions q;
  q.queries = QueryKind::Mar;
  q.baseline = cfg;

  std::vector<TradeoffRow> rows;
  auto emit = [&](const std::string& strategy, std::int64_t seed, double f, const MultiplierPlan& p) {
    const QueryMetrics m = compare_queries(c, data, cfg, p, q);
    const EnergyReport e = circuit_energy(c, cfg, p);
    rows.push_back({strategy, seed, f, c.num_sites() ? static_cast<double>(e.aai_sites) / static_cast<double>(c.num_sites()) : 0.0,
                    e.normalized, m.mean_log_error});
  };

  RankOptions ro{opt.mc, opt.include_product_sites};
  if (opt.det) {
    const auto ranked = rank_sites(c, cfg, Criterion::Det, ro);
    for (double f : fractions) emit("det", -1, f, plan(c, ranked, f));
  }
  if (opt.dc) {
    const auto ranked = rank_sites(c, cfg, Criterion::Dc, ro);
    for (double f : fractions) emit("dc", -1, f, plan(c, ranked, f));
  }
  for (int s = 0; s < opt.random_seeds; ++s) {
    const std::uint64_t seed = opt.base_seed + static_cast<std::uint64_t>(s);
    for (double f : fractions) emit("random", static_cast<std::int64_t>(seed), f, random_plan(c, f, seed, opt.include_product_sites));
  }
  return rows;
}

// Plans are stored as the list of AAI sites; weight sites are labelled
// "sum:child", product sites "product/k" for the k-th multiplication.
inline std::string site_label(const Circuit& c, std::size_t site) {
  if (site < c.num_weight_sites()) return c.edge_label(site);
  for (UnitIndex u = 0; u < c.num_units(); ++u) {
    const Unit& unit = c.unit(u);
    if (unit.kind != UnitKind::Product || unit.children.size() < 2) continue;
    const std::size_t first = c.product_site_offset(u);
    if (site >= first && site < first + unit.children.size() - 1) return std::to_string(unit.id) + "/" + std::to_string(site - first + 1);
  }
  throw DomainError("site " + std::to_string(site) + " is out of range");
}

inline nlohmann::json plan_to_json(const Circuit& c, const MultiplierPlan& p) {
  if (!p.fits(c)) throw DomainError("multiplier plan does not cover the circuit's sites");
  nlohmann::json j;
  j["weight_sites"] = c.num_weight_sites();
  j["product_sites"] = c.num_product_sites();
  auto& aai = j["aai_sites"] = nlohmann::json::array();
  auto& labels = j["aai_labels"] = nlohmann::json::array();
  for (std::size_t s = 0; s < p.size(); ++s)
    if (p[s] == MulMode::AAI) {
      aai.push_back(s);
      labels.push_back(site_label(c, s));
    }
  return j;
}

inline MultiplierPlan plan_from_json(const Circuit& c, const nlohmann::json& j) {
  MultiplierPlan p = MultiplierPlan::all_exact(c);
  try {
    if (j.at("weight_sites").get<std::size_t>() != c.num_weight_sites() || j.at("product_sites").get<std::size_t>() != c.num_product_sites())
      throw DomainError("plan was made for a circuit with a different number of multiplier sites");
    for (const auto& s : j.at("aai_sites")) {
      const auto site = s.get<std::size_t>();
      if (site >= p.size()) throw DomainError("plan site " + std::to_string(site) + " is out of range");
      p.set(site, MulMode::AAI);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed plan document: ") + e.what());
  }
  return p;
}

}  // namespace pcaai
