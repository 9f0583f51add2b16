// pcaai: command-line harness. Every command writes a '#' preamble naming the
// configuration and seeds, then CSV or JSON. Exit codes: 0 ok, 1 domain
// violation, 2 I/O or parse failure.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcaai/pcaai.hpp"

using namespace pcaai;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) out.push_back(item);
  return out;
}

long to_long(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw DomainError("bad " + what + " \"" + s + "\"");
  return v;
}

double to_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw DomainError("bad " + what + " \"" + s + "\"");
  return v;
}

// "8,9,12" or "8..11" or a mix of both.
std::vector<int> int_list(const std::string& spec, const std::string& what) {
  std::vector<int> out;
  for (const auto& item : split(spec, ',')) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(static_cast<int>(to_long(item, what)));
      continue;
    }
    const long lo = to_long(item.substr(0, dots), what), hi = to_long(item.substr(dots + 2), what);
    if (hi < lo) throw DomainError("empty range \"" + item + "\" for " + what);
    for (long v = lo; v <= hi; ++v) out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw DomainError(what + " list is empty");
  return out;
}

std::vector<double> double_list(const std::string& spec, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : split(spec, ',')) out.push_back(to_double(item, what));
  if (out.empty()) throw DomainError(what + " list is empty");
  return out;
}

Rounding parse_rounding(const std::string& s) {
  if (s == "nearest" || s == "nearest-even") return Rounding::NearestEven;
  if (s == "toward-zero") return Rounding::TowardZero;
  throw DomainError("unknown rounding \"" + s + "\" (nearest, toward-zero)");
}

LogReadout parse_readout(const std::string& s) {
  if (s == "linear") return LogReadout::Linear;
  if (s == "mitchell") return LogReadout::Mitchell;
  throw DomainError("unknown readout \"" + s + "\" (linear, mitchell)");
}

QueryKind parse_query(const std::string& s) {
  if (s == "mar") return QueryKind::Mar;
  if (s == "map") return QueryKind::Map;
  if (s == "both") return QueryKind::Both;
  throw DomainError("unknown query \"" + s + "\" (mar, map, both)");
}

bool is_json_path(const std::string& s) { return s.size() > 5 && s.compare(s.size() - 5, 5, ".json") == 0; }

nlohmann::json load_json(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

Circuit open_circuit(const std::string& path) {
  try {
    return load_circuit(path);
  } catch (const CircuitError& e) {
    throw CircuitError(path + ": " + e.what());
  }
}

// Commands that evaluate need a valid circuit; determinism is optional.
Circuit open_valid_circuit(const std::string& path) {
  Circuit c = open_circuit(path);
  const StructureReport r = validate(c);
  if (!r.smooth || !r.decomposable) {
    std::string why = path + ": circuit is not " + (!r.smooth ? std::string("smooth") : std::string("decomposable"));
    if (!r.violations.empty()) why += " (unit " + std::to_string(r.violations.front().unit) + ": " + r.violations.front().reason + ")";
    throw DomainError(why);
  }
  return c;
}

// Output goes to --out if given, stdout otherwise.
struct Sink {
  std::string path;
  std::ostringstream text;

  void preamble(const std::string& command, const std::vector<std::pair<std::string, std::string>>& settings) {
    text << "# pcaai " << command << "\n";
    for (const auto& [k, v] : settings) text << "# " << k << "=" << v << "\n";
  }
  void flush() {
    if (path.empty()) {
      std::cout << text.str();
    } else {
      write_file(path, text.str());
    }
  }
};

// Plan sources: all-exact, all-aai, greedy:F, greedy-dc:F, random:F:SEED, or a plan .json file.
struct PlanSpec {
  std::string text = "all-aai";
  std::size_t mc_samples = 10'000;
  std::uint64_t mc_seed = 0;
  bool include_products = false;

  MultiplierPlan make(const Circuit& c, const FloatConfig& cfg) const {
    if (text == "all-exact") return MultiplierPlan::all_exact(c);
    if (text == "all-aai") return MultiplierPlan::all_aai(c);
    if (is_json_path(text)) return plan_from_json(c, load_json(text));
    const auto parts = split(text, ':');
    if (parts.empty()) throw DomainError("empty plan");
    RankOptions ro;
    ro.include_product_sites = include_products;
    if (include_products || parts[0] == "greedy-dc") ro.mc = McParams{mc_samples, mc_seed};
    if ((parts[0] == "greedy" || parts[0] == "greedy-dc") && parts.size() == 2) {
      const auto criterion = parts[0] == "greedy" ? Criterion::Det : Criterion::Dc;
      return plan(c, rank_sites(c, cfg, criterion, ro), to_double(parts[1], "plan fraction"));
    }
    if (parts[0] == "random" && parts.size() == 3)
      return random_plan(c, to_double(parts[1], "plan fraction"), static_cast<std::uint64_t>(to_long(parts[2], "plan seed")), include_products);
    throw DomainError("unknown plan \"" + text + "\" (all-exact, all-aai, greedy:F, greedy-dc:F, random:F:SEED, file.json)");
  }
};

// Correction sources: none, mc:N:SEED, closed-form, or a correction .json file.
CorrectionTerm make_correction(const std::string& spec, const Circuit& c, const FloatConfig& cfg, const MultiplierPlan& p, LogReadout readout) {
  if (spec == "none") return {};
  if (spec == "closed-form") return closed_form_log_epsilon_det(c, cfg);
  if (is_json_path(spec)) return correction_from_json(load_json(spec));
  const auto parts = split(spec, ':');
  if (parts.size() == 3 && parts[0] == "mc")
    return estimate_log_epsilon(c, cfg, p, static_cast<std::size_t>(to_long(parts[1], "calibration size")),
                                static_cast<std::uint64_t>(to_long(parts[2], "calibration seed")), readout);
  throw DomainError("unknown correction \"" + spec + "\" (none, mc:N:SEED, closed-form, file.json)");
}

struct DataSpec {
  std::string path;
  std::size_t samples = 1000;

  std::vector<Assignment> load(const Circuit& c, std::uint64_t seed) const {
    if (!path.empty()) return load_assignments(path, c.num_variables());
    return sample(c, seed, samples);
  }
  std::string describe(std::uint64_t seed) const { return path.empty() ? "sampled n=" + std::to_string(samples) + " seed=" + std::to_string(seed) : path; }
};

// MAP evidence: each observed variable is hidden with probability 1 - keep.
std::vector<Assignment> mask_evidence(std::vector<Assignment> rows, double keep, std::uint64_t seed) {
  if (!(keep >= 0.0 && keep <= 1.0)) throw DomainError("evidence fraction must be in [0, 1]");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    SplitMix64 rng = derive_stream(seed ^ 0xE71D, i);
    for (int& v : rows[i])
      if (rng.uniform() >= keep) v = kUnobserved;
  }
  return rows;
}

std::string cfg_label(const FloatConfig& cfg) {
  return "E=" + std::to_string(cfg.exp_bits) + " M=" + std::to_string(cfg.man_bits) + " rounding=" + to_string(cfg.rounding);
}

// ---------------------------------------------------------------- commands

int cmd_validate(const std::string& path) {
  const Circuit c = open_circuit(path);
  const StructureReport r = validate(c);
  auto mark = [](bool ok) { return ok ? "✓" : "✗"; };
  std::cout << "smooth " << mark(r.smooth) << " decomposable " << mark(r.decomposable) << " deterministic " << mark(r.deterministic) << " ("
            << to_string(r.determinism_check) << ")\n";
  std::cout << c.num_variables() << " variables, " << c.num_units() << " units, " << c.num_edges() << " weights, " << c.num_sites()
            << " multiplier sites\n";
  for (const auto& v : r.violations) std::cout << "unit " << v.unit << ": " << v.reason << "\n";
  return r.smooth && r.decomposable ? 0 : 1;
}

struct SweepArgs {
  std::string circuit, query = "both", exp_bits, man_bits, modes = "exact,aai", correction = "none", readout = "linear", rounding = "nearest";
  std::optional<std::string> plan;
  DataSpec data;
  std::uint64_t seed = 0;
  double evidence = 0.5;
  std::size_t mc_samples = 10'000;
};

int cmd_sweep(const SweepArgs& a, Sink& out) {
  const Circuit c = open_valid_circuit(a.circuit);
  const auto Es = int_list(a.exp_bits, "exponent bits"), Ms = int_list(a.man_bits, "mantissa bits");
  const QueryKind query = parse_query(a.query);
  const Rounding rounding = parse_rounding(a.rounding);
  const LogReadout readout = parse_readout(a.readout);
  std::vector<PlanSpec> plans;
  if (a.plan) {
    plans.push_back({*a.plan, a.mc_samples, a.seed, false});
  } else {
    for (const auto& m : split(a.modes, ',')) {
      if (m != "exact" && m != "aai") throw DomainError("unknown mode \"" + m + "\" (exact, aai)");
      plans.push_back({m == "exact" ? "all-exact" : "all-aai", a.mc_samples, a.seed, false});
    }
  }
  const auto data = a.data.load(c, a.seed);
  const auto evidence = mask_evidence(data, a.evidence, a.seed);

  out.preamble("sweep", {{"circuit", a.circuit},
                         {"query", a.query},
                         {"data", a.data.describe(a.seed)},
                         {"seed", std::to_string(a.seed)},
                         {"map_evidence_fraction", num(a.evidence)},
                         {"correction", a.correction},
                         {"readout", a.readout},
                         {"rounding", a.rounding},
                         {"baseline", cfg_label(baseline_config())},
                         {"units", "errors in |log2| bits, energy per multiplier relative to the 64-bit exact multiplier"}});
  out.text << "exp_bits,man_bits,plan,n_mar,mean_abs_log2_error,n_map,map_accuracy,normalized_energy,aai_sites,sites,underflows,overflows,log2_epsilon,"
              "errors\n";
  for (int E : Es)
    for (int M : Ms)
      for (const auto& ps : plans) {
        const FloatConfig cfg = FloatConfig::make(E, M, rounding);
        const MultiplierPlan p = ps.make(c, cfg);
        QueryOptions q;
        q.readout = readout;
        std::string errors;
        try {
          q.log2_epsilon = make_correction(a.correction, c, cfg, p, readout).log2_epsilon;
        } catch (const EvaluationError& e) {
          errors = std::string("correction: ") + e.what();
        }
        QueryMetrics mar, map;
        mar.mean_log_error = map.map_accuracy = NAN;
        if (query != QueryKind::Map) {
          q.queries = QueryKind::Mar;
          mar = compare_queries(c, data, cfg, p, q);
        }
        if (query != QueryKind::Mar) {
          q.queries = QueryKind::Map;
          map = compare_queries(c, evidence, cfg, p, q);
        }
        for (const auto* m : {&mar, &map})
          if (!m->failures.empty() && errors.empty())
            errors = std::to_string(m->failures.size()) + " excluded; first: instance " + std::to_string(m->failures.front().instance) + " " +
                     m->failures.front().reason;
        const EnergyReport e = circuit_energy(c, cfg, p);
        out.text << E << "," << M << "," << csv_field(ps.text) << "," << mar.n_mar << "," << num(mar.mean_log_error) << "," << map.n_map << ","
                 << num(map.map_accuracy) << "," << num(e.normalized) << "," << e.aai_sites << "," << e.sites << ","
                 << mar.underflow_count + map.underflow_count << "," << mar.overflow_count + map.overflow_count << "," << num(q.log2_epsilon)
                 << "," << csv_field(errors) << "\n";
      }
  out.flush();
  return 0;
}

struct TradeoffArgs {
  std::string circuit, fractions = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1", strategies = "det,random", rounding = "nearest";
  int E = 8, M = 8, random_seeds = 6;
  DataSpec data;
  std::uint64_t seed = 0;
  std::size_t mc_samples = 10'000;
  bool include_products = false;
};

int cmd_tradeoff(const TradeoffArgs& a, Sink& out) {
  const Circuit c = open_valid_circuit(a.circuit);
  const FloatConfig cfg = FloatConfig::make(a.E, a.M, parse_rounding(a.rounding));
  TradeoffOptions opt;
  opt.det = opt.dc = false;
  opt.random_seeds = 0;
  for (const auto& s : split(a.strategies, ',')) {
    if (s == "det") {
      opt.det = true;
    } else if (s == "dc") {
      opt.dc = true;
    } else if (s == "random") {
      opt.random_seeds = a.random_seeds;
    } else {
      throw DomainError("unknown strategy \"" + s + "\" (det, dc, random)");
    }
  }
  opt.base_seed = a.seed;
  opt.include_product_sites = a.include_products;
  if (opt.dc || a.include_products) opt.mc = McParams{a.mc_samples, a.seed};
  const auto data = a.data.load(c, a.seed);
  const auto rows = tradeoff_curve(c, cfg, data, double_list(a.fractions, "fraction"), opt);

  out.preamble("tradeoff", {{"circuit", a.circuit},
                            {"config", cfg_label(cfg)},
                            {"data", a.data.describe(a.seed)},
                            {"strategies", a.strategies},
                            {"random_seeds", std::to_string(a.seed) + ".." + std::to_string(a.seed + static_cast<std::uint64_t>(a.random_seeds) - 1)},
                            {"mc_samples", std::to_string(a.mc_samples)},
                            {"include_product_sites", a.include_products ? "true" : "false"},
                            {"units", "error in |log2| bits against the all-exact plan at the same config; energy relative to the 64-bit exact multiplier"}});
  out.text << "strategy,seed,fraction,replaced_ratio_of_all_mults,normalized_energy,mean_abs_log2_error\n";
  for (const auto& r : rows)
    out.text << r.strategy << "," << (r.seed >= 0 ? std::to_string(r.seed) : "") << "," << num(r.fraction) << "," << num(r.replaced_ratio_of_all_mults)
             << "," << num(r.normalized_energy) << "," << num(r.mean_log_error) << "\n";
  out.flush();
  return 0;
}

struct PlanArgs {
  std::string circuit, criterion = "det", rounding = "nearest";
  int E = 8, M = 8;
  double fraction = 0.5;
  std::uint64_t seed = 0;
  std::size_t mc_samples = 10'000;
  bool include_products = false;
};

int cmd_plan(const PlanArgs& a, Sink& out) {
  const Circuit c = open_valid_circuit(a.circuit);
  const FloatConfig cfg = FloatConfig::make(a.E, a.M, parse_rounding(a.rounding));
  if (a.criterion != "det" && a.criterion != "dc") throw DomainError("unknown criterion \"" + a.criterion + "\" (det, dc)");
  RankOptions ro;
  ro.include_product_sites = a.include_products;
  if (a.criterion == "dc" || a.include_products) ro.mc = McParams{a.mc_samples, a.seed};
  const auto ranked = rank_sites(c, cfg, a.criterion == "det" ? Criterion::Det : Criterion::Dc, ro);
  const MultiplierPlan p = plan(c, ranked, a.fraction);
  nlohmann::json j = plan_to_json(c, p);
  j["circuit"] = a.circuit;
  j["exp_bits"] = a.E;
  j["man_bits"] = a.M;
  j["rounding"] = to_string(cfg.rounding);
  j["criterion"] = a.criterion;
  j["fraction"] = a.fraction;
  if (ro.mc) j["mc"] = {{"samples", a.mc_samples}, {"seed", a.seed}};
  j["normalized_energy"] = circuit_energy(c, cfg, p).normalized;
  auto& order = j["ranking"] = nlohmann::json::array();
  for (const auto& s : ranked)
    order.push_back({{"site", s.site},
                     {"label", site_label(c, s.site)},
                     {"contribution", s.contribution},
                     {"cumulative_contribution", s.cumulative_contribution},
                     {"cumulative_energy_normalized", s.cumulative_energy_normalized}});
  out.text << j.dump(2) << "\n";
  out.flush();
  return 0;
}

struct CalibrateArgs {
  std::string circuit, plan = "all-aai", correction = "mc", readout = "linear", rounding = "nearest";
  int E = 8, M = 8;
  std::size_t samples = 10'000;
  std::uint64_t seed = 0;
};

int cmd_calibrate(const CalibrateArgs& a, Sink& out) {
  const Circuit c = open_valid_circuit(a.circuit);
  const FloatConfig cfg = FloatConfig::make(a.E, a.M, parse_rounding(a.rounding));
  const LogReadout readout = parse_readout(a.readout);
  const MultiplierPlan p = PlanSpec{a.plan, a.samples, a.seed, false}.make(c, cfg);
  CorrectionTerm t;
  if (a.correction == "mc") {
    t = estimate_log_epsilon(c, cfg, p, a.samples, a.seed, readout);
  } else if (a.correction == "closed-form") {
    t = closed_form_log_epsilon_det(c, cfg);
  } else {
    throw DomainError("unknown correction method \"" + a.correction + "\" (mc, closed-form)");
  }
  nlohmann::json j = to_json(t);
  j["circuit"] = a.circuit;
  j["exp_bits"] = a.E;
  j["man_bits"] = a.M;
  j["rounding"] = to_string(cfg.rounding);
  j["plan"] = a.plan;
  j["readout"] = a.readout;
  out.text << j.dump(2) << "\n";
  out.flush();
  return 0;
}

int cmd_energy(const std::string& exp_bits, const std::string& man_bits, bool sign_bit, Sink& out) {
  EnergyModelParams params;
  params.aai_counts_sign_bit = sign_bit;
  out.preamble("energy", {{"exp_bits", exp_bits},
                          {"man_bits", man_bits},
                          {"aai_width", sign_bit ? "E+M+1" : "E+M"},
                          {"baseline_uW", num(baseline_power(params))},
                          {"units", "power in uW; normalized = power / 64-bit exact multiplier power"}});
  out.text << "exp_bits,man_bits,exact_uW,aai_uW,exact_normalized,aai_normalized,exact_over_aai\n";
  for (int E : int_list(exp_bits, "exponent bits"))
    for (int M : int_list(man_bits, "mantissa bits")) {
      const double ex = exact_mult_power(E, M, params), aai = aai_mult_power(E, M, params), base = baseline_power(params);
      out.text << E << "," << M << "," << num(ex) << "," << num(aai) << "," << num(ex / base) << "," << num(aai / base) << "," << num(ex / aai) << "\n";
    }
  out.flush();
  return 0;
}

int cmd_resolution(const std::string& circuit, std::optional<double> mv, double epsilon, Sink& out) {
  if (circuit.empty() == !mv.has_value()) throw DomainError("resolution needs exactly one of --circuit or --mv");
  const double value = mv ? *mv : min_positive_value(open_valid_circuit(circuit));
  const ResolutionReport r = required_bits(value, epsilon);
  nlohmann::json j{{"mv", r.mv},     {"epsilon", r.epsilon_tol}, {"precision_digits", r.precision_digits},
                   {"F_min", r.f_min}, {"E_min", r.e_min},         {"M_req", r.m_req},
                   {"QE_FxP", r.qe_fxp}};
  if (!circuit.empty()) j["circuit"] = circuit;
  out.text << j.dump(2) << "\n";
  out.flush();
  return 0;
}

struct AnalyzeArgs {
  std::string circuit, rounding = "nearest";
  int E = 8, M = 8;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  bool kl = false;
};

int cmd_analyze(const AnalyzeArgs& a, Sink& out) {
  const Circuit c = open_valid_circuit(a.circuit);
  const FloatConfig cfg = FloatConfig::make(a.E, a.M, parse_rounding(a.rounding));
  const AnalysisReport r = a.samples ? delta_nondet_mc(c, cfg, a.samples, a.seed) : delta_det(c, cfg);
  nlohmann::json j = to_json(r, c);
  j["circuit"] = a.circuit;
  j["exp_bits"] = a.E;
  j["man_bits"] = a.M;
  j["rounding"] = to_string(cfg.rounding);
  if (a.samples) j["seed"] = a.seed;
  if (a.kl) j["kl_bruteforce"] = kl_bruteforce(c, cfg);
  out.text << j.dump(2) << "\n";
  out.flush();
  return 0;
}

int cmd_failure(const std::string& delta_e, int mults, std::size_t samples, std::uint64_t seed, Sink& out) {
  out.preamble("failure", {{"n_mults_per_branch", std::to_string(mults)}, {"samples", std::to_string(samples)}, {"seed", std::to_string(seed)}});
  out.text << "delta_E,n_mults,probability,std_error\n";
  for (int de : int_list(delta_e, "exponent gap")) {
    const FailureEstimate f = map_failure_prob(de, mults, samples, seed);
    out.text << f.delta_E << "," << f.n_mults_per_branch << "," << num(f.probability) << "," << num(f.std_error) << "\n";
  }
  out.flush();
  return 0;
}

struct EvalArgs {
  std::string circuit, query = "mar", plan = "all-aai", correction = "none", readout = "linear", rounding = "nearest";
  int E = 11, M = 52;
  DataSpec data;
  std::uint64_t seed = 0;
};

int cmd_eval(const EvalArgs& a, Sink& out) {
  const Circuit c = open_valid_circuit(a.circuit);
  const FloatConfig cfg = FloatConfig::make(a.E, a.M, parse_rounding(a.rounding));
  const LogReadout readout = parse_readout(a.readout);
  if (a.query != "mar" && a.query != "map") throw DomainError("eval runs one query kind: mar or map");
  const MultiplierPlan p = PlanSpec{a.plan, 10'000, a.seed, false}.make(c, cfg);
  const CorrectionTerm corr = make_correction(a.correction, c, cfg, p, readout);
  const auto data = a.data.load(c, a.seed);
  const Evaluator approx(c, cfg, p), base(c, baseline_config(), MultiplierPlan::all_exact(c));

  out.preamble("eval", {{"circuit", a.circuit},
                        {"query", a.query},
                        {"config", cfg_label(cfg)},
                        {"plan", a.plan},
                        {"correction", a.correction + " log2_epsilon=" + num(corr.log2_epsilon)},
                        {"readout", a.readout},
                        {"data", a.data.describe(a.seed)},
                        {"units", "log2 probabilities in bits"}});
  std::vector<std::string> lines(data.size());
  if (a.query == "mar") {
    out.text << "instance,log2_p_baseline,log2_p_approx,log2_p_corrected,abs_error,underflows,overflows\n";
    parallel_for(data.size(), [&](std::size_t i) {
      OpCounts counts;
      const CustomFloat v = approx.evaluate(data[i], &counts);
      const double lb = log2_value(base.evaluate(data[i]), baseline_config());
      const double la = read_log2(v, cfg, readout), lc = apply_correction(la, corr);
      lines[i] = std::to_string(i) + "," + num(lb) + "," + num(la) + "," + num(lc) + "," + num(std::abs(lb - lc)) + "," +
                 std::to_string(counts.underflows) + "," + std::to_string(counts.overflows) + "\n";
    });
  } else {
    out.text << "instance";
    for (std::size_t v = 0; v < c.num_variables(); ++v) out.text << ",x" << v;
    out.text << ",log2_value,matches_baseline\n";
    parallel_for(data.size(), [&](std::size_t i) {
      const MapResult r = approx.map(data[i]);
      std::string line = std::to_string(i);
      for (int s : r.assignment) line += "," + std::to_string(s);
      lines[i] = line + "," + num(r.log2_value) + "," + (r.assignment == base.map(data[i]).assignment ? "1" : "0") + "\n";
    });
  }
  for (const auto& l : lines) out.text << l;
  out.flush();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximate (addition-as-int) inference in probabilistic circuits"};
  app.require_subcommand(1);
  Sink out;
  int status = 0;

  auto add_out = [&](CLI::App* cmd) { cmd->add_option("--out", out.path, "Output file (default: standard output)"); };
  auto add_rounding = [](CLI::App* cmd, std::string& r) {
    cmd->add_option("--rounding", r, "Rounding: nearest or toward-zero")->capture_default_str();
  };
  auto add_data = [](CLI::App* cmd, DataSpec& d) {
    cmd->add_option("--data", d.path, "CSV of assignments (-1 = unobserved)");
    cmd->add_option("--samples", d.samples, "Instances sampled from the circuit when --data is absent")->capture_default_str();
  };

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check smoothness, decomposability and determinism");
  validate_cmd->add_option("--circuit", validate_path, "Circuit JSON")->required();
  validate_cmd->callback([&] { status = cmd_validate(validate_path); });

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Error, MAP accuracy and energy over an (E, M, mode) grid");
  sweep->add_option("--circuit", sw.circuit, "Circuit JSON")->required();
  sweep->add_option("--query", sw.query, "mar, map or both")->capture_default_str();
  sweep->add_option("--exp-bits", sw.exp_bits, "Exponent bits, e.g. 8..11 or 5,8")->required();
  sweep->add_option("--man-bits", sw.man_bits, "Mantissa bits, e.g. 2..21")->required();
  sweep->add_option("--mode", sw.modes, "Multiplier modes: exact, aai or exact,aai")->capture_default_str();
  sweep->add_option("--plan", sw.plan, "Plan instead of --mode: all-exact, all-aai, greedy:F, greedy-dc:F, random:F:SEED or plan.json");
  sweep->add_option("--correction", sw.correction, "none, mc:N:SEED, closed-form or correction.json")->capture_default_str();
  sweep->add_option("--readout", sw.readout, "Root log readout: linear or mitchell")->capture_default_str();
  sweep->add_option("--evidence-fraction", sw.evidence, "Share of variables kept as MAP evidence")->capture_default_str();
  sweep->add_option("--mc-samples", sw.mc_samples, "Monte-Carlo samples for greedy-dc plans")->capture_default_str();
  sweep->add_option("--seed", sw.seed, "Seed for sampling and evidence masks")->capture_default_str();
  add_data(sweep, sw.data);
  add_rounding(sweep, sw.rounding);
  add_out(sweep);
  sweep->callback([&] { status = cmd_sweep(sw, out); });

  TradeoffArgs tr;
  auto* tradeoff = app.add_subcommand("tradeoff", "Error vs. energy as exact multipliers are replaced");
  tradeoff->add_option("--circuit", tr.circuit, "Circuit JSON")->required();
  tradeoff->add_option("--exp-bits", tr.E, "Exponent bits")->capture_default_str();
  tradeoff->add_option("--man-bits", tr.M, "Mantissa bits")->capture_default_str();
  tradeoff->add_option("--fraction", tr.fractions, "Comma-separated replacement fractions")->capture_default_str();
  tradeoff->add_option("--strategies", tr.strategies, "Any of det, dc, random")->capture_default_str();
  tradeoff->add_option("--random-seeds", tr.random_seeds, "Number of random plans per fraction")->capture_default_str();
  tradeoff->add_option("--mc-samples", tr.mc_samples, "Monte-Carlo samples for dc ranking and product sites")->capture_default_str();
  tradeoff->add_flag("--include-products", tr.include_products, "Rank product-unit multiplications too");
  tradeoff->add_option("--seed", tr.seed, "Base seed")->capture_default_str();
  add_data(tradeoff, tr.data);
  add_rounding(tradeoff, tr.rounding);
  add_out(tradeoff);
  tradeoff->callback([&] { status = cmd_tradeoff(tr, out); });

  PlanArgs pl;
  auto* plan_cmd = app.add_subcommand("plan", "Greedy replacement plan as JSON");
  plan_cmd->add_option("--circuit", pl.circuit, "Circuit JSON")->required();
  plan_cmd->add_option("--exp-bits", pl.E, "Exponent bits")->capture_default_str();
  plan_cmd->add_option("--man-bits", pl.M, "Mantissa bits")->capture_default_str();
  plan_cmd->add_option("--fraction", pl.fraction, "Share of ranked sites made AAI")->capture_default_str();
  plan_cmd->add_option("--criterion", pl.criterion, "det or dc")->capture_default_str();
  plan_cmd->add_option("--mc-samples", pl.mc_samples, "Monte-Carlo samples")->capture_default_str();
  plan_cmd->add_flag("--include-products", pl.include_products, "Rank product-unit multiplications too");
  plan_cmd->add_option("--seed", pl.seed, "Monte-Carlo seed")->capture_default_str();
  add_rounding(plan_cmd, pl.rounding);
  add_out(plan_cmd);
  plan_cmd->callback([&] { status = cmd_plan(pl, out); });

  CalibrateArgs ca;
  auto* calibrate = app.add_subcommand("calibrate", "Estimate the log2 correction term");
  calibrate->add_option("--circuit", ca.circuit, "Circuit JSON")->required();
  calibrate->add_option("--exp-bits", ca.E, "Exponent bits")->capture_default_str();
  calibrate->add_option("--man-bits", ca.M, "Mantissa bits")->capture_default_str();
  calibrate->add_option("--plan", ca.plan, "all-exact, all-aai, greedy:F, random:F:SEED or plan.json")->capture_default_str();
  calibrate->add_option("--correction", ca.correction, "mc or closed-form")->capture_default_str();
  calibrate->add_option("--readout", ca.readout, "linear or mitchell")->capture_default_str();
  calibrate->add_option("--samples", ca.samples, "Calibration samples")->capture_default_str();
  calibrate->add_option("--seed", ca.seed, "Calibration seed")->capture_default_str();
  add_rounding(calibrate, ca.rounding);
  add_out(calibrate);
  calibrate->callback([&] { status = cmd_calibrate(ca, out); });

  std::string energy_E = "8..11", energy_M = "2..21";
  bool sign_bit = false;
  auto* energy = app.add_subcommand("energy", "Multiplier power over an (E, M) grid");
  energy->add_option("--exp-bits", energy_E, "Exponent bits")->capture_default_str();
  energy->add_option("--man-bits", energy_M, "Mantissa bits")->capture_default_str();
  energy->add_flag("--sign-bit", sign_bit, "Count a sign bit in the AAI adder width");
  add_out(energy);
  energy->callback([&] { status = cmd_energy(energy_E, energy_M, sign_bit, out); });

  std::string res_circuit;
  std::optional<double> res_mv;
  double res_eps = 0.01;
  auto* resolution = app.add_subcommand("resolution", "Minimum bits for a MAR tolerance");
  resolution->add_option("--circuit", res_circuit, "Circuit JSON (MV = smallest positive root value)");
  resolution->add_option("--mv", res_mv, "Smallest value to represent");
  resolution->add_option("--epsilon", res_eps, "Relative tolerance, a power of ten")->capture_default_str();
  add_out(resolution);
  resolution->callback([&] { status = cmd_resolution(res_circuit, res_mv, res_eps, out); });

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Per-weight divergence contributions");
  analyze->add_option("--circuit", an.circuit, "Circuit JSON")->required();
  analyze->add_option("--exp-bits", an.E, "Exponent bits")->capture_default_str();
  analyze->add_option("--man-bits", an.M, "Mantissa bits")->capture_default_str();
  analyze->add_option("--samples", an.samples, "Monte-Carlo samples for the non-deterministic estimate (0 = skip)")->capture_default_str();
  analyze->add_option("--seed", an.seed, "Monte-Carlo seed")->capture_default_str();
  analyze->add_flag("--kl", an.kl, "Also compute the divergence by enumeration");
  add_rounding(analyze, an.rounding);
  add_out(analyze);
  analyze->callback([&] { status = cmd_analyze(an, out); });

  std::string fail_de = "0,1,2";
  int fail_mults = 1;
  std::size_t fail_samples = 1'000'000;
  std::uint64_t fail_seed = 0;
  auto* failure = app.add_subcommand("failure", "Probability that AAI flips a MAP comparison");
  failure->add_option("--delta-e", fail_de, "Exponent gaps between the branches")->capture_default_str();
  failure->add_option("--mults", fail_mults, "Multiplications per branch")->capture_default_str();
  failure->add_option("--samples", fail_samples, "Monte-Carlo samples")->capture_default_str();
  failure->add_option("--seed", fail_seed, "Seed")->capture_default_str();
  add_out(failure);
  failure->callback([&] { status = cmd_failure(fail_de, fail_mults, fail_samples, fail_seed, out); });

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Per-instance MAR or MAP results");
  eval->add_option("--circuit", ev.circuit, "Circuit JSON")->required();
  eval->add_option("--query", ev.query, "mar or map")->capture_default_str();
  eval->add_option("--exp-bits", ev.E, "Exponent bits")->capture_default_str();
  eval->add_option("--man-bits", ev.M, "Mantissa bits")->capture_default_str();
  eval->add_option("--plan", ev.plan, "all-exact, all-aai, greedy:F, random:F:SEED or plan.json")->capture_default_str();
  eval->add_option("--correction", ev.correction, "none, mc:N:SEED, closed-form or correction.json")->capture_default_str();
  eval->add_option("--readout", ev.readout, "linear or mitchell")->capture_default_str();
  eval->add_option("--seed", ev.seed, "Sampling seed")->capture_default_str();
  add_data(eval, ev.data);
  add_rounding(eval, ev.rounding);
  add_out(eval);
  eval->callback([&] { status = cmd_eval(ev, out); });

  std::string gen_kind = "tree";
  int gen_vars = 8, gen_depth = 3, gen_fanout = 2;
  std::uint64_t gen_seed = 0;
  auto* generate = app.add_subcommand("generate", "Random circuit as JSON");
  generate->add_option("--kind", gen_kind, "tree or deterministic")->capture_default_str();
  generate->add_option("--vars", gen_vars, "Binary variables")->capture_default_str();
  generate->add_option("--depth", gen_depth, "Layers")->capture_default_str();
  generate->add_option("--fanout", gen_fanout, "Sum fan-out (tree only)")->capture_default_str();
  generate->add_option("--seed", gen_seed, "Seed")->capture_default_str();
  add_out(generate);
  generate->callback([&] {
    Circuit c = gen_kind == "tree"            ? generate_random_tree_pc(gen_seed, gen_vars, gen_depth, gen_fanout)
                : gen_kind == "deterministic" || gen_kind == "det" ? generate_random_deterministic_pc(gen_seed, gen_vars, gen_depth)
                                              : throw DomainError("unknown kind \"" + gen_kind + "\" (tree, deterministic)");
    out.text << to_json(c).dump(1) << "\n";
    out.flush();
  });

  std::string sample_circuit;
  std::size_t sample_n = 1000;
  std::uint64_t sample_seed = 0;
  auto* sample_cmd = app.add_subcommand("sample", "Draw complete assignments from a circuit");
  sample_cmd->add_option("--circuit", sample_circuit, "Circuit JSON")->required();
  sample_cmd->add_option("--samples", sample_n, "Number of rows")->capture_default_str();
  sample_cmd->add_option("--seed", sample_seed, "Seed")->capture_default_str();
  add_out(sample_cmd);
  sample_cmd->callback([&] {
    const Circuit c = open_valid_circuit(sample_circuit);
    out.text << "# pcaai sample\n# circuit=" << sample_circuit << "\n# seed=" << sample_seed << "\n";
    out.text << assignments_csv(sample(c, sample_seed, sample_n), c.num_variables());
    out.flush();
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    // domain, structure and evaluation failures
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return status;
}
