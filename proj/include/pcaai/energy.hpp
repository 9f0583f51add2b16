#pragma once

// Fitted 65nm power models for exact and AAI multipliers, circuit-level
// energy, and minimum resolution for a target MAR accuracy.

#include <cmath>
#include <string>

#include "pcaai/circuit.hpp"
#include "pcaai/error.hpp"
#include "pcaai/inference.hpp"

namespace pcaai {

struct EnergyModelParams {
  double k_m = 0.0328;  // exact: mantissa term, k_m (M+1)^2 ln(M+1)
  double k_e = 0.5469;  // exact: exponent term, k_e E
  double k_a = 0.0520160465095606;  // AAI: linear in the adder width
  // AAI adder width: E + M by default, E + M + 1 when the sign bit is counted
  // (the convention behind the 3.329 uW quoted for a 64-bit AAI unit).
  bool aai_counts_sign_bit = false;
  int baseline_exp_bits = 11;
  int baseline_man_bits = 52;
};

namespace detail {
inline void check_bits(int E, int M) {
  if (E < 1) throw DomainError("exponent bits must be >= 1");
  if (M < 0) throw DomainError("mantissa bits must be >= 0");
}
}  // namespace detail

// Power in uW.
inline double exact_mult_power(int E, int M, const EnergyModelParams& p = {}) {
  detail::check_bits(E, M);
  const double m1 = M + 1.0;
  return p.k_m * m1 * m1 * std::log(m1) + p.k_e * E;
}

inline double aai_mult_power(int E, int M, const EnergyModelParams& p = {}) {
  detail::check_bits(E, M);
  return p.k_a * (M + E + (p.aai_counts_sign_bit ? 1 : 0));
}

inline double mult_power(MulMode mode, int E, int M, const EnergyModelParams& p = {}) {
  return mode == MulMode::Exact ? exact_mult_power(E, M, p) : aai_mult_power(E, M, p);
}

inline double baseline_power(const EnergyModelParams& p = {}) {
  return exact_mult_power(p.baseline_exp_bits, p.baseline_man_bits, p);
}

struct EnergyReport {
  double total_uW = 0.0;
  double normalized = 0.0;  // mean per-site power over the 64-bit exact multiplier
  std::size_t sites = 0;
  std::size_t aai_sites = 0;
};

inline EnergyReport circuit_energy(const Circuit& c, const FloatConfig& cfg, const MultiplierPlan& plan, const EnergyModelParams& p = {}) {
  if (!plan.fits(c)) throw DomainError("multiplier plan does not cover the circuit's sites");
  EnergyReport r;
  r.sites = plan.size();
  r.aai_sites = plan.count(MulMode::AAI);
  const double exact = exact_mult_power(cfg.exp_bits, cfg.man_bits, p);
  const double aai = aai_mult_power(cfg.exp_bits, cfg.man_bits, p);
  r.total_uW = static_cast<double>(r.sites - r.aai_sites) * exact + static_cast<double>(r.aai_sites) * aai;
  r.normalized = r.sites ? r.total_uW / static_cast<double>(r.sites) / baseline_power(p) : 0.0;
  return r;
}

struct ResolutionReport {
  double mv = 0.0;
  double epsilon_tol = 0.0;
  int precision_digits = 0;  // P with epsilon = 10^-P
  int f_min = 0;             // fraction bits of a fixed-point format
  int e_min = 0;             // exponent bits covering F_min
  int m_req = 0;             // mantissa bits for relative error 10^-(P+1)
  double qe_fxp = 0.0;       // fixed-point quantization error 2^-(F_min+1)
};

// Minimum bits for MAR queries with relative tolerance epsilon = 10^-P.
inline ResolutionReport required_bits(double mv, double epsilon) {
  if (!(mv > 0.0 && mv <= 1.0)) throw DomainError("MV must be in (0, 1]");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must be in (0, 1]");
  const double P = -std::log10(epsilon);
  const double rounded = std::round(P);
  if (std::abs(P - rounded) > 1e-9) throw DomainError("epsilon must be a power of ten, got " + std::to_string(epsilon));
  ResolutionReport r;
  r.mv = mv;
  r.epsilon_tol = epsilon;
  r.precision_digits = static_cast<int>(rounded);
  r.f_min = std::max(1, static_cast<int>(std::ceil(std::log2(1.0 / (2.0 * mv * epsilon)) - 1e-12)));
  r.e_min = static_cast<int>(std::ceil(std::log2(static_cast<double>(r.f_min)) - 1e-12));
  // smallest M with 2^M >= 10^(P+1)
  const double target = std::log2(10.0) * (r.precision_digits + 1);
  r.m_req = static_cast<int>(std::ceil(target - 1e-12));
  r.qe_fxp = std::ldexp(1.0, -(r.f_min + 1));
  return r;
}

}  // namespace pcaai
