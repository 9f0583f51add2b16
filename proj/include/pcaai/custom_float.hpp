#pragma once

// Bit-accurate emulation of reduced-precision, non-negative floating point.
//
// A value is 2^e * (1 + m / 2^M) with an implicit leading one and no subnormals.
// The biased exponent field e + bias lives in [1, 2^E - 1]; the all-zero
// exponent field is reserved for zero. There is no sign bit, no infinity and
// no NaN: out-of-range results saturate and raise a flag instead.

#include <cmath>
#include <compare>
#include <numbers>
#include <cstdint>
#include <string>

#include "pcaai/error.hpp"

namespace pcaai {

enum class Rounding { NearestEven, TowardZero };

inline const char* to_string(Rounding r) noexcept {
  return r == Rounding::NearestEven ? "nearest-even" : "toward-zero";
}

struct FloatConfig {
  int exp_bits = 11;
  int man_bits = 52;
  std::int64_t bias = 1023;
  Rounding rounding = Rounding::NearestEven;

  // IEEE-style bias 2^(E-1) - 1.
  static FloatConfig make(int exp_bits, int man_bits, Rounding rounding = Rounding::NearestEven) {
    FloatConfig cfg{exp_bits, man_bits, 0, rounding};
    if (exp_bits >= 2 && exp_bits < 62) cfg.bias = (std::int64_t{1} << (exp_bits - 1)) - 1;
    cfg.validate();
    return cfg;
  }

  void validate() const {
    if (exp_bits < 2) throw DomainError("exponent bits must be >= 2");
    if (man_bits < 0) throw DomainError("mantissa bits must be >= 0");
    if (exp_bits + man_bits > 63) throw DomainError("exponent + mantissa bits must be <= 63");
    const std::int64_t span = std::int64_t{1} << (exp_bits + 1);
    if (bias < -span || bias > span) throw DomainError("bias out of range for " + std::to_string(exp_bits) + " exponent bits");
  }

  std::int64_t max_biased_exponent() const noexcept { return (std::int64_t{1} << exp_bits) - 1; }
  std::int64_t min_exponent() const noexcept { return 1 - bias; }
  std::int64_t max_exponent() const noexcept { return max_biased_exponent() - bias; }
  std::uint64_t mantissa_scale() const noexcept { return std::uint64_t{1} << man_bits; }

  friend bool operator==(const FloatConfig&, const FloatConfig&) = default;
};

// IEEE double layout (E = 11, M = 52); the reference resolution for all comparisons.
inline FloatConfig baseline_config() { return FloatConfig::make(11, 52); }

struct CustomFloat {
  bool is_zero = true;
  std::int64_t exponent = 0;   // unbiased
  std::uint64_t mantissa = 0;  // numerator over 2^M

  static constexpr CustomFloat zero() noexcept { return {}; }
  static constexpr CustomFloat normal(std::int64_t e, std::uint64_t m) noexcept { return {false, e, m}; }

  friend bool operator==(const CustomFloat&, const CustomFloat&) = default;

  // Value order (valid when both operands come from the same config).
  friend std::strong_ordering operator<=>(const CustomFloat& a, const CustomFloat& b) noexcept {
    if (a.is_zero || b.is_zero) return (!a.is_zero) <=> (!b.is_zero);
    if (auto c = a.exponent <=> b.exponent; c != 0) return c;
    return a.mantissa <=> b.mantissa;
  }
};

struct MultResult {
  CustomFloat value;
  bool underflowed = false;
  bool overflowed = false;
};

namespace detail {

__extension__ using u128 = unsigned __int128;
__extension__ using i128 = __int128;

inline u128 pow2(int k) { return u128{1} << k; }

// v / 2^shift, rounded per mode. A negative shift is an exact left shift.
// Callers keep |shift| well below 64.
inline u128 shift_round(u128 v, int shift, Rounding mode) {
  if (shift <= 0) return v << -shift;
  const u128 q = v >> shift;
  const u128 rem = v & (pow2(shift) - 1);
  if (mode == Rounding::TowardZero) return q;
  const u128 half = pow2(shift - 1);
  return (rem > half || (rem == half && (q & 1))) ? q + 1 : q;
}

// Packs value sig * 2^(e - M) with sig in [2^M, 2^(M+1)], applying the
// post-rounding carry and exponent saturation.
inline MultResult finish(std::int64_t e, u128 sig, const FloatConfig& cfg) {
  const int M = cfg.man_bits;
  if (sig == pow2(M + 1)) {
    sig >>= 1;
    ++e;
  }
  const std::int64_t biased = e + cfg.bias;
  if (biased < 1) return {CustomFloat::zero(), true, false};
  if (biased > cfg.max_biased_exponent()) {
    return {CustomFloat::normal(cfg.max_exponent(), cfg.mantissa_scale() - 1), false, true};
  }
  return {CustomFloat::normal(e, static_cast<std::uint64_t>(sig - pow2(M))), false, false};
}

inline u128 significand(const CustomFloat& v, const FloatConfig& cfg) { return pow2(cfg.man_bits) + v.mantissa; }

}  // namespace detail

// Nearest representable value under cfg.rounding. Zero encodes as zero; values
// below the smallest normal flush to zero with `underflowed`; values above the
// largest representable value saturate with `overflowed`.
inline MultResult encode(double x, const FloatConfig& cfg) {
  if (!std::isfinite(x) || x < 0.0) throw DomainError("encode expects a finite non-negative value, got " + std::to_string(x));
  if (x == 0.0) return {};
  int k = 0;
  const double f = std::frexp(x, &k);  // x = f * 2^k, f in [0.5, 1)
  const auto sig53 = static_cast<std::uint64_t>(std::ldexp(f, 53));
  const std::int64_t e = k - 1;
  const detail::u128 sig = detail::shift_round(sig53, 52 - cfg.man_bits, cfg.rounding);
  return detail::finish(e, sig, cfg);
}

inline double decode(const CustomFloat& v, const FloatConfig& cfg) {
  if (v.is_zero) return 0.0;
  return std::ldexp(static_cast<double>(cfg.mantissa_scale() + v.mantissa), static_cast<int>(v.exponent - cfg.man_bits));
}

// Mantissa as a fraction in [0, 1).
inline double mantissa_fraction(const CustomFloat& v, const FloatConfig& cfg) {
  return std::ldexp(static_cast<double>(v.mantissa), -cfg.man_bits);
}

// log2 of the represented value; -inf for zero. Does not underflow for wide exponents.
inline double log2_value(const CustomFloat& v, const FloatConfig& cfg) {
  if (v.is_zero) return -INFINITY;
  return static_cast<double>(v.exponent) + std::log1p(mantissa_fraction(v, cfg)) / std::numbers::ln2;
}

// The bit pattern read as a fixed-point log2: e + m/2^M (Mitchell's approximation
// of the logarithm). Under AAI this quantity is exactly additive.
inline double mitchell_log2(const CustomFloat& v, const FloatConfig& cfg) {
  if (v.is_zero) return -INFINITY;
  return static_cast<double>(v.exponent) + mantissa_fraction(v, cfg);
}

// Exact product: add exponents, full-width significand product, normalize, round once.
inline MultResult exact_mul(const CustomFloat& a, const CustomFloat& b, const FloatConfig& cfg) {
  if (a.is_zero || b.is_zero) return {};
  const int M = cfg.man_bits;
  const detail::u128 product = detail::significand(a, cfg) * detail::significand(b, cfg);  // < 2^(2M+2)
  std::int64_t e = a.exponent + b.exponent;
  int shift = M;
  if (product >= detail::pow2(2 * M + 1)) {
    ++e;
    shift = M + 1;
  }
  return detail::finish(e, detail::shift_round(product, shift, cfg.rounding), cfg);
}

// Addition-As-Int product: exponents and mantissa fractions are added, the
// mantissa carry moves into the exponent. The sum always fits in M bits, so no
// rounding happens and the result never exceeds the exact product.
inline MultResult aai_mul(const CustomFloat& a, const CustomFloat& b, const FloatConfig& cfg) {
  if (a.is_zero || b.is_zero) return {};
  const std::uint64_t scale = cfg.mantissa_scale();
  std::uint64_t m = a.mantissa + b.mantissa;
  std::int64_t e = a.exponent + b.exponent;
  if (m >= scale) {
    m -= scale;
    ++e;
  }
  return detail::finish(e, detail::pow2(cfg.man_bits) + m, cfg);
}

// Exact sum: align, add with guard bits and a sticky bit, renormalize, round once.
inline MultResult exact_add(const CustomFloat& a, const CustomFloat& b, const FloatConfig& cfg) {
  if (a.is_zero) return {b, false, false};
  if (b.is_zero) return {a, false, false};
  const CustomFloat& hi = (a <=> b) >= 0 ? a : b;
  const CustomFloat& lo = (a <=> b) >= 0 ? b : a;
  constexpr int kGuard = 3;
  const int M = cfg.man_bits;
  const detail::u128 big = detail::significand(hi, cfg) << kGuard;
  const detail::u128 small_full = detail::significand(lo, cfg) << kGuard;
  const std::int64_t d = hi.exponent - lo.exponent;
  detail::u128 small = 0;
  if (d >= M + 1 + kGuard) {
    small = 1;  // entirely below the guard bits: sticky only
  } else {
    small = small_full >> d;
    if ((small << d) != small_full) small |= 1;
  }
  const detail::u128 sum = big + small;
  std::int64_t e = hi.exponent;
  int shift = kGuard;
  if (sum >= detail::pow2(M + 1 + kGuard)) {
    ++e;
    ++shift;
  }
  return detail::finish(e, detail::shift_round(sum, shift, cfg.rounding), cfg);
}

// Bit layout: biased exponent in the high E bits, mantissa numerator in the low M bits.
inline std::uint64_t to_bits(const CustomFloat& v, const FloatConfig& cfg) {
  if (v.is_zero) return 0;
  return (static_cast<std::uint64_t>(v.exponent + cfg.bias) << cfg.man_bits) | v.mantissa;
}

inline CustomFloat from_bits(std::uint64_t bits, const FloatConfig& cfg) {
  if (bits >> (cfg.exp_bits + cfg.man_bits)) throw DomainError("bit pattern wider than E + M bits");
  const std::uint64_t field = bits >> cfg.man_bits;
  const std::uint64_t mantissa = bits & (cfg.mantissa_scale() - 1);
  if (field == 0) {
    if (mantissa != 0) throw DomainError("exponent field 0 is reserved for zero");
    return CustomFloat::zero();
  }
  return CustomFloat::normal(static_cast<std::int64_t>(field) - cfg.bias, mantissa);
}

// AAI on raw patterns: one integer addition, then remove the duplicated bias.
// Underflow returns the zero pattern; overflow returns the largest pattern.
inline std::uint64_t aai_mul_bits(std::uint64_t a_bits, std::uint64_t b_bits, const FloatConfig& cfg) {
  const int M = cfg.man_bits;
  const int width = cfg.exp_bits + M;
  for (std::uint64_t p : {a_bits, b_bits}) {
    if ((p >> M) == 0) throw DomainError("aai_mul_bits: zero exponent field is the reserved zero pattern");
    if (p >> width) throw DomainError("aai_mul_bits: pattern wider than E + M bits");
  }
  const detail::i128 sum = detail::i128(a_bits) + detail::i128(b_bits) - detail::i128(cfg.bias) * detail::i128(cfg.mantissa_scale());
  if (sum < detail::i128(cfg.mantissa_scale())) return 0;
  if (sum >= (detail::i128(1) << width)) return (std::uint64_t{1} << width) - 1;
  return static_cast<std::uint64_t>(sum);
}

// Mitchell error of one operand: log2(1 + F) - F for F in [0, 1].
inline double mitchell_delta(double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw DomainError("mitchell_delta expects F in [0, 1]");
  const double d = std::log2(1.0 + fraction) - fraction;
  return d > 0.0 ? d : 0.0;
}

}  // namespace pcaai
