#pragma once

// Exact-rational rounding oracle: rounds a rational to the nearest value of a
// (E, M) format without touching the library's bit-level code paths.

#include <boost/multiprecision/cpp_int.hpp>

#include "pcaai/custom_float.hpp"

namespace oracle {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

inline cpp_rational pow2(long k) {
  cpp_int one = 1;
  return k >= 0 ? cpp_rational(one << k) : cpp_rational(cpp_int(1), one << -k);
}

inline cpp_rational value(const pcaai::CustomFloat& v, const pcaai::FloatConfig& cfg) {
  if (v.is_zero) return 0;
  const cpp_int sig = (cpp_int(1) << cfg.man_bits) + v.mantissa;
  return cpp_rational(sig) * pow2(static_cast<long>(v.exponent) - cfg.man_bits);
}

inline cpp_rational from_double(double x) {
  int k = 0;
  const double f = std::frexp(x, &k);
  return cpp_rational(cpp_int(static_cast<long long>(std::ldexp(f, 53)))) * pow2(k - 53);
}

struct Rounded {
  cpp_rational value;
  bool underflow = false;
  bool overflow = false;
};

// Round r > 0 to M bits under the mode; exponent range per cfg (no subnormals).
inline Rounded round(const cpp_rational& r, const pcaai::FloatConfig& cfg) {
  if (r == 0) return {0};
  long e = 0;
  while (r >= pow2(e + 1)) ++e;
  while (r < pow2(e)) --e;
  const cpp_rational scaled = r / pow2(e - cfg.man_bits);  // in [2^M, 2^(M+1))
  cpp_int q = numerator(scaled) / denominator(scaled);
  const cpp_rational rem = scaled - cpp_rational(q);
  if (cfg.rounding == pcaai::Rounding::NearestEven) {
    if (rem > cpp_rational(1, 2) || (rem == cpp_rational(1, 2) && (q & 1) != 0)) ++q;
  }
  if (q == (cpp_int(1) << (cfg.man_bits + 1))) {
    q >>= 1;
    ++e;
  }
  if (e < cfg.min_exponent()) return {0, true, false};
  if (e > cfg.max_exponent()) {
    const cpp_int max_sig = (cpp_int(1) << (cfg.man_bits + 1)) - 1;
    return {cpp_rational(max_sig) * pow2(cfg.max_exponent() - cfg.man_bits), false, true};
  }
  return {cpp_rational(q) * pow2(e - cfg.man_bits)};
}

}  // namespace oracle
