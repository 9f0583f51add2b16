#pragma once

// Small circuits shared by the test binaries.

#include <string>
#include <vector>

#include "pcaai/circuit.hpp"

namespace testing_support {

using pcaai::UnitKind;
using pcaai::UnitSpec;

inline UnitSpec ind(std::int64_t id, int var, int value) {
  UnitSpec u;
  u.id = id;
  u.kind = UnitKind::Indicator;
  u.var = var;
  u.value = value;
  return u;
}

inline UnitSpec prod(std::int64_t id, std::vector<std::int64_t> children) {
  UnitSpec u;
  u.id = id;
  u.kind = UnitKind::Product;
  u.children = std::move(children);
  return u;
}

inline UnitSpec sum(std::int64_t id, std::vector<std::int64_t> children, std::vector<double> weights) {
  UnitSpec u;
  u.id = id;
  u.kind = UnitKind::Sum;
  u.children = std::move(children);
  u.weights = std::move(weights);
  return u;
}

inline std::vector<pcaai::Variable> binary_vars(int n) {
  std::vector<pcaai::Variable> v;
  for (int i = 0; i < n; ++i) v.push_back({i, 2});
  return v;
}

// The three-variable example circuit: root sum over [X1=0]*s2, [X1=1]*s2 and
// [X1=1]*s3, where s2 mixes [X3=0][X2=0] with [X3=1][X2=1] and s3 mixes
// [X2=1][X3=0] with [X3=1][X2=0]. Variables X1, X2, X3 have ids 0, 1, 2.
inline pcaai::Circuit fig2a(double w11 = 1.0 / 3, double w12 = 1.0 / 3, double w21 = 0.5, double w31 = 0.5) {
  const double w13 = 1.0 - w11 - w12;
  return pcaai::Circuit(binary_vars(3),
                        {ind(1, 0, 0), ind(2, 0, 1), ind(3, 2, 0), ind(4, 1, 0), ind(5, 2, 1), ind(6, 1, 1), ind(7, 2, 0),
                         ind(8, 2, 1), ind(9, 1, 0), prod(11, {1, 22}), prod(12, {2, 22}), prod(13, {2, 23}), prod(14, {3, 4}),
                         prod(15, {5, 6}), prod(16, {6, 7}), prod(17, {8, 9}), sum(21, {11, 12, 13}, {w11, w12, w13}),
                         sum(22, {14, 15}, {w21, 1.0 - w21}), sum(23, {16, 17}, {w31, 1.0 - w31})},
                        21);
}

// sum(w0, w1) over [X=0], [X=1].
inline pcaai::Circuit bernoulli(double w0) {
  return pcaai::Circuit(binary_vars(1), {ind(1, 0, 0), ind(2, 0, 1), sum(3, {1, 2}, {w0, 1.0 - w0})}, 3);
}

inline std::string data_path(const std::string& name) { return std::string(PCAAI_DATA_DIR) + "/" + name; }

}  // namespace testing_support
