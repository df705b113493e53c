#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fedsim/errors.hpp"

namespace fedsim {

// Flat model parameters, the unit exchanged by every component. For the
// built-in tasks the layout is [feature weights..., bias].
struct ParamVector {
  std::vector<double> values;
  std::uint32_t version = 0;

  ParamVector() = default;
  explicit ParamVector(std::vector<double> v, std::uint32_t ver = 0)
      : values(std::move(v)), version(ver) {}

  std::size_t dim() const { return values.size(); }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

inline ParamVector zeros(std::size_t dim, std::uint32_t version = 0) {
  return ParamVector(std::vector<double>(dim, 0.0), version);
}

inline bool all_finite(const ParamVector& v) {
  for (double x : v.values) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline void check_finite(const ParamVector& v, std::string_view where) {
  if (!all_finite(v)) {
    raise(ErrorCode::kNumeric,
          "non-finite parameter value in " + std::string(where));
  }
}

inline double l2_norm(const ParamVector& v) {
  double s = 0.0;
  for (double x : v.values) s += x * x;
  return std::sqrt(s);
}

inline double max_abs_diff(const ParamVector& a, const ParamVector& b) {
  if (a.dim() != b.dim()) {
    raise(ErrorCode::kShape, "max_abs_diff: dimension mismatch");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    m = std::max(m, std::abs(a.values[i] - b.values[i]));
  }
  return m;
}

}  // namespace fedsim
