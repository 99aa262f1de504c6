#pragma once

#include <algorithm>
#include <vector>

#include "survmi/errors.hpp"

namespace survmi {

// Right-continuous cumulative hazard: 0 before the first knot, value of the
// largest knot <= t otherwise. Knots strictly increase, values never
// decrease.
struct StepFunction {
  std::vector<double> knots;
  std::vector<double> values;

  double operator()(double t) const {
    auto it = std::upper_bound(knots.begin(), knots.end(), t);
    if (it == knots.begin()) return 0.0;
    return values[static_cast<std::size_t>(it - knots.begin()) - 1];
  }

  void validate() const {
    if (knots.size() != values.size())
      throw ShapeError("step function knots/values length mismatch");
    for (std::size_t i = 0; i < knots.size(); ++i) {
      if (knots[i] <= 0.0)
        throw ValidationError("step function knots must be positive");
      if (i > 0 && knots[i] <= knots[i - 1])
        throw ValidationError("step function knots must strictly increase");
      if (values[i] < 0.0 || (i > 0 && values[i] < values[i - 1]))
        throw ValidationError("step function values must be non-decreasing");
    }
  }
};

// Right-continuous survival curve in (0,1]; 1 before the first knot. Also
// exposes the left limit, needed for inverse-censoring weights G(t-).
struct SurvivalCurve {
  std::vector<double> knots;
  std::vector<double> values;

  double operator()(double t) const {
    auto it = std::upper_bound(knots.begin(), knots.end(), t);
    if (it == knots.begin()) return 1.0;
    return values[static_cast<std::size_t>(it - knots.begin()) - 1];
  }

  double left_limit(double t) const {
    auto it = std::lower_bound(knots.begin(), knots.end(), t);
    if (it == knots.begin()) return 1.0;
    return values[static_cast<std::size_t>(it - knots.begin()) - 1];
  }
};

}  // namespace survmi
