#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "maltml/param_vector.hpp"

namespace maltml {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t worst_coord = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

using ScalarFn = std::function<double(const std::vector<double>&)>;
using GradFn = std::function<std::vector<double>(const std::vector<double>&)>;

// Central-difference check of an analytic gradient. Per coordinate the error
// is |analytic - central| / max(1, |central|); the report carries the max.
// eps must lie in [1e-7, 1e-3]; non-finite f at a probe point throws.
GradCheckReport finite_diff_check(const ScalarFn& f, const GradFn& analytic_grad,
                                  std::vector<double> theta, double eps);

GradCheckReport finite_diff_check(const std::function<double(const ParamVector&)>& f,
                                  const std::function<std::vector<double>(const ParamVector&)>& analytic_grad,
                                  const ParamVector& theta, double eps);

}  // namespace maltml
