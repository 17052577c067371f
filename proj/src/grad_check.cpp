#include "maltml/grad_check.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "maltml/errors.hpp"

namespace maltml {

GradCheckReport finite_diff_check(const ScalarFn& f, const GradFn& analytic_grad,
                                  std::vector<double> theta, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw ConfigError("finite_diff_check: eps " + std::to_string(eps) +
                      " outside [1e-7, 1e-3]");
  }
  const std::vector<double> analytic = analytic_grad(theta);
  if (analytic.size() != theta.size()) {
    throw ShapeError("finite_diff_check: gradient size " + std::to_string(analytic.size()) +
                     " != parameter size " + std::to_string(theta.size()));
  }

  GradCheckReport report;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + eps;
    const double f_plus = f(theta);
    theta[i] = saved - eps;
    const double f_minus = f(theta);
    theta[i] = saved;
    if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
      throw NumericError("finite_diff_check: non-finite value at probe of coordinate " +
                         std::to_string(i));
    }
    const double central = (f_plus - f_minus) / (2.0 * eps);
    const double rel = std::abs(analytic[i] - central) / std::max(1.0, std::abs(central));
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_coord = i;
      report.analytic_at_worst = analytic[i];
      report.numeric_at_worst = central;
    }
  }
  return report;
}

GradCheckReport finite_diff_check(const std::function<double(const ParamVector&)>& f,
                                  const std::function<std::vector<double>(const ParamVector&)>& analytic_grad,
                                  const ParamVector& theta, double eps) {
  ParamVector probe = theta;
  auto flat_f = [&](const std::vector<double>& x) {
    probe.data = x;
    return f(probe);
  };
  auto flat_grad = [&](const std::vector<double>& x) {
    probe.data = x;
    return analytic_grad(probe);
  };
  return finite_diff_check(flat_f, flat_grad, theta.data, eps);
}

}  // namespace maltml
