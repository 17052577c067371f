#include "maltml/tasks.hpp"

#include "maltml/errors.hpp"

namespace maltml {

FamilyParams sample_family(Rng& rng) { return FamilyParams{rng.uniform(kPhaseLo, kPhaseHi)}; }

Task sample_task(const FamilyParams& family, Rng& rng) {
  return Task{rng.uniform(kAmplitudeLo, kAmplitudeHi), family.phase};
}

SampleSet draw_samples(const Task& task, int n, SampleRole role, Rng& rng) {
  if (n < 1) throw ConfigError("draw_samples: need at least one sample");
  SampleSet set;
  set.role = role;
  set.xs.reserve(n);
  set.ys.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double x = rng.uniform(kInputLo, kInputHi);
    set.xs.push_back(x);
    set.ys.push_back(task.eval(x));
  }
  return set;
}

std::vector<double> task_targets(const Task& task, const std::vector<double>& xs) {
  std::vector<double> ys;
  ys.reserve(xs.size());
  for (double x : xs) ys.push_back(task.eval(x));
  return ys;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> xs;
  xs.reserve(n);
  if (n == 1) {
    xs.push_back(lo);
    return xs;
  }
  for (int i = 0; i < n; ++i) {
    xs.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return xs;
}

}  // namespace maltml
