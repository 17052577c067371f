#pragma once

#include <cmath>
#include <vector>

#include "maltml/expr.hpp"
#include "maltml/rng.hpp"

namespace maltml {

inline constexpr double kPhaseLo = 0.0;
inline constexpr double kPhaseHi = 3.14159265358979323846;  // pi
inline constexpr double kAmplitudeLo = 0.1;
inline constexpr double kAmplitudeHi = 5.0;
inline constexpr double kInputLo = -5.0;
inline constexpr double kInputHi = 5.0;

// One task distribution: all sinusoids sharing a phase.
struct FamilyParams {
  double phase = 0.0;
};

// One regression task. Targets follow y = amplitude * sin(x + phase); the
// phase enters additively and is inherited from the owning family.
struct Task {
  double amplitude = 1.0;
  double phase = 0.0;
  double eval(double x) const { return amplitude * std::sin(x + phase); }
};

enum class SampleRole { Support, Query };

struct SampleSet {
  std::vector<double> xs;
  std::vector<double> ys;
  SampleRole role = SampleRole::Support;
  std::size_t size() const { return xs.size(); }
};

// L tasks with K support / Q query shots each for meta-finetuning, plus the
// number of goal tasks per family that enter the outer loss.
struct ShotConfig {
  int L = 5;
  int K = 5;
  int Q = 5;
  int validation_tasks = 2;
};

FamilyParams sample_family(Rng& rng);                    // phase ~ U[0, pi]
Task sample_task(const FamilyParams& family, Rng& rng);  // amplitude ~ U[0.1, 5]
SampleSet draw_samples(const Task& task, int n, SampleRole role, Rng& rng);

// Targets for a fixed evaluation grid.
std::vector<double> task_targets(const Task& task, const std::vector<double>& xs);

// n evenly spaced points covering [lo, hi] inclusive.
std::vector<double> linspace(double lo, double hi, int n);

}  // namespace maltml
