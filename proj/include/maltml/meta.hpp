#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "maltml/expr.hpp"
#include "maltml/mlp.hpp"
#include "maltml/param_vector.hpp"
#include "maltml/tasks.hpp"

namespace maltml {

struct StepSizes {
  double alpha = 1e-3;  // task adaptation (inner) rate
  double beta = 1e-2;   // family meta-finetune rate
  double gamma = 1e-3;  // goal-task fine-tune rate
  double eta = 1e-3;    // outer rate (initial Adam rate)
};

struct LoopCounts {
  int r = 1;       // task gradient steps inside U
  int m = 1;       // meta steps inside V
  int r_eval = 10; // goal fine-tune steps at evaluation
  int m_fo = 3;    // first-order meta steps (must be >= 2)
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  LayoutPtr layout;
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;

  static AdamState init(LayoutPtr layout);
};

// Standard Adam with bias correction. Layouts must match.
void adam_update(ParamVector& params, const std::vector<double>& grads, AdamState& state,
                 double eta, const AdamConfig& cfg = {});

// Loss of parameters on one task's samples. The regression instance ignores
// the task (inputs are x only); the oracle instance feeds (x, amplitude,
// phase); tests plug in closed-form losses.
using TaskLossFn =
    std::function<Expr(const std::vector<Expr>& params, const Task& task, const SampleSet& samples)>;

TaskLossFn make_regression_loss(const Model& model);
TaskLossFn make_oracle_loss(const Model& model);
// (x, amplitude, phase) columns for the oracle network.
Tensor oracle_inputs(const Task& task, const std::vector<double>& xs);

struct TaskData {
  Task task;
  SampleSet support;
  SampleSet query;
};

struct GoalTask {
  Task task;
  SampleSet support;     // K fresh shots for goal fine-tuning
  SampleSet validation;  // fresh data carrying the outer loss
};

// Everything one family contributes to an outer step.
struct FamilyEpisode {
  FamilyParams family;
  std::vector<TaskData> meta_tasks;
  std::vector<GoalTask> goal_tasks;
};

// U: r gradient steps on the support loss at the given rate. With
// create_graph the result stays differentiable w.r.t. the incoming params.
std::vector<Expr> task_adapt(const TaskLossFn& loss, std::vector<Expr> params, const Task& task,
                             const SampleSet& support, double rate, int r, bool create_graph);
ParamVector task_adapt(const TaskLossFn& loss, const ParamVector& params, const Task& task,
                       const SampleSet& support, double rate, int r);

// V: m meta steps; each adapts every task on its support set, sums the query
// losses of the adapted parameters and steps the shared parameters by beta
// against that summed loss.
std::vector<Expr> family_meta_finetune(const TaskLossFn& loss, std::vector<Expr> params,
                                       const std::vector<TaskData>& tasks, double alpha,
                                       double beta, int r, int m, bool create_graph);
ParamVector family_meta_finetune(const TaskLossFn& loss, const ParamVector& params,
                                 const std::vector<TaskData>& tasks, double alpha, double beta,
                                 int r, int m);

// First-order V: meta-gradients are the query-loss gradients at the adapted
// parameters, treated as constants (no higher-order graph is ever built).
// Requires m_fo >= 2. Optionally reports the summed query loss of the first
// meta pass and the number of contributing tasks.
ParamVector firstorder_meta_finetune(const TaskLossFn& loss, const ParamVector& params,
                                     const std::vector<TaskData>& tasks, double alpha, double beta,
                                     int r, int m_fo, double* first_pass_loss = nullptr,
                                     int* first_pass_terms = nullptr);

struct OuterGrad {
  double total_loss = 0.0;     // unweighted sum, as in the objective
  double mean_loss = 0.0;      // total / number of loss terms, for reporting
  std::vector<double> grads;   // flat, layout order
};

struct StepResult {
  bool applied = false;  // false: non-finite loss/gradient, state untouched
  double mean_loss = 0.0;
};

// Outer gradient of sum_d sum_c L_c(U_gamma(V_beta(theta))) w.r.t. theta.
// The chain through both V and U stays differentiable, so this is the full
// higher-order gradient.
OuterGrad maltml_outer_grad(const TaskLossFn& loss, const ParamVector& theta,
                            const std::vector<FamilyEpisode>& batch, const StepSizes& rates,
                            const LoopCounts& loops);
StepResult maltml_outer_step(const TaskLossFn& loss, ParamVector& theta,
                             const std::vector<FamilyEpisode>& batch, const StepSizes& rates,
                             const LoopCounts& loops, AdamState& adam, const AdamConfig& cfg = {});

// Reptile-style update toward family-adapted parameters:
// theta += eta * sum_d (V~(theta) - theta).
StepResult maltml_firstorder_step(const TaskLossFn& loss, ParamVector& theta,
                                  const std::vector<std::vector<TaskData>>& families,
                                  const StepSizes& rates, const LoopCounts& loops);

// Second-order MAML: outer loss is the summed query loss of task-adapted
// parameters, differentiated through the adaptation.
OuterGrad maml_outer_grad(const TaskLossFn& loss, const ParamVector& theta,
                          const std::vector<TaskData>& tasks, double alpha, int r);
StepResult maml_outer_step(const TaskLossFn& loss, ParamVector& theta,
                           const std::vector<TaskData>& tasks, double alpha, int r, double eta,
                           AdamState& adam, const AdamConfig& cfg = {});

// Plain MSE regression on pooled samples.
StepResult pretrain_step(const Model& model, ParamVector& theta, const SampleSet& pooled,
                         double eta, AdamState& adam, const AdamConfig& cfg = {});

// Supervised regression on (x, amplitude, phase) -> y.
StepResult oracle_train_step(const Model& model, ParamVector& theta,
                             const std::vector<std::pair<Task, SampleSet>>& batch, double eta,
                             AdamState& adam, const AdamConfig& cfg = {});
std::vector<double> oracle_predict(const Model& model, const ParamVector& params, const Task& task,
                                   const std::vector<double>& xs);

}  // namespace maltml
