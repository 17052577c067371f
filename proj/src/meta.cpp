#include "maltml/meta.hpp"

#include <cmath>
#include <string>

#include "maltml/errors.hpp"
#include "maltml/log.hpp"

namespace maltml {

AdamState AdamState::init(LayoutPtr layout) {
  AdamState st;
  st.m.assign(static_cast<std::size_t>(layout->total()), 0.0);
  st.v.assign(static_cast<std::size_t>(layout->total()), 0.0);
  st.layout = std::move(layout);
  return st;
}

void adam_update(ParamVector& params, const std::vector<double>& grads, AdamState& state,
                 double eta, const AdamConfig& cfg) {
  if (!state.layout || !(*state.layout == *params.layout)) {
    throw ShapeError("adam_update: optimizer state layout differs from parameters");
  }
  if (grads.size() != params.data.size()) {
    throw ShapeError("adam_update: gradient size " + std::to_string(grads.size()) +
                     " != parameter size " + std::to_string(params.data.size()));
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params.data[i] -= eta * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

TaskLossFn make_regression_loss(const Model& model) {
  return [&model](const std::vector<Expr>& params, const Task&, const SampleSet& samples) {
    Expr pred = model.forward(params, input_matrix(samples.xs));
    return mse_loss(pred, Tensor::rowvec(samples.ys));
  };
}

Tensor oracle_inputs(const Task& task, const std::vector<double>& xs) {
  Tensor in(3, static_cast<int>(xs.size()));
  for (std::size_t j = 0; j < xs.size(); ++j) {
    in.at(0, static_cast<int>(j)) = xs[j];
    in.at(1, static_cast<int>(j)) = task.amplitude;
    in.at(2, static_cast<int>(j)) = task.phase;
  }
  return in;
}

TaskLossFn make_oracle_loss(const Model& model) {
  return [&model](const std::vector<Expr>& params, const Task& task, const SampleSet& samples) {
    Expr pred = model.forward(params, oracle_inputs(task, samples.xs));
    return mse_loss(pred, Tensor::rowvec(samples.ys));
  };
}

namespace {

void check_finite_loss(const Expr& loss, const char* where, const Task& task) {
  const double v = loss.scalar_value();
  if (!std::isfinite(v)) {
    throw NumericError(std::string(where) + ": non-finite loss " + std::to_string(v) +
                       " (task amplitude=" + std::to_string(task.amplitude) +
                       ", phase=" + std::to_string(task.phase) + ")");
  }
}

std::vector<Expr> apply_gradient_step(std::vector<Expr> params, const std::vector<Expr>& grads,
                                      double rate) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] = sub(params[i], scalar_mul(rate, grads[i]));
  }
  return params;
}

}  // namespace

std::vector<Expr> task_adapt(const TaskLossFn& loss, std::vector<Expr> params, const Task& task,
                             const SampleSet& support, double rate, int r, bool create_graph) {
  if (support.size() == 0) throw ConfigError("task_adapt: empty support set");
  if (r < 1) throw ConfigError("task_adapt: r must be >= 1");
  for (int rep = 0; rep < r; ++rep) {
    Expr l = loss(params, task, support);
    check_finite_loss(l, "task_adapt", task);
    std::vector<Expr> g = grad(l, params, create_graph);
    params = apply_gradient_step(std::move(params), g, rate);
  }
  return params;
}

ParamVector task_adapt(const TaskLossFn& loss, const ParamVector& params, const Task& task,
                       const SampleSet& support, double rate, int r) {
  std::vector<Expr> adapted =
      task_adapt(loss, bind_params(params), task, support, rate, r, /*create_graph=*/false);
  return read_params(params.layout, adapted);
}

std::vector<Expr> family_meta_finetune(const TaskLossFn& loss, std::vector<Expr> params,
                                       const std::vector<TaskData>& tasks, double alpha,
                                       double beta, int r, int m, bool create_graph) {
  if (tasks.empty()) throw ConfigError("family_meta_finetune: no tasks");
  if (m < 1) throw ConfigError("family_meta_finetune: m must be >= 1");
  for (int meta = 0; meta < m; ++meta) {
    Expr total;
    for (const TaskData& td : tasks) {
      // The meta gradient differentiates through the task adaptation, so the
      // inner graph is always kept; create_graph only controls whether the
      // returned parameters stay differentiable w.r.t. the input.
      std::vector<Expr> adapted =
          task_adapt(loss, params, td.task, td.support, alpha, r, /*create_graph=*/true);
      Expr l = loss(adapted, td.task, td.query);
      check_finite_loss(l, "family_meta_finetune", td.task);
      total = total.defined() ? add(total, l) : l;
    }
    std::vector<Expr> g = grad(total, params, create_graph);
    params = apply_gradient_step(std::move(params), g, beta);
  }
  return params;
}

ParamVector family_meta_finetune(const TaskLossFn& loss, const ParamVector& params,
                                 const std::vector<TaskData>& tasks, double alpha, double beta,
                                 int r, int m) {
  std::vector<Expr> adapted = family_meta_finetune(loss, bind_params(params), tasks, alpha, beta,
                                                   r, m, /*create_graph=*/false);
  return read_params(params.layout, adapted);
}

ParamVector firstorder_meta_finetune(const TaskLossFn& loss, const ParamVector& params,
                                     const std::vector<TaskData>& tasks, double alpha, double beta,
                                     int r, int m_fo, double* first_pass_loss,
                                     int* first_pass_terms) {
  if (tasks.empty()) throw ConfigError("firstorder_meta_finetune: no tasks");
  if (m_fo < 2) {
    throw ConfigError("firstorder_meta_finetune: m_fo must be >= 2, got " + std::to_string(m_fo));
  }
  ParamVector current = params;
  for (int meta = 0; meta < m_fo; ++meta) {
    std::vector<double> meta_grad(current.data.size(), 0.0);
    double pass_loss = 0.0;
    for (const TaskData& td : tasks) {
      ParamVector adapted = task_adapt(loss, current, td.task, td.support, alpha, r);
      // Gradient at the adapted parameters, used as-is for the meta step.
      std::vector<Expr> leaves = bind_params(adapted);
      Expr l = loss(leaves, td.task, td.query);
      check_finite_loss(l, "firstorder_meta_finetune", td.task);
      pass_loss += l.scalar_value();
      std::vector<double> g = flatten_values(*current.layout, grad(l, leaves, false));
      for (std::size_t i = 0; i < meta_grad.size(); ++i) meta_grad[i] += g[i];
    }
    if (meta == 0) {
      if (first_pass_loss) *first_pass_loss = pass_loss;
      if (first_pass_terms) *first_pass_terms = static_cast<int>(tasks.size());
    }
    for (std::size_t i = 0; i < current.data.size(); ++i) current.data[i] -= beta * meta_grad[i];
  }
  return current;
}

OuterGrad maltml_outer_grad(const TaskLossFn& loss, const ParamVector& theta,
                            const std::vector<FamilyEpisode>& batch, const StepSizes& rates,
                            const LoopCounts& loops) {
  if (batch.empty()) throw ConfigError("maltml_outer_grad: empty family batch");
  std::vector<Expr> leaves = bind_params(theta);
  Expr outer_total;
  int terms = 0;
  for (const FamilyEpisode& episode : batch) {
    if (episode.goal_tasks.empty()) {
      throw ConfigError("maltml_outer_grad: family without goal tasks");
    }
    std::vector<Expr> family_params =
        family_meta_finetune(loss, leaves, episode.meta_tasks, rates.alpha, rates.beta, loops.r,
                             loops.m, /*create_graph=*/true);
    for (const GoalTask& goal : episode.goal_tasks) {
      std::vector<Expr> goal_params = task_adapt(loss, family_params, goal.task, goal.support,
                                                 rates.gamma, loops.r, /*create_graph=*/true);
      Expr l = loss(goal_params, goal.task, goal.validation);
      check_finite_loss(l, "maltml_outer_grad", goal.task);
      outer_total = outer_total.defined() ? add(outer_total, l) : l;
      ++terms;
    }
  }
  OuterGrad out;
  out.total_loss = outer_total.scalar_value();
  out.mean_loss = out.total_loss / terms;
  out.grads = flatten_values(*theta.layout, grad(outer_total, leaves, /*create_graph=*/false));
  for (double g : out.grads) {
    if (!std::isfinite(g)) throw NumericError("maltml_outer_grad: non-finite outer gradient");
  }
  return out;
}

namespace {

StepResult apply_outer(ParamVector& theta, AdamState& adam, double eta, const AdamConfig& cfg,
                       const OuterGrad& og) {
  ParamVector next = theta;
  AdamState next_adam = adam;
  adam_update(next, og.grads, next_adam, eta, cfg);
  theta = std::move(next);
  adam = std::move(next_adam);
  return StepResult{true, og.mean_loss};
}

}  // namespace

StepResult maltml_outer_step(const TaskLossFn& loss, ParamVector& theta,
                             const std::vector<FamilyEpisode>& batch, const StepSizes& rates,
                             const LoopCounts& loops, AdamState& adam, const AdamConfig& cfg) {
  try {
    return apply_outer(theta, adam, rates.eta, cfg, maltml_outer_grad(loss, theta, batch, rates, loops));
  } catch (const NumericError& e) {
    log_info("maltml outer step aborted: %s", e.what());
    return StepResult{false, 0.0};
  }
}

StepResult maltml_firstorder_step(const TaskLossFn& loss, ParamVector& theta,
                                  const std::vector<std::vector<TaskData>>& families,
                                  const StepSizes& rates, const LoopCounts& loops) {
  if (families.empty()) throw ConfigError("maltml_firstorder_step: empty family batch");
  try {
    std::vector<double> delta_sum(theta.data.size(), 0.0);
    double loss_sum = 0.0;
    int terms = 0;
    for (const std::vector<TaskData>& tasks : families) {
      double pass_loss = 0.0;
      int pass_terms = 0;
      ParamVector adapted = firstorder_meta_finetune(loss, theta, tasks, rates.alpha, rates.beta,
                                                     loops.r, loops.m_fo, &pass_loss, &pass_terms);
      for (std::size_t i = 0; i < delta_sum.size(); ++i) {
        delta_sum[i] += adapted.data[i] - theta.data[i];
      }
      loss_sum += pass_loss;
      terms += pass_terms;
    }
    for (double d : delta_sum) {
      if (!std::isfinite(d)) throw NumericError("maltml_firstorder_step: non-finite update");
    }
    for (std::size_t i = 0; i < theta.data.size(); ++i) {
      theta.data[i] += rates.eta * delta_sum[i];
    }
    return StepResult{true, loss_sum / terms};
  } catch (const NumericError& e) {
    log_info("first-order outer step aborted: %s", e.what());
    return StepResult{false, 0.0};
  }
}

OuterGrad maml_outer_grad(const TaskLossFn& loss, const ParamVector& theta,
                          const std::vector<TaskData>& tasks, double alpha, int r) {
  if (tasks.empty()) throw ConfigError("maml_outer_grad: empty task batch");
  std::vector<Expr> leaves = bind_params(theta);
  Expr total;
  for (const TaskData& td : tasks) {
    std::vector<Expr> adapted =
        task_adapt(loss, leaves, td.task, td.support, alpha, r, /*create_graph=*/true);
    Expr l = loss(adapted, td.task, td.query);
    check_finite_loss(l, "maml_outer_grad", td.task);
    total = total.defined() ? add(total, l) : l;
  }
  OuterGrad out;
  out.total_loss = total.scalar_value();
  out.mean_loss = out.total_loss / static_cast<double>(tasks.size());
  out.grads = flatten_values(*theta.layout, grad(total, leaves, /*create_graph=*/false));
  for (double g : out.grads) {
    if (!std::isfinite(g)) throw NumericError("maml_outer_grad: non-finite outer gradient");
  }
  return out;
}

StepResult maml_outer_step(const TaskLossFn& loss, ParamVector& theta,
                           const std::vector<TaskData>& tasks, double alpha, int r, double eta,
                           AdamState& adam, const AdamConfig& cfg) {
  try {
    return apply_outer(theta, adam, eta, cfg, maml_outer_grad(loss, theta, tasks, alpha, r));
  } catch (const NumericError& e) {
    log_info("maml outer step aborted: %s", e.what());
    return StepResult{false, 0.0};
  }
}

StepResult pretrain_step(const Model& model, ParamVector& theta, const SampleSet& pooled,
                         double eta, AdamState& adam, const AdamConfig& cfg) {
  try {
    std::vector<Expr> leaves = bind_params(theta);
    Expr l = mse_loss(model.forward(leaves, input_matrix(pooled.xs)), Tensor::rowvec(pooled.ys));
    const double lv = l.scalar_value();
    if (!std::isfinite(lv)) throw NumericError("pretrain_step: non-finite loss");
    OuterGrad og;
    og.total_loss = og.mean_loss = lv;
    og.grads = flatten_values(*theta.layout, grad(l, leaves, false));
    return apply_outer(theta, adam, eta, cfg, og);
  } catch (const NumericError& e) {
    log_info("pretrain step aborted: %s", e.what());
    return StepResult{false, 0.0};
  }
}

StepResult oracle_train_step(const Model& model, ParamVector& theta,
                             const std::vector<std::pair<Task, SampleSet>>& batch, double eta,
                             AdamState& adam, const AdamConfig& cfg) {
  if (batch.empty()) throw ConfigError("oracle_train_step: empty batch");
  try {
    // One pooled regression batch with task identities in the input columns.
    std::size_t n = 0;
    for (const auto& [task, set] : batch) n += set.size();
    Tensor inputs(3, static_cast<int>(n));
    std::vector<double> targets;
    targets.reserve(n);
    int col = 0;
    for (const auto& [task, set] : batch) {
      for (std::size_t j = 0; j < set.size(); ++j, ++col) {
        inputs.at(0, col) = set.xs[j];
        inputs.at(1, col) = task.amplitude;
        inputs.at(2, col) = task.phase;
        targets.push_back(set.ys[j]);
      }
    }
    std::vector<Expr> leaves = bind_params(theta);
    Expr l = mse_loss(model.forward(leaves, inputs), Tensor::rowvec(targets));
    const double lv = l.scalar_value();
    if (!std::isfinite(lv)) throw NumericError("oracle_train_step: non-finite loss");
    OuterGrad og;
    og.total_loss = og.mean_loss = lv;
    og.grads = flatten_values(*theta.layout, grad(l, leaves, false));
    return apply_outer(theta, adam, eta, cfg, og);
  } catch (const NumericError& e) {
    log_info("oracle step aborted: %s", e.what());
    return StepResult{false, 0.0};
  }
}

std::vector<double> oracle_predict(const Model& model, const ParamVector& params, const Task& task,
                                   const std::vector<double>& xs) {
  Expr out = model.forward(bind_params(params), oracle_inputs(task, xs));
  return out.value().v;
}

}  // namespace maltml
