#pragma once

#include <cstdint>
#include <vector>

#include "maltml/expr.hpp"
#include "maltml/param_vector.hpp"

namespace maltml {

// Two ReLU hidden layers; input_dim is 1 for the regression model and 3 for
// the oracle, which sees (x, amplitude, phase).
struct ModelSpec {
  int input_dim = 1;
  int hidden1 = 40;
  int hidden2 = 40;
  int output_dim = 1;
};

class Model {
 public:
  virtual ~Model() = default;
  virtual LayoutPtr layout() const = 0;
  virtual int input_dim() const = 0;
  // inputs: (input_dim x N) data matrix; returns (output_dim x N) predictions.
  virtual Expr forward(const std::vector<Expr>& params, const Tensor& inputs) const = 0;
};

class Mlp : public Model {
 public:
  explicit Mlp(ModelSpec spec);
  LayoutPtr layout() const override { return layout_; }
  int input_dim() const override { return spec_.input_dim; }
  const ModelSpec& spec() const { return spec_; }
  Expr forward(const std::vector<Expr>& params, const Tensor& inputs) const override;

 private:
  ModelSpec spec_;
  LayoutPtr layout_;
};

// f(x) = theta, a single scalar parameter ignoring the input. Used by the
// closed-form update tests and the gradient-check CLI.
class ScalarModel : public Model {
 public:
  ScalarModel();
  LayoutPtr layout() const override { return layout_; }
  int input_dim() const override { return 1; }
  Expr forward(const std::vector<Expr>& params, const Tensor& inputs) const override;

 private:
  LayoutPtr layout_;
};

// Deterministic given (spec, seed): weights fan-in-scaled uniform
// U(-sqrt(6/fan_in), sqrt(6/fan_in)) so Var(w) = 2/fan_in, biases zero.
ParamVector init_params(const Mlp& model, std::uint64_t seed);

// Mean squared error over all prediction entries; empty batches are rejected.
Expr mse_loss(const Expr& pred, const Tensor& target);

// Convenience: forward numeric parameters on raw inputs (no graph kept).
std::vector<double> predict(const Model& model, const ParamVector& params,
                            const std::vector<double>& xs);

// Pack a 1-d batch into the (1 x N) input matrix.
Tensor input_matrix(const std::vector<double>& xs);

}  // namespace maltml
