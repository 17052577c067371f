#include "maltml/mlp.hpp"

#include <cmath>

#include "maltml/errors.hpp"
#include "maltml/rng.hpp"

namespace maltml {

Mlp::Mlp(ModelSpec spec) : spec_(spec) {
  if (spec_.input_dim <= 0 || spec_.hidden1 <= 0 || spec_.hidden2 <= 0 || spec_.output_dim <= 0) {
    throw ConfigError("Mlp: all dimensions must be positive");
  }
  layout_ = std::make_shared<const ParamLayout>(std::vector<ParamShape>{
      {"l1.weight", spec_.hidden1, spec_.input_dim},
      {"l1.bias", spec_.hidden1, 1},
      {"l2.weight", spec_.hidden2, spec_.hidden1},
      {"l2.bias", spec_.hidden2, 1},
      {"l3.weight", spec_.output_dim, spec_.hidden2},
      {"l3.bias", spec_.output_dim, 1},
  });
}

Expr Mlp::forward(const std::vector<Expr>& params, const Tensor& inputs) const {
  if (inputs.rows != spec_.input_dim) {
    throw ShapeError("Mlp::forward: input width " + std::to_string(inputs.rows) +
                     " != input_dim " + std::to_string(spec_.input_dim));
  }
  if (params.size() != layout_->count()) {
    throw ShapeError("Mlp::forward: expected " + std::to_string(layout_->count()) +
                     " parameter exprs");
  }
  const int n = inputs.cols;
  Expr x = Expr::constant(inputs);
  Expr h1 = relu(add(matmul(params[0], x), broadcast_cols(params[1], n)));
  Expr h2 = relu(add(matmul(params[2], h1), broadcast_cols(params[3], n)));
  return add(matmul(params[4], h2), broadcast_cols(params[5], n));
}

ScalarModel::ScalarModel() {
  layout_ = std::make_shared<const ParamLayout>(std::vector<ParamShape>{{"value", 1, 1}});
}

Expr ScalarModel::forward(const std::vector<Expr>& params, const Tensor& inputs) const {
  if (params.size() != 1) throw ShapeError("ScalarModel::forward: expected 1 parameter expr");
  return broadcast_cols(params[0], inputs.cols);
}

ParamVector init_params(const Mlp& model, std::uint64_t seed) {
  ParamVector pv = ParamVector::zeros(model.layout());
  const auto& shapes = model.layout()->shapes();
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const ParamShape& s = shapes[i];
    const bool is_bias = s.cols == 1 && s.name.ends_with("bias");
    if (is_bias) continue;  // biases stay zero
    Rng rng = derive_rng(seed, {streams::kInit, static_cast<std::uint64_t>(i)});
    const double bound = std::sqrt(6.0 / static_cast<double>(s.cols));  // cols == fan_in
    const int off = pv.layout->offset(i);
    for (int k = 0; k < s.size(); ++k) pv.data[off + k] = rng.uniform(-bound, bound);
  }
  return pv;
}

Expr mse_loss(const Expr& pred, const Tensor& target) {
  if (target.size() == 0) throw ShapeError("mse_loss: empty batch");
  if (pred.rows() != target.rows || pred.cols() != target.cols) {
    throw ShapeError("mse_loss: prediction shape " + pred.value().shape_str() +
                     " != target shape " + target.shape_str());
  }
  return mean(square(sub(pred, Expr::constant(target))));
}

std::vector<double> predict(const Model& model, const ParamVector& params,
                            const std::vector<double>& xs) {
  Expr out = model.forward(bind_params(params), input_matrix(xs));
  return out.value().v;
}

Tensor input_matrix(const std::vector<double>& xs) { return Tensor::rowvec(xs); }

}  // namespace maltml
