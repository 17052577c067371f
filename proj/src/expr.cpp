#include "maltml/expr.hpp"

#include <cmath>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "maltml/errors.hpp"

namespace maltml {

Tensor::Tensor(int r, int c, std::vector<double> data) : rows(r), cols(c), v(std::move(data)) {
  if (static_cast<std::size_t>(r) * c != v.size()) {
    throw ShapeError("Tensor: data size " + std::to_string(v.size()) + " does not match " +
                     std::to_string(r) + "x" + std::to_string(c));
  }
}

Tensor Tensor::scalar(double x) { return Tensor(1, 1, {x}); }

Tensor Tensor::colvec(const std::vector<double>& data) {
  return Tensor(static_cast<int>(data.size()), 1, data);
}

Tensor Tensor::rowvec(const std::vector<double>& data) {
  return Tensor(1, static_cast<int>(data.size()), data);
}

bool Tensor::all_finite() const {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::ScalarMul: return "scalar_mul";
    case Op::Mul: return "mul";
    case Op::MatMul: return "matmul";
    case Op::Transpose: return "transpose";
    case Op::Relu: return "relu";
    case Op::Step: return "step";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Square: return "square";
    case Op::SumAll: return "sum_all";
    case Op::FillLike: return "fill_like";
    case Op::RowSum: return "row_sum";
    case Op::BcastCols: return "broadcast_cols";
  }
  return "?";
}

// Unlink parents with an explicit stack. A training step builds graphs with
// chains tens of thousands of nodes long; the default recursive shared_ptr
// teardown would blow the stack.
Node::~Node() {
  std::vector<NodePtr> pending;
  auto take = [&pending](NodePtr& p) {
    if (p && p.use_count() == 1) {
      pending.push_back(std::move(p));
    } else {
      p.reset();
    }
  };
  take(a);
  take(b);
  while (!pending.empty()) {
    NodePtr n = std::move(pending.back());
    pending.pop_back();
    take(n->a);
    take(n->b);
    // n dies here with parents already detached
  }
}

Expr Expr::constant(Tensor t) {
  auto n = std::make_shared<Node>();
  n->value = std::move(t);
  return Expr(std::move(n));
}

Expr Expr::param(Tensor t) {
  auto n = std::make_shared<Node>();
  n->value = std::move(t);
  n->requires_grad = true;
  return Expr(std::move(n));
}

double Expr::scalar_value() const {
  if (rows() != 1 || cols() != 1) {
    throw ShapeError("scalar_value: expr has shape " + value().shape_str());
  }
  return value().v[0];
}

Expr Expr::detach() const { return Expr::constant(n_->value); }

namespace {

NodePtr make_node(Op op, Tensor value, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->value = std::move(value);
  n->requires_grad = (a && a->requires_grad) || (b && b->requires_grad);
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

void check_same_shape(const char* op, const Expr& a, const Expr& b) {
  if (!a.value().same_shape(b.value())) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.value().shape_str() + " vs " +
                     b.value().shape_str());
  }
}

}  // namespace

Expr add(const Expr& a, const Expr& b) {
  check_same_shape("add", a, b);
  Tensor out(a.rows(), a.cols());
  const auto& av = a.value().v;
  const auto& bv = b.value().v;
  for (std::size_t i = 0; i < av.size(); ++i) out.v[i] = av[i] + bv[i];
  return Expr(make_node(Op::Add, std::move(out), a.node(), b.node()));
}

Expr sub(const Expr& a, const Expr& b) {
  check_same_shape("sub", a, b);
  Tensor out(a.rows(), a.cols());
  const auto& av = a.value().v;
  const auto& bv = b.value().v;
  for (std::size_t i = 0; i < av.size(); ++i) out.v[i] = av[i] - bv[i];
  return Expr(make_node(Op::Sub, std::move(out), a.node(), b.node()));
}

Expr scalar_mul(double c, const Expr& a) {
  Tensor out(a.rows(), a.cols());
  const auto& av = a.value().v;
  for (std::size_t i = 0; i < av.size(); ++i) out.v[i] = c * av[i];
  NodePtr n = make_node(Op::ScalarMul, std::move(out), a.node(), nullptr);
  n->coeff = c;
  return Expr(std::move(n));
}

Expr mul(const Expr& a, const Expr& b) {
  check_same_shape("mul", a, b);
  Tensor out(a.rows(), a.cols());
  const auto& av = a.value().v;
  const auto& bv = b.value().v;
  for (std::size_t i = 0; i < av.size(); ++i) out.v[i] = av[i] * bv[i];
  return Expr(make_node(Op::Mul, std::move(out), a.node(), b.node()));
}

namespace {

// C = A * B, row-major, ikj order so inner loops run over contiguous memory.
Tensor matmul_values(const Tensor& a, const Tensor& b) {
  Tensor out(a.rows, b.cols);
  const int m = a.rows, k = a.cols, n = b.cols;
  for (int i = 0; i < m; ++i) {
    double* ci = &out.v[static_cast<std::size_t>(i) * n];
    const double* ai = &a.v[static_cast<std::size_t>(i) * k];
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = &b.v[static_cast<std::size_t>(p) * n];
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
  return out;
}

}  // namespace

Expr matmul(const Expr& a, const Expr& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: shape mismatch " + a.value().shape_str() + " vs " +
                     b.value().shape_str());
  }
  return Expr(make_node(Op::MatMul, matmul_values(a.value(), b.value()), a.node(), b.node()));
}

Expr matvec(const Expr& m, const Expr& x) {
  if (x.cols() != 1) {
    throw ShapeError("matvec: vector argument has shape " + x.value().shape_str());
  }
  return matmul(m, x);
}

Expr transpose(const Expr& a) {
  Tensor out(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.at(j, i) = a.value().at(i, j);
  return Expr(make_node(Op::Transpose, std::move(out), a.node(), nullptr));
}

Expr relu(const Expr& a) {
  Tensor out(a.rows(), a.cols());
  const auto& av = a.value().v;
  for (std::size_t i = 0; i < av.size(); ++i) out.v[i] = av[i] > 0.0 ? av[i] : 0.0;
  return Expr(make_node(Op::Relu, std::move(out), a.node(), nullptr));
}

Expr step(const Expr& a) {
  Tensor out(a.rows(), a.cols());
  const auto& av = a.value().v;
  for (std::size_t i = 0; i < av.size(); ++i) out.v[i] = av[i] > 0.0 ? 1.0 : 0.0;
  NodePtr n = make_node(Op::Step, std::move(out), a.node(), nullptr);
  n->requires_grad = false;  // derivative is 0 everywhere by convention
  return Expr(std::move(n));
}

Expr sin(const Expr& a) {
  Tensor out(a.rows(), a.cols());
  const auto& av = a.value().v;
  for (std::size_t i = 0; i < av.size(); ++i) out.v[i] = std::sin(av[i]);
  return Expr(make_node(Op::Sin, std::move(out), a.node(), nullptr));
}

Expr cos(const Expr& a) {
  Tensor out(a.rows(), a.cols());
  const auto& av = a.value().v;
  for (std::size_t i = 0; i < av.size(); ++i) out.v[i] = std::cos(av[i]);
  return Expr(make_node(Op::Cos, std::move(out), a.node(), nullptr));
}

Expr square(const Expr& a) {
  Tensor out(a.rows(), a.cols());
  const auto& av = a.value().v;
  for (std::size_t i = 0; i < av.size(); ++i) out.v[i] = av[i] * av[i];
  return Expr(make_node(Op::Square, std::move(out), a.node(), nullptr));
}

Expr sum_all(const Expr& a) {
  double s = 0.0;
  for (double x : a.value().v) s += x;
  return Expr(make_node(Op::SumAll, Tensor::scalar(s), a.node(), nullptr));
}

Expr mean(const Expr& a) {
  if (a.value().size() == 0) throw ShapeError("mean: empty tensor");
  return scalar_mul(1.0 / a.value().size(), sum_all(a));
}

Expr mean(const std::vector<Expr>& xs) {
  if (xs.empty()) throw ShapeError("mean: empty list");
  Expr total = xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i) total = add(total, xs[i]);
  return scalar_mul(1.0 / static_cast<double>(xs.size()), total);
}

Expr fill_like(const Expr& s, int rows, int cols) {
  if (s.rows() != 1 || s.cols() != 1) {
    throw ShapeError("fill_like: source has shape " + s.value().shape_str());
  }
  Tensor out(rows, cols);
  const double x = s.value().v[0];
  for (double& o : out.v) o = x;
  NodePtr n = make_node(Op::FillLike, std::move(out), s.node(), nullptr);
  n->aux_rows = rows;
  n->aux_cols = cols;
  return Expr(std::move(n));
}

Expr row_sum(const Expr& a) {
  Tensor out(a.rows(), 1);
  for (int i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < a.cols(); ++j) s += a.value().at(i, j);
    out.v[i] = s;
  }
  return Expr(make_node(Op::RowSum, std::move(out), a.node(), nullptr));
}

Expr broadcast_cols(const Expr& col, int n) {
  if (col.cols() != 1) {
    throw ShapeError("broadcast_cols: source has shape " + col.value().shape_str());
  }
  Tensor out(col.rows(), n);
  for (int i = 0; i < col.rows(); ++i) {
    const double x = col.value().v[i];
    for (int j = 0; j < n; ++j) out.at(i, j) = x;
  }
  NodePtr node = make_node(Op::BcastCols, std::move(out), col.node(), nullptr);
  node->aux_cols = n;
  return Expr(std::move(node));
}

namespace {

// Reverse-topological order of the requires_grad subgraph rooted at `out`:
// result has `out` last; iterating backwards visits every node before any of
// its ancestors.
std::vector<Node*> topo_order(Node* out) {
  std::vector<Node*> order;
  if (!out->requires_grad) return order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, int>> stack;
  stack.emplace_back(out, 0);
  visited.insert(out);
  while (!stack.empty()) {
    auto& [node, phase] = stack.back();
    Node* parent = nullptr;
    if (phase == 0) {
      parent = node->a.get();
    } else if (phase == 1) {
      parent = node->b.get();
    } else {
      order.push_back(node);
      stack.pop_back();
      continue;
    }
    ++phase;
    if (parent && parent->requires_grad && visited.insert(parent).second) {
      stack.emplace_back(parent, 0);
    }
  }
  return order;
}

// Elementwise helpers mirroring the graph-mode adjoint formulas exactly, so
// numeric and graph backward produce bit-identical results.
Tensor ew_copy(const Tensor& g) { return g; }

Tensor ew_scale(double c, const Tensor& g) {
  Tensor out(g.rows, g.cols);
  for (std::size_t i = 0; i < g.v.size(); ++i) out.v[i] = c * g.v[i];
  return out;
}

Tensor ew_mul(const Tensor& g, const Tensor& w) {
  Tensor out(g.rows, g.cols);
  for (std::size_t i = 0; i < g.v.size(); ++i) out.v[i] = g.v[i] * w.v[i];
  return out;
}

Tensor transpose_values(const Tensor& a) {
  Tensor out(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

struct NumericBackward {
  std::unordered_map<Node*, Tensor> adjoint;

  void acc(Node* p, Tensor contrib) {
    if (!p || !p->requires_grad) return;
    auto it = adjoint.find(p);
    if (it == adjoint.end()) {
      adjoint.emplace(p, std::move(contrib));
    } else {
      for (std::size_t i = 0; i < contrib.v.size(); ++i) it->second.v[i] += contrib.v[i];
    }
  }

  void visit(Node* n, const Tensor& g) {
    switch (n->op) {
      case Op::Leaf:
        break;
      case Op::Add:
        acc(n->a.get(), ew_copy(g));
        acc(n->b.get(), ew_copy(g));
        break;
      case Op::Sub:
        acc(n->a.get(), ew_copy(g));
        acc(n->b.get(), ew_scale(-1.0, g));
        break;
      case Op::ScalarMul:
        acc(n->a.get(), ew_scale(n->coeff, g));
        break;
      case Op::Mul:
        acc(n->a.get(), ew_mul(g, n->b->value));
        acc(n->b.get(), ew_mul(g, n->a->value));
        break;
      case Op::MatMul:
        acc(n->a.get(), matmul_values(g, transpose_values(n->b->value)));
        acc(n->b.get(), matmul_values(transpose_values(n->a->value), g));
        break;
      case Op::Transpose:
        acc(n->a.get(), transpose_values(g));
        break;
      case Op::Relu: {
        Tensor mask(n->a->value.rows, n->a->value.cols);
        for (std::size_t i = 0; i < mask.v.size(); ++i)
          mask.v[i] = n->a->value.v[i] > 0.0 ? 1.0 : 0.0;
        acc(n->a.get(), ew_mul(g, mask));
        break;
      }
      case Op::Step:
        break;
      case Op::Sin: {
        Tensor c(n->a->value.rows, n->a->value.cols);
        for (std::size_t i = 0; i < c.v.size(); ++i) c.v[i] = std::cos(n->a->value.v[i]);
        acc(n->a.get(), ew_mul(g, c));
        break;
      }
      case Op::Cos: {
        Tensor s(n->a->value.rows, n->a->value.cols);
        for (std::size_t i = 0; i < s.v.size(); ++i) s.v[i] = std::sin(n->a->value.v[i]);
        acc(n->a.get(), ew_scale(-1.0, ew_mul(g, s)));
        break;
      }
      case Op::Square:
        acc(n->a.get(), ew_scale(2.0, ew_mul(g, n->a->value)));
        break;
      case Op::SumAll: {
        Tensor fill(n->a->value.rows, n->a->value.cols);
        for (double& x : fill.v) x = g.v[0];
        acc(n->a.get(), std::move(fill));
        break;
      }
      case Op::FillLike: {
        double s = 0.0;
        for (double x : g.v) s += x;
        acc(n->a.get(), Tensor::scalar(s));
        break;
      }
      case Op::RowSum: {
        Tensor out(n->a->value.rows, n->a->value.cols);
        for (int i = 0; i < out.rows; ++i)
          for (int j = 0; j < out.cols; ++j) out.at(i, j) = g.v[i];
        acc(n->a.get(), std::move(out));
        break;
      }
      case Op::BcastCols: {
        Tensor out(n->a->value.rows, 1);
        for (int i = 0; i < out.rows; ++i) {
          double s = 0.0;
          for (int j = 0; j < g.cols; ++j) s += g.at(i, j);
          out.v[i] = s;
        }
        acc(n->a.get(), std::move(out));
        break;
      }
    }
  }
};

struct GraphBackward {
  std::unordered_map<Node*, Expr> adjoint;

  void acc(const NodePtr& p, Expr contrib) {
    if (!p || !p->requires_grad) return;
    auto it = adjoint.find(p.get());
    if (it == adjoint.end()) {
      adjoint.emplace(p.get(), std::move(contrib));
    } else {
      it->second = add(it->second, contrib);
    }
  }

  void visit(Node* n, const Expr& g) {
    const Expr a = n->a ? Expr(n->a) : Expr();
    const Expr b = n->b ? Expr(n->b) : Expr();
    switch (n->op) {
      case Op::Leaf:
        break;
      case Op::Add:
        acc(n->a, g);
        acc(n->b, g);
        break;
      case Op::Sub:
        acc(n->a, g);
        acc(n->b, scalar_mul(-1.0, g));
        break;
      case Op::ScalarMul:
        acc(n->a, scalar_mul(n->coeff, g));
        break;
      case Op::Mul:
        acc(n->a, mul(g, b));
        acc(n->b, mul(g, a));
        break;
      case Op::MatMul:
        acc(n->a, matmul(g, transpose(b)));
        acc(n->b, matmul(transpose(a), g));
        break;
      case Op::Transpose:
        acc(n->a, transpose(g));
        break;
      case Op::Relu:
        acc(n->a, mul(g, step(a)));
        break;
      case Op::Step:
        break;
      case Op::Sin:
        acc(n->a, mul(g, cos(a)));
        break;
      case Op::Cos:
        acc(n->a, scalar_mul(-1.0, mul(g, sin(a))));
        break;
      case Op::Square:
        acc(n->a, scalar_mul(2.0, mul(g, a)));
        break;
      case Op::SumAll:
        acc(n->a, fill_like(g, n->a->value.rows, n->a->value.cols));
        break;
      case Op::FillLike:
        acc(n->a, sum_all(g));
        break;
      case Op::RowSum:
        acc(n->a, broadcast_cols(g, n->a->value.cols));
        break;
      case Op::BcastCols:
        acc(n->a, row_sum(g));
        break;
    }
  }
};

}  // namespace

std::vector<Expr> grad(const GradientRequest& req) {
  if (!req.output.defined()) throw ShapeError("grad: undefined output");
  if (req.output.rows() != 1 || req.output.cols() != 1) {
    throw ShapeError("grad: output must be scalar, got shape " + req.output.value().shape_str());
  }
  for (const Expr& in : req.inputs) {
    if (!in.defined()) throw ShapeError("grad: undefined input");
  }

  std::vector<Expr> result(req.inputs.size());
  auto zero_for = [](const Expr& in) {
    return Expr::constant(Tensor(in.rows(), in.cols()));
  };

  std::vector<Node*> order = topo_order(req.output.raw());
  if (order.empty()) {
    for (std::size_t i = 0; i < req.inputs.size(); ++i) result[i] = zero_for(req.inputs[i]);
    return result;
  }

  if (req.create_graph) {
    GraphBackward bw;
    bw.adjoint.reserve(order.size());
    bw.adjoint.emplace(req.output.raw(), Expr::constant(1.0));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      auto gi = bw.adjoint.find(*it);
      if (gi == bw.adjoint.end()) continue;
      Expr g = gi->second;  // copy: acc() may rehash the map
      bw.visit(*it, g);
    }
    for (std::size_t i = 0; i < req.inputs.size(); ++i) {
      auto gi = bw.adjoint.find(req.inputs[i].raw());
      result[i] = gi != bw.adjoint.end() ? gi->second : zero_for(req.inputs[i]);
    }
  } else {
    std::unordered_set<Node*> wanted;
    for (const Expr& in : req.inputs) wanted.insert(in.raw());
    NumericBackward bw;
    bw.adjoint.reserve(order.size());
    bw.adjoint.emplace(req.output.raw(), Tensor::scalar(1.0));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      auto gi = bw.adjoint.find(*it);
      if (gi == bw.adjoint.end()) continue;
      // Copy out (acc() may rehash the map); move when nobody asks for it later.
      Tensor g = wanted.count(*it) ? gi->second : std::move(gi->second);
      bw.visit(*it, g);
    }
    for (std::size_t i = 0; i < req.inputs.size(); ++i) {
      auto gi = bw.adjoint.find(req.inputs[i].raw());
      result[i] = gi != bw.adjoint.end() ? Expr::constant(std::move(gi->second))
                                         : zero_for(req.inputs[i]);
    }
  }
  return result;
}

std::vector<Expr> grad(const Expr& output, const std::vector<Expr>& inputs, bool create_graph) {
  return grad(GradientRequest{output, inputs, create_graph});
}

}  // namespace maltml
