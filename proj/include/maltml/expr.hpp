#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace maltml {

// Dense row-major matrix of doubles. Column vectors are (n, 1), scalars (1, 1).
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}
  Tensor(int r, int c, std::vector<double> data);

  static Tensor scalar(double x);
  static Tensor colvec(const std::vector<double>& data);
  static Tensor rowvec(const std::vector<double>& data);

  double& at(int i, int j) { return v[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return v[static_cast<std::size_t>(i) * cols + j]; }
  int size() const { return rows * cols; }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
  bool all_finite() const;
  std::string shape_str() const;
};

enum class Op : std::uint8_t {
  Leaf,
  Add,
  Sub,
  ScalarMul,   // coeff * a, coeff is a plain double
  Mul,         // elementwise
  MatMul,
  Transpose,
  Relu,
  Step,        // 1 where a > 0, else 0; derivative defined as 0 everywhere
  Sin,
  Cos,
  Square,
  SumAll,      // sum of all entries -> 1x1
  FillLike,    // broadcast a 1x1 scalar to (aux_rows, aux_cols)
  RowSum,      // (m x n) -> (m x 1), sum across columns
  BcastCols,   // (m x 1) -> (m x aux_cols), repeat the column
};

const char* op_name(Op op);

class Node;
using NodePtr = std::shared_ptr<Node>;

// One vertex of the computation DAG. Values are computed eagerly on
// construction; `a`/`b` hold the inputs that produced this value.
class Node {
 public:
  Tensor value;
  Op op = Op::Leaf;
  double coeff = 0.0;  // ScalarMul
  int aux_cols = 0;    // BcastCols / FillLike target
  int aux_rows = 0;    // FillLike target
  NodePtr a, b;
  bool requires_grad = false;

  Node() = default;
  ~Node();  // unlinks parent chains iteratively; deep graphs must not recurse
};

// Value-semantics handle to a graph node.
class Expr {
 public:
  Expr() = default;
  explicit Expr(NodePtr n) : n_(std::move(n)) {}

  // Leaf with requires_grad=false: data, targets, frozen gradients.
  static Expr constant(Tensor t);
  static Expr constant(double x) { return constant(Tensor::scalar(x)); }
  // Leaf that gradients flow into.
  static Expr param(Tensor t);

  bool defined() const { return n_ != nullptr; }
  const Tensor& value() const { return n_->value; }
  int rows() const { return n_->value.rows; }
  int cols() const { return n_->value.cols; }
  bool requires_grad() const { return n_->requires_grad; }
  double scalar_value() const;  // value of a 1x1 expr; throws on other shapes

  // Copy of the value as a fresh constant leaf, cut off from the graph.
  Expr detach() const;

  Node* raw() const { return n_.get(); }
  const NodePtr& node() const { return n_; }

 private:
  NodePtr n_;
};

// Primitive ops. Each records its inputs so that grad() can differentiate
// through it; the rules in backward() are themselves built from these
// primitives, which is what makes repeated differentiation work.
Expr add(const Expr& a, const Expr& b);
Expr sub(const Expr& a, const Expr& b);
Expr scalar_mul(double c, const Expr& a);
Expr mul(const Expr& a, const Expr& b);  // elementwise
Expr matmul(const Expr& a, const Expr& b);
Expr matvec(const Expr& m, const Expr& x);  // x must be (k x 1)
Expr transpose(const Expr& a);
Expr relu(const Expr& a);
Expr step(const Expr& a);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr square(const Expr& a);
Expr sum_all(const Expr& a);
Expr mean(const Expr& a);                 // mean over all entries
Expr mean(const std::vector<Expr>& xs);   // mean of scalar exprs
Expr fill_like(const Expr& s, int rows, int cols);
Expr row_sum(const Expr& a);
Expr broadcast_cols(const Expr& col, int n);

struct GradientRequest {
  Expr output;                // must be scalar (1x1)
  std::vector<Expr> inputs;   // gradients returned in this order
  bool create_graph = false;  // true: results are differentiable nodes of the
                              // same graph; false: results are constants and
                              // no differentiation subgraph is kept
};

// Reverse-mode gradient of `output` w.r.t. each input. Inputs that are not
// ancestors of the output (or are reached only through requires_grad=false
// paths) get an exact zero of their own shape.
std::vector<Expr> grad(const GradientRequest& req);
std::vector<Expr> grad(const Expr& output, const std::vector<Expr>& inputs, bool create_graph);

}  // namespace maltml
