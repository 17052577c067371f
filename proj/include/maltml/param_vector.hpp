#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "maltml/expr.hpp"

namespace maltml {

struct ParamShape {
  std::string name;
  int rows = 0;
  int cols = 0;
  int size() const { return rows * cols; }
  bool operator==(const ParamShape&) const = default;
};

// Ordered (name, shape) records; the flat data of a ParamVector concatenates
// the row-major blocks in this order.
class ParamLayout {
 public:
  explicit ParamLayout(std::vector<ParamShape> shapes);

  const std::vector<ParamShape>& shapes() const { return shapes_; }
  std::size_t count() const { return shapes_.size(); }
  int total() const { return total_; }
  int offset(std::size_t i) const { return offsets_[i]; }
  bool operator==(const ParamLayout& o) const { return shapes_ == o.shapes_; }

 private:
  std::vector<ParamShape> shapes_;
  std::vector<int> offsets_;
  int total_ = 0;
};

using LayoutPtr = std::shared_ptr<const ParamLayout>;

// Flattened model parameters plus their layout. Immutable by convention once
// handed to a training loop; arithmetic helpers return or mutate explicitly.
struct ParamVector {
  LayoutPtr layout;
  std::vector<double> data;

  static ParamVector zeros(LayoutPtr layout);

  // this += a * x; layouts must match.
  void axpy(double a, const ParamVector& x);
  bool all_finite() const;
};

void check_same_layout(const ParamVector& a, const ParamVector& b, const char* what);

// One requires_grad leaf per layout entry, holding that block's values.
std::vector<Expr> bind_params(const ParamVector& pv);

// Read expr values (same layout, e.g. adapted parameters) back into a flat vector.
ParamVector read_params(const LayoutPtr& layout, const std::vector<Expr>& exprs);

// Concatenate per-entry gradient exprs into one flat vector.
std::vector<double> flatten_values(const ParamLayout& layout, const std::vector<Expr>& exprs);

// Text serialization with version tag: layout records then hexfloat entries.
void write_param_vector(std::ostream& os, const ParamVector& pv);
ParamVector read_param_vector(std::istream& is);

}  // namespace maltml
