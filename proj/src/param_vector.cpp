#include "maltml/param_vector.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "maltml/errors.hpp"

namespace maltml {

ParamLayout::ParamLayout(std::vector<ParamShape> shapes) : shapes_(std::move(shapes)) {
  offsets_.reserve(shapes_.size());
  for (const ParamShape& s : shapes_) {
    if (s.rows <= 0 || s.cols <= 0) {
      throw ShapeError("ParamLayout: non-positive shape for '" + s.name + "'");
    }
    offsets_.push_back(total_);
    total_ += s.size();
  }
}

ParamVector ParamVector::zeros(LayoutPtr layout) {
  ParamVector pv;
  pv.data.assign(static_cast<std::size_t>(layout->total()), 0.0);
  pv.layout = std::move(layout);
  return pv;
}

void check_same_layout(const ParamVector& a, const ParamVector& b, const char* what) {
  if (!a.layout || !b.layout || !(*a.layout == *b.layout)) {
    throw ShapeError(std::string(what) + ": parameter layouts differ");
  }
}

void ParamVector::axpy(double a, const ParamVector& x) {
  check_same_layout(*this, x, "axpy");
  for (std::size_t i = 0; i < data.size(); ++i) data[i] += a * x.data[i];
}

bool ParamVector::all_finite() const {
  for (double x : data) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::vector<Expr> bind_params(const ParamVector& pv) {
  std::vector<Expr> out;
  out.reserve(pv.layout->count());
  for (std::size_t i = 0; i < pv.layout->count(); ++i) {
    const ParamShape& s = pv.layout->shapes()[i];
    Tensor t(s.rows, s.cols);
    const int off = pv.layout->offset(i);
    for (int k = 0; k < s.size(); ++k) t.v[k] = pv.data[off + k];
    out.push_back(Expr::param(std::move(t)));
  }
  return out;
}

ParamVector read_params(const LayoutPtr& layout, const std::vector<Expr>& exprs) {
  ParamVector pv = ParamVector::zeros(layout);
  pv.data = flatten_values(*layout, exprs);
  return pv;
}

std::vector<double> flatten_values(const ParamLayout& layout, const std::vector<Expr>& exprs) {
  if (exprs.size() != layout.count()) {
    throw ShapeError("flatten_values: expected " + std::to_string(layout.count()) +
                     " exprs, got " + std::to_string(exprs.size()));
  }
  std::vector<double> flat(static_cast<std::size_t>(layout.total()));
  for (std::size_t i = 0; i < exprs.size(); ++i) {
    const ParamShape& s = layout.shapes()[i];
    const Tensor& t = exprs[i].value();
    if (t.rows != s.rows || t.cols != s.cols) {
      throw ShapeError("flatten_values: entry '" + s.name + "' has shape " + t.shape_str() +
                       ", layout says " + std::to_string(s.rows) + "x" + std::to_string(s.cols));
    }
    const int off = layout.offset(i);
    for (int k = 0; k < s.size(); ++k) flat[off + k] = t.v[k];
  }
  return flat;
}

void write_param_vector(std::ostream& os, const ParamVector& pv) {
  os << "paramvec 1\n";
  os << "layout " << pv.layout->count() << "\n";
  for (const ParamShape& s : pv.layout->shapes()) {
    os << s.name << " " << s.rows << " " << s.cols << "\n";
  }
  os << "data " << pv.data.size() << "\n";
  char buf[64];
  for (std::size_t i = 0; i < pv.data.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%a", pv.data[i]);
    os << buf << (i % 4 == 3 ? "\n" : " ");
  }
  if (pv.data.size() % 4 != 0) os << "\n";
}

ParamVector read_param_vector(std::istream& is) {
  std::string tag;
  int version = 0;
  is >> tag >> version;
  if (tag != "paramvec" || version != 1) {
    throw ConfigError("read_param_vector: bad header '" + tag + "'");
  }
  std::size_t count = 0;
  is >> tag >> count;
  if (tag != "layout") throw ConfigError("read_param_vector: expected 'layout'");
  std::vector<ParamShape> shapes(count);
  for (ParamShape& s : shapes) is >> s.name >> s.rows >> s.cols;
  auto layout = std::make_shared<const ParamLayout>(std::move(shapes));

  std::size_t n = 0;
  is >> tag >> n;
  if (tag != "data") throw ConfigError("read_param_vector: expected 'data'");
  if (n != static_cast<std::size_t>(layout->total())) {
    throw ConfigError("read_param_vector: data size does not match layout");
  }
  ParamVector pv = ParamVector::zeros(layout);
  for (std::size_t i = 0; i < n; ++i) {
    std::string word;
    if (!(is >> word)) throw ConfigError("read_param_vector: truncated data");
    pv.data[i] = std::strtod(word.c_str(), nullptr);
  }
  return pv;
}

}  // namespace maltml
