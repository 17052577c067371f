#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "maltml/errors.hpp"
#include "maltml/expr.hpp"
#include "maltml/rng.hpp"

using namespace maltml;

namespace {

Expr scalar_param(double x) { return Expr::param(Tensor::scalar(x)); }

double grad1(const Expr& out, const Expr& in) {
  return grad(out, {in}, false)[0].scalar_value();
}

}  // namespace

TEST_CASE("primitive values") {
  SUBCASE("relu negative branch") {
    Expr x = Expr::constant(-1.5);
    CHECK(relu(x).scalar_value() == 0.0);
  }
  SUBCASE("relu at zero and positive") {
    CHECK(relu(Expr::constant(0.0)).scalar_value() == 0.0);
    CHECK(relu(Expr::constant(2.25)).scalar_value() == 2.25);
  }
  SUBCASE("matvec identity") {
    Expr eye = Expr::constant(Tensor(2, 2, {1, 0, 0, 1}));
    Expr v = Expr::constant(Tensor::colvec({3, 4}));
    Expr y = matvec(eye, v);
    CHECK(y.rows() == 2);
    CHECK(y.cols() == 1);
    CHECK(y.value().v[0] == 3.0);
    CHECK(y.value().v[1] == 4.0);
  }
  SUBCASE("mean of squared residuals") {
    // mean(square([1,2] - [0,0])) = (1 + 4) / 2 = 2.5
    Expr pred = Expr::constant(Tensor::rowvec({1, 2}));
    Expr target = Expr::constant(Tensor::rowvec({0, 0}));
    CHECK(mean(square(sub(pred, target))).scalar_value() == doctest::Approx(2.5).epsilon(1e-15));
  }
  SUBCASE("mean of scalar list") {
    std::vector<Expr> xs = {Expr::constant(1.0), Expr::constant(2.0), Expr::constant(6.0)};
    CHECK(mean(xs).scalar_value() == doctest::Approx(3.0).epsilon(1e-15));
  }
  SUBCASE("matmul values") {
    Expr a = Expr::constant(Tensor(2, 3, {1, 2, 3, 4, 5, 6}));
    Expr b = Expr::constant(Tensor(3, 2, {7, 8, 9, 10, 11, 12}));
    Expr c = matmul(a, b);
    CHECK(c.value().at(0, 0) == 58.0);
    CHECK(c.value().at(0, 1) == 64.0);
    CHECK(c.value().at(1, 0) == 139.0);
    CHECK(c.value().at(1, 1) == 154.0);
  }
}

TEST_CASE("shape errors name the op and shapes") {
  Expr a = Expr::constant(Tensor(2, 2));
  Expr b = Expr::constant(Tensor(3, 1));
  CHECK_THROWS_WITH_AS(add(a, b), doctest::Contains("add"), ShapeError);
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("2x2"), ShapeError);
  CHECK_THROWS_AS(matvec(a, Expr::constant(Tensor(2, 2))), ShapeError);
  CHECK_THROWS_AS(mean(std::vector<Expr>{}), ShapeError);
}

TEST_CASE("first derivatives of simple functions") {
  SUBCASE("d/dx x^2 at 3 is 6") {
    Expr x = scalar_param(3.0);
    CHECK(grad1(square(x), x) == doctest::Approx(6.0).epsilon(1e-15));
  }
  SUBCASE("d/dx sin at 0.7") {
    Expr x = scalar_param(0.7);
    CHECK(grad1(sin(x), x) == doctest::Approx(std::cos(0.7)).epsilon(1e-15));
  }
  SUBCASE("relu subgradient at 0 is 0") {
    Expr x = scalar_param(0.0);
    CHECK(grad1(relu(x), x) == 0.0);
  }
  SUBCASE("unreachable input gets exact zero") {
    Expr x = scalar_param(1.0);
    Expr y = scalar_param(2.0);
    CHECK(grad1(square(x), y) == 0.0);
  }
  SUBCASE("constant function has zero gradient") {
    Expr x = scalar_param(4.0);
    Expr c = Expr::constant(5.0);
    CHECK(grad1(c, x) == 0.0);
  }
  SUBCASE("non-scalar output rejected") {
    Expr v = Expr::param(Tensor::colvec({1, 2}));
    CHECK_THROWS_AS(grad(square(v), {v}, false), ShapeError);
  }
}

TEST_CASE("nested differentiation") {
  SUBCASE("d2/dx2 x^3 at 2 is 12") {
    Expr x = scalar_param(2.0);
    Expr y = mul(square(x), x);
    Expr g1 = grad(y, {x}, true)[0];
    CHECK(grad1(g1, x) == doctest::Approx(12.0).epsilon(1e-14));
  }
  SUBCASE("d3/dx3 x^4 at 1 is 24") {
    Expr x = scalar_param(1.0);
    Expr y = square(square(x));
    Expr g1 = grad(y, {x}, true)[0];
    Expr g2 = grad(g1, {x}, true)[0];
    CHECK(grad1(g2, x) == doctest::Approx(24.0).epsilon(1e-14));
  }
  SUBCASE("create_graph=false results are constants") {
    Expr x = scalar_param(2.0);
    Expr g = grad(square(x), {x}, false)[0];
    CHECK_FALSE(g.requires_grad());
    // differentiating a detached gradient gives zero
    CHECK(grad1(g, x) == 0.0);
  }
  SUBCASE("gradient exprs of linear functions are constants") {
    Expr x = scalar_param(2.0);
    Expr g = grad(scalar_mul(3.0, x), {x}, true)[0];
    CHECK(g.scalar_value() == 3.0);
    CHECK(grad1(g, x) == 0.0);
  }
}

// Third derivatives of polynomials up to degree 6 against symbolic closed
// forms. Coefficients differentiated by hand: p'''(x) has coefficients
// c_k * k * (k-1) * (k-2) on x^(k-3).
TEST_CASE("third derivatives match symbolic polynomial forms") {
  auto poly_expr = [](const std::vector<double>& coeffs, const Expr& x) {
    // Horner scheme keeps every power differentiable.
    Expr acc = Expr::constant(coeffs.back());
    for (int k = static_cast<int>(coeffs.size()) - 2; k >= 0; --k) {
      acc = add(mul(acc, x), Expr::constant(coeffs[k]));
    }
    return acc;
  };
  auto third_symbolic = [](const std::vector<double>& coeffs, double x) {
    double s = 0.0;
    for (std::size_t k = 3; k < coeffs.size(); ++k) {
      double c = coeffs[k] * static_cast<double>(k) * (k - 1.0) * (k - 2.0);
      s += c * std::pow(x, static_cast<double>(k - 3));
    }
    return s;
  };

  Rng rng = derive_rng(20260313, {99});
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> coeffs;
    const int degree = 3 + static_cast<int>(rng.next_u64() % 4);  // 3..6
    for (int k = 0; k <= degree; ++k) coeffs.push_back(rng.uniform(-2.0, 2.0));
    const double x0 = rng.uniform(-1.5, 1.5);

    Expr x = scalar_param(x0);
    Expr y = poly_expr(coeffs, x);
    Expr g1 = grad(y, {x}, true)[0];
    Expr g2 = grad(g1, {x}, true)[0];
    const double d3 = grad1(g2, x);
    CHECK(d3 == doctest::Approx(third_symbolic(coeffs, x0)).epsilon(1e-9));
  }
}

TEST_CASE("linearity of grad") {
  Rng rng = derive_rng(20260313, {7});
  for (int trial = 0; trial < 10; ++trial) {
    const double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3);
    const double x0 = rng.uniform(-2, 2);
    Expr xf = scalar_param(x0);
    Expr f = mul(sin(xf), square(xf));
    Expr xg = scalar_param(x0);
    Expr g = cos(square(xg));
    // gradient of a*f + b*g built on a shared input
    Expr xs = scalar_param(x0);
    Expr combined = add(scalar_mul(a, mul(sin(xs), square(xs))), scalar_mul(b, cos(square(xs))));
    const double lhs = grad1(combined, xs);
    const double rhs = a * grad1(f, xf) + b * grad1(g, xg);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("mixed partials are symmetric") {
  Rng rng = derive_rng(20260313, {8});
  for (int trial = 0; trial < 10; ++trial) {
    const double x0 = rng.uniform(-1.5, 1.5), y0 = rng.uniform(-1.5, 1.5);
    auto build = [&](Expr& x, Expr& y) {
      x = scalar_param(x0);
      y = scalar_param(y0);
      // f(x, y) = sin(x*y) + x^2*y
      return add(sin(mul(x, y)), mul(square(x), y));
    };
    Expr x1, y1;
    Expr f1 = build(x1, y1);
    Expr dfdx = grad(f1, {x1}, true)[0];
    const double dxy = grad1(dfdx, y1);

    Expr x2, y2;
    Expr f2 = build(x2, y2);
    Expr dfdy = grad(f2, {y2}, true)[0];
    const double dyx = grad1(dfdy, x2);
    CHECK(dxy == doctest::Approx(dyx).epsilon(1e-10));
  }
}

// Property test: analytic gradients of random compositions of smooth
// primitives match central finite differences (eps=1e-5) to 1e-4.
TEST_CASE("random smooth graphs match finite differences") {
  const double eps = 1e-5;
  Rng rng = derive_rng(20260313, {11});
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 3);  // vector length 2..4
    std::vector<double> x0(n);
    for (double& x : x0) x = rng.uniform(-1.5, 1.5);
    std::vector<double> w0(n);
    for (double& w : w0) w = rng.uniform(-1.5, 1.5);
    Tensor m(n, n);
    for (double& e : m.v) e = rng.uniform(-1.0, 1.0);
    const std::uint64_t variant = rng.next_u64() % 3;

    auto eval = [&](const std::vector<double>& xv, bool with_grad,
                    std::vector<double>* grad_out) {
      Expr x = Expr::param(Tensor::colvec(xv));
      Expr w = Expr::constant(Tensor::colvec(w0));
      Expr mat = Expr::constant(m);
      Expr h;
      if (variant == 0) {
        h = sin(matvec(mat, x));
      } else if (variant == 1) {
        h = square(add(matvec(mat, x), w));
      } else {
        h = mul(cos(x), matvec(mat, square(x)));
      }
      Expr out = mean(mul(h, h));
      if (with_grad) {
        Expr g = grad(out, {x}, false)[0];
        grad_out->assign(g.value().v.begin(), g.value().v.end());
      }
      return out.scalar_value();
    };

    std::vector<double> analytic;
    eval(x0, true, &analytic);
    for (int i = 0; i < n; ++i) {
      std::vector<double> probe = x0;
      probe[i] = x0[i] + eps;
      const double fp = eval(probe, false, nullptr);
      probe[i] = x0[i] - eps;
      const double fm = eval(probe, false, nullptr);
      const double central = (fp - fm) / (2 * eps);
      const double rel = std::abs(analytic[i] - central) / std::max(1.0, std::abs(central));
      CHECK(rel < 1e-4);
    }
  }
}

TEST_CASE("numeric and graph backward agree bitwise") {
  Rng rng = derive_rng(20260313, {12});
  for (int trial = 0; trial < 10; ++trial) {
    Tensor m(3, 3);
    for (double& e : m.v) e = rng.uniform(-1, 1);
    std::vector<double> xv = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};

    Expr x = Expr::param(Tensor::colvec(xv));
    Expr out = mean(square(relu(matvec(Expr::constant(m), x))));
    Expr g_numeric = grad(out, {x}, false)[0];
    Expr g_graph = grad(out, {x}, true)[0];
    for (int i = 0; i < 3; ++i) {
      CHECK(g_numeric.value().v[i] == g_graph.value().v[i]);
    }
  }
}

TEST_CASE("gradient accumulates over shared subexpressions") {
  // f = x^2 + x^2, df/dx = 4x
  Expr x = scalar_param(1.5);
  Expr s = square(x);
  CHECK(grad1(add(s, s), x) == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("broadcast and reduction round trips") {
  Expr col = Expr::param(Tensor::colvec({1, 2, 3}));
  Expr wide = broadcast_cols(col, 4);
  CHECK(wide.cols() == 4);
  CHECK(wide.value().at(2, 3) == 3.0);
  // d sum(broadcast(col)) / d col = 4 per entry
  Expr total = sum_all(wide);
  Expr g = grad(total, {col}, false)[0];
  for (int i = 0; i < 3; ++i) CHECK(g.value().v[i] == 4.0);

  Expr rs = row_sum(Expr::constant(Tensor(2, 3, {1, 2, 3, 4, 5, 6})));
  CHECK(rs.value().v[0] == 6.0);
  CHECK(rs.value().v[1] == 15.0);
}
