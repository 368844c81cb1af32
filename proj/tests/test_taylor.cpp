#include "blowup/expression.hpp"
#include "blowup/taylor.hpp"

#include <doctest.h>

#include <cmath>

using namespace blowup;

TEST_CASE("binomial series from the pow recurrence") {
  // (1+h)^r has coefficients binom(r, k), computed here by the product formula.
  const double r = 0.5;
  Jet a = Jet::variable(1.0, 8);
  Jet p = pow(a, r);
  double binom = 1.0;
  for (int k = 0; k <= 8; ++k) {
    CHECK(p[k] == doctest::Approx(binom).epsilon(1e-14));
    binom *= (r - k) / (k + 1);
  }
}

TEST_CASE("integer powers agree with repeated multiplication") {
  Coeffs<double> a{2.0, -0.3, 0.7, 0.1, -0.4};
  auto p3 = series_pow(a, 3.0);
  auto m3 = series_mul(series_mul(a, a), a);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(p3[k] == doctest::Approx(m3[k]).epsilon(1e-13));
}

TEST_CASE("exp and log invert each other") {
  Coeffs<double> a{0.4, 1.0, -2.0, 0.5, 0.25, -0.125};
  auto back = series_log(series_exp(a));
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(back[k] == doctest::Approx(a[k]).epsilon(1e-13));
}

TEST_CASE("sin and cos jets match closed-form derivatives") {
  const double x0 = 0.7;
  Jet s = sin(Jet::variable(x0, 6));
  Jet c = cos(Jet::variable(x0, 6));
  const double d[4] = {std::sin(x0), std::cos(x0), -std::sin(x0), -std::cos(x0)};
  for (int k = 0; k <= 6; ++k) {
    CHECK(s.derivative(k) == doctest::Approx(d[k % 4]).epsilon(1e-13));
    CHECK(c.derivative(k) == doctest::Approx(d[(k + 1) % 4]).epsilon(1e-13));
  }
}

TEST_CASE("tanh jet satisfies t' = 1 - t^2") {
  Jet t = tanh(Jet::variable(0.3, 10));
  Jet lhs = t.derivative_series();
  Jet rhs = (1.0 - t * t).pad(9);
  for (int k = 0; k <= 9; ++k) CHECK(lhs[k] == doctest::Approx(rhs[k]).epsilon(1e-12));
}

TEST_CASE("series reversion of exp(h) - 1 gives log(1 + u)") {
  Jet q = exp(Jet::variable(0.0, 12)) - 1.0;
  Jet r = q.reverse();
  CHECK(r[0] == 0.0);
  for (int k = 1; k <= 12; ++k) CHECK(r[k] == doctest::Approx((k % 2 ? 1.0 : -1.0) / k).epsilon(1e-12));
}

TEST_CASE("array coefficients carry independent series") {
  Coeffs<Eigen::ArrayXd> a(4, Eigen::ArrayXd::Zero(3));
  a[0] << 1.0, 2.0, 4.0;
  a[1] << 1.0, 1.0, 1.0;
  auto p = series_pow(a, -1.0);
  for (int i = 0; i < 3; ++i) {
    const double c = a[0][i];
    for (int k = 0; k < 4; ++k) CHECK(p[std::size_t(k)][i] == doctest::Approx(std::pow(-1.0, k) / std::pow(c, k + 1)));
  }
}

TEST_CASE("expression parsing and evaluation") {
  auto e = Expression::parse("0.3*sin(x) + 2^-1 - -x^2/4");
  for (double x : {-1.3, 0.0, 0.4, 2.5}) CHECK(e(x) == doctest::Approx(0.3 * std::sin(x) + 0.5 + x * x / 4));
  CHECK(Expression::parse("2^3^2")(0.0) == doctest::Approx(512.0));
  CHECK(Expression::parse("-2^2")(0.0) == doctest::Approx(-4.0));
  CHECK(Expression::parse("exp(log(3)) + sqrt(16) + tanh(0) + cos(pi)")(0.0) == doctest::Approx(6.0));
  CHECK_FALSE(Expression::parse("3.5").depends_on_x());
}

TEST_CASE("parse errors report a position") {
  try {
    Expression::parse("1 + * x");
    FAIL("expected a parse error");
  } catch (const ParseError& err) {
    CHECK(err.position() == 4);
  }
  CHECK_THROWS_AS(Expression::parse("sin(x"), ParseError);
  CHECK_THROWS_AS(Expression::parse("foo(x)"), ParseError);
  CHECK_THROWS_AS(Expression::parse("x)"), ParseError);
}

TEST_CASE("symbolic derivative agrees with central differences") {
  for (const char* text : {"0.3*sin(x)", "0.2*exp(-x^2/1.5)", "x^2.5/(1+x)", "tanh(x)*cos(3*x)", "2^x"}) {
    auto e = Expression::parse(text);
    auto de = e.derivative();
    for (double x : {0.3, 0.9, 1.7}) {
      const double h = 1e-5;
      const double fd = (e(x + h) - e(x - h)) / (2 * h);
      CHECK(de(x) == doctest::Approx(fd).epsilon(1e-8));
      // Jet evaluation agrees with the tree derivative.
      CHECK(e(Jet::variable(x, 3))[1] == doctest::Approx(de(x)).epsilon(1e-12));
    }
  }
}
