#include "blowup/conformal.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace blowup;

namespace {
ConformalMap build(const std::string& id, double span = 6.0) {
  return solve_fg(solve_h(catalog_surface(id)), -span, span);
}
}  // namespace

TEST_CASE("flat surface: translation map") {
  const double T = 0.8;
  auto m = build("flat:0.8");
  for (double y : {-2.0, 0.0, 1.5}) {
    CHECK(m.g(y) == doctest::Approx(y).epsilon(1e-13));
    CHECK(m.f(y) == doctest::Approx(y + 2 * T).epsilon(1e-13));
    for (double s : {0.0, 0.3}) {
      auto [t, x] = m.evaluate(s, y);
      // g(y) = x - T along the boundary, so x = y + T here.
      CHECK(t == doctest::Approx(T - s).epsilon(1e-13));
      CHECK(x == doctest::Approx(y + T).epsilon(1e-13));
      CHECK(m.lambda(s, y) == 1.0);
    }
  }
  auto [s, y] = m.invert(0.1, 0.4);
  CHECK(s == doctest::Approx(T - 0.1).epsilon(1e-13));
  CHECK(y == doctest::Approx(0.4 - T).epsilon(1e-13));
}

TEST_CASE("zero surface: boundary is the identity") {
  auto m = build("flat:0");
  auto [t, x] = m.evaluate(0.0, 1.25);
  CHECK(t == 0.0);
  CHECK(x == doctest::Approx(1.25).epsilon(1e-14));
}

TEST_CASE("tilted surface: linear f and g") {
  const double v = 0.5;
  const double c = (1 + v) / (1 - v);  // h(z) = c z
  auto m = build("tilt:0.5");
  for (double y : {-3.0, -0.2, 0.7, 2.5}) {
    CHECK(m.g(y) == doctest::Approx(y / std::sqrt(c)).epsilon(1e-12));
    CHECK(m.f(y) == doctest::Approx(y * std::sqrt(c)).epsilon(1e-12));
    CHECK(m.lambda(0.4, y) == doctest::Approx(1.0).epsilon(1e-14));
  }
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j) pts.emplace_back(0.01 + 0.5 * i / 31.0, -2.0 + 4.0 * j / 31.0);
  CHECK(conformality_check(m, pts).metric_residual < 1e-10);
}

TEST_CASE("gauss surface: map identities") {
  auto m = build("gauss:0.3,1.0");
  const auto& fn = m.surface();
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ys(-3.0, 3.0), ss(0.0, 0.6);
  double prod = 0.0, bound = 0.0, trip = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double y = ys(rng), s = ss(rng);
    prod = std::max(prod, std::abs(m.df(y) * m.dg(y) - 1.0));
    auto [tb, xb] = m.evaluate(0.0, y);
    bound = std::max(bound, std::abs(tb - fn.value(xb)));
    auto [t, x] = m.evaluate(s, y);
    auto [s2, y2] = m.invert(t, x);
    trip = std::max({trip, std::abs(s2 - s), std::abs(y2 - y)});
  }
  CHECK(prod < 1e-8);
  CHECK(bound < 1e-8);
  CHECK(trip < 1e-8);
  // t = sigma(x) inverts to s = 0.
  auto [s0, y0] = m.invert(fn.value(0.4), 0.4);
  CHECK(std::abs(s0) < 1e-8);
  CHECK_THROWS_AS(m.invert(fn.value(0.4) + 0.1, 0.4), OutOfRegion);
}

TEST_CASE("conformality residual on the working region") {
  for (const char* id : {"gauss:0.3,1.0", "cos:0.2,1.0", "tilt:-0.3"}) {
    auto m = build(id);
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j) pts.emplace_back(0.02 + 0.4 * i / 31.0, -2.5 + 5.0 * j / 31.0);
    auto r = conformality_check(m, pts);
    CHECK(r.metric_residual < 1e-6);
    CHECK(r.boundary_jacobian < 1e-8);
    CHECK(r.boundary_det < 1e-8);
    CHECK(r.boundary_lambda < 1e-8);
    CHECK(r.ratio_error < 1e-4);
  }
}

TEST_CASE("boundary ratio is positive") {
  auto m = build("gauss:0.3,1.0");
  auto br = boundary_ratio(m, 0.3);
  CHECK(br.frozen_x > 0.0);
  CHECK(br.frozen_x == doctest::Approx(br.target).epsilon(1e-6));
  CHECK(br.frozen_y == doctest::Approx(br.target).epsilon(1e-6));
}

TEST_CASE("null segments map to slope +-1") {
  auto m = build("gauss:0.3,1.0");
  // s + y = const keeps y + s fixed, so g is constant and x - t is fixed.
  auto [t1, x1] = m.evaluate(0.1, 0.5);
  auto [t2, x2] = m.evaluate(0.3, 0.3);
  CHECK(std::abs((x2 - x1) / (t2 - t1) - 1.0) < 1e-12);
  auto [t3, x3] = m.evaluate(0.3, 0.7);
  CHECK(std::abs((x3 - x1) / (t3 - t1) + 1.0) < 1e-12);
}

TEST_CASE("boundary jets reproduce f and g") {
  auto m = build("gauss:0.3,1.0");
  const double y = 0.37;
  auto jets = m.boundary_jets(y, 24);
  CHECK(jets.f[1] == doctest::Approx(m.df(y)).epsilon(1e-13));
  CHECK(jets.g[1] == doctest::Approx(m.dg(y)).epsilon(1e-13));
  for (double eta : {-0.1, 0.05, 0.12}) {
    double fs = 0.0, gs = 0.0, pw = 1.0;
    for (int k = 0; k <= 24; ++k, pw *= eta) {
      fs += jets.f[k] * pw;
      gs += jets.g[k] * pw;
    }
    CHECK(fs == doctest::Approx(m.f(y + eta)).epsilon(1e-12));
    CHECK(gs == doctest::Approx(m.g(y + eta)).epsilon(1e-12));
  }
  // second derivative against differences of f'
  const double h = 1e-4;
  CHECK(jets.f.derivative(2) == doctest::Approx((m.df(y + h) - m.df(y - h)) / (2 * h)).epsilon(1e-7));
}
