#include "blowup/surface.hpp"

#include <doctest.h>

#include <cmath>

using namespace blowup;

TEST_CASE("zero and linear expressions") {
  auto z = parse_sigma_expression("0");
  CHECK(z.values.abs().maxCoeff() == 0.0);
  CHECK(spacelike_margin(z) == 0.0);
  auto t = parse_sigma_expression("0.5*x");
  CHECK((t.slopes - 0.5).abs().maxCoeff() < 1e-15);
  CHECK(spacelike_margin(t) == doctest::Approx(0.5));
}

TEST_CASE("margin of 0.3 sin x matches dense sampling") {
  auto s = parse_sigma_expression("0.3*sin(x)");
  double dense = 0.0;
  for (int i = 0; i <= 3200000; ++i) {
    const double x = -16.0 + 1e-5 * i;
    dense = std::max(dense, 0.3 * std::abs(std::cos(x)));
  }
  CHECK(std::abs(spacelike_margin(s) - dense) < 1e-6);
  CHECK(slope_consistency(s) < 1e-6);
}

TEST_CASE("non-space-like surfaces are rejected with the offending point") {
  try {
    parse_sigma_expression("1.2*sin(x)");
    FAIL("expected rejection");
  } catch (const SpacelikeViolation& v) {
    CHECK(std::abs(v.slope()) >= 1.0);
    CHECK(std::abs(1.2 * std::cos(v.x()) - v.slope()) < 1e-12);
  }
  CHECK_THROWS_AS(catalog_surface("tilt:1"), SpacelikeViolation);
}

TEST_CASE("catalog ids") {
  CHECK(catalog_surface("flat:1")(3.0) == 1.0);
  CHECK(catalog_surface("tilt:-0.25").slope(2.0) == -0.25);
  auto g = catalog_surface("gauss:0.3,1.0");
  CHECK(g(0.7) == doctest::Approx(0.3 * std::exp(-0.49)));
  auto c = catalog_surface("cos:0.2,2");
  CHECK(c.slope(0.4) == doctest::Approx(-0.4 * std::sin(0.8)));
  CHECK_THROWS_AS(catalog_surface("gauss:0.3"), std::invalid_argument);
  CHECK_THROWS_AS(catalog_surface("wave:1"), std::invalid_argument);
  CHECK_THROWS_AS(catalog_surface("flat"), std::invalid_argument);
}

TEST_CASE("h profile for flat and tilted surfaces") {
  auto flat = solve_h(catalog_surface("flat:0.7"));
  for (double z : {-3.0, 0.1, 5.3}) CHECK(flat(z) == doctest::Approx(z + 1.4).epsilon(1e-13));
  const double v = 0.4;
  auto tilt = solve_h(catalog_surface("tilt:0.4"));
  for (double z : {-3.0, 0.1, 5.3}) {
    // x(1 - v) = z, h = x(1 + v)
    CHECK(tilt(z) == doctest::Approx(z * (1 + v) / (1 - v)).epsilon(1e-12));
    CHECK(tilt.derivative(z) == doctest::Approx((1 + v) / (1 - v)).epsilon(1e-10));
  }
}

TEST_CASE("h profile round trip and derivative law") {
  auto s = catalog_surface("gauss:0.3,1.0");
  auto h = solve_h(s);
  double worst_round = 0.0, worst_slope = 0.0;
  for (double x = -4.0; x <= 4.0; x += 0.0137) {
    const double z = x - s(x);
    worst_round = std::max(worst_round, std::abs(h(z) - (x + s(x))));
    worst_round = std::max(worst_round, std::abs(h.exact(z) - (x + s(x))));
  }
  for (Eigen::Index i = 0; i < h.z().size(); i += 97) {
    const double sp = s.slopes[i];
    worst_slope = std::max(worst_slope, std::abs(h.derivative(h.z()[i]) - (1 + sp) / (1 - sp)));
  }
  CHECK(worst_round < 1e-10);
  CHECK(worst_slope < 1e-8);
}

TEST_CASE("Cantor surface: level set and sign") {
  const double eps = 0.05;
  auto spec = CompactSetSpec::middle_thirds(2, eps);
  REQUIRE(spec.gaps.size() == 3);
  auto s = build_cantor_sigma(spec);
  const auto& fn = dynamic_cast<const CantorSurface&>(*s.fn);
  // Oracle: the four depth-2 intervals built directly.
  const double comps[4][2] = {{0, 1.0 / 9}, {2.0 / 9, 1.0 / 3}, {2.0 / 3, 7.0 / 9}, {8.0 / 9, 1}};
  for (Eigen::Index i = 0; i < s.x.size(); ++i) {
    const double x = s.x[i];
    bool in = false;
    for (auto& c : comps) in = in || (x >= c[0] && x <= c[1]);
    const double ex = fn.excess(x);
    CHECK(ex >= 0.0);
    if (in) CHECK(fn.log_excess(x) == -INFINITY);
    else CHECK(std::isfinite(fn.log_excess(x)));
    if (in) CHECK(ex == 0.0);
    CHECK(s.values[i] >= eps);
  }
  // Far from E the surface sits at 2 epsilon.
  CHECK(s(5.0) == doctest::Approx(2 * eps));
  // The smooth step has large third derivatives, so the check needs a finer grid.
  CHECK(slope_consistency(build_cantor_sigma(spec, {2.0, 2.5e-4})) < 1e-6);
}

TEST_CASE("Cantor surface: single interval and single point") {
  CompactSetSpec interval;
  interval.lo = 0.0;
  interval.hi = 1.0;
  interval.epsilon = 0.1;
  auto s = build_cantor_sigma(interval);
  CHECK(s(0.5) == 0.1);
  CHECK(s(-3.0) == doctest::Approx(0.2));
  CHECK(s(4.0) == doctest::Approx(0.2));
  CompactSetSpec point;
  point.epsilon = 0.1;
  auto q = build_cantor_sigma(point);
  const auto& fn = dynamic_cast<const CantorSurface&>(*q.fn);
  CHECK(fn.excess(0.0) == 0.0);
  CHECK(fn.excess(0.01) > 0.0);
  CHECK(std::isfinite(fn.log_excess(1e-4)));
  CHECK(std::isfinite(fn.log_excess(-1e-4)));
  CHECK(fn.log_excess(0.0) == -INFINITY);
}

TEST_CASE("Cantor slopes scale linearly in epsilon") {
  double prev = 0.0;
  for (double eps : {0.08, 0.04, 0.02, 0.01}) {
    auto s = build_cantor_sigma(CompactSetSpec::middle_thirds(2, eps));
    const double m = spacelike_margin(s);
    if (prev > 0.0) CHECK(std::log(prev / m) / std::log(2.0) == doctest::Approx(1.0).epsilon(1e-9));
    prev = m;
  }
}

TEST_CASE("Cantor surface is smooth across gap endpoints") {
  auto s = build_cantor_sigma(CompactSetSpec::middle_thirds(2, 0.05));
  for (double e : {0.0, 1.0 / 9, 2.0 / 9, 1.0 / 3, 2.0 / 3, 1.0}) {
    const double h = 1e-4;
    const double left = (s.slope(e) - s.slope(e - h)) / h;
    const double right = (s.slope(e + h) - s.slope(e)) / h;
    CHECK(std::abs(left - right) < 1e-6);
  }
}

TEST_CASE("compact set validation") {
  CompactSetSpec bad;
  bad.lo = 0;
  bad.hi = 1;
  bad.epsilon = 0.1;
  bad.gaps = {{0.2, 0.5}, {0.4, 0.6}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.gaps = {};
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(build_cantor_sigma(CompactSetSpec::middle_thirds(2, 5.0)), SpacelikeViolation);
}
