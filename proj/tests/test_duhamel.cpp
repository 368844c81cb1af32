#include "blowup/duhamel.hpp"

#include <boost/numeric/odeint.hpp>
#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>

using namespace blowup;

namespace {
constexpr double pi = std::numbers::pi;

std::vector<Eigen::ArrayXd> sample(const SGrid& sg, const PeriodicGrid& yg,
                                   const std::function<double(double, double)>& f) {
  std::vector<Eigen::ArrayXd> out;
  for (double s : sg.s) {
    Eigen::ArrayXd row(yg.n);
    for (int i = 0; i < yg.n; ++i) row[i] = f(s, yg.y(i));
    out.push_back(row);
  }
  return out;
}

// Single mode: v'' + a^2 v - (nu^2 - 1/4) s^{-2} v = s^q, started at s1 from
// the Frobenius particular solution sum c_k s^{q+2+2k} and integrated by an
// adaptive Runge-Kutta method.
std::pair<double, double> mode_oracle(double nu, double a, double q, double s1, double s) {
  auto frob = [&](double x) {
    double c = 1.0 / ((q + 1.5) * (q + 1.5) - nu * nu), v = 0.0, dv = 0.0;
    for (int k = 0; k < 60; ++k) {
      const double e = q + 2 + 2 * k;
      v += c * std::pow(x, e);
      dv += c * e * std::pow(x, e - 1);
      const double d = (e + 2 - 0.5) * (e + 2 - 0.5) - nu * nu;
      c *= -a * a / d;
    }
    return std::array<double, 2>{v, dv};
  };
  using State = std::array<double, 2>;
  State st = frob(s1);
  auto rhs = [&](const State& x, State& dx, double t) {
    dx[0] = x[1];
    dx[1] = std::pow(t, q) - a * a * x[0] + (nu * nu - 0.25) / (t * t) * x[0];
  };
  namespace ode = boost::numeric::odeint;
  ode::integrate_adaptive(ode::make_controlled<ode::runge_kutta_dopri5<State>>(1e-30, 1e-13), rhs, st, s1, s, 1e-3 * s1);
  return {st[0], st[1]};
}
}  // namespace

TEST_CASE("geometric s-grid") {
  const SGrid g = SGrid::geometric(0.5, 0.5 / 256);
  CHECK(g.s.front() == doctest::Approx(0.5 / 256).epsilon(1e-15));
  CHECK(g.s0() == 0.5);
  CHECK(g.ratio <= 1.1);
  CHECK(g.ratio > 1.09);
}

TEST_CASE("zero forcing gives zero") {
  const SingularKernel kr = SingularKernel::for_power(3.0);
  const PeriodicGrid yg{16, 8.0, 0.0};
  const SGrid sg = SGrid::geometric(0.5, 0.5 / 64);
  const DuhamelOperator D(kr, yg, sg, 1.0);
  const auto r = D.apply(sample(sg, yg, [](double, double) { return 0.0; }));
  for (const auto& row : r.v) CHECK(row.abs().maxCoeff() == 0.0);
}

TEST_CASE("power-law forcing reproduces the Euler particular solution") {
  const SingularKernel kr = SingularKernel::for_power(3.0);
  const double nu = kr.nu();
  const PeriodicGrid yg{16, 8.0, 0.0};
  const SGrid sg = SGrid::geometric(0.5, 0.5 / 256);
  for (double q : {nu - 1.0, nu, nu + 1.0}) {
    const auto F = sample(sg, yg, [&](double s, double) { return std::pow(s, q); });
    const double kappa = fit_small_s_exponent(sg, F);
    CHECK(kappa == doctest::Approx(q).epsilon(1e-12));
    const DuhamelOperator D(kr, yg, sg, kappa);
    const auto r = D.apply(F);
    const double den = (q + 1.5) * (q + 1.5) - nu * nu;
    double worst = 0.0;
    for (int j = 0; j < sg.size(); ++j) {
      const double s = sg.s[std::size_t(j)];
      const double v = std::pow(s, q + 2) / den, vs = (q + 2) * std::pow(s, q + 1) / den;
      worst = std::max(worst, (r.v[std::size_t(j)] - v).abs().maxCoeff() / v);
      worst = std::max(worst, (r.v_s[std::size_t(j)] - vs).abs().maxCoeff() / vs);
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("single-mode forcing matches an adaptive ODE integration") {
  const SingularKernel kr = SingularKernel::for_power(3.0);
  const double nu = kr.nu();
  const PeriodicGrid yg{32, 16.0, 0.0};
  const SGrid sg = SGrid::geometric(1.0, 1.0 / 256);
  const double xi0 = 3.0 / yg.length, a = 2 * pi * xi0;
  for (double q : {nu - 1.0, nu + 0.5}) {
    const auto F = sample(sg, yg, [&](double s, double y) { return std::pow(s, q) * std::cos(2 * pi * xi0 * y); });
    const DuhamelOperator D(kr, yg, sg, q);
    const auto r = D.apply(F);
    for (int j : {10, 30, sg.size() - 1}) {
      const double s = sg.s[std::size_t(j)];
      const auto [v, vs] = mode_oracle(nu, a, q, 1e-3 * s, s);
      for (int i : {0, 5, 11}) {
        const double c = std::cos(2 * pi * xi0 * yg.y(i));
        CHECK(std::abs(r.v[std::size_t(j)][i] - v * c) < 1e-6 * std::abs(v));
        CHECK(std::abs(r.v_s[std::size_t(j)][i] - vs * c) < 1e-6 * std::abs(vs));
      }
    }
  }
}

TEST_CASE("causality: forcing above a cut does not act below it") {
  const SingularKernel kr = SingularKernel::for_power(3.0);
  const PeriodicGrid yg{32, 16.0, 0.0};
  const SGrid sg = SGrid::geometric(0.5, 0.5 / 128);
  const DuhamelOperator D(kr, yg, sg, 1.5);
  auto F = sample(sg, yg, [](double s, double y) { return std::pow(s, 1.5) * (1 + 0.5 * std::sin(y)); });
  const auto full = D.apply(F);
  const int cut = sg.size() / 2;
  for (int j = cut + 1; j < sg.size(); ++j) F[std::size_t(j)].setZero();
  const auto part = D.apply(F);
  for (int j = 0; j <= cut; ++j) {
    CHECK((full.v[std::size_t(j)] - part.v[std::size_t(j)]).abs().maxCoeff() == 0.0);
  }
  CHECK((full.v.back() - part.v.back()).abs().maxCoeff() > 0.0);
}

TEST_CASE("solution satisfies the singular equation under finite differences") {
  const SingularKernel kr = SingularKernel::for_power(3.0);
  const double c = kr.nu() * kr.nu() - 0.25;
  const PeriodicGrid yg{32, 16.0, 0.0};
  const SGrid sg = SGrid::geometric(0.5, 0.5 / 256, 1.01);
  const double q = 1.2;
  auto f = [&](double s, double y) {
    return std::pow(s, q) * (1 + 0.4 * std::cos(2 * pi * y / 8)) + std::pow(s, q + 0.7) * std::sin(2 * pi * y / 16);
  };
  const auto F = sample(sg, yg, f);
  const DuhamelOperator D(kr, yg, sg, q);
  const auto r = D.apply(F);
  const double h = std::log(sg.ratio);
  double worst = 0.0;
  for (int j = 10; j + 2 < sg.size(); j += 25) {
    const double s = sg.s[std::size_t(j)];
    auto V = [&](int d) { return r.v[std::size_t(j + d)]; };
    // uniform in u = log s: v_ss = s^{-2} (v_uu - v_u)
    const Eigen::ArrayXd vu = (V(-2) - 8 * V(-1) + 8 * V(1) - V(2)) / (12 * h);
    const Eigen::ArrayXd vuu = (-V(-2) + 16 * V(-1) - 30 * V(0) + 16 * V(1) - V(2)) / (12 * h * h);
    const Eigen::ArrayXd lhs = (vuu - vu) / (s * s) - spectral_derivative(V(0), yg, 2) - c / (s * s) * V(0);
    worst = std::max(worst, (lhs - F[std::size_t(j)]).abs().maxCoeff() / F[std::size_t(j)].abs().maxCoeff());
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("estimate shape: v / s^{2+delta} stays bounded over delta") {
  const SingularKernel kr = SingularKernel::for_power(3.0);
  const double nu = kr.nu();
  const PeriodicGrid yg{32, 16.0, 0.0};
  const SGrid sg = SGrid::geometric(0.5, 0.5 / 256);
  double worst = 0.0;
  for (double d = nu - 1.5 + 0.1; d < nu + 2; d += 0.4) {
    const auto F = sample(sg, yg, [&](double s, double y) { return std::pow(s, d) * std::cos(2 * pi * y / 16); });
    const auto r = DuhamelOperator(kr, yg, sg, d).apply(F);
    for (int j = 0; j < sg.size(); ++j)
      worst = std::max(worst, r.v[std::size_t(j)].abs().maxCoeff() / std::pow(sg.s[std::size_t(j)], 2 + d));
  }
  CHECK(worst < 10.0);
  CHECK_THROWS_AS(DuhamelOperator(kr, yg, sg, nu - 1.5), std::invalid_argument);
}
