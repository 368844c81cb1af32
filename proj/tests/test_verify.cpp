#include "blowup/verify.hpp"

#include <doctest.h>

#include <cmath>

using namespace blowup;

namespace {
// u = ((v x - t) / sqrt(1 - v^2))^{-2/p}, the boosted ODE solution
struct Boosted {
  double p, v, T;
  double u(double t, double x) const { return std::pow((T + v * x - t) / std::sqrt(1 - v * v), -2.0 / p); }
  double ut(double t, double x) const {
    return 2.0 / p * u(t, x) / (T + v * x - t);
  }
  CauchySampler sampler() const {
    return [*this](double t, double x) { return std::make_pair(u(t, x), ut(t, x)); };
  }
};

std::shared_ptr<const ParametrixBundle> bundle_for(const std::string& id, double p, int J, int n) {
  auto m = std::make_shared<ConformalMap>(solve_fg(solve_h(catalog_surface(id)), -10, 10));
  const PeriodicGrid g{n, 16.0, 0.0};
  return std::make_shared<ParametrixBundle>(build_parametrix(lambda_taylor_at_boundary(*m, g, J + 12), p, J, g, m, 12));
}
}  // namespace

TEST_CASE("leapfrog reproduces the flat solution") {
  const double p = 3.0;
  const Boosted ex{p, 0.0, 1.0};
  const auto sig = catalog_surface("flat:1");
  const CauchyData d = sample_cauchy(ex.sampler(), 0.0, -1.0, 1.0, 2001);
  LeapfrogOptions o;
  o.stop = 0.5;
  const LeapfrogField lf = leapfrog_oracle(d, *sig.fn, p, o);
  CHECK(lf.t_end == doctest::Approx(0.5));
  double err = 0.0;
  for (int i = lf.lo; i <= lf.hi; ++i) err = std::max(err, std::abs(lf.u[i] / ex.u(lf.t_end, lf.x(i)) - 1.0));
  CHECK(err < 1e-5);
  CHECK(lf.energy_drift < 1e-2);
}

TEST_CASE("leapfrog reproduces the boosted solution at second order") {
  const double p = 3.0, v = 0.5;
  const Boosted ex{p, v, 0.0};
  const auto sig = catalog_surface("tilt:0.5");
  LeapfrogOptions o;
  o.stop = 0.5;
  // data below t = v x on x in [0.5, 1.5]: t_c = -0.1
  const CauchyData d = sample_cauchy(ex.sampler(), -0.1, 0.5, 1.5, 2001);
  const LeapfrogField lf = leapfrog_oracle(d, *sig.fn, p, o);
  double err = 0.0;
  for (int i = lf.lo; i <= lf.hi; ++i) err = std::max(err, std::abs(lf.u[i] / ex.u(lf.t_end, lf.x(i)) - 1.0));
  CHECK(err < 1e-4);
  CHECK(lf.energy_drift < 1e-2);
  const ConvergenceReport cr = leapfrog_convergence(ex.sampler(), -0.1, 0.5, 1.5, 201, *sig.fn, p, o);
  MESSAGE("observed order " << cr.order);
  CHECK(cr.order >= 1.8);
}

TEST_CASE("leapfrog guards") {
  const Boosted ex{3.0, 0.0, 1.0};
  const auto sig = catalog_surface("flat:1");
  const CauchyData d = sample_cauchy(ex.sampler(), 0.0, -1.0, 1.0, 401);
  LeapfrogOptions o;
  o.cfl = 1.0;
  CHECK_THROWS_AS(leapfrog_oracle(d, *sig.fn, 3.0, o), CflViolation);
  o.cfl = 0.9;
  o.stop = 0.95;
  CHECK_THROWS_AS(leapfrog_oracle(d, *sig.fn, 3.0, o), std::invalid_argument);
  o.stop = 0.5;
  o.t_end = 0.999;
  CHECK_THROWS_AS(leapfrog_oracle(d, *sig.fn, 3.0, o), std::exception);
}

TEST_CASE("blowup fit on closed forms") {
  const double p = 3.0;
  const Boosted flat{p, 0.0, 1.0};
  const auto fs = catalog_surface("flat:1");
  const BlowupFitReport rf =
      blowup_coefficient_fit([&](double t, double x) { return flat.u(t, x); }, *fs.fn, p, {-1.0, 0.0, 2.0});
  CHECK(rf.max_relerr < 1e-6);
  const Boosted tilt{p, 0.5, 0.0};
  const auto ts = catalog_surface("tilt:0.5");
  const BlowupFitReport rt =
      blowup_coefficient_fit([&](double t, double x) { return tilt.u(t, x); }, *ts.fn, p, {-1.0, 0.3});
  CHECK(rt.fitted[0] == doctest::Approx(std::cbrt(0.75)).epsilon(1e-4));
  CHECK(rt.monotone);
}

TEST_CASE("gauss surface: constructed solution against the leapfrog oracle") {
  const double p = 3.0;
  const auto b = bundle_for("gauss:0.3,1.0", p, 9, 128);
  const auto [sol, rep] = picard_solve(b, SolveOptions{});
  REQUIRE(rep.converged);
  const auto& sigma = b->map()->surface();
  const FieldSampler u = [&](double t, double x) { return pushforward(sol, rep, t, x).u; };
  const BlowupFitReport fit = blowup_coefficient_fit(u, sigma, p, {-1.5, -0.7, 0.0, 0.4, 1.1});
  MESSAGE("blowup fit error " << fit.max_relerr);
  CHECK(fit.max_relerr < 1e-3);
  const double t_c = 0.3 - 0.15;
  const CauchyData d = sample_cauchy(solution_sampler(sol, rep), t_c, -0.5, 0.5, 1001);
  const LeapfrogField lf = leapfrog_oracle(d, sigma, p);
  const double agree = two_solver_agreement(lf, u);
  MESSAGE("two-solver agreement " << agree << " energy drift " << lf.energy_drift);
  CHECK(agree < 1e-3);
}
