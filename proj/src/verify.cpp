#include "blowup/verify.hpp"

#include "blowup/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace blowup {

CauchyData sample_cauchy(const CauchySampler& f, double t_c, double x_lo, double x_hi, int n) {
  if (n < 8 || !(x_hi > x_lo)) throw std::invalid_argument("Cauchy data needs n >= 8 points on a proper interval");
  CauchyData d;
  d.t_c = t_c;
  d.x0 = x_lo;
  d.dx = (x_hi - x_lo) / (n - 1);
  d.u.resize(n);
  d.u_t.resize(n);
  parallel_for(n, [&](int i) {
    const auto [u, ut] = f(t_c, d.x(i));
    d.u[i] = u;
    d.u_t[i] = ut;
  });
  if (!(d.u > 0.0).all()) throw std::invalid_argument("Cauchy data must be positive");
  return d;
}

CauchySampler solution_sampler(const SolutionField& sol, const PicardReport& rep) {
  return [&sol, rep](double t, double x) {
    const PushSample s = pushforward(sol, rep, t, x);
    return std::make_pair(s.u, s.u_t);
  };
}

double LeapfrogField::at(double xv) const {
  const double r = (xv - x0) / dx;
  const int i = std::clamp(int(std::floor(r)), lo, std::max(lo, hi - 1));
  if (r < lo - 1e-9 || r > hi + 1e-9) throw std::out_of_range("leapfrog field queried outside its valid region");
  const double f = std::clamp(r - i, 0.0, 1.0);
  return hi > lo ? (1 - f) * u[i] + f * u[i + 1] : u[lo];
}

LeapfrogField leapfrog_oracle(const CauchyData& data, const SurfaceFunction& sigma, double p,
                              const LeapfrogOptions& opts) {
  if (!(opts.cfl > 0.0 && opts.cfl <= 0.9)) throw CflViolation("CFL ratio must lie in (0, 0.9]");
  const int N = data.size();
  const double c = 2.0 * (p + 2.0) / (p * p);
  Eigen::ArrayXd sig(N);
  for (int i = 0; i < N; ++i) sig[i] = sigma.value(data.x(i));
  const double gap0 = (sig - data.t_c).minCoeff();
  if (!(gap0 > 0.0)) throw std::invalid_argument("Cauchy line must lie below the surface");

  LeapfrogField out;
  out.t_c = data.t_c;
  out.x0 = data.x0;
  out.dx = data.dx;
  if (std::isnan(opts.t_end)) {
    if (!(opts.stop > 0.0 && opts.stop <= 0.9)) throw std::invalid_argument("stop fraction must lie in (0, 0.9]");
    out.t_end = data.t_c + opts.stop * gap0;
  } else {
    out.t_end = opts.t_end;
  }
  const double T = out.t_end - data.t_c;
  if (!(T > 0.0)) throw std::invalid_argument("leapfrog end time must exceed t_c");
  out.steps = int(std::ceil(T / (opts.cfl * data.dx) - 1e-9));
  out.dt = T / out.steps;
  if (2 * out.steps + 3 > N) throw std::invalid_argument("x-window too narrow for the requested time span");

  const double r2 = (out.dt / data.dx) * (out.dt / data.dx), dt = out.dt, dx = data.dx;
  auto force = [&](const Eigen::ArrayXd& u) -> Eigen::ArrayXd { return c * u.abs().pow(p) * u; };
  auto lap = [&](const Eigen::ArrayXd& u, int lo, int hi, Eigen::ArrayXd& out_lap) {
    for (int i = lo; i <= hi; ++i) out_lap[i] = (u[i + 1] - 2 * u[i] + u[i - 1]) / (dx * dx);
  };
  auto check = [&](const Eigen::ArrayXd& u, int n, int lo, int hi) {
    const double t = data.t_c + n * dt;
    for (int i = lo; i <= hi; ++i) {
      if (!std::isfinite(u[i])) throw ApproachedBlowup("leapfrog field overflowed at t = " + std::to_string(t));
      if (sig[i] - t < opts.resolve_steps * dt)
        throw ApproachedBlowup("time step does not resolve the distance to the surface at x = " +
                               std::to_string(data.x(i)));
    }
  };

  Eigen::ArrayXd prev = data.u, cur = data.u, L = Eigen::ArrayXd::Zero(N);
  lap(prev, 1, N - 2, L);
  const Eigen::ArrayXd f0 = force(prev);
  for (int i = 1; i <= N - 2; ++i) cur[i] = prev[i] + dt * data.u_t[i] + 0.5 * dt * dt * (L[i] + f0[i]);
  check(cur, 1, 1, N - 2);

  // Energy balance on the shrinking interval [n+1, N-2-n] at levels n >= 1,
  // where u_t is centered.
  std::vector<double> energy, flux, scale;
  auto density = [&](const Eigen::ArrayXd& um, const Eigen::ArrayXd& u0, const Eigen::ArrayXd& up, int n) {
    const int a = n + 1, b = N - 2 - n;
    double E = 0.0, S = 0.0;
    auto at = [&](int i, double& e, double& m) {
      const double ut = (up[i] - um[i]) / (2 * dt), ux = (u0[i + 1] - u0[i - 1]) / (2 * dx);
      const double pot = c / (p + 2.0) * std::pow(std::abs(u0[i]), p + 2.0);
      e = 0.5 * ut * ut + 0.5 * ux * ux - pot;
      m = 0.5 * ut * ut + 0.5 * ux * ux + pot;
      return ut * ux;
    };
    double ea, ma, eb, mb;
    const double fa = at(a, ea, ma), fb = at(b, eb, mb);
    for (int i = a; i <= b; ++i) {
      double e, m;
      at(i, e, m);
      const double w = (i == a || i == b) ? 0.5 : 1.0;
      E += w * e * dx;
      S += w * m * dx;
    }
    // d/dt E = [u_t u_x]_a^b - (dx/dt)(e(a) + e(b)) as both ends move inward
    energy.push_back(E);
    scale.push_back(S);
    flux.push_back(fb - fa - (dx / dt) * (ea + eb));
  };

  Eigen::ArrayXd next(N);
  for (int n = 1; n < out.steps; ++n) {
    const int lo = n + 1, hi = N - 2 - n;
    lap(cur, lo, hi, L);
    const Eigen::ArrayXd f = force(cur);
    next = cur;
    for (int i = lo; i <= hi; ++i) next[i] = 2 * cur[i] - prev[i] + r2 * (cur[i + 1] - 2 * cur[i] + cur[i - 1]) + dt * dt * f[i];
    check(next, n + 1, lo, hi);
    if (hi - lo >= 2) density(prev, cur, next, n);
    prev.swap(cur);
    cur.swap(next);
  }
  out.u = cur;
  out.lo = out.steps;
  out.hi = N - 1 - out.steps;
  if (energy.size() >= 2) {
    double integral = 0.0, smax = 0.0;
    for (std::size_t k = 1; k < energy.size(); ++k) integral += 0.5 * dt * (flux[k] + flux[k - 1]);
    for (double s : scale) smax = std::max(smax, s);
    out.energy_drift = std::abs(energy.back() - energy.front() - integral) / smax;
  }
  return out;
}

ConvergenceReport leapfrog_convergence(const CauchySampler& f, double t_c, double x_lo, double x_hi, int n,
                                       const SurfaceFunction& sigma, double p, const LeapfrogOptions& opts) {
  ConvergenceReport rep;
  std::vector<LeapfrogField> runs;
  for (int k = 0; k < 3; ++k) {
    const int m = (n - 1) * (1 << k) + 1;
    rep.sizes.push_back(m);
    runs.push_back(leapfrog_oracle(sample_cauchy(f, t_c, x_lo, x_hi, m), sigma, p, opts));
  }
  // compare on the coarse points valid in every run
  const LeapfrogField& c0 = runs[0];
  for (int k = 0; k < 2; ++k) {
    double d = 0.0;
    for (int i = c0.lo; i <= c0.hi; ++i) {
      const double xv = c0.x(i);
      d = std::max(d, std::abs(runs[std::size_t(k)].at(xv) - runs[std::size_t(k + 1)].at(xv)));
    }
    rep.differences.push_back(d);
  }
  rep.order = std::log2(rep.differences[0] / rep.differences[1]);
  return rep;
}

BlowupFitReport blowup_coefficient_fit(const FieldSampler& u, const SurfaceFunction& sigma, double p,
                                       const std::vector<double>& xs, double tau0, int levels) {
  if (levels < 3) throw std::invalid_argument("blowup fit needs at least three offsets");
  BlowupFitReport rep;
  const std::size_t n = xs.size();
  rep.x = xs;
  rep.sigma.resize(n);
  rep.slope.resize(n);
  rep.fitted.resize(n);
  rep.target.resize(n);
  rep.relerr.resize(n);
  std::vector<char> mono(n, 1);
  parallel_for(int(n), [&](int k) {
    const std::size_t i = std::size_t(k);
    const double x = xs[i], sg = sigma.value(x), sl = sigma.slope(x);
    std::vector<double> f, a;
    for (int l = 0; l < levels; ++l) {
      const double tau = tau0 * std::ldexp(1.0, -l);
      f.push_back(std::pow(tau, 2.0 / p) * u(sg - tau, x));
    }
    // a + b tau with tau halving: a = 2 f_{l+1} - f_l
    for (int l = 0; l + 1 < levels; ++l) a.push_back(2 * f[std::size_t(l + 1)] - f[std::size_t(l)]);
    const double noise = 1e-12 * std::abs(a.back());
    for (std::size_t l = 2; l < a.size(); ++l) {
      const double d1 = std::abs(a[l] - a[l - 1]), d0 = std::abs(a[l - 1] - a[l - 2]);
      if (d1 > d0 && d1 > noise) mono[i] = 0;
    }
    rep.sigma[i] = sg;
    rep.slope[i] = sl;
    rep.fitted[i] = a.back();
    rep.target[i] = std::pow(1.0 - sl * sl, 1.0 / p);
    rep.relerr[i] = std::abs(rep.fitted[i] / rep.target[i] - 1.0);
  });
  for (std::size_t i = 0; i < n; ++i) {
    rep.max_relerr = std::max(rep.max_relerr, rep.relerr[i]);
    rep.monotone = rep.monotone && mono[i];
  }
  return rep;
}

double two_solver_agreement(const LeapfrogField& lf, const FieldSampler& u) {
  std::vector<double> err(std::size_t(std::max(0, lf.hi - lf.lo + 1)));
  parallel_for(int(err.size()), [&](int k) {
    const int i = lf.lo + k;
    err[std::size_t(k)] = std::abs(u(lf.t_end, lf.x(i)) / lf.u[i] - 1.0);
  });
  return err.empty() ? 0.0 : *std::max_element(err.begin(), err.end());
}

namespace {

double lambda_constant(const CompactSetSpec& spec, const CantorOptions& opts) {
  const SigmaSurface surf = build_cantor_sigma(spec);
  const ConformalMap map = solve_fg(solve_h(surf), opts.y_center - 0.5 * opts.y_length - 1.0, opts.y_center + 0.5 * opts.y_length + 1.0);
  double dev = 0.0;
  for (int k = 1; k <= 6; ++k)
    for (int i = 0; i < opts.n_y; ++i)
      dev = std::max(dev, std::abs(map.lambda(0.005 * k, opts.y_center + opts.y_length * (double(i) / opts.n_y - 0.5)) - 1.0));
  return dev / spec.epsilon;
}

CantorReport cantor_attempt(const CompactSetSpec& spec, double p, const CantorOptions& opts) {
  CantorReport rep;
  rep.epsilon = spec.epsilon;
  rep.p = p;
  rep.components = spec.components();
  const SigmaSurface surf = build_cantor_sigma(spec);
  const auto& cs = dynamic_cast<const CantorSurface&>(*surf.fn);
  auto map = std::make_shared<ConformalMap>(
      solve_fg(solve_h(surf), opts.y_center - 0.5 * opts.y_length - 1.0, opts.y_center + 0.5 * opts.y_length + 1.0));
  const PeriodicGrid g{opts.n_y, opts.y_length, opts.y_center};
  auto bundle = std::make_shared<ParametrixBundle>(
      build_parametrix(lambda_taylor_at_boundary(*map, g, opts.J + 12), p, opts.J, g, map, 12));
  // smallest layer reaching t = 0 over the window; halving below it
  // could not cover the data line
  double s_need = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double x = opts.x_lo - 0.05 + (opts.x_hi - opts.x_lo + 0.1) * i / 400.0;
    s_need = std::max(s_need, map->invert(0.0, x).first);
  }
  SolveOptions so = opts.solve;
  so.s0 = 1.1 * s_need;
  so.max_halvings = 0;
  auto [sol_value, pr] = picard_solve(bundle, so);
  auto solp = std::make_shared<const SolutionField>(std::move(sol_value));
  const SolutionField& sol = *solp;
  rep.bundle = bundle;
  rep.solution = solp;
  rep.picard = pr;
  rep.s0 = pr.s0;
  rep.pde_residual = pde_residual(sol).max_relative;
  if (!(rep.pde_residual < opts.residual_gate))
    throw std::runtime_error("PDE residual " + std::to_string(rep.pde_residual) + " above the gate at s0 = " +
                             std::to_string(pr.s0));

  // blowup set on the x-grid against E
  const double dx = (opts.x_hi - opts.x_lo) / (opts.n_x - 1);
  double worst = 0.0;
  for (int i = 0; i < opts.n_x; ++i) {
    const double x = opts.x_lo + i * dx;
    const bool on_surface_min = cs.excess(x) == 0.0;
    if (on_surface_min != spec.contains(x)) {
      double d = std::numeric_limits<double>::infinity();
      for (auto [a, b] : rep.components) d = std::min({d, std::abs(x - a), std::abs(x - b)});
      worst = std::max(worst, d / dx);
    }
  }
  rep.set_mismatch_cells = worst;

  // Cauchy data on t = 0; throws OutOfRegion when the layer does not reach it
  const CauchySampler data = solution_sampler(sol, pr);
  rep.x.resize(std::size_t(opts.n_x));
  rep.sigma = rep.u0 = rep.u0_t = rep.x;
  parallel_for(opts.n_x, [&](int i) {
    const double x = opts.x_lo + i * dx;
    const auto [u, ut] = data(0.0, x);
    rep.x[std::size_t(i)] = x;
    rep.sigma[std::size_t(i)] = cs.value(x);
    rep.u0[std::size_t(i)] = u;
    rep.u0_t[std::size_t(i)] = ut;
  });

  // off-E samples: gap midpoints and points outside [lo, hi]
  std::vector<double> probes{spec.lo - 0.3, spec.hi + 0.3};
  for (auto [a, b] : spec.gaps) probes.push_back(0.5 * (a + b));
  const double t_end = spec.epsilon * (1.0 - 1e-3);
  rep.bounded = true;
  for (double xs : probes) {
    LeapfrogOptions lo;
    lo.t_end = t_end;
    // the valid region shrinks by t_end / cfl per side
    const double half = 1.05 * t_end / lo.cfl + 1e-3;
    double gap = std::numeric_limits<double>::infinity();
    for (int k = -50; k <= 50; ++k) gap = std::min(gap, cs.value(xs + half * k / 50.0) - t_end);
    const double dt = std::min(gap / (lo.resolve_steps * 1.5), t_end / 400.0);
    const int n = std::max(64, int(std::ceil(2 * half / (dt / lo.cfl))) + 1);
    const LeapfrogField lf = leapfrog_oracle(sample_cauchy(data, 0.0, xs - half, xs + half, n), cs, p, lo);
    const double ul = lf.at(xs), us = pushforward(sol, pr, t_end, xs).u;
    rep.off_x.push_back(xs);
    rep.off_u.push_back(ul);
    rep.off_rel.push_back(std::abs(us / ul - 1.0));
    rep.bounded = rep.bounded && std::isfinite(ul) && ul > 0.0 && rep.off_rel.back() < 1e-2;
  }
  return rep;
}

}  // namespace

CantorReport cantor_pipeline(const CompactSetSpec& spec, double p, const CantorOptions& opts) {
  CompactSetSpec cur = spec;
  std::vector<std::string> log;
  for (int k = 0; k <= opts.max_epsilon_halvings; ++k) {
    try {
      CantorReport rep = cantor_attempt(cur, p, opts);
      rep.epsilon_requested = spec.epsilon;
      log.push_back("epsilon = " + std::to_string(cur.epsilon) + ": accepted with s0 = " + std::to_string(rep.s0));
      rep.attempts = log;
      rep.lambda_constant = lambda_constant(cur, opts);
      CompactSetSpec half = cur;
      half.epsilon *= 0.5;
      rep.lambda_constant_half = lambda_constant(half, opts);
      return rep;
    } catch (const std::exception& e) {
      log.push_back("epsilon = " + std::to_string(cur.epsilon) + ": " + e.what());
    }
    cur.epsilon *= 0.5;
  }
  std::string msg = "Cantor pipeline not accepted";
  for (const auto& l : log) msg += "; " + l;
  throw NoContraction(msg);
}

}  // namespace blowup
