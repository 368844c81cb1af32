#include "blowup/solver.hpp"

#include "blowup/parallel.hpp"
#include "blowup/roots.hpp"

#include <Eigen/LU>

#include <cmath>
#include <optional>
#include <string>

namespace blowup {

double taylor_remainder(double v, double w, double p) {
  const double x = w / v;
  if (!(v > 0.0) || !(1.0 + x > 0.0)) throw SignLoss("v + w left the positive branch");
  const double r = p + 1.0;
  double g;
  if (std::abs(x) < 1e-3) {
    // sum_{k >= 2} binom(r, k) x^k
    double b = r * (r - 1.0) / 2.0, xk = x * x;
    g = 0.0;
    for (int k = 2; k <= 10; ++k) {
      g += b * xk;
      b *= (r - k) / (k + 1.0);
      xk *= x;
    }
  } else {
    g = std::expm1(r * std::log1p(x)) - r * x;
  }
  return std::pow(v, r) * g;
}

Eigen::ArrayXd nonlinear_rhs(const Eigen::ArrayXd& w, const Eigen::ArrayXd& vt, const Eigen::ArrayXd& E,
                             const Eigen::ArrayXd& rho, const Eigen::ArrayXd& lambda, double s, double p) {
  const double c = 2.0 * (p + 2.0) / (p * p);
  Eigen::ArrayXd F = -E + c * (p + 1.0) / (s * s) * (lambda * rho.pow(p) - 1.0) * w;
  for (Eigen::Index i = 0; i < F.size(); ++i) {
    if (w[i] != 0.0) F[i] += c * lambda[i] * taylor_remainder(vt[i], w[i], p);
  }
  return F;
}

double default_delta(int J, double p) { return std::min(J - 1.0 - 2.0 / p, 2.0 / p + 1.0) - 0.05; }

namespace {

// 5-point first and second differences on a uniform grid, one-sided at the ends.
std::vector<Eigen::ArrayXd> diff_u(const std::vector<Eigen::ArrayXd>& f, double h, int order) {
  const int N = int(f.size());
  if (N < 5) throw std::invalid_argument("finite differences need at least 5 s-nodes");
  std::vector<Eigen::ArrayXd> out(f.size());
  auto F = [&](int j) -> const Eigen::ArrayXd& { return f[std::size_t(j)]; };
  for (int j = 0; j < N; ++j) {
    Eigen::ArrayXd d;
    if (order == 1) {
      if (j >= 2 && j + 2 < N)
        d = (F(j - 2) - 8 * F(j - 1) + 8 * F(j + 1) - F(j + 2)) / (12 * h);
      else if (j == 0)
        d = (-25 * F(0) + 48 * F(1) - 36 * F(2) + 16 * F(3) - 3 * F(4)) / (12 * h);
      else if (j == 1)
        d = (-3 * F(0) - 10 * F(1) + 18 * F(2) - 6 * F(3) + F(4)) / (12 * h);
      else if (j == N - 1)
        d = (25 * F(N - 1) - 48 * F(N - 2) + 36 * F(N - 3) - 16 * F(N - 4) + 3 * F(N - 5)) / (12 * h);
      else
        d = (3 * F(N - 1) + 10 * F(N - 2) - 18 * F(N - 3) + 6 * F(N - 4) - F(N - 5)) / (12 * h);
    } else {
      if (j >= 2 && j + 2 < N)
        d = (-F(j - 2) + 16 * F(j - 1) - 30 * F(j) + 16 * F(j + 1) - F(j + 2)) / (12 * h * h);
      else if (j == 0)
        d = (35 * F(0) - 104 * F(1) + 114 * F(2) - 56 * F(3) + 11 * F(4)) / (12 * h * h);
      else if (j == 1)
        d = (11 * F(0) - 20 * F(1) + 6 * F(2) + 4 * F(3) - F(4)) / (12 * h * h);
      else if (j == N - 1)
        d = (35 * F(N - 1) - 104 * F(N - 2) + 114 * F(N - 3) - 56 * F(N - 4) + 11 * F(N - 5)) / (12 * h * h);
      else
        d = (11 * F(N - 1) - 20 * F(N - 2) + 6 * F(N - 3) + 4 * F(N - 4) - F(N - 5)) / (12 * h * h);
    }
    out[std::size_t(j)] = d;
  }
  return out;
}

}  // namespace

XNormReport x_norm(const SGrid& sg, const PeriodicGrid& yg, const std::vector<Eigen::ArrayXd>& w, int m,
                   double delta) {
  if (m < 0 || m > 2) throw std::invalid_argument("x_norm supports m in {0, 1, 2}");
  if (int(w.size()) != sg.size()) throw std::invalid_argument("x_norm: field does not match the s-grid");
  if (m > 0 && sg.size() < 5) throw std::invalid_argument("x_norm: s-grid too coarse for derivatives");
  const double h = std::log(sg.ratio);
  // ds[mu][j]: d_s^mu w
  std::vector<std::vector<Eigen::ArrayXd>> ds{w};
  if (m >= 1) {
    const auto wu = diff_u(w, h, 1);
    std::vector<Eigen::ArrayXd> d1, d2;
    for (int j = 0; j < sg.size(); ++j) d1.push_back(wu[std::size_t(j)] / sg.s[std::size_t(j)]);
    ds.push_back(d1);
    if (m >= 2) {
      const auto wuu = diff_u(w, h, 2);
      for (int j = 0; j < sg.size(); ++j) {
        const double s = sg.s[std::size_t(j)];
        d2.push_back((wuu[std::size_t(j)] - wu[std::size_t(j)]) / (s * s));
      }
      ds.push_back(d2);
    }
  }
  XNormReport rep{m, delta, 0.0, {}};
  for (int alpha = 0; alpha <= m; ++alpha)
    for (int beta = 0; alpha + beta <= m; ++beta)
      for (int mu = 0; mu <= alpha; ++mu) {
        double sup = 0.0;
        for (int j = 0; j < sg.size(); ++j) {
          const double s = sg.s[std::size_t(j)];
          const Eigen::ArrayXd& f = ds[std::size_t(mu)][std::size_t(j)];
          const Eigen::ArrayXd g = beta == 0 ? f : spectral_derivative(f, yg, beta);
          sup = std::max(sup, std::pow(s, -(alpha - mu) - delta - 1.0) * g.abs().maxCoeff());
        }
        rep.terms.push_back({alpha, beta, mu, sup});
        rep.value += sup;
      }
  return rep;
}

SolutionField::SolutionField(std::shared_ptr<const ParametrixBundle> b, SGrid sg)
    : bundle_(std::move(b)), sg_(std::move(sg)) {
  const int N = sg_.size();
  vt.resize(std::size_t(N));
  vt_s = E = rho = lambda = vt;
  parallel_for(N, [&](int j) {
    const double s = sg_.s[std::size_t(j)];
    lambda[std::size_t(j)] = bundle_->lambda_row(s);
    const ParametrixValues pv = bundle_->evaluate(s, ResidualRoute::Automatic, &lambda[std::size_t(j)]);
    vt[std::size_t(j)] = pv.v;
    vt_s[std::size_t(j)] = pv.v_s;
    E[std::size_t(j)] = pv.E;
    rho[std::size_t(j)] = bundle_->rho().evaluate(s);
  });
  const Eigen::ArrayXd zero = Eigen::ArrayXd::Zero(bundle_->grid().n);
  set_correction(std::vector<Eigen::ArrayXd>(std::size_t(N), zero), std::vector<Eigen::ArrayXd>(std::size_t(N), zero));
}

void SolutionField::set_correction(std::vector<Eigen::ArrayXd> w_rows, std::vector<Eigen::ArrayXd> ws_rows) {
  w = std::move(w_rows);
  w_s = std::move(ws_rows);
  w_hat_.clear();
  ws_hat_.clear();
  for (std::size_t j = 0; j < w.size(); ++j) {
    w_hat_.push_back(fft_forward(w[j]));
    ws_hat_.push_back(fft_forward(w_s[j]));
  }
}

FieldSample SolutionField::sample(double s, double y) const {
  const int N = sg_.size();
  if (!(s >= sg_.s_min() * (1 - 1e-12) && s <= sg_.s0() * (1 + 1e-12)))
    throw std::out_of_range("sample: s outside the solution grid");
  const double a = -2.0 / p();
  const RhoSample r = bundle_->rho_at(s, y);
  const double sa = std::pow(s, a);
  FieldSample out{sa * r.rho, sa * (r.rho_s + a * r.rho / s), sa * r.rho_y};

  const double h = std::log(sg_.ratio), u = std::log(s / sg_.s_min());
  const int j = std::clamp(int(std::floor(u / h)), 0, N - 2);
  const Eigen::ArrayXcd wy = interpolation_weights(ygrid(), y), wyd = interpolation_weights_dy(ygrid(), y);
  auto W = [&](int k) { return interpolate(w_hat_[std::size_t(k)], wy); };
  auto WS = [&](int k) { return interpolate(ws_hat_[std::size_t(k)], wy); };
  auto WY = [&](int k) { return interpolate(w_hat_[std::size_t(k)], wyd); };
  // cubic Hermite in log s for w
  const double t = (std::log(s) - std::log(sg_.s[std::size_t(j)])) / h;
  const double h00 = 2 * t * t * t - 3 * t * t + 1, h10 = t * t * t - 2 * t * t + t;
  const double h01 = -2 * t * t * t + 3 * t * t, h11 = t * t * t - t * t;
  const double m0 = sg_.s[std::size_t(j)] * WS(j), m1 = sg_.s[std::size_t(j + 1)] * WS(j + 1);
  out.v += h00 * W(j) + h10 * h * m0 + h01 * W(j + 1) + h11 * h * m1;
  // 4-point Lagrange in log s for w_s and w_y
  const int first = std::clamp(j - 1, 0, std::max(0, N - 4));
  const int cnt = std::min(4, N);
  const double uu = std::log(s);
  for (int i = 0; i < cnt; ++i) {
    double L = 1.0;
    const double ui = std::log(sg_.s[std::size_t(first + i)]);
    for (int k = 0; k < cnt; ++k)
      if (k != i) L *= (uu - std::log(sg_.s[std::size_t(first + k)])) / (ui - std::log(sg_.s[std::size_t(first + k)]));
    out.v_s += L * WS(first + i);
    out.v_y += L * WY(first + i);
  }
  return out;
}

std::pair<SolutionField, PicardReport> picard_attempt(std::shared_ptr<const ParametrixBundle> b,
                                                      const SolveOptions& opts) {
  const double p = b->p();
  PicardReport rep;
  rep.s0 = opts.s0;
  rep.delta = std::isnan(opts.delta) ? default_delta(b->J(), p) : opts.delta;
  const double nu = 1.5 + 2.0 / p;
  if (!(rep.delta > nu - 1.5)) throw std::invalid_argument("delta must exceed 2/p");
  SGrid sg = SGrid::geometric(opts.s0, opts.s0 / opts.smin_ratio, opts.ratio);
  SolutionField sol(b, sg);
  const int N = sg.size();
  const PeriodicGrid& yg = b->grid();

  std::vector<Eigen::ArrayXd> F0(static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j) F0[std::size_t(j)] = -sol.E[std::size_t(j)];
  rep.kappa = fit_small_s_exponent(sg, F0);
  if (std::isnan(rep.kappa)) rep.kappa = rep.delta;  // residual vanishes identically
  if (!(rep.kappa > nu - 1.5)) {
    rep.restarts.push_back("residual exponent " + std::to_string(rep.kappa) + " does not exceed 2/p");
    return {std::move(sol), rep};
  }
  const DuhamelOperator D(SingularKernel(nu), yg, sg, rep.kappa);

  std::vector<Eigen::ArrayXd> w = sol.w;
  for (int it = 1; it <= opts.max_iter; ++it) {
    std::vector<Eigen::ArrayXd> F(static_cast<std::size_t>(N));
    try {
      for (int j = 0; j < N; ++j) {
        const std::size_t k = std::size_t(j);
        F[k] = nonlinear_rhs(w[k], sol.vt[k], sol.E[k], sol.rho[k], sol.lambda[k], sg.s[k], p);
      }
    } catch (const SignLoss& e) {
      rep.restarts.push_back(std::string("sign loss at iteration ") + std::to_string(it));
      return {std::move(sol), rep};
    }
    DuhamelResult r = D.apply(F);
    std::vector<Eigen::ArrayXd> diff(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) diff[std::size_t(j)] = r.v[std::size_t(j)] - w[std::size_t(j)];
    const double upd = x_norm(sg, yg, diff, 0, rep.delta).value;
    const double size = x_norm(sg, yg, r.v, 0, rep.delta).value;
    rep.iterations = it;
    rep.updates.push_back(upd);
    rep.tail_fraction = r.tail_fraction;
    rep.tail_model_error = r.tail_model_error;
    if (rep.updates.size() >= 2) rep.ratios.push_back(upd / rep.updates[rep.updates.size() - 2]);
    w = r.v;
    sol.set_correction(r.v, r.v_s);
    rep.w_norm = size;
    if (!std::isfinite(upd)) {
      rep.restarts.push_back("non-finite update at iteration " + std::to_string(it));
      return {std::move(sol), rep};
    }
    if (upd == 0.0 || upd <= opts.tol * size) {
      rep.converged = true;
      return {std::move(sol), rep};
    }
    if (!rep.ratios.empty() && rep.ratios.back() >= 1.0) {
      rep.restarts.push_back("update ratio " + std::to_string(rep.ratios.back()) + " at iteration " +
                             std::to_string(it));
      return {std::move(sol), rep};
    }
  }
  rep.restarts.push_back("no convergence in " + std::to_string(opts.max_iter) + " iterations");
  return {std::move(sol), rep};
}

std::pair<SolutionField, PicardReport> picard_solve(std::shared_ptr<const ParametrixBundle> b,
                                                    const SolveOptions& opts) {
  SolveOptions o = opts;
  std::vector<std::string> history;
  for (int halvings = 0; halvings <= opts.max_halvings; ++halvings) {
    std::optional<std::pair<SolutionField, PicardReport>> attempt;
    try {
      attempt.emplace(picard_attempt(b, o));
    } catch (const std::domain_error& e) {
      // the parametrix itself fails on this layer
      history.push_back("s0 = " + std::to_string(o.s0) + ": " + e.what());
      o.s0 *= 0.5;
      continue;
    }
    auto& [sol, rep] = *attempt;
    rep.halvings = halvings;
    for (const auto& msg : rep.restarts) history.push_back("s0 = " + std::to_string(o.s0) + ": " + msg);
    if (rep.converged) {
      rep.restarts = history;
      return {std::move(sol), rep};
    }
    o.s0 *= 0.5;
  }
  std::string msg = "Picard iteration did not contract after " + std::to_string(opts.max_halvings) + " halvings";
  for (const auto& h : history) msg += "; " + h;
  throw NoContraction(msg);
}

PdeResidualReport pde_residual(const SolutionField& sol) {
  const SGrid& sg = sol.sgrid();
  const int N = sg.size();
  const double p = sol.p(), c = 2.0 * (p + 2.0) / (p * p), h = std::log(sg.ratio);
  PdeResidualReport rep{0.0, 0.0};
  for (int j = 2; j + 2 < N; ++j) {
    const double s = sg.s[std::size_t(j)];
    auto V = [&](int d) { return sol.v(j + d); };
    const Eigen::ArrayXd vu = (V(-2) - 8 * V(-1) + 8 * V(1) - V(2)) / (12 * h);
    const Eigen::ArrayXd vuu = (-V(-2) + 16 * V(-1) - 30 * V(0) + 16 * V(1) - V(2)) / (12 * h * h);
    const Eigen::ArrayXd v = V(0);
    if (!(v > 0.0).all()) throw SignLoss("assembled v is not positive");
    const Eigen::ArrayXd vss = (vuu - vu) / (s * s);
    const Eigen::ArrayXd vyy = spectral_derivative(v, sol.ygrid(), 2);
    const Eigen::ArrayXd nl = c * sol.lambda[std::size_t(j)] * v.pow(p + 1.0);
    const Eigen::ArrayXd res = vss - vyy - nl;
    const Eigen::ArrayXd scale = vss.abs().max(vyy.abs()).max(nl.abs());
    rep.max_relative = std::max(rep.max_relative, (res.abs() / scale).maxCoeff());
    rep.max_absolute = std::max(rep.max_absolute, res.abs().maxCoeff());
  }
  return rep;
}

PushSample pushforward(const SolutionField& sol, const PicardReport& rep, double t, double x) {
  const auto& map = sol.bundle().map();
  if (!map) throw std::invalid_argument("pushforward needs a conformal map");
  const auto [s, y] = map->invert(t, x);
  if (s > sol.sgrid().s0() * (1 + 1e-12)) throw OutOfRegion("point lies beyond the solved layer s <= s0");
  if (!(s > 0.0)) throw OutOfRegion("point lies on the blowup surface");
  FieldSample f;
  if (s >= sol.sgrid().s_min()) {
    f = sol.sample(s, y);
  } else {
    // w ~ s^{2 + kappa} below the grid
    const double smin = sol.sgrid().s_min(), e = 2.0 + rep.kappa, r = std::pow(s / smin, e);
    const FieldSample at = sol.sample(smin, y);
    const RhoSample rt = sol.bundle().rho_at(smin, y);
    const double a = -2.0 / sol.p(), sa = std::pow(smin, a);
    const double w = at.v - sa * rt.rho, wy = at.v_y - sa * rt.rho_y;
    const RhoSample rs = sol.bundle().rho_at(s, y);
    const double ss = std::pow(s, a);
    f = {ss * rs.rho + w * r, ss * (rs.rho_s + a * rs.rho / s) + e * w * r / s, ss * rs.rho_y + wy * r};
  }
  const Eigen::Matrix2d J = map->jacobian(s, y);
  // (v_s, v_y) = J^T (u_t, u_x)
  const Eigen::Vector2d g = J.transpose().lu().solve(Eigen::Vector2d(f.v_s, f.v_y));
  return {f.v, g[0], g[1], s, y};
}

OdeFamilySolution ode_reference_family(double p, double E, const std::vector<double>& s) {
  if (!(p > 0.0)) throw std::invalid_argument("p must be positive");
  const double q = 2.0 * (p + 2.0) / p, k = 0.5 * p * p * E;
  double smax = 0.0;
  for (double x : s) {
    if (!(x > 0.0)) throw std::invalid_argument("ODE family samples need s > 0");
    smax = std::max(smax, x);
  }
  double Bmax = std::numeric_limits<double>::infinity(), Smax = Bmax;
  if (k < 0.0) {
    // B is capped where 1 + k B^q = 0; the reachable s is finite there.
    Bmax = std::pow(-1.0 / k, 1.0 / q);
    Smax = integrate_adaptive(
        [&](double tau) {
          if (tau == 0.0) return 2.0 * Bmax / std::sqrt(q);
          const double d = -std::expm1(q * std::log1p(-tau * tau));
          return 2.0 * Bmax * tau / std::sqrt(d);
        },
        0.0, 1.0, 1e-14);
    if (smax >= Smax * (1.0 - 1e-9))
      throw std::domain_error("energy " + std::to_string(E) + " too negative: solutions end at s = " +
                              std::to_string(Smax));
  }
  // 1 - (1 + k b^q)^{-1/2}, accurate for small k b^q
  auto defect = [&](double b) { return -std::expm1(-0.5 * std::log1p(k * std::pow(b, q))); };
  // scaled to O(1) so the tolerance is relative to the defect itself
  auto D = [&](double B) {
    const double scale = std::max(std::abs(k) * std::pow(B, q), 1e-300);
    return B * scale * integrate_adaptive([&](double t) { return defect(B * t) / scale; }, 0.0, 1.0, 1e-14);
  };
  auto solve_B = [&](double x) {
    // continued linearly outside (0, Bmax) so the bracket search stays finite
    return solve_increasing(
        [&](double B) {
          if (B <= 0.0) return B - x;
          return B < Bmax ? B - D(B) - x : Smax + (B - Bmax) - x;
        },
        [&](double B) { return B > 0.0 && B < Bmax ? 1.0 - defect(B) : 1.0; }, x, 1e-15);
  };
  OdeFamilySolution out{p, E, s, {}, {}, 0.0};
  for (double x : s) {
    const double B = solve_B(x);
    const double dB = std::sqrt(1.0 + k * std::pow(B, q));
    out.v.push_back(std::pow(B, -2.0 / p));
    out.v_s.push_back(-2.0 / p * std::pow(B, -2.0 / p - 1.0) * dB);
  }
  // energy from 4th-order central differences of v(s)
  for (double x : s) {
    const double h = 1e-3 * x;
    auto v = [&](double z) { return std::pow(solve_B(z), -2.0 / p); };
    const double vs = (v(x - 2 * h) - 8 * v(x - h) + 8 * v(x + h) - v(x + 2 * h)) / (12 * h);
    const double v0 = v(x);
    const double kin = 0.5 * vs * vs, pot = 2.0 / (p * p) * std::pow(v0, p + 2.0);
    out.energy_error = std::max(out.energy_error, std::abs(kin - pot - E) / (kin + pot));
  }
  return out;
}

}  // namespace blowup
