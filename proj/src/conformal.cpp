#include "blowup/conformal.hpp"

#include "blowup/roots.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace blowup {

ConformalMap::ConformalMap(std::shared_ptr<const SurfaceFunction> fn, double y_lo, double y_hi, MapOptions opts)
    : fn_(std::move(fn)), opts_(opts), y_lo_(y_lo), y_hi_(y_hi) {
  if (!(y_hi > y_lo)) throw std::invalid_argument("conformal map: empty y span");
  if (!(opts_.x_step > 0.0)) throw std::invalid_argument("conformal map: x_step must be positive");
  // g(0) = 0 puts y = 0 at the foot x0 of x - sigma(x) = 0.
  const double x0 = solve_null_foot(*fn_, 0.0, +1);
  xs_.push_back(x0);
  ys_.push_back(0.0);
  auto cell = [&](double a, double b) {
    return integrate_adaptive([&](double x) { return speed(x); }, a, b, opts_.tol);
  };
  // dy/dx <= 1, so covering x in [x0 + y_lo, x0 + y_hi] is not enough; march
  // until the y span is covered.
  while (ys_.back() < y_hi_ + opts_.x_step) {
    const double a = xs_.back(), b = a + opts_.x_step;
    ys_.push_back(ys_.back() + cell(a, b));
    xs_.push_back(b);
  }
  std::vector<double> xl{x0}, yl{0.0};
  while (yl.back() > y_lo_ - opts_.x_step) {
    const double b = xl.back(), a = b - opts_.x_step;
    yl.push_back(yl.back() - cell(a, b));
    xl.push_back(a);
  }
  std::reverse(xl.begin(), xl.end());
  std::reverse(yl.begin(), yl.end());
  xl.pop_back();
  yl.pop_back();
  xs_.insert(xs_.begin(), xl.begin(), xl.end());
  ys_.insert(ys_.begin(), yl.begin(), yl.end());
}

double ConformalMap::speed(double x) const {
  const double sp = fn_->slope(x);
  return std::sqrt((1.0 - sp) * (1.0 + sp));
}

std::size_t ConformalMap::node_below_x(double x) const {
  auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  if (it == xs_.begin()) return 0;
  return std::size_t(it - xs_.begin()) - 1;
}

std::size_t ConformalMap::node_below_y(double y) const {
  auto it = std::upper_bound(ys_.begin(), ys_.end(), y);
  if (it == ys_.begin()) return 0;
  return std::size_t(it - ys_.begin()) - 1;
}

double ConformalMap::y_of_x(double x) const {
  std::size_t k = node_below_x(x);
  // Integrate from the nearer of the two bracketing nodes.
  if (k + 1 < xs_.size() && x - xs_[k] > xs_[k + 1] - x) ++k;
  return ys_[k] + integrate_adaptive([&](double u) { return speed(u); }, xs_[k], x, opts_.tol);
}

double ConformalMap::x_of_y(double y) const {
  const std::size_t k = node_below_y(y);
  double x = xs_[k] + (y - ys_[k]) / speed(xs_[k]);
  for (int it = 0; it < 60; ++it) {
    const double dx = (y_of_x(x) - y) / speed(x);
    x -= dx;
    if (std::abs(dx) <= 1e-15 * (1.0 + std::abs(x))) break;
  }
  return x;
}

double ConformalMap::f(double y) const {
  const double x = x_of_y(y);
  return x + fn_->value(x);
}

double ConformalMap::g(double y) const {
  const double x = x_of_y(y);
  return x - fn_->value(x);
}

double ConformalMap::df(double y) const {
  const double sp = fn_->slope(x_of_y(y));
  return std::sqrt((1.0 + sp) / (1.0 - sp));
}

double ConformalMap::dg(double y) const {
  const double sp = fn_->slope(x_of_y(y));
  return std::sqrt((1.0 - sp) / (1.0 + sp));
}

double ConformalMap::finv(double v) const { return y_of_x(solve_null_foot(*fn_, v, -1)); }

double ConformalMap::ginv(double v) const { return y_of_x(solve_null_foot(*fn_, v, +1)); }

std::pair<double, double> ConformalMap::evaluate(double s, double y) const {
  const double a = f(y - s), b = g(y + s);
  return {0.5 * (a - b), 0.5 * (a + b)};
}

std::pair<double, double> ConformalMap::invert(double t, double x) const {
  const double minus = finv(x + t);  // y - s
  const double plus = ginv(x - t);   // y + s
  const double s = 0.5 * (plus - minus);
  if (s < -1e-12) throw OutOfRegion("point (t, x) lies above the blowup surface");
  return {std::max(s, 0.0), 0.5 * (plus + minus)};
}

double ConformalMap::lambda(double s, double y) const { return df(y - s) * dg(y + s); }

Eigen::Matrix2d ConformalMap::jacobian(double s, double y) const {
  const double a = df(y - s), b = dg(y + s);
  Eigen::Matrix2d j;
  j << -0.5 * (a + b), 0.5 * (a - b), 0.5 * (b - a), 0.5 * (a + b);
  return j;
}

BoundaryJets ConformalMap::boundary_jets(double y, int order) const {
  const double x = x_of_y(y);
  // sigma around x in the variable d = x' - x
  const Jet S = fn_->jet(x, order + 1);
  const Jet dS = S.derivative_series();
  // eta(d) = y(x + d) - y
  const Jet eta = sqrt(1.0 - dS * dS).integral_series();
  const Jet d = eta.reverse();
  const Jet Sd = S.compose(d);
  const Jet base = d + x;
  BoundaryJets out{(base + Sd).pad(order), (base - Sd).pad(order)};
  return out;
}

ConformalMap solve_fg(const HProfile& h, double y_lo, double y_hi, MapOptions opts) {
  return ConformalMap(h.surface(), y_lo, y_hi, opts);
}

ConformalityReport conformality_check(const ConformalMap& m, const std::vector<std::pair<double, double>>& samples) {
  ConformalityReport r{0.0, 0.0, 0.0, 0.0, 0.0};
  Eigen::Matrix2d eta;
  eta << -1.0, 0.0, 0.0, 1.0;
  for (auto [s, y] : samples) {
    const double h = 1e-5;
    auto [tp, xp] = m.evaluate(s + h, y);
    auto [tm, xm] = m.evaluate(s - h, y);
    auto [tq, xq] = m.evaluate(s, y + h);
    auto [tr, xr] = m.evaluate(s, y - h);
    Eigen::Matrix2d j;
    j << (tp - tm) / (2 * h), (tq - tr) / (2 * h), (xp - xm) / (2 * h), (xq - xr) / (2 * h);
    const double lam = m.lambda(s, y);
    const Eigen::Matrix2d res = j.transpose() * eta * j - lam * eta;
    r.metric_residual = std::max(r.metric_residual, res.cwiseAbs().maxCoeff() / lam);
  }
  // Boundary: closed-form Jacobian, determinant, lambda and the limit ratio.
  std::vector<double> ys;
  for (auto [s, y] : samples) ys.push_back(y);
  for (double y : ys) {
    const double x = m.x_of_y(y);
    const double sp = m.surface().slope(x);
    const double k = 1.0 / std::sqrt(1.0 - sp * sp);
    Eigen::Matrix2d closed;
    closed << -k, k * sp, -k * sp, k;
    const Eigen::Matrix2d j = m.jacobian(0.0, y);
    r.boundary_jacobian = std::max(r.boundary_jacobian, (j - closed).cwiseAbs().maxCoeff());
    r.boundary_det = std::max(r.boundary_det, std::abs(j.determinant() + 1.0));
    r.boundary_lambda = std::max(r.boundary_lambda, std::abs(m.lambda(0.0, y) - 1.0));
    const BoundaryRatio br = boundary_ratio(m, y);
    r.ratio_error = std::max({r.ratio_error, std::abs(br.frozen_x - br.target), std::abs(br.frozen_y - br.target)});
  }
  return r;
}

BoundaryRatio boundary_ratio(const ConformalMap& m, double y, double s1) {
  const double xb = m.x_of_y(y);
  const double sp = m.surface().slope(xb);
  const SurfaceFunction& fn = m.surface();
  // Ratio at s, s/2, s/4, then two rounds of Richardson for an expansion in s.
  auto extrapolate = [](double r1, double r2, double r4) {
    const double a = 2 * r2 - r1, b = 2 * r4 - r2;
    return (4 * b - a) / 3.0;
  };
  double fy[3], fx[3];
  for (int k = 0; k < 3; ++k) {
    const double s = s1 / double(1 << k);
    auto [t, x] = m.evaluate(s, y);
    fy[k] = (fn.value(x) - t) / s;
    // Frozen x: the point below the boundary point at distance s in the
    // conformal parameter, found by inverting (t, xb) for t = sigma(xb) - d.
    const double d = s / std::sqrt(1.0 - sp * sp);
    auto [sx, yx] = m.invert(fn.value(xb) - d, xb);
    (void)yx;
    fx[k] = d / sx;
  }
  return {extrapolate(fx[0], fx[1], fx[2]), extrapolate(fy[0], fy[1], fy[2]), std::sqrt(1.0 - sp * sp)};
}

}  // namespace blowup
