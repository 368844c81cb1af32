#include "blowup/series.hpp"

#include <algorithm>
#include <cmath>

namespace blowup {

namespace {
double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}
}  // namespace

SeriesField::SeriesField(int order, Eigen::Index points)
    : order_(order), points_(points), zero_(Eigen::ArrayXd::Zero(points)) {
  if (order < 0) throw std::invalid_argument("series order must be >= 0");
  c_.assign(1, std::vector<Eigen::ArrayXd>(std::size_t(order) + 1, zero_));
}

SeriesField SeriesField::constant(int order, const Eigen::ArrayXd& c0) {
  SeriesField out(order, c0.size());
  out.at(0, 0) = c0;
  return out;
}

SeriesField SeriesField::from_derivatives(const std::vector<Eigen::ArrayXd>& d) {
  if (d.empty()) throw std::invalid_argument("from_derivatives: no coefficients");
  SeriesField out(int(d.size()) - 1, d[0].size());
  for (std::size_t j = 0; j < d.size(); ++j) out.at(0, int(j)) = d[j] / factorial(int(j));
  return out;
}

void SeriesField::ensure_log(int l) {
  while (int(c_.size()) <= l) c_.emplace_back(std::size_t(order_) + 1, zero_);
}

Eigen::ArrayXd& SeriesField::at(int l, int j) {
  if (j < 0 || j > order_) throw std::out_of_range("series coefficient index");
  ensure_log(l);
  return c_[std::size_t(l)][std::size_t(j)];
}

const Eigen::ArrayXd& SeriesField::at(int l, int j) const {
  if (j < 0 || j > order_) throw std::out_of_range("series coefficient index");
  if (!has(l)) return zero_;
  return c_[std::size_t(l)][std::size_t(j)];
}

Eigen::ArrayXd SeriesField::coefficient(int j) const { return at(0, j) * factorial(j); }

Eigen::ArrayXd SeriesField::log_coefficient(int j) const { return at(1, j) * factorial(j); }

SeriesField SeriesField::with_order(int order) const {
  SeriesField out(order, points_);
  for (int l = 0; l <= log_order(); ++l)
    for (int j = 0; j <= std::min(order, order_); ++j) out.at(l, j) = at(l, j);
  return out;
}

SeriesField SeriesField::shifted(int k) const {
  SeriesField out(order_, points_);
  for (int l = 0; l <= log_order(); ++l)
    for (int j = 0; j + k <= order_; ++j) out.at(l, j + k) = at(l, j);
  return out;
}

SeriesField SeriesField::euler() const {
  SeriesField out(order_, points_);
  for (int l = 0; l <= log_order(); ++l) {
    for (int j = 0; j <= order_; ++j) {
      if (j != 0) out.at(l, j) += double(j) * at(l, j);
      if (l > 0) out.at(l - 1, j) += double(l) * at(l, j);
    }
  }
  return out;
}

SeriesField SeriesField::dyy(const PeriodicGrid& g) const {
  SeriesField out(order_, points_);
  for (int l = 0; l <= log_order(); ++l)
    for (int j = 0; j <= order_; ++j) {
      const auto& c = at(l, j);
      if ((c != 0.0).any()) out.at(l, j) = spectral_derivative(c, g, 2, true);
    }
  return out;
}

SeriesField& SeriesField::operator+=(const SeriesField& b) {
  if (b.points_ != points_) throw std::invalid_argument("series size mismatch");
  if (b.order_ < order_) *this = with_order(b.order_);
  for (int l = 0; l <= b.log_order(); ++l)
    for (int j = 0; j <= order_; ++j) at(l, j) += b.at(l, j);
  return *this;
}

SeriesField& SeriesField::operator-=(const SeriesField& b) {
  if (b.points_ != points_) throw std::invalid_argument("series size mismatch");
  if (b.order_ < order_) *this = with_order(b.order_);
  for (int l = 0; l <= b.log_order(); ++l)
    for (int j = 0; j <= order_; ++j) at(l, j) -= b.at(l, j);
  return *this;
}

SeriesField& SeriesField::operator*=(double c) {
  for (auto& level : c_)
    for (auto& a : level) a *= c;
  return *this;
}

SeriesField operator*(const SeriesField& a, const SeriesField& b) {
  if (a.points_ != b.points_) throw std::invalid_argument("series size mismatch");
  const int n = std::min(a.order_, b.order_);
  SeriesField out(n, a.points_);
  for (int la = 0; la <= a.log_order(); ++la)
    for (int ja = 0; ja <= n; ++ja) {
      const auto& x = a.at(la, ja);
      if (!(x != 0.0).any()) continue;
      for (int lb = 0; lb <= b.log_order(); ++lb)
        for (int jb = 0; ja + jb <= n; ++jb) {
          const auto& y = b.at(lb, jb);
          if (!(y != 0.0).any()) continue;
          out.at(la + lb, ja + jb) += x * y;
        }
    }
  return out;
}

Eigen::ArrayXd SeriesField::evaluate(double s) const {
  Eigen::ArrayXd total = Eigen::ArrayXd::Zero(points_);
  const double L = std::log(s);
  double lp = 1.0;
  for (int l = 0; l <= log_order(); ++l, lp *= L) {
    Eigen::ArrayXd acc = at(l, order_);
    for (int j = order_ - 1; j >= 0; --j) acc = acc * s + at(l, j);
    total += lp * acc;
  }
  return total;
}

double SeriesField::max_abs(int j) const {
  double m = 0.0;
  for (int l = 0; l <= log_order(); ++l) m = std::max(m, at(l, j).abs().maxCoeff());
  return m;
}

SeriesField series_pow_real(const SeriesField& a, double r) {
  const int n = a.order();
  const Eigen::ArrayXd& a0 = a.at(0, 0);
  const bool integer = r == std::round(r) && r >= 0.0;
  if (!integer && !(a0 > 0.0).all()) throw std::domain_error("series_pow_real: leading coefficient must be positive");
  if ((a0 == 0.0).any()) throw std::domain_error("series_pow_real: vanishing leading coefficient");
  // Log-free part by the power recurrence.
  Coeffs<Eigen::ArrayXd> base(std::size_t(n) + 1);
  for (int j = 0; j <= n; ++j) base[std::size_t(j)] = a.at(0, j);
  auto pw = series_pow(base, r);
  SeriesField out(n, a.points());
  for (int j = 0; j <= n; ++j) out.at(0, j) = pw[std::size_t(j)];
  if (a.log_order() == 0) return out;
  // (A + N)^r = A^r sum_k binom(r, k) (N / A)^k; each power of N/A raises
  // the log order, so the sum terminates within the truncation.
  SeriesField inv(n, a.points());
  auto ip = series_pow(base, -1.0);
  for (int j = 0; j <= n; ++j) inv.at(0, j) = ip[std::size_t(j)];
  SeriesField N(n, a.points());
  for (int l = 1; l <= a.log_order(); ++l)
    for (int j = 0; j <= n; ++j) N.at(l, j) = a.at(l, j);
  const SeriesField Q = N * inv;
  SeriesField sum = SeriesField::constant(n, Eigen::ArrayXd::Ones(a.points()));
  SeriesField qk = sum;
  double binom = 1.0;
  for (int k = 1; k <= n + 1; ++k) {
    qk = qk * Q;
    binom *= (r - (k - 1)) / k;
    bool any = false;
    for (int j = 0; j <= n && !any; ++j) any = qk.max_abs(j) > 0.0;
    if (!any) break;
    sum += binom * qk;
  }
  return out * sum;
}

SeriesField lambda_taylor_at_boundary(const ConformalMap& m, const PeriodicGrid& g, int order) {
  SeriesField out(order, g.n);
  for (int i = 0; i < g.n; ++i) {
    const BoundaryJets jets = m.boundary_jets(g.y(i), order + 1);
    const Jet F1 = jets.f.derivative_series();
    const Jet G1 = jets.g.derivative_series();
    // lambda(s, y) = f'(y - s) g'(y + s)
    for (int k = 0; k <= order; ++k) {
      double acc = 0.0;
      for (int j = 0; j <= k; ++j) acc += ((j % 2) ? -1.0 : 1.0) * F1[j] * G1[k - j];
      out.at(0, k)[i] = acc;
    }
  }
  return out;
}

SeriesField rho_residual_series(const SeriesField& rho, const SeriesField& lambda, double p, const PeriodicGrid& g,
                                int order) {
  if (lambda.order() < order) throw std::invalid_argument("lambda series order too low for the residual");
  const double c = 2.0 * (p + 2.0) / (p * p);
  const SeriesField R = rho.with_order(order);
  const SeriesField L = lambda.with_order(order);
  const SeriesField th = R.euler();
  SeriesField out = th.euler() - (1.0 + 4.0 / p) * th - R.dyy(g).shifted(2);
  out += c * (R - L * series_pow_real(R, p + 1.0));
  return out;
}

ParametrixBundle build_parametrix(const SeriesField& lambda, double p, int J, const PeriodicGrid& g,
                                  std::shared_ptr<const ConformalMap> map, int extra_orders) {
  if (!(p > 0.0)) throw std::invalid_argument("p must be positive");
  if (J < 1) throw std::invalid_argument("parametrix order J must be >= 1");
  if (lambda.points() != g.n) throw std::invalid_argument("lambda series does not match the y-grid");
  if ((lambda.at(0, 0) - 1.0).abs().maxCoeff() > 1e-8) throw std::invalid_argument("lambda(0, y) must equal 1");
  const double n = 4.0 / p;
  const bool resonant = std::abs(n - std::round(n)) < 1e-9;
  const int m_log = resonant ? int(std::round(n)) + 2 : -1;
  if (resonant && J >= 2 * m_log)
    throw UnsupportedLogOrder("4/p is an integer and J = " + std::to_string(J) +
                              " needs (log s)^2 terms; use J <= " + std::to_string(2 * m_log - 1));
  if (lambda.order() < J + extra_orders) throw std::invalid_argument("lambda series order below J + extra_orders");

  SeriesField rho = SeriesField::constant(J, Eigen::ArrayXd::Ones(g.n));
  for (int m = 1; m <= J; ++m) {
    const SeriesField R = rho_residual_series(rho, lambda, p, g, m);
    const double K = (m + 1.0) * (m - 2.0 - n);  // response to a s^m term
    const double Klog = 2.0 * m - 1.0 - n;       // s^m log s feeds s^m with this factor
    if (m == m_log) {
      rho.at(1, m) = -R.at(0, m) / Klog;
    } else {
      Eigen::ArrayXd beta = Eigen::ArrayXd::Zero(g.n);
      if (R.has(1)) beta = -R.at(1, m) / K;
      if (R.has(1) && (beta != 0.0).any()) rho.at(1, m) = beta;
      rho.at(0, m) = -(R.at(0, m) + Klog * beta) / K;
    }
  }
  return ParametrixBundle(std::move(rho), lambda, p, J, g, std::move(map), extra_orders);
}

ParametrixBundle::ParametrixBundle(SeriesField rho, SeriesField lambda, double p, int J, PeriodicGrid grid,
                                   std::shared_ptr<const ConformalMap> map, int extra_orders)
    : rho_(std::move(rho)), lambda_(std::move(lambda)), p_(p), J_(J), grid_(grid), map_(std::move(map)) {
  theta_rho_ = rho_.euler();
  theta2_rho_ = theta_rho_.euler();
  rho_yy_ = rho_.dyy(grid_);
  const int M = J_ + extra_orders;
  tail_ = rho_residual_series(rho_, lambda_, p_, grid_, M);
  for (int l = 0; l <= tail_.log_order(); ++l)
    for (int j = 0; j <= J_; ++j) {
      low_residual_ = std::max(low_residual_, tail_.at(l, j).abs().maxCoeff());
      tail_.at(l, j).setZero();
    }
  rho_hat_.resize(std::size_t(rho_.log_order()) + 1);
  for (int l = 0; l <= rho_.log_order(); ++l)
    for (int j = 0; j <= J_; ++j) rho_hat_[std::size_t(l)].push_back(fft_forward(rho_.at(l, j)));
}

Eigen::ArrayXd ParametrixBundle::lambda_row(double s) const {
  // Without a map the lambda series is taken as exact.
  if (!map_) return lambda_.evaluate(s);
  Eigen::ArrayXd row(grid_.n);
  for (int i = 0; i < grid_.n; ++i) row[i] = map_->lambda(s, grid_.y(i));
  return row;
}

Eigen::ArrayXd ParametrixBundle::residual_series_route(double s) const {
  return std::pow(s, -2.0 / p_ - 2.0) * tail_.evaluate(s);
}

Eigen::ArrayXd ParametrixBundle::residual_direct(double s, const Eigen::ArrayXd& lambda_row) const {
  const double c = 2.0 * (p_ + 2.0) / (p_ * p_);
  const Eigen::ArrayXd rho = rho_.evaluate(s);
  if (!(rho > 0.0).all()) throw std::domain_error("parametrix rho is not positive at s = " + std::to_string(s));
  const Eigen::ArrayXd bracket = theta2_rho_.evaluate(s) - (1.0 + 4.0 / p_) * theta_rho_.evaluate(s) +
                                 c * (rho - lambda_row * rho.pow(p_ + 1.0));
  return std::pow(s, -2.0 / p_ - 2.0) * bracket - std::pow(s, -2.0 / p_) * rho_yy_.evaluate(s);
}

bool ParametrixBundle::tail_converged(double s) const {
  const int M = tail_.order();
  const double L = std::log(s);
  auto term = [&](int j) {
    Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(grid_.n);
    double lp = 1.0;
    for (int l = 0; l <= tail_.log_order(); ++l, lp *= L) acc += lp * tail_.at(l, j);
    return acc.abs().maxCoeff() * std::pow(s, j);
  };
  const double total = tail_.evaluate(s).abs().maxCoeff();
  if (total == 0.0) return true;
  return term(M) + term(M - 1) <= 1e-6 * total;
}

ParametrixValues ParametrixBundle::evaluate(double s, ResidualRoute route, const Eigen::ArrayXd* lambda_row) const {
  if (!(s > 0.0)) throw std::domain_error("parametrix is singular at s = 0");
  ParametrixValues out;
  const Eigen::ArrayXd rho = rho_.evaluate(s);
  const double a = -2.0 / p_;
  out.v = std::pow(s, a) * rho;
  out.v_s = std::pow(s, a - 1.0) * (theta_rho_.evaluate(s) + a * rho);
  if (route == ResidualRoute::Automatic) route = tail_converged(s) ? ResidualRoute::Series : ResidualRoute::Direct;
  if (route == ResidualRoute::Series) {
    out.E = residual_series_route(s);
  } else if (lambda_row) {
    out.E = residual_direct(s, *lambda_row);
  } else {
    out.E = residual_direct(s, this->lambda_row(s));
  }
  return out;
}

RhoSample ParametrixBundle::rho_at(double s, double y) const {
  const Eigen::ArrayXcd w = interpolation_weights(grid_, y), wy = interpolation_weights_dy(grid_, y);
  const double L = std::log(s);
  double rho = 0.0, theta = 0.0, dy = 0.0, lp = 1.0;
  for (int l = 0; l <= rho_.log_order(); ++l, lp *= L) {
    double sp = 1.0;
    for (int j = 0; j <= J_; ++j, sp *= s) {
      const auto& F = rho_hat_[std::size_t(l)][std::size_t(j)];
      const double c = interpolate(F, w);
      rho += c * sp * lp;
      dy += interpolate(F, wy) * sp * lp;
      theta += c * sp * j * lp;
      if (l > 0) theta += c * sp * l * (lp / L);
    }
  }
  return {rho, theta / s, dy};
}

}  // namespace blowup
