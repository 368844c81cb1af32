#pragma once

// Truncated Taylor arithmetic in normalized form: a(h) = sum_k a[k] h^k.
//
// The recurrences are written once over a coefficient type C, which is either
// a scalar (double) or a coefficient-wise array (Eigen::ArrayXd). The second
// case carries one independent series per grid point.

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace blowup {

template <class C>
using Coeffs = std::vector<C>;

namespace taylor_detail {

inline double cexp(double a) { return std::exp(a); }
inline double clog(double a) { return std::log(a); }
inline double cpow(double a, double r) { return std::pow(a, r); }
inline double csin(double a) { return std::sin(a); }
inline double ccos(double a) { return std::cos(a); }
inline double ctanh(double a) { return std::tanh(a); }
inline double zero_like(double) { return 0.0; }

inline Eigen::ArrayXd cexp(const Eigen::ArrayXd& a) { return a.exp(); }
inline Eigen::ArrayXd clog(const Eigen::ArrayXd& a) { return a.log(); }
inline Eigen::ArrayXd cpow(const Eigen::ArrayXd& a, double r) { return a.pow(r); }
inline Eigen::ArrayXd csin(const Eigen::ArrayXd& a) { return a.sin(); }
inline Eigen::ArrayXd ccos(const Eigen::ArrayXd& a) { return a.cos(); }
inline Eigen::ArrayXd ctanh(const Eigen::ArrayXd& a) { return a.tanh(); }
inline Eigen::ArrayXd zero_like(const Eigen::ArrayXd& a) {
  return Eigen::ArrayXd::Zero(a.size());
}

}  // namespace taylor_detail

template <class C>
Coeffs<C> series_mul(const Coeffs<C>& a, const Coeffs<C>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  Coeffs<C> out(n, taylor_detail::zero_like(a[0]));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j <= k; ++j) out[k] += a[j] * b[k - j];
  }
  return out;
}

template <class C>
Coeffs<C> series_div(const Coeffs<C>& a, const Coeffs<C>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  Coeffs<C> q(n, taylor_detail::zero_like(a[0]));
  for (std::size_t k = 0; k < n; ++k) {
    C acc = a[k];
    for (std::size_t j = 0; j < k; ++j) acc -= q[j] * b[k - j];
    q[k] = acc / b[0];
  }
  return q;
}

template <class C>
Coeffs<C> series_exp(const Coeffs<C>& a) {
  const std::size_t n = a.size();
  Coeffs<C> e(n, taylor_detail::zero_like(a[0]));
  e[0] = taylor_detail::cexp(a[0]);
  for (std::size_t k = 1; k < n; ++k) {
    C acc = taylor_detail::zero_like(a[0]);
    for (std::size_t j = 1; j <= k; ++j) acc += double(j) * a[j] * e[k - j];
    e[k] = acc / double(k);
  }
  return e;
}

// Requires a[0] > 0 (coefficient-wise).
template <class C>
Coeffs<C> series_log(const Coeffs<C>& a) {
  const std::size_t n = a.size();
  Coeffs<C> l(n, taylor_detail::zero_like(a[0]));
  l[0] = taylor_detail::clog(a[0]);
  for (std::size_t k = 1; k < n; ++k) {
    C acc = taylor_detail::zero_like(a[0]);
    for (std::size_t j = 1; j < k; ++j) acc += double(j) * l[j] * a[k - j];
    l[k] = (a[k] - acc / double(k)) / a[0];
  }
  return l;
}

// a^r with a[0] > 0; the recurrence is exact for integer r as well.
template <class C>
Coeffs<C> series_pow(const Coeffs<C>& a, double r) {
  const std::size_t n = a.size();
  Coeffs<C> p(n, taylor_detail::zero_like(a[0]));
  p[0] = taylor_detail::cpow(a[0], r);
  for (std::size_t k = 1; k < n; ++k) {
    C acc = taylor_detail::zero_like(a[0]);
    for (std::size_t j = 1; j <= k; ++j) acc += ((r + 1.0) * double(j) - double(k)) * a[j] * p[k - j];
    p[k] = acc / (double(k) * a[0]);
  }
  return p;
}

template <class C>
void series_sincos(const Coeffs<C>& a, Coeffs<C>& s, Coeffs<C>& c) {
  const std::size_t n = a.size();
  s.assign(n, taylor_detail::zero_like(a[0]));
  c.assign(n, taylor_detail::zero_like(a[0]));
  s[0] = taylor_detail::csin(a[0]);
  c[0] = taylor_detail::ccos(a[0]);
  for (std::size_t k = 1; k < n; ++k) {
    C as = taylor_detail::zero_like(a[0]);
    C ac = taylor_detail::zero_like(a[0]);
    for (std::size_t j = 1; j <= k; ++j) {
      as += double(j) * a[j] * c[k - j];
      ac += double(j) * a[j] * s[k - j];
    }
    s[k] = as / double(k);
    c[k] = -ac / double(k);
  }
}

template <class C>
Coeffs<C> series_tanh(const Coeffs<C>& a) {
  // t' = (1 - t^2) a'
  const std::size_t n = a.size();
  Coeffs<C> t(n, taylor_detail::zero_like(a[0]));
  Coeffs<C> d(n, taylor_detail::zero_like(a[0]));
  t[0] = taylor_detail::ctanh(a[0]);
  d[0] = 1.0 - t[0] * t[0];
  for (std::size_t k = 1; k < n; ++k) {
    C acc = taylor_detail::zero_like(a[0]);
    for (std::size_t j = 1; j <= k; ++j) acc += double(j) * a[j] * d[k - j];
    t[k] = acc / double(k);
    C sq = taylor_detail::zero_like(a[0]);
    for (std::size_t j = 0; j <= k; ++j) sq += t[j] * t[k - j];
    d[k] = -sq;
  }
  return t;
}

/// Scalar truncated Taylor polynomial ("jet") used for forward-mode
/// differentiation of surface expressions to high order.
class Jet {
 public:
  Jet() = default;
  Jet(double value, int order) : c_(std::size_t(order) + 1, 0.0) { c_[0] = value; }
  explicit Jet(Coeffs<double> c) : c_(std::move(c)) {}

  /// The identity jet x0 + h.
  static Jet variable(double x0, int order) {
    Jet j(x0, order);
    if (order >= 1) j.c_[1] = 1.0;
    return j;
  }

  int order() const { return int(c_.size()) - 1; }
  double value() const { return c_[0]; }
  double operator[](int k) const { return c_[std::size_t(k)]; }
  double& operator[](int k) { return c_[std::size_t(k)]; }
  const Coeffs<double>& coeffs() const { return c_; }

  /// k-th derivative at the expansion point.
  double derivative(int k) const {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return c_[std::size_t(k)] * f;
  }

  Jet constant_like(double v) const { return Jet(v, order()); }

  friend Jet operator+(Jet a, const Jet& b) {
    for (std::size_t k = 0; k < a.c_.size(); ++k) a.c_[k] += b.c_[k];
    return a;
  }
  friend Jet operator-(Jet a, const Jet& b) {
    for (std::size_t k = 0; k < a.c_.size(); ++k) a.c_[k] -= b.c_[k];
    return a;
  }
  friend Jet operator-(Jet a) {
    for (auto& v : a.c_) v = -v;
    return a;
  }
  friend Jet operator*(const Jet& a, const Jet& b) { return Jet(series_mul(a.c_, b.c_)); }
  friend Jet operator/(const Jet& a, const Jet& b) { return Jet(series_div(a.c_, b.c_)); }
  friend Jet operator+(Jet a, double b) { a.c_[0] += b; return a; }
  friend Jet operator+(double b, Jet a) { a.c_[0] += b; return a; }
  friend Jet operator-(Jet a, double b) { a.c_[0] -= b; return a; }
  friend Jet operator-(double b, const Jet& a) { return -a + b; }
  friend Jet operator*(Jet a, double b) { for (auto& v : a.c_) v *= b; return a; }
  friend Jet operator*(double b, Jet a) { for (auto& v : a.c_) v *= b; return a; }
  friend Jet operator/(Jet a, double b) { for (auto& v : a.c_) v /= b; return a; }
  friend Jet operator/(double b, const Jet& a) { return a.constant_like(b) / a; }

  friend Jet exp(const Jet& a) { return Jet(series_exp(a.c_)); }
  friend Jet log(const Jet& a) {
    if (!(a.c_[0] > 0.0)) throw std::domain_error("log of non-positive jet");
    return Jet(series_log(a.c_));
  }
  friend Jet sqrt(const Jet& a) { return pow(a, 0.5); }
  friend Jet pow(const Jet& a, double r) {
    if (a.c_[0] == 0.0) throw std::domain_error("pow of jet with vanishing constant term");
    if (a.c_[0] < 0.0) {
      double ri = std::round(r);
      if (ri != r) throw std::domain_error("non-integer pow of negative jet");
      Jet m = -a;
      Jet p(series_pow(m.c_, r));
      return (std::fmod(std::abs(ri), 2.0) == 1.0) ? -p : p;
    }
    return Jet(series_pow(a.c_, r));
  }
  friend Jet sin(const Jet& a) {
    Coeffs<double> s, c;
    series_sincos(a.c_, s, c);
    return Jet(std::move(s));
  }
  friend Jet cos(const Jet& a) {
    Coeffs<double> s, c;
    series_sincos(a.c_, s, c);
    return Jet(std::move(c));
  }
  friend Jet tanh(const Jet& a) { return Jet(series_tanh(a.c_)); }

  /// Composition p(q(h)) where this jet is p in the variable (x - x0) and
  /// q has zero constant term. Horner scheme, truncated to q's order.
  Jet compose(const Jet& q) const {
    Jet out = q.constant_like(c_.back());
    for (int k = order() - 1; k >= 0; --k) out = out * q + c_[std::size_t(k)];
    return out;
  }

  /// Formal derivative d/dh, one order lower.
  Jet derivative_series() const {
    Coeffs<double> d(c_.size() > 1 ? c_.size() - 1 : 1, 0.0);
    for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = double(k) * c_[k];
    return Jet(std::move(d));
  }

  /// Antiderivative with zero constant term, one order higher.
  Jet integral_series() const {
    Coeffs<double> d(c_.size() + 1, 0.0);
    for (std::size_t k = 0; k < c_.size(); ++k) d[k + 1] = c_[k] / double(k + 1);
    return Jet(std::move(d));
  }

  /// Series reversion: given q(h) with q[0] = 0, q[1] != 0, returns r with
  /// q(r(u)) = u to the same order.
  Jet reverse() const {
    const int n = order();
    Jet r(0.0, n);
    if (n >= 1) r.c_[1] = 1.0 / c_[1];
    // Newton iteration on the composition doubles the correct order each pass.
    Jet u = Jet::variable(0.0, n);
    for (int pass = 0; (1 << pass) <= n + 1; ++pass) {
      Jet resid = compose(r) - u;
      Jet dq = derivative_series();
      Jet dqr = Jet(dq.c_).pad(n).compose(r);
      r = r - resid / dqr;
      r.c_[0] = 0.0;
    }
    return r;
  }

  Jet pad(int order) const {
    Coeffs<double> d(std::size_t(order) + 1, 0.0);
    for (std::size_t k = 0; k < std::min(d.size(), c_.size()); ++k) d[k] = c_[k];
    return Jet(std::move(d));
  }

 private:
  Coeffs<double> c_;
};

inline double exp(double a) { return std::exp(a); }
inline double log(double a) { return std::log(a); }
inline double sqrt(double a) { return std::sqrt(a); }
inline double pow(double a, double r) { return std::pow(a, r); }
inline double sin(double a) { return std::sin(a); }
inline double cos(double a) { return std::cos(a); }
inline double tanh(double a) { return std::tanh(a); }

inline double value_of(double a) { return a; }
inline double value_of(const Jet& a) { return a.value(); }

}  // namespace blowup
