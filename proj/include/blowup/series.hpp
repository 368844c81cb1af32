#pragma once

// Truncated series in s with grid-function coefficients,
//   a(s, y) = sum_{l, j} a[l][j](y) s^j (log s)^l,   j <= order,
// and the parametrix rho built from it.
//
// Storage is normalized (plain Taylor coefficients). The derivative
// convention, rho_j = d^j rho / ds^j at s = 0, is available through
// coefficient() and from_derivatives().

#include "blowup/conformal.hpp"
#include "blowup/spectral.hpp"

#include <Eigen/Core>

#include <memory>
#include <stdexcept>
#include <vector>

namespace blowup {

class UnsupportedLogOrder : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SeriesField {
 public:
  SeriesField() = default;
  SeriesField(int order, Eigen::Index points);

  static SeriesField constant(int order, const Eigen::ArrayXd& c0);
  /// From derivative-convention coefficients d^j/ds^j at s = 0.
  static SeriesField from_derivatives(const std::vector<Eigen::ArrayXd>& d);

  int order() const { return order_; }
  Eigen::Index points() const { return points_; }
  /// Highest log power present in storage.
  int log_order() const { return int(c_.size()) - 1; }

  /// Normalized coefficient of s^j (log s)^l; grows storage on demand.
  Eigen::ArrayXd& at(int l, int j);
  const Eigen::ArrayXd& at(int l, int j) const;
  bool has(int l) const { return l < int(c_.size()); }

  /// d^j/ds^j of the log-free part at s = 0.
  Eigen::ArrayXd coefficient(int j) const;
  /// Coefficient of s^j log s in the derivative convention (times j!).
  Eigen::ArrayXd log_coefficient(int j) const;

  /// Copy at a different order (dropping or zero-filling coefficients).
  SeriesField with_order(int order) const;
  /// Multiplication by s^k, dropping orders above order().
  SeriesField shifted(int k) const;
  /// The Euler operator s d/ds, exact on s^j (log s)^l.
  SeriesField euler() const;
  /// Coefficient-wise d^2/dy^2 (spectral, filtered).
  SeriesField dyy(const PeriodicGrid& g) const;

  SeriesField& operator+=(const SeriesField& b);
  SeriesField& operator-=(const SeriesField& b);
  SeriesField& operator*=(double c);
  friend SeriesField operator+(SeriesField a, const SeriesField& b) { return a += b; }
  friend SeriesField operator-(SeriesField a, const SeriesField& b) { return a -= b; }
  friend SeriesField operator*(SeriesField a, double c) { return a *= c; }
  friend SeriesField operator*(double c, SeriesField a) { return a *= c; }
  /// Truncated product at the smaller of the two orders.
  friend SeriesField operator*(const SeriesField& a, const SeriesField& b);

  /// Sum over all terms at a given s > 0.
  Eigen::ArrayXd evaluate(double s) const;
  /// Largest |coefficient| at order j (all log powers).
  double max_abs(int j) const;

 private:
  void ensure_log(int l);
  int order_ = 0;
  Eigen::Index points_ = 0;
  std::vector<std::vector<Eigen::ArrayXd>> c_;  // c_[l][j]
  Eigen::ArrayXd zero_;
};

/// a^r. Requires the s^0 coefficient to be positive on the grid (or r a
/// non-negative integer). Log terms are expanded binomially.
SeriesField series_pow_real(const SeriesField& a, double r);

/// Taylor series of lambda at s = 0 on the grid points, to the given order.
SeriesField lambda_taylor_at_boundary(const ConformalMap& m, const PeriodicGrid& g, int order);

/// s^2 times the residual of the rho equation,
///   theta^2 rho - (1 + 4/p) theta rho - s^2 rho_yy + c (rho - lambda rho^{p+1}),
/// as a series to the given order (theta = s d/ds, c = 2(p+2)/p^2).
SeriesField rho_residual_series(const SeriesField& rho, const SeriesField& lambda, double p, const PeriodicGrid& g,
                                int order);

struct ParametrixValues {
  Eigen::ArrayXd v;    // s^{-2/p} rho
  Eigen::ArrayXd v_s;  // d/ds
  Eigen::ArrayXd E;    // residual v_ss - v_yy - c lambda v^{p+1}
};

enum class ResidualRoute { Direct, Series, Automatic };

struct RhoSample {
  double rho, rho_s, rho_y;
};

class ParametrixBundle {
 public:
  ParametrixBundle(SeriesField rho, SeriesField lambda, double p, int J, PeriodicGrid grid,
                   std::shared_ptr<const ConformalMap> map, int extra_orders);

  double p() const { return p_; }
  int J() const { return J_; }
  const SeriesField& rho() const { return rho_; }
  const SeriesField& lambda_series() const { return lambda_; }
  const PeriodicGrid& grid() const { return grid_; }
  const std::shared_ptr<const ConformalMap>& map() const { return map_; }
  /// Residual series coefficients beyond J (orders J+1 .. J+extra).
  const SeriesField& residual_tail() const { return tail_; }
  /// Largest residual coefficient at orders <= J after the build.
  double low_order_residual() const { return low_residual_; }

  /// rho_j(y) in the derivative convention.
  Eigen::ArrayXd rho_j(int j) const { return rho_.coefficient(j); }

  /// Values on the grid row at s. lambda_row is lambda(s, y_i) from the map;
  /// when empty it is computed (slow path; from the lambda series without a map).
  ParametrixValues evaluate(double s, ResidualRoute route = ResidualRoute::Automatic,
                            const Eigen::ArrayXd* lambda_row = nullptr) const;
  /// Residual through the tail series only.
  Eigen::ArrayXd residual_series_route(double s) const;
  /// Residual by direct pointwise evaluation with lambda from the map.
  Eigen::ArrayXd residual_direct(double s, const Eigen::ArrayXd& lambda_row) const;
  /// Whether the tail series is converged at s (last two orders small).
  bool tail_converged(double s) const;

  /// rho and its derivatives at one (s, y) by trigonometric interpolation.
  RhoSample rho_at(double s, double y) const;
  Eigen::ArrayXd lambda_row(double s) const;

 private:
  SeriesField rho_, lambda_, tail_, theta_rho_, theta2_rho_, rho_yy_;
  std::vector<std::vector<Eigen::ArrayXcd>> rho_hat_;  // [l][j] transforms
  double p_;
  int J_;
  PeriodicGrid grid_;
  std::shared_ptr<const ConformalMap> map_;
  double low_residual_ = 0.0;
};

/// Order-by-order solution of the rho equation. The lambda series must
/// have order >= J + extra_orders for the residual tail.
ParametrixBundle build_parametrix(const SeriesField& lambda, double p, int J, const PeriodicGrid& g,
                                  std::shared_ptr<const ConformalMap> map, int extra_orders = 12);

}  // namespace blowup
