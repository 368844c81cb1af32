#pragma once

// The conformal diffeomorphism (s, y) -> (t, x) straightening t = sigma(x)
// to s = 0:
//   t = (f(y - s) - g(y + s)) / 2,  x = (f(y - s) + g(y + s)) / 2,
// with g(y) = x - sigma(x), f(y) = x + sigma(x) along the boundary
// parametrized by arclength-like y(x) = int_{x0}^{x} sqrt(1 - sigma'^2),
// g(0) = 0. Conformal factor lambda(s, y) = f'(y - s) g'(y + s).

#include "blowup/surface.hpp"

#include <Eigen/Core>

#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

namespace blowup {

class OutOfRegion : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MapOptions {
  double x_step = 1.0 / 32;  // spacing of the boundary node table
  double tol = 1e-14;
};

struct BoundaryJets {
  Jet f;  // Taylor coefficients of f around y
  Jet g;
};

struct BoundaryRatio {
  double frozen_x;
  double frozen_y;
  double target;  // sqrt(1 - sigma'^2)
};

class ConformalMap {
 public:
  ConformalMap(std::shared_ptr<const SurfaceFunction> fn, double y_lo, double y_hi, MapOptions opts = {});

  /// Boundary parametrization and its inverse.
  double y_of_x(double x) const;
  double x_of_y(double y) const;

  double f(double y) const;
  double g(double y) const;
  double df(double y) const;
  double dg(double y) const;
  double finv(double v) const;
  double ginv(double v) const;

  /// (t, x) for given (s, y).
  std::pair<double, double> evaluate(double s, double y) const;
  /// (s, y) for given (t, x); throws OutOfRegion above the surface.
  std::pair<double, double> invert(double t, double x) const;
  double lambda(double s, double y) const;
  /// d(t, x) / d(s, y), columns s and y.
  Eigen::Matrix2d jacobian(double s, double y) const;

  /// Taylor jets of f and g around boundary point y, to the given order.
  BoundaryJets boundary_jets(double y, int order) const;

  const SurfaceFunction& surface() const { return *fn_; }
  std::shared_ptr<const SurfaceFunction> surface_ptr() const { return fn_; }
  double y_lo() const { return y_lo_; }
  double y_hi() const { return y_hi_; }

 private:
  double speed(double x) const;  // dy/dx
  std::size_t node_below_x(double x) const;
  std::size_t node_below_y(double y) const;

  std::shared_ptr<const SurfaceFunction> fn_;
  MapOptions opts_;
  double y_lo_, y_hi_;
  std::vector<double> xs_, ys_;
};

/// Builds the map from the h profile's surface over the requested y span.
ConformalMap solve_fg(const HProfile& h, double y_lo, double y_hi, MapOptions opts = {});

struct ConformalityReport {
  double metric_residual;    // max |J^T eta J - lambda eta| / lambda
  double boundary_jacobian;  // max deviation from the closed form at s = 0
  double boundary_det;       // max |det + 1| at s = 0
  double boundary_lambda;    // max |lambda(0, y) - 1|
  double ratio_error;        // max |extrapolated (sigma - t)/s - sqrt(1 - sigma'^2)|
};

/// Jacobians by central differences of evaluate(), so the check does not
/// reuse the closed-form derivatives of f and g.
ConformalityReport conformality_check(const ConformalMap& m, const std::vector<std::pair<double, double>>& samples);

/// (sigma(x) - t)/s along frozen x and frozen y, Richardson-extrapolated to s = 0.
BoundaryRatio boundary_ratio(const ConformalMap& m, double y, double s1 = 1e-2);

}  // namespace blowup
