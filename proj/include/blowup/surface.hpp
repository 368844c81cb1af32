#pragma once

// Blowup surfaces t = sigma(x) and the characteristic profile h with
// x + t = h(x - t) on the surface.

#include "blowup/expression.hpp"
#include "blowup/taylor.hpp"

#include <Eigen/Core>

#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace blowup {

class SpacelikeViolation : public std::runtime_error {
 public:
  SpacelikeViolation(double x, double slope)
      : std::runtime_error("surface is not space-like: |sigma'(" + std::to_string(x) +
                           ")| = " + std::to_string(std::abs(slope))),
        x_(x),
        slope_(slope) {}
  double x() const { return x_; }
  double slope() const { return slope_; }

 private:
  double x_, slope_;
};

/// A smooth function sigma(x) on the whole line with exact derivative access.
class SurfaceFunction {
 public:
  virtual ~SurfaceFunction() = default;
  virtual double value(double x) const = 0;
  virtual double slope(double x) const = 0;
  /// Taylor jet of sigma at x0 (coefficients in powers of x - x0).
  virtual Jet jet(double x0, int order) const = 0;
};

class ExpressionSurface : public SurfaceFunction {
 public:
  explicit ExpressionSurface(Expression e) : e_(e), de_(e.derivative()) {}
  double value(double x) const override { return e_(x); }
  double slope(double x) const override { return de_(x); }
  Jet jet(double x0, int order) const override { return e_(Jet::variable(x0, order)); }
  const Expression& expression() const { return e_; }

 private:
  Expression e_, de_;
};

/// Compact set E = [lo, hi] minus finitely many open gaps.
struct CompactSetSpec {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::pair<double, double>> gaps;
  double epsilon = 0.0;

  /// Depth-d middle-thirds construction on [0, 1].
  static CompactSetSpec middle_thirds(int depth, double epsilon);

  void validate() const;
  bool contains(double x) const;
  /// The closed intervals making up E, in increasing order.
  std::vector<std::pair<double, double>> components() const;
};

/// sigma = epsilon (1 + bump) with bump = 0 exactly on E and positive off E.
class CantorSurface : public SurfaceFunction {
 public:
  explicit CantorSurface(CompactSetSpec spec);
  double value(double x) const override { return spec_.epsilon + excess(x); }
  double slope(double x) const override;
  Jet jet(double x0, int order) const override;
  /// sigma(x) - epsilon evaluated without cancellation.
  double excess(double x) const;
  /// log(sigma(x) - epsilon); -infinity exactly on E. Finite off E even
  /// where excess() underflows.
  double log_excess(double x) const;
  const CompactSetSpec& spec() const { return spec_; }

  /// The fixed smooth step: 0 for u <= 0, 1 for u >= 1/2.
  static double phi(double u);
  static Jet phi(const Jet& u);

 private:
  template <class T>
  T bump(const T& x) const;
  CompactSetSpec spec_;
};

struct SurfaceGrid {
  double half_width = 16.0;
  double dx = 1e-3;
};

struct SigmaSurface {
  std::shared_ptr<const SurfaceFunction> fn;
  std::string source;
  double half_width = 0.0;
  double dx = 0.0;
  Eigen::ArrayXd x;
  Eigen::ArrayXd values;
  Eigen::ArrayXd slopes;

  double operator()(double xv) const { return fn->value(xv); }
  double slope(double xv) const { return fn->slope(xv); }
  Jet jet(double x0, int order) const { return fn->jet(x0, order); }
};

/// Samples fn on the grid and enforces the space-like margin.
SigmaSurface make_surface(std::shared_ptr<const SurfaceFunction> fn, std::string source,
                          const SurfaceGrid& grid = {});
SigmaSurface parse_sigma_expression(const std::string& text, const SurfaceGrid& grid = {});
/// "flat:T", "tilt:v", "gauss:a,w", "cos:a,k".
SigmaSurface catalog_surface(const std::string& id, const SurfaceGrid& grid = {});
SigmaSurface build_cantor_sigma(const CompactSetSpec& spec, const SurfaceGrid& grid = {});

/// max |sigma'| over the sample grid; throws SpacelikeViolation at >= 1 - 1e-6.
double spacelike_margin(const SigmaSurface& s);

/// Largest gap between midpoint differences of sigma and sigma' at the midpoint.
double slope_consistency(const SigmaSurface& s);

/// h with x + sigma(x) = h(x - sigma(x)), as monotone cubic interpolation
/// of nodes taken at the surface samples.
class HProfile {
 public:
  HProfile(Eigen::ArrayXd z, Eigen::ArrayXd h, Eigen::ArrayXd dh, std::shared_ptr<const SurfaceFunction> fn);

  double operator()(double z) const;
  double derivative(double z) const;
  /// h(z) from the surface itself, by solving x - sigma(x) = z.
  double exact(double z) const;

  const Eigen::ArrayXd& z() const { return z_; }
  const Eigen::ArrayXd& h() const { return h_; }
  const Eigen::ArrayXd& dh() const { return dh_; }
  const std::shared_ptr<const SurfaceFunction>& surface() const { return fn_; }

 private:
  std::size_t cell(double z) const;
  Eigen::ArrayXd z_, h_, dh_, m_;
  std::shared_ptr<const SurfaceFunction> fn_;
};

HProfile solve_h(const SigmaSurface& s);

/// Solves x - sign * sigma(x) = target for x (sign = +1 or -1).
double solve_null_foot(const SurfaceFunction& fn, double target, int sign);

}  // namespace blowup
