#pragma once

// Independent checks on the constructed solution: a direct leapfrog solver
// in (t, x), the blowup-coefficient fit and the Cantor-set demo.

#include "blowup/solver.hpp"
#include "blowup/surface.hpp"

#include <Eigen/Core>

#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace blowup {

class CflViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when the leapfrog field stops being finite or under-resolves
/// the distance to the surface.
class ApproachedBlowup : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// u and u_t on a uniform x-grid at t = t_c.
struct CauchyData {
  double t_c = 0.0;
  double x0 = 0.0;
  double dx = 0.0;
  Eigen::ArrayXd u, u_t;

  int size() const { return int(u.size()); }
  double x(int i) const { return x0 + dx * i; }
};

using CauchySampler = std::function<std::pair<double, double>(double t, double x)>;

/// n points on [x_lo, x_hi] from a (u, u_t) sampler.
CauchyData sample_cauchy(const CauchySampler& f, double t_c, double x_lo, double x_hi, int n);

/// Data taken from the constructed solution.
CauchySampler solution_sampler(const SolutionField& sol, const PicardReport& rep);

struct LeapfrogOptions {
  double cfl = 0.9;
  /// Fraction of min (sigma - t_c) to march; ignored when t_end is set.
  double stop = 0.5;
  double t_end = std::numeric_limits<double>::quiet_NaN();
  /// Steps required across the smallest remaining distance to sigma.
  double resolve_steps = 10.0;
};

struct LeapfrogField {
  double t_c = 0.0, t_end = 0.0, dt = 0.0;
  int steps = 0;
  double x0 = 0.0, dx = 0.0;
  /// Final level. Only indices [lo, hi] lie inside the domain of dependence.
  Eigen::ArrayXd u;
  int lo = 0, hi = -1;
  /// Energy balance on the shrinking interval, relative to the energy scale.
  double energy_drift = 0.0;

  double x(int i) const { return x0 + dx * i; }
  /// Linear interpolation inside [lo, hi].
  double at(double x) const;
};

/// Second-order explicit scheme for u_tt - u_xx = c |u|^p u. No boundary
/// conditions: the valid region shrinks by one cell per step.
LeapfrogField leapfrog_oracle(const CauchyData& data, const SurfaceFunction& sigma, double p,
                              const LeapfrogOptions& opts = {});

struct ConvergenceReport {
  std::vector<int> sizes;
  std::vector<double> differences;  // max |u_n - u_2n| on the common points
  double order = 0.0;
};

/// Observed order from three nested grids; data is resampled on each.
ConvergenceReport leapfrog_convergence(const CauchySampler& f, double t_c, double x_lo, double x_hi, int n,
                                       const SurfaceFunction& sigma, double p, const LeapfrogOptions& opts = {});

struct BlowupFitReport {
  std::vector<double> x, sigma, slope, fitted, target, relerr;
  double max_relerr = 0.0;
  /// Successive Richardson differences shrink at every x.
  bool monotone = true;
};

using FieldSampler = std::function<double(double t, double x)>;

/// Fits lim (sigma - t)^{2/p} u as a + b tau over tau_k = tau0 2^{-k}.
BlowupFitReport blowup_coefficient_fit(const FieldSampler& u, const SurfaceFunction& sigma, double p,
                                       const std::vector<double>& xs, double tau0 = 0.02, int levels = 6);

/// Largest |u_solution / u_leapfrog - 1| over the leapfrog's valid points.
double two_solver_agreement(const LeapfrogField& lf, const FieldSampler& u);

struct CantorReport {
  double epsilon_requested = 0.0;
  /// epsilon of the accepted run, after halvings
  double epsilon = 0.0;
  std::vector<std::string> attempts;
  double p = 0.0;
  double s0 = 0.0;
  /// max |lambda - 1| / epsilon over y and s in (0, 0.03], at epsilon and epsilon / 2
  double lambda_constant = 0.0, lambda_constant_half = 0.0;
  /// Blowup set {sigma = epsilon} on the x-grid against E.
  double set_mismatch_cells = 0.0;
  /// PDE residual of the assembled v; runs above the gate are rejected
  double pde_residual = 0.0;
  std::vector<std::pair<double, double>> components;
  std::vector<double> x;
  std::vector<double> sigma;
  std::vector<double> u0, u0_t;  // Cauchy data at t = 0
  /// Off-E samples: leapfrog value at t = epsilon (1 - 1e-3) and its
  /// agreement with the constructed solution.
  std::vector<double> off_x, off_u, off_rel;
  bool bounded = false;
  PicardReport picard;
  /// The accepted run, for export.
  std::shared_ptr<const ParametrixBundle> bundle;
  std::shared_ptr<const SolutionField> solution;
};

struct CantorOptions {
  int n_y = 1024;
  double y_length = 4.0;
  double y_center = 0.5;
  int J = 9;
  double x_lo = -0.5, x_hi = 1.5;
  int n_x = 401;
  int max_epsilon_halvings = 3;
  double residual_gate = 1e-3;
  SolveOptions solve;
};

/// Runs at epsilon, halving it until the solved layer covers t = 0.
CantorReport cantor_pipeline(const CompactSetSpec& spec, double p, const CantorOptions& opts = {});

}  // namespace blowup
