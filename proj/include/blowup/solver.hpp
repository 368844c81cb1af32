#pragma once

// Correction w = v - vt of the parametrix by Picard iteration on
//   w_ss - w_yy - (nu^2 - 1/4) s^{-2} w = F(w),
//   F = -E + c (p+1) s^{-2} (lambda rho^p - 1) w + c lambda R(w),
// R(w) = (vt + w)^{p+1} - vt^{p+1} - (p+1) vt^p w, c = 2(p+2)/p^2.

#include "blowup/duhamel.hpp"
#include "blowup/series.hpp"

#include <Eigen/Core>

#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace blowup {

class SignLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoContraction : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// (v + w)^{p+1} - v^{p+1} - (p+1) v^p w for v > 0, v + w > 0, without
/// cancellation for small w / v.
double taylor_remainder(double v, double w, double p);

/// Row of F at one s. vt, E, rho, lambda are the parametrix, its residual,
/// rho and the conformal factor on the y-grid.
Eigen::ArrayXd nonlinear_rhs(const Eigen::ArrayXd& w, const Eigen::ArrayXd& vt, const Eigen::ArrayXd& E,
                             const Eigen::ArrayXd& rho, const Eigen::ArrayXd& lambda, double s, double p);

struct XNormTerm {
  int alpha, beta, mu;
  double value;
};

struct XNormReport {
  int m;
  double delta;
  double value;
  std::vector<XNormTerm> terms;
};

/// sum_{alpha + beta <= m} sum_{mu <= alpha} sup |s^{-(alpha - mu) - delta - 1} d_s^mu d_y^beta w|
/// over the grid. s-derivatives by 5-point differences in log s, y-derivatives spectral.
XNormReport x_norm(const SGrid& sg, const PeriodicGrid& yg, const std::vector<Eigen::ArrayXd>& w, int m,
                   double delta);

/// delta = min(J - 1 - 2/p, 2/p + 1) - 0.05
double default_delta(int J, double p);

struct SolveOptions {
  double s0 = 0.25;
  double smin_ratio = 256.0;  // s_min = s0 / smin_ratio
  double ratio = 1.1;         // geometric s-grid ratio
  double tol = 1e-11;         // relative update size that ends the iteration
  int max_iter = 40;
  int max_halvings = 6;
  double delta = std::numeric_limits<double>::quiet_NaN();  // NaN: default_delta
  ResidualRoute route = ResidualRoute::Automatic;
};

struct PicardReport {
  double s0 = 0.0;
  int halvings = 0;
  int iterations = 0;
  bool converged = false;
  double delta = 0.0;
  double kappa = 0.0;
  std::vector<double> updates;  // x_norm(w_{n+1} - w_n), m = 0
  std::vector<double> ratios;   // successive update ratios
  std::vector<std::string> restarts;
  double tail_fraction = 0.0;
  double tail_model_error = 0.0;
  double w_norm = 0.0;
};

struct FieldSample {
  double v, v_s, v_y;
};

class SolutionField {
 public:
  SolutionField(std::shared_ptr<const ParametrixBundle> b, SGrid sg);

  const SGrid& sgrid() const { return sg_; }
  const PeriodicGrid& ygrid() const { return bundle_->grid(); }
  const ParametrixBundle& bundle() const { return *bundle_; }
  double p() const { return bundle_->p(); }

  // Rows on the grid, index j <-> s_j.
  std::vector<Eigen::ArrayXd> vt, vt_s, E, rho, lambda, w, w_s;
  Eigen::ArrayXd v(int j) const { return vt[std::size_t(j)] + w[std::size_t(j)]; }

  /// Installs w and caches its transforms for off-grid sampling.
  void set_correction(std::vector<Eigen::ArrayXd> w_rows, std::vector<Eigen::ArrayXd> ws_rows);

  /// v and its derivatives at (s, y), s_min <= s <= s0: parametrix exactly,
  /// w by cubic Hermite in log s and trigonometric interpolation in y.
  FieldSample sample(double s, double y) const;

 private:
  std::shared_ptr<const ParametrixBundle> bundle_;
  SGrid sg_;
  std::vector<Eigen::ArrayXcd> w_hat_, ws_hat_;
};

/// Runs the iteration on [s0 / smin_ratio, s0], halving s0 on failure.
std::pair<SolutionField, PicardReport> picard_solve(std::shared_ptr<const ParametrixBundle> b,
                                                    const SolveOptions& opts);

/// Single attempt at a fixed s0; reports instead of throwing on non-contraction.
std::pair<SolutionField, PicardReport> picard_attempt(std::shared_ptr<const ParametrixBundle> b,
                                                      const SolveOptions& opts);

struct PdeResidualReport {
  double max_relative;  // max |residual| / max(|v_ss|, |v_yy|, |c lambda v^{p+1}|) pointwise
  double max_absolute;
};

/// v_ss - v_yy - c lambda v^{p+1} on interior nodes, v_ss by 4th-order
/// differences in u = log s (v_ss = s^{-2}(v_uu - v_u)), v_yy spectral.
PdeResidualReport pde_residual(const SolutionField& sol);

struct PushSample {
  double u, u_t, u_x;
  double s, y;
};

/// u(t, x) = v(Phi^{-1}(t, x)). Below s_min, w is continued as a power
/// s^{2 + kappa}. Throws OutOfRegion above the surface or beyond s0.
PushSample pushforward(const SolutionField& sol, const PicardReport& rep, double t, double x);

struct OdeFamilySolution {
  double p, E;
  std::vector<double> s, v, v_s;
  double energy_error;  // max |E_fd - E| / (|v_s|^2 / 2 + (2/p^2) v^{p+2})
};

/// y-independent solutions with energy density E = v_s^2/2 - (2/p^2) v^{p+2}:
///   s = int_0^B (1 + (p^2 E / 2) b^{2(p+2)/p})^{-1/2} db,  v = B^{-2/p}.
OdeFamilySolution ode_reference_family(double p, double E, const std::vector<double>& s);

}  // namespace blowup
