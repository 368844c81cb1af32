#pragma once

// Real-order Bessel functions and the causal fundamental solution of
//   v_ss - v_yy - (nu^2 - 1/4) s^{-2} v = F
// per Fourier mode:
//   khat(s, xi; s0) = (pi/2) sqrt(s s0) [J(a s0) Y(a s) - Y(a s0) J(a s)],
// a = 2 pi |xi|, for s > s0 and 0 otherwise.

#include "blowup/spectral.hpp"

#include <Eigen/Core>

namespace blowup {

struct BesselPair {
  double nu, z;
  double J, Y;    // order nu
  double J1, Y1;  // order nu + 1
  double dJ() const { return nu / z * J - J1; }
  double dY() const { return nu / z * Y - Y1; }
};

/// nu in [1/2, 60], z in [1e-8, 1e6]; throws std::domain_error otherwise.
BesselPair bessel_jy(double nu, double z);

struct KhatDerivs {
  double ds;   // d/ds
  double ds0;  // d/ds0
};

class SingularKernel {
 public:
  explicit SingularKernel(double nu);
  /// nu = 3/2 + 2/p
  static SingularKernel for_power(double p) { return SingularKernel(1.5 + 2.0 / p); }

  double nu() const { return nu_; }
  double khat(double s, double xi, double s0) const;
  KhatDerivs khat_derivs(double s, double xi, double s0) const;

  /// Separable form for fixed a = 2 pi |xi|:
  ///   khat(s; s1) = U(s) V(s1) - W(s) Z(s1), s > s1.
  struct Factors {
    double U, W, dU, dW;  // at the upper argument s
  };
  Factors upper(double a, double s) const;
  /// V(s1), Z(s1) at the lower argument.
  std::pair<double, double> lower(double a, double s1) const;

 private:
  double nu_;
};

/// Wave kernel of the unmodified equation (nu = 1/2): sin(2 pi xi h)/(2 pi xi).
double khat_free(double h, double xi);

struct KernelPhysicalReport {
  double leakage;       // max |k| outside the cone (+2 dy) / max inside
  double l1;            // ||k||_{L^1_y}
  double bound_ratio;   // l1 / [(s - s0)(s/s0)^{nu - 1/2}]
  double ds0_mass;      // ||d_{s0} k||_{M_y}
  double ds0_ratio;     // ds0_mass / [1 + (s - s0)/s0 (s/s0)^{nu - 1/2}]
  Eigen::ArrayXd y, k;  // synthesized samples
};

/// Physical-space kernel on the periodic grid. The free kernel's indicator
/// with its first curvature correction (and the delta atoms of the
/// s0-derivative) are placed exactly, cell
/// averaged; the Fourier remainder is synthesized with a raised-cosine
/// roll-off over the top octave. Throws if the cone does not fit.
KernelPhysicalReport kernel_physical_check(const SingularKernel& kr, double s, double s0, const PeriodicGrid& g);

/// Closed-form and structural checks of the kernel, for the pipeline's
/// self-test stage. Deterministic (fixed seed).
struct KernelSelftest {
  double sinc_error = 0.0;       // nu = 1/2 against sin(2 pi xi h)/(2 pi xi)
  double wronskian_error = 0.0;  // |W pi z / 2 - 1| over 1000 samples
  double diagonal_error = 0.0;   // |d_s khat - 1| at s = s0 + 1e-7
  double leakage = 0.0;          // worst cone leakage over s/s0 in [1.1, 30]
  double bound_ratio_min = 0.0, bound_ratio_max = 0.0;
};

KernelSelftest kernel_selftest(double p, int n_y = 1024);

}  // namespace blowup
