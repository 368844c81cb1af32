#pragma once

// Zero-data Duhamel solution of the singular wave equation,
//   v(s) = int_0^s k(s; s1) * F(s1) ds1,
// mode by mode on a geometric s-grid.

#include "blowup/kernel.hpp"
#include "blowup/spectral.hpp"

#include <Eigen/Core>

#include <complex>
#include <vector>

namespace blowup {

struct SGrid {
  std::vector<double> s;  // increasing, s.front() = s_min, s.back() = s0
  double ratio = 1.1;

  /// Nodes s0 r^{-k} down to s_min; the ratio is adjusted so both ends are nodes.
  static SGrid geometric(double s0, double s_min, double ratio = 1.1);
  int size() const { return int(s.size()); }
  double s0() const { return s.back(); }
  double s_min() const { return s.front(); }
};

struct DuhamelOptions {
  int gauss_points = 8;    // per interval
  int stencil = 6;         // Lagrange points in log s (causal: nodes <= right end)
  double deep_arg = 1e-4;  // a s below which small-argument Bessel forms are used
};

struct DuhamelResult {
  std::vector<Eigen::ArrayXd> v, v_s;  // per s-node
  double tail_fraction = 0.0;          // |tail part| / |v| at s0, worst mode
  double tail_model_error = 0.0;       // tail sensitivity to the power-law model, relative
};

/// Exponent q of max_y |F| ~ s^q, least squares over the first nodes.
double fit_small_s_exponent(const SGrid& sg, const std::vector<Eigen::ArrayXd>& F, int nodes = 4);

class DuhamelOperator {
 public:
  /// kappa: small-s exponent of F; must exceed nu - 3/2 for the integral
  /// from 0 to converge.
  DuhamelOperator(const SingularKernel& kr, const PeriodicGrid& yg, SGrid sg, double kappa, DuhamelOptions opts = {});

  const SGrid& sgrid() const { return sg_; }
  const PeriodicGrid& ygrid() const { return yg_; }
  double kappa() const { return kappa_; }

  /// F[j] is the forcing on the y-grid at s_j.
  DuhamelResult apply(const std::vector<Eigen::ArrayXd>& F) const;

  /// One Fourier mode (0 <= k <= n/2); F samples at the s-nodes.
  void apply_mode(int k, const std::vector<std::complex<double>>& F, std::vector<std::complex<double>>& v,
                  std::vector<std::complex<double>>& v_s, double* tail_fraction = nullptr,
                  double* tail_error = nullptr) const;

 private:
  struct ModeTables {
    std::vector<double> U, W, dU, dW;  // upper factors at nodes
    std::vector<double> wV, wZ;        // [interval * stencil + i]
    std::vector<int> first;            // stencil start per interval
    std::vector<int> count;            // stencil size per interval
    double tV = 0.0, tZ = 0.0;         // tail integrals of V s^kappa, Z s^kappa
  };
  ModeTables build_mode(double a) const;

  SingularKernel kr_;
  PeriodicGrid yg_;
  SGrid sg_;
  double kappa_;
  DuhamelOptions opts_;
  std::vector<ModeTables> modes_;
};

}  // namespace blowup
