#include "blowup/kernel.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <numbers>
#include <stdexcept>
#include <string>

namespace blowup {

namespace {
constexpr double pi = std::numbers::pi;

// Relative size of (s - s0) below which the Taylor form at the diagonal is used.
constexpr double diagonal_cut = 1e-4;

double rolloff(int k, int n) {
  const int a = std::abs(k), q = n / 4;
  if (a <= q) return 1.0;
  return 0.5 * (1.0 + std::cos(pi * double(a - q) / double(q)));
}

// Cell average of 1{|y| <= h} over [y - dy/2, y + dy/2].
double cell_indicator(double y, double h, double dy) {
  const double lo = std::max(y - 0.5 * dy, -h), hi = std::min(y + 0.5 * dy, h);
  return hi > lo ? (hi - lo) / dy : 0.0;
}

// Cell average of 1{|y| <= h} (h^2 - y^2).
double cell_parabola(double y, double h, double dy) {
  const double lo = std::max(y - 0.5 * dy, -h), hi = std::min(y + 0.5 * dy, h);
  if (!(hi > lo)) return 0.0;
  return (h * h * (hi - lo) - (hi * hi * hi - lo * lo * lo) / 3.0) / dy;
}

// Transform of (1/2) 1{|y| <= h} (h^2 - y^2).
double parabola_hat(double h, double xi) {
  const double w = 2.0 * pi * std::abs(xi), x = w * h;
  if (x < 1e-2) return 2.0 * h * h * h * (1.0 / 3.0 - x * x / 30.0 + x * x * x * x / 840.0);
  return 2.0 * (std::sin(x) - x * std::cos(x)) / (w * w * w);
}
}  // namespace

BesselPair bessel_jy(double nu, double z) {
  if (!(nu >= 0.5 && nu <= 60.0)) throw std::domain_error("bessel_jy: order out of range: " + std::to_string(nu));
  if (!(z >= 1e-8 && z <= 1e6)) throw std::domain_error("bessel_jy: argument out of range: " + std::to_string(z));
  return {nu, z, std::cyl_bessel_j(nu, z), std::cyl_neumann(nu, z), std::cyl_bessel_j(nu + 1.0, z),
          std::cyl_neumann(nu + 1.0, z)};
}

double khat_free(double h, double xi) {
  const double w = 2.0 * pi * std::abs(xi);
  if (w * std::abs(h) < 1e-8) return h;
  return std::sin(w * h) / w;
}

SingularKernel::SingularKernel(double nu) : nu_(nu) {
  if (!(nu >= 0.5 && nu <= 60.0)) throw std::invalid_argument("kernel order nu must lie in [1/2, 60]");
}

SingularKernel::Factors SingularKernel::upper(double a, double s) const {
  if (a == 0.0) {
    // Euler equation: s^{1/2 +- nu}
    const double up = std::pow(s, 0.5 + nu_) / (2.0 * nu_), dn = std::pow(s, 0.5 - nu_) / (2.0 * nu_);
    return {up, dn, (0.5 + nu_) * up / s, (0.5 - nu_) * dn / s};
  }
  const BesselPair b = bessel_jy(nu_, a * s);
  const double r = std::sqrt(s);
  const double U = 0.5 * pi * r * b.Y, W = 0.5 * pi * r * b.J;
  const double dU = 0.5 * pi * (0.5 * b.Y / r + a * r * b.dY());
  const double dW = 0.5 * pi * (0.5 * b.J / r + a * r * b.dJ());
  return {U, W, dU, dW};
}

std::pair<double, double> SingularKernel::lower(double a, double s1) const {
  if (a == 0.0) return {std::pow(s1, 0.5 - nu_), std::pow(s1, 0.5 + nu_)};
  const BesselPair b = bessel_jy(nu_, a * s1);
  const double r = std::sqrt(s1);
  return {r * b.J, r * b.Y};
}

double SingularKernel::khat(double s, double xi, double s0) const {
  if (!(s0 > 0.0)) throw std::domain_error("khat: s0 must be positive");
  if (s <= s0) return 0.0;
  const double h = s - s0, a = 2.0 * pi * std::abs(xi), c = nu_ * nu_ - 0.25;
  if (h < diagonal_cut * s0) {
    // k'' = q k, k(s0) = 0, k'(s0) = 1, q = (nu^2 - 1/4)/s^2 - a^2
    const double q = c / (s0 * s0) - a * a, dq = -2.0 * c / (s0 * s0 * s0);
    return h + q * h * h * h / 6.0 + dq * h * h * h * h / 12.0;
  }
  if (a == 0.0) {
    const double r = s / s0;
    return std::sqrt(s * s0) * (std::pow(r, nu_) - std::pow(r, -nu_)) / (2.0 * nu_);
  }
  const BesselPair lo = bessel_jy(nu_, a * s0), hi = bessel_jy(nu_, a * s);
  return 0.5 * pi * std::sqrt(s * s0) * (lo.J * hi.Y - lo.Y * hi.J);
}

KhatDerivs SingularKernel::khat_derivs(double s, double xi, double s0) const {
  if (!(s0 > 0.0)) throw std::domain_error("khat: s0 must be positive");
  if (s <= s0) return {0.0, 0.0};
  const double h = s - s0, a = 2.0 * pi * std::abs(xi), c = nu_ * nu_ - 0.25;
  if (h < diagonal_cut * s0) {
    const double q = c / (s0 * s0) - a * a, dq = -2.0 * c / (s0 * s0 * s0);
    return {1.0 + q * h * h / 2.0 + dq * h * h * h / 3.0, -1.0 - q * h * h / 2.0 - dq * h * h * h / 6.0};
  }
  const Factors up = upper(a, s), u0 = upper(a, s0);
  const auto [V, Z] = lower(a, s0);
  // The lower factors are the upper ones up to a constant: V = c W, Z = c U.
  const double c0 = a == 0.0 ? 2.0 * nu_ : 2.0 / pi;
  return {up.dU * V - up.dW * Z, c0 * (up.U * u0.dW - up.W * u0.dU)};
}

KernelPhysicalReport kernel_physical_check(const SingularKernel& kr, double s, double s0, const PeriodicGrid& g) {
  g.validate();
  if (!(s > s0 && s0 > 0.0)) throw std::invalid_argument("kernel check needs s > s0 > 0");
  const double h = s - s0;
  if (h + 4.0 * g.dy() >= 0.5 * g.length) throw std::invalid_argument("light cone does not fit in the y-domain");
  const double nu = kr.nu();
  const double jump = -(4.0 * nu * nu - 1.0) / 8.0 * h / (s * s0);
  // Near the cone k = (1/2)[1 + kink (h^2 - y^2) + ...]; both terms are
  // placed exactly so the Fourier remainder is C^1 across the cone.
  const double kink = (nu * nu - 0.25) / (4.0 * s * s0);
  Eigen::ArrayXcd K(g.n), D(g.n);
  const double y0 = g.y(0);
  for (int k = 0; k < g.n; ++k) {
    const double xi = g.xi(k);
    const std::complex<double> phase = std::polar(1.0, 2.0 * pi * xi * y0);
    const double r = rolloff(k <= g.n / 2 ? k : k - g.n, g.n);
    const double k0 = khat_free(h, xi);
    K[k] = r * (kr.khat(s, xi, s0) - k0 - kink * parabola_hat(h, xi)) * phase;
    // d_{s0} k0 = -cos(2 pi xi h); its atoms and the jump * k0 part are exact.
    D[k] = r * (kr.khat_derivs(s, xi, s0).ds0 + std::cos(2.0 * pi * xi * h) - jump * k0) * phase;
  }
  const double scale = double(g.n) / g.length;
  const Eigen::ArrayXd rem = scale * fft_inverse(K), drem = scale * fft_inverse(D);
  KernelPhysicalReport out;
  out.y = g.points();
  out.k.resize(g.n);
  double inside = 0.0, outside = 0.0, l1 = 0.0, dl1 = 0.0;
  for (int j = 0; j < g.n; ++j) {
    const double y = out.y[j], chi = 0.5 * cell_indicator(y, h, g.dy());
    out.k[j] = chi + 0.5 * kink * cell_parabola(y, h, g.dy()) + rem[j];
    l1 += std::abs(out.k[j]) * g.dy();
    dl1 += std::abs(jump * chi + drem[j]) * g.dy();
    if (std::abs(y) <= h + 2.0 * g.dy())
      inside = std::max(inside, std::abs(out.k[j]));
    else
      outside = std::max(outside, std::abs(out.k[j]));
  }
  const double growth = std::pow(s / s0, nu - 0.5);
  out.leakage = inside > 0.0 ? outside / inside : 0.0;
  out.l1 = l1;
  out.bound_ratio = l1 / (h * growth);
  out.ds0_mass = 1.0 + dl1;
  out.ds0_ratio = out.ds0_mass / (1.0 + h / s0 * growth);
  return out;
}

KernelSelftest kernel_selftest(double p, int n_y) {
  KernelSelftest r;
  const SingularKernel free(0.5);
  for (double xi : {0.0, 0.3, -1.7, 6.0})
    for (double s0 : {0.05, 0.4})
      for (double s : {s0 * 1.00001, s0 * 1.5, s0 * 9.0}) {
        const double h = s - s0, w = 2 * std::numbers::pi * xi;
        const double sinc = xi == 0.0 ? h : std::sin(w * h) / w;
        r.sinc_error = std::max(r.sinc_error, std::abs(free.khat(s, xi, s0) - sinc));
      }
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double nu = 0.5 + 19.5 * U(rng);
    const double z = std::exp(std::log(0.05) + U(rng) * std::log(2e5));
    const BesselPair b = bessel_jy(nu, z);
    const double w = b.J * b.dY() - b.dJ() * b.Y;
    r.wronskian_error = std::max(r.wronskian_error, std::abs(w * std::numbers::pi * z / 2.0 - 1.0));
  }
  const SingularKernel kr = SingularKernel::for_power(p);
  for (double xi : {0.0, 0.1, 1.0, 5.0, 20.0})
    r.diagonal_error = std::max(r.diagonal_error, std::abs(kr.khat_derivs(0.2 + 1e-7, xi, 0.2).ds - 1.0));
  const PeriodicGrid g{n_y, 16.0, 0.0};
  r.bound_ratio_min = std::numeric_limits<double>::infinity();
  for (double q = 1.1; q <= 30.0; q *= 1.5) {
    const auto rep = kernel_physical_check(kr, 0.1 * q, 0.1, g);
    r.leakage = std::max(r.leakage, rep.leakage);
    r.bound_ratio_min = std::min(r.bound_ratio_min, rep.bound_ratio);
    r.bound_ratio_max = std::max(r.bound_ratio_max, rep.bound_ratio);
  }
  return r;
}

}  // namespace blowup
