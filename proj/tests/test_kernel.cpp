#include "blowup/kernel.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace blowup;

namespace {
constexpr double pi = std::numbers::pi;

// Legendre function P_mu(z) = 2F1(-mu, mu + 1; 1; (1 - z)/2), |1 - z| < 2.
double legendre_p(double mu, double z) {
  const double x = 0.5 * (1.0 - z);
  double term = 1.0, sum = 1.0;
  for (int k = 0; k < 400 && std::abs(term) > 1e-17 * std::abs(sum); ++k) {
    term *= (k - mu) * (k + mu + 1.0) / ((k + 1.0) * (k + 1.0)) * x;
    sum += term;
  }
  return sum;
}
}  // namespace

TEST_CASE("half-integer Bessel closed forms") {
  for (double z : {0.01, 0.7, 3.0, 25.0, 400.0}) {
    const BesselPair b = bessel_jy(0.5, z);
    const double r = std::sqrt(2.0 / (pi * z));
    CHECK(b.J == doctest::Approx(r * std::sin(z)).epsilon(1e-11));
    CHECK(b.Y == doctest::Approx(-r * std::cos(z)).epsilon(1e-11));
  }
  CHECK_THROWS_AS(bessel_jy(0.2, 1.0), std::domain_error);
  CHECK_THROWS_AS(bessel_jy(2.0, 0.0), std::domain_error);
}

TEST_CASE("Bessel Wronskian over random orders and arguments") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double nu = 0.5 + 19.5 * U(rng);
    const double z = std::exp(std::log(0.05) + U(rng) * std::log(2e5));
    const BesselPair b = bessel_jy(nu, z);
    const double w = b.J * b.dY() - b.dJ() * b.Y;
    worst = std::max(worst, std::abs(w * pi * z / 2.0 - 1.0));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("Hankel modulus at large argument") {
  for (double nu : {0.5, 2.1666, 7.0}) {
    for (double z : {200.0, 2000.0}) {
      const BesselPair b = bessel_jy(nu, z);
      const double m = std::hypot(b.J, b.Y) * std::sqrt(pi * z / 2.0);
      const double bound = (4 * nu * nu - 1) / (8 * z);
      CHECK(std::abs(m - 1.0) <= bound * 1.01 + 1e-14);
    }
  }
}

TEST_CASE("nu = 1/2 kernel is the free wave kernel") {
  const SingularKernel kr(0.5);
  for (double xi : {0.0, 0.3, -1.7, 6.0})
    for (double s0 : {0.05, 0.4})
      for (double s : {s0 * 1.00001, s0 * 1.5, s0 * 9.0}) {
        const double h = s - s0, w = 2 * pi * xi;
        const double sinc = xi == 0.0 ? h : std::sin(w * h) / w;
        CHECK(std::abs(kr.khat(s, xi, s0) - sinc) < 1e-9);
        CHECK(std::abs(kr.khat_derivs(s, xi, s0).ds - std::cos(w * h)) < 1e-9);
        CHECK(std::abs(kr.khat_derivs(s, xi, s0).ds0 + std::cos(w * h)) < 1e-9);
      }
}

TEST_CASE("kernel basics: causality, parity, diagonal law") {
  const SingularKernel kr = SingularKernel::for_power(3.0);
  CHECK(kr.khat(0.2, 1.3, 0.2) == 0.0);
  CHECK(kr.khat(0.1, 1.3, 0.2) == 0.0);
  CHECK(kr.khat(0.5, 1.3, 0.2) == kr.khat(0.5, -1.3, 0.2));
  for (double xi : {0.0, 0.1, 1.0, 5.0, 20.0}) {
    CHECK(std::abs(kr.khat_derivs(0.2 + 1e-7, xi, 0.2).ds - 1.0) < 1e-6);
    CHECK(std::abs(kr.khat_derivs(0.2 + 1e-7, xi, 0.2).ds0 + 1.0) < 1e-6);
  }
}

TEST_CASE("derivatives agree with centered differences") {
  const SingularKernel kr = SingularKernel::for_power(3.0);
  const double h = 1e-5;
  for (double xi : {0.0, 0.4, 3.0})
    for (double s : {0.15, 0.5, 2.0}) {
      const double s0 = 0.1;
      const KhatDerivs d = kr.khat_derivs(s, xi, s0);
      const double fs = (kr.khat(s + h, xi, s0) - kr.khat(s - h, xi, s0)) / (2 * h);
      const double f0 = (kr.khat(s, xi, s0 + h) - kr.khat(s, xi, s0 - h)) / (2 * h);
      CHECK(std::abs(d.ds - fs) < 1e-6 * std::max(1.0, std::abs(fs)));
      CHECK(std::abs(d.ds0 - f0) < 1e-6 * std::max(1.0, std::abs(f0)));
    }
}

TEST_CASE("zero mode solves the Euler equation") {
  const SingularKernel kr = SingularKernel::for_power(3.0);
  const double c = kr.nu() * kr.nu() - 0.25, s0 = 0.3, h = 1e-4;
  for (double s : {0.4, 0.9, 3.0}) {
    const double k2 = (kr.khat(s + h, 0, s0) - 2 * kr.khat(s, 0, s0) + kr.khat(s - h, 0, s0)) / (h * h);
    CHECK(k2 == doctest::Approx(c / (s * s) * kr.khat(s, 0, s0)).epsilon(1e-6));
  }
  // matches a tiny nonzero frequency
  CHECK(kr.khat(0.9, 0.0, s0) == doctest::Approx(kr.khat(0.9, 1e-7, s0)).epsilon(1e-9));
}

TEST_CASE("scaling covariance") {
  const SingularKernel kr = SingularKernel::for_power(2.0);
  for (double a : {0.5, 3.0}) {
    const double s = 0.7, s0 = 0.2, xi = 1.1;
    CHECK(kr.khat(a * s, xi / a, a * s0) == doctest::Approx(a * kr.khat(s, xi, s0)).epsilon(1e-11));
  }
}

TEST_CASE("physical kernel: indicator for nu = 1/2") {
  const PeriodicGrid g{512, 16.0, 0.0};
  const auto rep = kernel_physical_check(SingularKernel(0.5), 1.3, 0.3, g);
  CHECK(rep.l1 == doctest::Approx(1.0).epsilon(0.02));
  CHECK(rep.leakage < 1e-3);
  CHECK(rep.ds0_mass == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("physical kernel against the Riemann function") {
  // k = (1/2) P_{nu - 1/2}(1 + (h^2 - y^2)/(2 s s0)) inside the cone.
  const SingularKernel kr = SingularKernel::for_power(3.0);
  // The Fourier remainder converges like N^{-2} (5e-4 at N = 1024).
  const PeriodicGrid g{4096, 16.0, 0.0};
  const double s = 0.2, s0 = 0.1, h = s - s0;
  const auto rep = kernel_physical_check(kr, s, s0, g);
  double worst = 0.0;
  for (int j = 0; j < g.n; ++j) {
    const double y = rep.y[j];
    if (std::abs(y) > h - 2 * g.dy()) continue;
    const double exact = 0.5 * legendre_p(kr.nu() - 0.5, 1.0 + (h * h - y * y) / (2 * s * s0));
    worst = std::max(worst, std::abs(rep.k[j] - exact));
  }
  CHECK(worst < 1e-4);
  CHECK(rep.leakage < 1e-3);
}

TEST_CASE("physical kernel bound ratios stay bounded") {
  const SingularKernel kr = SingularKernel::for_power(3.0);
  const PeriodicGrid g{1024, 16.0, 0.0};
  double lo = 1e300, hi = 0.0;
  for (double r = 1.1; r <= 30.0; r *= 1.5) {
    const auto rep = kernel_physical_check(kr, 0.1 * r, 0.1, g);
    lo = std::min(lo, rep.bound_ratio);
    hi = std::max(hi, rep.bound_ratio);
    CHECK(rep.leakage < 1e-3);
    CHECK(rep.ds0_ratio < 2.0);
  }
  CHECK(hi < 2.0);
  CHECK(lo > 0.1);
  CHECK_THROWS(kernel_physical_check(kr, 9.0, 0.1, g));
}
