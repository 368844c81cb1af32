#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace blowup {

/// Root of an increasing function with derivative bounded below by a
/// positive constant. Newton steps, falling back to bisection whenever a
/// step leaves the current bracket.
template <class F, class DF>
double solve_increasing(F&& f, DF&& df, double guess, double tol = 1e-14, int max_iter = 200) {
  double lo = guess, hi = guess;
  double flo = f(lo), fhi = flo;
  if (flo == 0.0) return guess;
  double step = 1.0;
  if (flo > 0.0) {
    while (flo > 0.0) {
      hi = lo;
      fhi = flo;
      lo -= step;
      step *= 2.0;
      flo = f(lo);
      if (step > 1e12) throw std::runtime_error("solve_increasing: no bracket");
    }
  } else {
    while (fhi < 0.0) {
      lo = hi;
      flo = fhi;
      hi += step;
      step *= 2.0;
      fhi = f(hi);
      if (step > 1e12) throw std::runtime_error("solve_increasing: no bracket");
    }
  }
  double x = (flo == 0.0) ? lo : (fhi == 0.0 ? hi : guess);
  if (x <= lo || x >= hi) x = 0.5 * (lo + hi);
  for (int it = 0; it < max_iter; ++it) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    if (fx < 0.0) lo = x;
    else hi = x;
    const double d = df(x);
    double next = x - fx / d;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= tol * (1.0 + std::abs(x))) return next;
    x = next;
    if (hi - lo <= tol * (1.0 + std::abs(x))) return x;
  }
  return x;
}

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

const GaussRule& gauss_legendre(int n);

/// Adaptive Gauss-Legendre quadrature comparing 10- and 20-point rules
/// with bisection of failing panels.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double tol = 1e-14,
                          int max_depth = 40);

}  // namespace blowup
