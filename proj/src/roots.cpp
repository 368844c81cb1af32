#include "blowup/roots.hpp"

#include <map>
#include <mutex>
#include <numbers>

namespace blowup {

namespace {

GaussRule make_rule(int n) {
  GaussRule r;
  r.nodes.resize(std::size_t(n));
  r.weights.resize(std::size_t(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[std::size_t(i)] = -x;
    r.nodes[std::size_t(n - 1 - i)] = x;
    r.weights[std::size_t(i)] = w;
    r.weights[std::size_t(n - 1 - i)] = w;
  }
  return r;
}

double fixed_rule(const std::function<double(double)>& f, double a, double b, const GaussRule& r) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double acc = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) acc += r.weights[i] * f(c + h * r.nodes[i]);
  return acc * h;
}

double adapt(const std::function<double(double)>& f, double a, double b, double tol, int depth, double coarse) {
  const double fine = fixed_rule(f, a, b, gauss_legendre(20));
  // Floor at roundoff so halved tolerances stay reachable.
  if (!std::isfinite(fine)) return fine;
  if (std::abs(fine - coarse) <= std::max(tol, 1e-15 * std::abs(fine)) || depth <= 0) return fine;
  const double m = 0.5 * (a + b);
  const auto& g10 = gauss_legendre(10);
  return adapt(f, a, m, 0.5 * tol, depth - 1, fixed_rule(f, a, m, g10)) +
         adapt(f, m, b, 0.5 * tol, depth - 1, fixed_rule(f, m, b, g10));
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_rule(n)).first;
  return it->second;
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double tol, int max_depth) {
  if (a == b) return 0.0;
  const double coarse = fixed_rule(f, a, b, gauss_legendre(10));
  // Relative tolerance for large integrals, absolute for small ones.
  return adapt(f, a, b, tol * std::max(1.0, std::abs(coarse)), max_depth, coarse);
}

}  // namespace blowup
