#include "blowup/spectral.hpp"

#include <unsupported/Eigen/FFT>

#include <numbers>
#include <stdexcept>
#include <vector>

namespace blowup {

namespace {
Eigen::FFT<double>& engine() {
  thread_local Eigen::FFT<double> fft;
  return fft;
}
}  // namespace

Eigen::ArrayXd PeriodicGrid::points() const {
  Eigen::ArrayXd p(n);
  for (int i = 0; i < n; ++i) p[i] = y(i);
  return p;
}

void PeriodicGrid::validate() const {
  if (n < 8 || (n & (n - 1)) != 0) throw std::invalid_argument("y-grid size must be a power of two >= 8");
  if (!(length > 0.0)) throw std::invalid_argument("y-grid length must be positive");
}

Eigen::ArrayXcd fft_forward(const Eigen::ArrayXd& f) {
  const Eigen::Index n = f.size();
  std::vector<std::complex<double>> in(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) in[std::size_t(i)] = f[i];
  engine().fwd(out.data(), in.data(), n);
  return Eigen::Map<Eigen::ArrayXcd>(out.data(), n);
}

Eigen::ArrayXd fft_inverse(const Eigen::ArrayXcd& F) {
  const Eigen::Index n = F.size();
  std::vector<std::complex<double>> in(F.data(), F.data() + n);
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n));
  engine().inv(out.data(), in.data(), n);
  Eigen::ArrayXd f(n);
  for (Eigen::Index i = 0; i < n; ++i) f[i] = out[std::size_t(i)].real();
  return f;
}

double spectral_filter(int k, int n) {
  const double r = std::abs(double(k)) / (0.5 * n);
  return std::exp(-36.0 * std::pow(r, 36));
}

Eigen::ArrayXd spectral_derivative(const Eigen::ArrayXd& f, const PeriodicGrid& g, int order, bool filter) {
  if (f.size() != g.n) throw std::invalid_argument("spectral_derivative: size mismatch");
  if (order == 0 && !filter) return f;
  Eigen::ArrayXcd F = fft_forward(f);
  const std::complex<double> i2pi(0.0, 2.0 * std::numbers::pi);
  for (int k = 0; k < g.n; ++k) {
    const int ks = k <= g.n / 2 ? k : k - g.n;
    std::complex<double> m = std::pow(i2pi * (double(ks) / g.length), order);
    if (k == g.n / 2 && order % 2 == 1) m = 0.0;
    if (filter) m *= spectral_filter(ks, g.n);
    F[k] *= m;
  }
  return fft_inverse(F);
}

Eigen::ArrayXcd interpolation_weights(const PeriodicGrid& g, double y) {
  const int half = g.n / 2;
  Eigen::ArrayXcd w(half + 1);
  const double theta = 2.0 * std::numbers::pi * (y - g.y(0)) / g.length;
  const std::complex<double> step = std::polar(1.0, theta);
  std::complex<double> e = 1.0;
  for (int k = 0; k <= half; ++k) {
    // Interior modes pair with their conjugates; 0 and Nyquist stand alone.
    const double mult = (k == 0 || k == half) ? 1.0 : 2.0;
    w[k] = mult * e / double(g.n);
    e *= step;
    if (k % 64 == 63) e = std::polar(1.0, theta * (k + 1));  // limit drift
  }
  return w;
}

Eigen::ArrayXcd interpolation_weights_dy(const PeriodicGrid& g, double y) {
  Eigen::ArrayXcd w = interpolation_weights(g, y);
  const std::complex<double> i2pi(0.0, 2.0 * std::numbers::pi / g.length);
  for (Eigen::Index k = 0; k < w.size(); ++k) w[k] *= i2pi * double(k);
  return w;
}

double interpolate(const Eigen::ArrayXcd& F, const Eigen::ArrayXcd& weights) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < weights.size(); ++k) acc += (weights[k] * F[k]).real();
  return acc;
}

}  // namespace blowup
