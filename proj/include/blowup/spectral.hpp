#pragma once

// Periodic y-grid and Fourier tools: transforms, spectral derivatives,
// trigonometric interpolation.

#include <Eigen/Core>

#include <complex>

namespace blowup {

struct PeriodicGrid {
  int n = 256;
  double length = 16.0;
  double center = 0.0;

  double dy() const { return length / n; }
  double y(int i) const { return center - 0.5 * length + i * dy(); }
  Eigen::ArrayXd points() const;
  /// Frequency xi of FFT bin k (signed, cycles per unit length).
  double xi(int k) const { return (k <= n / 2 ? k : k - n) / length; }
  /// Throws unless n is a power of two >= 8 and length > 0.
  void validate() const;
};

/// Full-length discrete Fourier transform of real samples.
Eigen::ArrayXcd fft_forward(const Eigen::ArrayXd& f);
/// Real part of the inverse transform (scaled by 1/n).
Eigen::ArrayXd fft_inverse(const Eigen::ArrayXcd& F);

/// Exponential filter exp(-36 (|k| / (n/2))^36), flat on resolved modes.
double spectral_filter(int k, int n);

/// d^order f / dy^order by Fourier multiplication; the Nyquist mode is
/// dropped for odd orders.
Eigen::ArrayXd spectral_derivative(const Eigen::ArrayXd& f, const PeriodicGrid& g, int order, bool filter = false);

/// Weights w (length n/2 + 1) with f(y) = Re sum_k w[k] F[k] for the
/// trigonometric interpolant of samples with transform F.
Eigen::ArrayXcd interpolation_weights(const PeriodicGrid& g, double y);
double interpolate(const Eigen::ArrayXcd& F, const Eigen::ArrayXcd& weights);
/// Weights for the y-derivative of the same interpolant.
Eigen::ArrayXcd interpolation_weights_dy(const PeriodicGrid& g, double y);

}  // namespace blowup
