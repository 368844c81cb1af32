#include "blowup/spectral.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace blowup;

TEST_CASE("fft round trip") {
  PeriodicGrid g{64, 8.0, 0.0};
  Eigen::ArrayXd f = (g.points() * 0.7).sin() + 0.2 * (g.points() * 1.3).cos().square();
  CHECK((fft_inverse(fft_forward(f)) - f).abs().maxCoeff() < 1e-14);
}

TEST_CASE("spectral derivatives of a resolved mode") {
  PeriodicGrid g{128, 16.0, 0.0};
  const double k = 2.0 * std::numbers::pi * 3.0 / g.length;
  const Eigen::ArrayXd y = g.points();
  const Eigen::ArrayXd f = (k * y).sin();
  CHECK((spectral_derivative(f, g, 1) - k * (k * y).cos()).abs().maxCoeff() < 1e-12);
  CHECK((spectral_derivative(f, g, 2, true) + k * k * f).abs().maxCoeff() < 1e-11);
}

TEST_CASE("trigonometric interpolation off the nodes") {
  PeriodicGrid g{128, 16.0, 1.0};
  const Eigen::ArrayXd y = g.points();
  const Eigen::ArrayXd f = (-(y - 1.0).square()).exp();
  const auto F = fft_forward(f);
  for (double q : {-3.3, 0.17, 1.0, 4.9}) {
    const double exact = std::exp(-(q - 1.0) * (q - 1.0));
    CHECK(interpolate(F, interpolation_weights(g, q)) == doctest::Approx(exact).epsilon(1e-12));
  }
}

TEST_CASE("filter is flat on the low band") {
  CHECK(spectral_filter(10, 256) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(spectral_filter(128, 256) < 1e-15);
  CHECK_THROWS(PeriodicGrid{100, 1.0, 0.0}.validate());
}

TEST_CASE("interpolated derivative") {
  PeriodicGrid g{128, 16.0, 0.0};
  const Eigen::ArrayXd f = (-(g.points()).square()).exp();
  const auto F = fft_forward(f);
  for (double q : {-1.3, 0.4}) {
    CHECK(interpolate(F, interpolation_weights_dy(g, q)) == doctest::Approx(-2 * q * std::exp(-q * q)).epsilon(1e-11));
  }
}
