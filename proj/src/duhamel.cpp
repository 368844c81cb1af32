#include "blowup/duhamel.hpp"

#include "blowup/parallel.hpp"
#include "blowup/roots.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace blowup {

SGrid SGrid::geometric(double s0, double s_min, double ratio) {
  if (!(s0 > s_min && s_min > 0.0)) throw std::invalid_argument("s-grid needs s0 > s_min > 0");
  if (!(ratio > 1.0)) throw std::invalid_argument("s-grid ratio must exceed 1");
  const int k = std::max(2, int(std::ceil(std::log(s0 / s_min) / std::log(ratio) - 1e-9)));
  SGrid g;
  g.ratio = std::pow(s0 / s_min, 1.0 / k);
  g.s.resize(std::size_t(k) + 1);
  for (int j = 0; j <= k; ++j) g.s[std::size_t(j)] = s_min * std::pow(g.ratio, j);
  g.s.back() = s0;
  return g;
}

double fit_small_s_exponent(const SGrid& sg, const std::vector<Eigen::ArrayXd>& F, int nodes) {
  nodes = std::min(nodes, sg.size());
  if (nodes < 2) throw std::invalid_argument("exponent fit needs two nodes");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int j = 0; j < nodes; ++j) {
    const double m = F[std::size_t(j)].abs().maxCoeff();
    if (!(m > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double x = std::log(sg.s[std::size_t(j)]), y = std::log(m);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (nodes * sxy - sx * sy) / (nodes * sxx - sx * sx);
}

DuhamelOperator::DuhamelOperator(const SingularKernel& kr, const PeriodicGrid& yg, SGrid sg, double kappa,
                                 DuhamelOptions opts)
    : kr_(kr), yg_(yg), sg_(std::move(sg)), kappa_(kappa), opts_(opts) {
  yg_.validate();
  if (sg_.size() < 2) throw std::invalid_argument("Duhamel needs at least two s-nodes");
  if (!(kappa > kr_.nu() - 1.5))
    throw std::invalid_argument("forcing exponent " + std::to_string(kappa) + " must exceed nu - 3/2 = " +
                                std::to_string(kr_.nu() - 1.5));
  if (opts_.stencil < 2 || opts_.gauss_points < 2) throw std::invalid_argument("bad Duhamel options");
  modes_.resize(std::size_t(yg_.n / 2 + 1));
  parallel_for(int(modes_.size()), [&](int k) {
    modes_[std::size_t(k)] = build_mode(2.0 * std::numbers::pi * std::abs(yg_.xi(k)));
  });
}

DuhamelOperator::ModeTables DuhamelOperator::build_mode(double a) const {
  const int N = sg_.size(), S = opts_.stencil;
  const double nu = kr_.nu(), kap = kappa_;
  ModeTables t;
  for (double s : sg_.s) {
    const auto f = kr_.upper(a, s);
    t.U.push_back(f.U);
    t.W.push_back(f.W);
    t.dU.push_back(f.dU);
    t.dW.push_back(f.dW);
  }
  std::vector<double> u(static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j) u[std::size_t(j)] = std::log(sg_.s[std::size_t(j)]);
  const GaussRule& gr = gauss_legendre(opts_.gauss_points);
  t.wV.assign(std::size_t(N - 1) * S, 0.0);
  t.wZ.assign(std::size_t(N - 1) * S, 0.0);
  for (int n = 0; n + 1 < N; ++n) {
    const int right = n + 1, first = std::max(0, right - (S - 1)), cnt = right - first + 1;
    t.first.push_back(first);
    t.count.push_back(cnt);
    const double u0 = u[std::size_t(n)], u1 = u[std::size_t(right)], half = 0.5 * (u1 - u0);
    for (std::size_t q = 0; q < gr.nodes.size(); ++q) {
      const double uq = u0 + half * (gr.nodes[q] + 1.0), sq = std::exp(uq);
      const auto [V, Z] = kr_.lower(a, sq);
      // ds = s du, and G = F s^{-kappa}
      const double base = half * gr.weights[q] * std::pow(sq, kap + 1.0);
      for (int i = 0; i < cnt; ++i) {
        double L = 1.0;
        for (int m = 0; m < cnt; ++m)
          if (m != i) L *= (uq - u[std::size_t(first + m)]) / (u[std::size_t(first + i)] - u[std::size_t(first + m)]);
        t.wV[std::size_t(n) * S + i] += base * L * V;
        t.wZ[std::size_t(n) * S + i] += base * L * Z;
      }
    }
  }
  // Tail on (0, s_min] with G frozen at its s_min value.
  const double smin = sg_.s_min();
  if (a == 0.0) {
    t.tV = std::pow(smin, kap + 1.5 - nu) / (kap + 1.5 - nu);
    t.tZ = std::pow(smin, kap + 1.5 + nu) / (kap + 1.5 + nu);
    return t;
  }
  const double sd = std::min(smin, opts_.deep_arg / a);
  // J ~ (z/2)^nu / Gamma(nu + 1), Y ~ -Gamma(nu)/pi (z/2)^{-nu} below sd
  t.tV = std::pow(0.5 * a, nu) / std::tgamma(nu + 1.0) * std::pow(sd, kap + nu + 1.5) / (kap + nu + 1.5);
  t.tZ = -std::tgamma(nu) / std::numbers::pi * std::pow(0.5 * a, -nu) * std::pow(sd, kap - nu + 1.5) /
         (kap - nu + 1.5);
  if (sd < smin) {
    const double span = std::log(smin / sd);
    const int pieces = std::max(1, int(std::ceil(span / 0.5)));
    const double h = span / pieces;
    for (int pc = 0; pc < pieces; ++pc) {
      const double ua = std::log(sd) + pc * h;
      for (std::size_t q = 0; q < gr.nodes.size(); ++q) {
        const double sq = std::exp(ua + 0.5 * h * (gr.nodes[q] + 1.0));
        const auto [V, Z] = kr_.lower(a, sq);
        const double base = 0.5 * h * gr.weights[q] * std::pow(sq, kap + 1.0);
        t.tV += base * V;
        t.tZ += base * Z;
      }
    }
  }
  return t;
}

void DuhamelOperator::apply_mode(int k, const std::vector<std::complex<double>>& F,
                                 std::vector<std::complex<double>>& v, std::vector<std::complex<double>>& v_s,
                                 double* tail_fraction, double* tail_error) const {
  const ModeTables& t = modes_.at(std::size_t(k));
  const int N = sg_.size(), S = opts_.stencil;
  if (int(F.size()) != N) throw std::invalid_argument("forcing does not match the s-grid");
  std::vector<std::complex<double>> G(static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j) G[std::size_t(j)] = F[std::size_t(j)] * std::pow(sg_.s[std::size_t(j)], -kappa_);
  v.assign(std::size_t(N), 0.0);
  v_s.assign(std::size_t(N), 0.0);
  std::complex<double> IV = t.tV * G[0], IZ = t.tZ * G[0];
  for (int m = 0; m < N; ++m) {
    if (m > 0) {
      const int n = m - 1;
      for (int i = 0; i < t.count[std::size_t(n)]; ++i) {
        const auto g = G[std::size_t(t.first[std::size_t(n)] + i)];
        IV += t.wV[std::size_t(n) * S + i] * g;
        IZ += t.wZ[std::size_t(n) * S + i] * g;
      }
    }
    v[std::size_t(m)] = t.U[std::size_t(m)] * IV - t.W[std::size_t(m)] * IZ;
    v_s[std::size_t(m)] = t.dU[std::size_t(m)] * IV - t.dW[std::size_t(m)] * IZ;
  }
  if (tail_fraction || tail_error) {
    const double top = std::abs(v.back());
    const std::complex<double> tail = (t.U.back() * t.tV - t.W.back() * t.tZ) * G[0];
    const double frac = top > 0.0 ? std::abs(tail) / top : 0.0;
    if (tail_fraction) *tail_fraction = frac;
    if (tail_error) *tail_error = std::abs(G[0]) > 0.0 ? frac * std::abs(G[1] - G[0]) / std::abs(G[0]) : 0.0;
  }
}

DuhamelResult DuhamelOperator::apply(const std::vector<Eigen::ArrayXd>& F) const {
  const int N = sg_.size(), n = yg_.n, half = n / 2;
  if (int(F.size()) != N) throw std::invalid_argument("forcing does not match the s-grid");
  std::vector<Eigen::ArrayXcd> Fh(static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j) {
    if (F[std::size_t(j)].size() != n) throw std::invalid_argument("forcing row does not match the y-grid");
    Fh[std::size_t(j)] = fft_forward(F[std::size_t(j)]);
  }
  std::vector<Eigen::ArrayXcd> Vh(static_cast<std::size_t>(N), Eigen::ArrayXcd::Zero(n));
  std::vector<Eigen::ArrayXcd> Sh = Vh;
  std::vector<double> frac(static_cast<std::size_t>(half + 1), 0.0);
  std::vector<double> err = frac;
  // Modes whose forcing is below this share of the largest are left out of
  // the tail diagnostics (their relative numbers are noise).
  double peak = 0.0;
  for (const auto& row : Fh) peak = std::max(peak, row.abs().maxCoeff());
  parallel_for(half + 1, [&](int k) {
    std::vector<std::complex<double>> col(static_cast<std::size_t>(N)), v, vs;
    double mag = 0.0;
    for (int j = 0; j < N; ++j) {
      col[std::size_t(j)] = Fh[std::size_t(j)][k];
      mag = std::max(mag, std::abs(col[std::size_t(j)]));
    }
    if (mag == 0.0) return;
    apply_mode(k, col, v, vs, &frac[std::size_t(k)], &err[std::size_t(k)]);
    if (mag < 1e-10 * peak) frac[std::size_t(k)] = err[std::size_t(k)] = 0.0;
    for (int j = 0; j < N; ++j) {
      Vh[std::size_t(j)][k] = v[std::size_t(j)];
      Sh[std::size_t(j)][k] = vs[std::size_t(j)];
      if (k != 0 && k != half) {
        Vh[std::size_t(j)][n - k] = std::conj(v[std::size_t(j)]);
        Sh[std::size_t(j)][n - k] = std::conj(vs[std::size_t(j)]);
      }
    }
  });
  DuhamelResult out;
  for (int j = 0; j < N; ++j) {
    out.v.push_back(fft_inverse(Vh[std::size_t(j)]));
    out.v_s.push_back(fft_inverse(Sh[std::size_t(j)]));
  }
  for (int k = 0; k <= half; ++k) {
    out.tail_fraction = std::max(out.tail_fraction, frac[std::size_t(k)]);
    out.tail_model_error = std::max(out.tail_model_error, err[std::size_t(k)]);
  }
  return out;
}

}  // namespace blowup
