#include "blowup/surface.hpp"

#include "blowup/roots.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

namespace blowup {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> parse_numbers(const std::string& body, const std::string& id) {
  std::vector<double> out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad catalog parameter '" + item + "' in '" + id + "'");
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- compact sets

CompactSetSpec CompactSetSpec::middle_thirds(int depth, double epsilon) {
  if (depth < 0) throw std::invalid_argument("middle-thirds depth must be >= 0");
  CompactSetSpec spec;
  spec.lo = 0.0;
  spec.hi = 1.0;
  spec.epsilon = epsilon;
  std::vector<std::pair<double, double>> pieces{{0.0, 1.0}};
  for (int d = 0; d < depth; ++d) {
    std::vector<std::pair<double, double>> next;
    for (auto [a, b] : pieces) {
      const double third = (b - a) / 3.0;
      next.emplace_back(a, a + third);
      next.emplace_back(b - third, b);
      spec.gaps.emplace_back(a + third, b - third);
    }
    pieces = std::move(next);
  }
  std::sort(spec.gaps.begin(), spec.gaps.end());
  return spec;
}

void CompactSetSpec::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("compact set: epsilon must be positive");
  if (!(hi >= lo)) throw std::invalid_argument("compact set: empty hull");
  auto sorted = gaps;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    auto [l, r] = sorted[i];
    if (!(r > l)) throw std::invalid_argument("compact set: gap with non-positive length");
    if (l <= lo || r >= hi) throw std::invalid_argument("compact set: gap must lie strictly inside the hull");
    if (i > 0 && l <= sorted[i - 1].second) throw std::invalid_argument("compact set: overlapping gap intervals");
  }
}

bool CompactSetSpec::contains(double x) const {
  if (x < lo || x > hi) return false;
  for (auto [l, r] : gaps)
    if (x > l && x < r) return false;
  return true;
}

std::vector<std::pair<double, double>> CompactSetSpec::components() const {
  auto sorted = gaps;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> out;
  double start = lo;
  for (auto [l, r] : sorted) {
    out.emplace_back(start, l);
    start = r;
  }
  out.emplace_back(start, hi);
  return out;
}

// ------------------------------------------------------------- Cantor surface

CantorSurface::CantorSurface(CompactSetSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  std::sort(spec_.gaps.begin(), spec_.gaps.end());
}

double CantorSurface::phi(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 0.5) return 1.0;
  const double a = std::exp(-1.0 / u);
  const double b = std::exp(-1.0 / (0.5 - u));
  return a / (a + b);
}

Jet CantorSurface::phi(const Jet& u) {
  if (u.value() <= 0.0) return u.constant_like(0.0);
  if (u.value() >= 0.5) return u.constant_like(1.0);
  const Jet a = exp(-1.0 / u);
  const Jet b = exp(-1.0 / (0.5 - u));
  return a / (a + b);
}

template <class T>
T CantorSurface::bump(const T& x) const {
  const double xv = value_of(x);
  auto zero = [&]() -> T {
    if constexpr (std::is_same_v<T, double>) return 0.0;
    else return x.constant_like(0.0);
  };
  if (xv < spec_.lo) return phi(spec_.lo - x);
  if (xv > spec_.hi) return phi(x - spec_.hi);
  for (auto [l, r] : spec_.gaps) {
    if (xv > l && xv < r) {
      const double len = r - l;
      const T d = (xv - l <= r - xv) ? T(x - l) : T(r - x);
      return std::exp(-1.0 / len) * phi(d / len);
    }
  }
  return zero();
}

double CantorSurface::excess(double x) const { return spec_.epsilon * bump(x); }

double CantorSurface::log_excess(double x) const {
  // log phi(u) = -log(1 + exp(t)) with t = 1/u - 1/(1/2 - u) on (0, 1/2)
  auto log_phi = [](double u) {
    if (u <= 0.0) return -std::numeric_limits<double>::infinity();
    if (u >= 0.5) return 0.0;
    const double t = 1.0 / u - 1.0 / (0.5 - u);
    return t > 0.0 ? -(t + std::log1p(std::exp(-t))) : -std::log1p(std::exp(t));
  };
  const double le = std::log(spec_.epsilon);
  if (x < spec_.lo) return le + log_phi(spec_.lo - x);
  if (x > spec_.hi) return le + log_phi(x - spec_.hi);
  for (auto [l, r] : spec_.gaps) {
    if (x > l && x < r) {
      const double len = r - l;
      return le - 1.0 / len + log_phi(std::min(x - l, r - x) / len);
    }
  }
  return -std::numeric_limits<double>::infinity();
}

double CantorSurface::slope(double x) const { return jet(x, 1)[1]; }

Jet CantorSurface::jet(double x0, int order) const {
  return spec_.epsilon + spec_.epsilon * bump(Jet::variable(x0, order));
}

// ------------------------------------------------------------------ sampling

SigmaSurface make_surface(std::shared_ptr<const SurfaceFunction> fn, std::string source, const SurfaceGrid& grid) {
  if (!(grid.half_width > 0.0) || !(grid.dx > 0.0)) throw std::invalid_argument("surface grid must be positive");
  SigmaSurface s;
  s.fn = std::move(fn);
  s.source = std::move(source);
  s.half_width = grid.half_width;
  const int n = int(std::lround(2.0 * grid.half_width / grid.dx)) + 1;
  s.dx = 2.0 * grid.half_width / (n - 1);
  s.x = Eigen::ArrayXd::LinSpaced(n, -grid.half_width, grid.half_width);
  s.values.resize(n);
  s.slopes.resize(n);
  for (int i = 0; i < n; ++i) {
    s.values[i] = s.fn->value(s.x[i]);
    s.slopes[i] = s.fn->slope(s.x[i]);
    if (!std::isfinite(s.values[i]) || !std::isfinite(s.slopes[i]))
      throw std::domain_error("surface not finite at x = " + std::to_string(s.x[i]));
  }
  spacelike_margin(s);
  return s;
}

SigmaSurface parse_sigma_expression(const std::string& text, const SurfaceGrid& grid) {
  auto fn = std::make_shared<ExpressionSurface>(Expression::parse(text));
  return make_surface(fn, text, grid);
}

SigmaSurface catalog_surface(const std::string& id, const SurfaceGrid& grid) {
  const auto colon = id.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("catalog id needs 'name:params': " + id);
  const std::string name = id.substr(0, colon);
  const auto a = parse_numbers(id.substr(colon + 1), id);
  auto need = [&](std::size_t n) {
    if (a.size() != n) throw std::invalid_argument("catalog '" + name + "' takes " + std::to_string(n) + " parameters");
  };
  std::string text;
  if (name == "flat") {
    need(1);
    text = fmt(a[0]);
  } else if (name == "tilt") {
    need(1);
    text = fmt(a[0]) + "*x";
  } else if (name == "gauss") {
    need(2);
    if (!(a[1] > 0.0)) throw std::invalid_argument("gauss width must be positive");
    text = fmt(a[0]) + "*exp(-x^2/" + fmt(a[1] * a[1]) + ")";
  } else if (name == "cos") {
    need(2);
    text = fmt(a[0]) + "*cos(" + fmt(a[1]) + "*x)";
  } else {
    throw std::invalid_argument("unknown catalog surface '" + name + "'");
  }
  auto fn = std::make_shared<ExpressionSurface>(Expression::parse(text));
  return make_surface(fn, id, grid);
}

SigmaSurface build_cantor_sigma(const CompactSetSpec& spec, const SurfaceGrid& grid) {
  auto fn = std::make_shared<CantorSurface>(spec);
  return make_surface(fn, "cantor", grid);
}

double spacelike_margin(const SigmaSurface& s) {
  Eigen::Index at = 0;
  const double m = s.slopes.abs().maxCoeff(&at);
  if (!(m < 1.0 - 1e-6)) throw SpacelikeViolation(s.x[at], s.slopes[at]);
  return m;
}

double slope_consistency(const SigmaSurface& s) {
  const Eigen::Index n = s.x.size();
  if (n < 2) return 0.0;
  double worst = 0.0;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double fd = (s.values[i + 1] - s.values[i]) / s.dx;
    worst = std::max(worst, std::abs(fd - s.fn->slope(0.5 * (s.x[i] + s.x[i + 1]))));
  }
  return worst;
}

// ------------------------------------------------------------------ h profile

double solve_null_foot(const SurfaceFunction& fn, double target, int sign) {
  const double sg = sign >= 0 ? 1.0 : -1.0;
  return solve_increasing([&](double x) { return x - sg * fn.value(x) - target; },
                          [&](double x) { return 1.0 - sg * fn.slope(x); }, target + sg * fn.value(target));
}

HProfile::HProfile(Eigen::ArrayXd z, Eigen::ArrayXd h, Eigen::ArrayXd dh, std::shared_ptr<const SurfaceFunction> fn)
    : z_(std::move(z)), h_(std::move(h)), dh_(std::move(dh)), m_(dh_), fn_(std::move(fn)) {
  const Eigen::Index n = z_.size();
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    if (!(z_[i + 1] > z_[i]) || !(h_[i + 1] > h_[i]))
      throw SpacelikeViolation(0.5 * (z_[i] + h_[i]), 1.0);
  }
  // Fritsch-Carlson limiter keeps the Hermite interpolant monotone.
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double secant = (h_[i + 1] - h_[i]) / (z_[i + 1] - z_[i]);
    const double a = m_[i] / secant, b = m_[i + 1] / secant;
    const double r = a * a + b * b;
    if (r > 9.0) {
      const double t = 3.0 / std::sqrt(r);
      m_[i] = t * a * secant;
      m_[i + 1] = t * b * secant;
    }
  }
}

std::size_t HProfile::cell(double z) const {
  const auto* begin = z_.data();
  const auto* end = begin + z_.size();
  auto it = std::upper_bound(begin, end, z);
  std::size_t i = std::size_t(it - begin);
  if (i == 0) return 0;
  return std::min<std::size_t>(i - 1, std::size_t(z_.size()) - 2);
}

double HProfile::operator()(double z) const {
  if (z < z_[0] || z > z_[z_.size() - 1]) return exact(z);
  const std::size_t i = cell(z);
  const double h = z_[i + 1] - z_[i];
  const double t = (z - z_[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * h_[i] + (t3 - 2 * t2 + t) * h * m_[i] + (-2 * t3 + 3 * t2) * h_[i + 1] +
         (t3 - t2) * h * m_[i + 1];
}

double HProfile::derivative(double z) const {
  if (z < z_[0] || z > z_[z_.size() - 1]) {
    const double x = solve_null_foot(*fn_, z, +1);
    const double sp = fn_->slope(x);
    return (1.0 + sp) / (1.0 - sp);
  }
  const std::size_t i = cell(z);
  const double h = z_[i + 1] - z_[i];
  const double t = (z - z_[i]) / h;
  const double t2 = t * t;
  return ((6 * t2 - 6 * t) * h_[i] + (-6 * t2 + 6 * t) * h_[i + 1]) / h + (3 * t2 - 4 * t + 1) * m_[i] +
         (3 * t2 - 2 * t) * m_[i + 1];
}

double HProfile::exact(double z) const {
  const double x = solve_null_foot(*fn_, z, +1);
  return x + fn_->value(x);
}

HProfile solve_h(const SigmaSurface& s) {
  spacelike_margin(s);
  Eigen::ArrayXd z = s.x - s.values;
  Eigen::ArrayXd h = s.x + s.values;
  Eigen::ArrayXd dh = (1.0 + s.slopes) / (1.0 - s.slopes);
  return HProfile(std::move(z), std::move(h), std::move(dh), s.fn);
}

}  // namespace blowup
