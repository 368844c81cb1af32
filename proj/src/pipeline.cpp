#include "blowup/pipeline.hpp"

#include "blowup/expression.hpp"
#include "blowup/kernel.hpp"
#include "blowup/parallel.hpp"
#include "blowup/surface.hpp"
#include "blowup/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

namespace blowup {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

const std::vector<std::pair<std::string, std::string>>& csv_headers() {
  static const std::vector<std::pair<std::string, std::string>> h{
      {"map.csv", "s,y,t,x,lambda"},
      {"parametrix.csv", "s,y,rho,E"},
      {"solution_sy.csv", "s,y,v,w"},
      {"solution_tx.csv", "t,x,u,u_t,u_x,s,y"},
      {"blowup_fit.csv", "x,sigma,sigma_prime,fitted,target,relerr"},
      {"leapfrog.csv", "x,u_leapfrog,u_solution,relerr"},
      {"cantor.csv", "x,sigma,in_E,u0,u0_t"},
      {"cantor_probes.csv", "x,u_leapfrog,relerr"},
  };
  return h;
}

bool RunManifest::all_passed() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

ojson RunManifest::to_json() const {
  ojson j;
  j["config"] = to_text(config);
  j["exit_code"] = exit_code;
  j["error"] = error;
  j["diagnostics"] = diagnostics;
  ojson cs = ojson::array();
  for (const auto& c : checks) cs.push_back({{"name", c.name}, {"value", c.value}, {"limit", c.limit}, {"pass", c.pass}});
  j["checks"] = cs;
  j["warnings"] = warnings;
  j["files"] = files;
  j["timings"] = timings;
  return j;
}

namespace {

class StageError : public std::runtime_error {
 public:
  StageError(int code, const std::string& msg) : std::runtime_error(msg), code(code) {}
  int code;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& dir, const std::string& name, RunManifest& m) : path_(dir / name) {
    out_.open(path_);
    if (!out_) throw StageError(kExitConfig, "cannot write " + path_.string());
    for (const auto& [file, header] : csv_headers())
      if (file == name) out_ << header << '\n';
    m.files.push_back(name);
  }
  void row(std::initializer_list<double> v) {
    bool first = true;
    for (double x : v) {
      out_ << (first ? "" : ",") << num(x);
      first = false;
    }
    out_ << '\n';
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

double json_safe(double v) { return std::isfinite(v) ? v : 0.0; }

struct State {
  std::shared_ptr<const SurfaceFunction> sigma;
  std::shared_ptr<ConformalMap> map;
  std::shared_ptr<const ParametrixBundle> bundle;
  std::shared_ptr<const SolutionField> sol;
  PicardReport rep;
  std::optional<CantorReport> cantor;
  double epsilon = 0.0;
};

struct Runner {
  const RunConfig& cfg;
  RunManifest& m;
  fs::path dir;
  State st;

  void check(const std::string& name, double value, double limit, bool pass) {
    m.checks.push_back({name, json_safe(value), limit, pass});
  }

  PeriodicGrid grid() const { return PeriodicGrid{cfg.n_y, cfg.y_length, cfg.y_center}; }

  CantorOptions cantor_options() const {
    CantorOptions o;
    o.n_y = cfg.n_y;
    o.y_length = cfg.y_length;
    o.y_center = cfg.y_center;
    o.J = cfg.J;
    o.x_lo = cfg.x_lo;
    o.x_hi = cfg.x_hi;
    o.n_x = cfg.n_x;
    o.residual_gate = cfg.tolerance;
    o.solve = solve_options();
    return o;
  }

  SolveOptions solve_options() const {
    SolveOptions o;
    o.s0 = cfg.s0;
    o.smin_ratio = cfg.smin_ratio;
    o.ratio = cfg.ratio;
    o.tol = cfg.tol;
    o.max_iter = cfg.max_iter;
    o.max_halvings = cfg.max_halvings;
    return o;
  }

  bool needs_solution() const { return cfg.has_stage("solve") || cfg.has_stage("verify"); }

  // --------------------------------------------------------------- stages
  void stage_map() {
    const SurfaceGrid sg{cfg.half_width, cfg.dx};
    SigmaSurface surf;
    if (cfg.kind == "catalog") {
      surf = catalog_surface(cfg.catalog, sg);
    } else if (cfg.kind == "expression") {
      surf = parse_sigma_expression(cfg.expression, sg);
    } else {
      st.epsilon = cfg.cantor_epsilon;
      if (needs_solution()) {
        // epsilon is lowered until the solved layer reaches t = 0
        st.cantor = cantor_pipeline(CompactSetSpec::middle_thirds(cfg.cantor_depth, cfg.cantor_epsilon), cfg.p,
                                    cantor_options());
        st.epsilon = st.cantor->epsilon;
        m.diagnostics["cantor_attempts"] = st.cantor->attempts;
        if (st.epsilon < cfg.cantor_epsilon)
          m.warnings.push_back("map: cantor epsilon lowered from " + num(cfg.cantor_epsilon) + " to " + num(st.epsilon) +
                               " so that the solved layer reaches t = 0");
      }
      surf = build_cantor_sigma(CompactSetSpec::middle_thirds(cfg.cantor_depth, st.epsilon), sg);
    }
    st.sigma = surf.fn;
    const double half = 0.5 * cfg.y_length;
    st.map = std::make_shared<ConformalMap>(solve_fg(solve_h(surf), cfg.y_center - half - 1.0, cfg.y_center + half + 1.0));
    std::vector<std::pair<double, double>> pts;
    for (int i = 1; i <= 8; ++i)
      for (int k = 0; k <= 32; ++k) pts.emplace_back(cfg.s0 * i / 8.0, cfg.y_center - half + cfg.y_length * k / 32.0);
    const ConformalityReport cr = conformality_check(*st.map, pts);
    ojson d;
    d["source"] = surf.source;
    d["spacelike_margin"] = spacelike_margin(surf);
    d["metric_residual"] = cr.metric_residual;
    d["boundary_lambda"] = cr.boundary_lambda;
    d["ratio_error"] = cr.ratio_error;
    if (cfg.kind == "cantor") d["epsilon"] = st.epsilon;
    m.diagnostics["map"] = d;
    check("map.metric_residual", cr.metric_residual, 1e-6, cr.metric_residual < 1e-6);

    CsvWriter w(dir, "map.csv", m);
    for (int i = 0; i <= 8; ++i)
      for (int k = 0; k <= 64; ++k) {
        const double s = cfg.s0 * i / 8.0, y = cfg.y_center - half + cfg.y_length * k / 64.0;
        const auto [t, x] = st.map->evaluate(s, y);
        w.row({s, y, t, x, st.map->lambda(s, y)});
      }
  }

  void stage_parametrix() {
    if (st.cantor) {
      st.bundle = st.cantor->bundle;
    } else {
      const PeriodicGrid g = grid();
      st.bundle = std::make_shared<const ParametrixBundle>(
          build_parametrix(lambda_taylor_at_boundary(*st.map, g, cfg.J + 12), cfg.p, cfg.J, g, st.map, 12));
    }
    const ParametrixBundle& b = *st.bundle;
    const double p = cfg.p;
    const Eigen::ArrayXd law = -(p + 2.0) / (p * (p + 4.0)) * b.lambda_series().coefficient(1);
    const double rho1 = (b.rho_j(1) - law).abs().maxCoeff();
    // residual slope over [s0/64, s0] at the configured s0
    const double s0 = st.cantor ? st.cantor->s0 : cfg.s0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    bool vanishing = false;
    for (int k = 0; k <= 12; ++k) {
      const double s = s0 * std::pow(64.0, -k / 12.0);
      const double e = b.evaluate(s).E.abs().maxCoeff();
      if (!(e > 0.0)) {
        vanishing = true;
        break;
      }
      sx += std::log(s);
      sy += std::log(e);
      sxx += std::log(s) * std::log(s);
      sxy += std::log(s) * std::log(e);
      ++n;
    }
    const double target = cfg.J - 1.0 - 2.0 / p;
    ojson d;
    d["rho1_law_error"] = rho1;
    d["low_order_residual"] = b.low_order_residual();
    d["log_order"] = b.rho().log_order();
    d["residual_slope_target"] = target;
    if (vanishing) {
      d["residual_slope"] = nullptr;
      d["residual_vanishes"] = true;
    } else {
      const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
      d["residual_slope"] = slope;
      if (slope < target - 0.3)
        m.warnings.push_back("parametrix: residual slope " + num(slope) + " below target " + num(target - 0.3));
    }
    m.diagnostics["parametrix"] = d;
    check("parametrix.rho1_law", rho1, 1e-10, rho1 < 1e-10);

    CsvWriter w(dir, "parametrix.csv", m);
    const int stride = std::max(1, b.grid().n / 64);
    for (int k = 0; k <= 12; ++k) {
      const double s = s0 * std::pow(64.0, -k / 12.0);
      const ParametrixValues v = b.evaluate(s);
      const Eigen::ArrayXd rho = b.rho().evaluate(s);
      for (int i = 0; i < b.grid().n; i += stride) w.row({s, b.grid().y(i), rho[i], v.E[i]});
    }
  }

  void stage_kernel() {
    const KernelSelftest k = kernel_selftest(cfg.p);
    m.diagnostics["kernel"] = {{"sinc_error", k.sinc_error},           {"wronskian_error", k.wronskian_error},
                               {"diagonal_error", k.diagonal_error},   {"leakage", k.leakage},
                               {"bound_ratio_min", k.bound_ratio_min}, {"bound_ratio_max", k.bound_ratio_max}};
    check("kernel.sinc", k.sinc_error, 1e-9, k.sinc_error < 1e-9);
    check("kernel.wronskian", k.wronskian_error, 1e-9, k.wronskian_error < 1e-9);
    check("kernel.diagonal", k.diagonal_error, 1e-6, k.diagonal_error < 1e-6);
    check("kernel.leakage", k.leakage, 1e-3, k.leakage < 1e-3);
    check("kernel.bound_ratio_max", k.bound_ratio_max, 2.0, k.bound_ratio_max < 2.0 && k.bound_ratio_min > 0.1);
  }

  void stage_solve() {
    if (st.cantor) {
      st.sol = st.cantor->solution;
      st.rep = st.cantor->picard;
    } else {
      try {
        auto [sol, rep] = picard_solve(st.bundle, solve_options());
        st.sol = std::make_shared<const SolutionField>(std::move(sol));
        st.rep = rep;
      } catch (const NoContraction& e) {
        throw StageError(kExitNumeric, e.what());
      }
    }
    const PicardReport& r = st.rep;
    const PdeResidualReport res = pde_residual(*st.sol);
    // decay of w: slope of log max|w| against log s on the lower half
    const SGrid& sg = st.sol->sgrid();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int j = 0; j < sg.size() / 2; ++j) {
      const double wm = st.sol->w[std::size_t(j)].abs().maxCoeff();
      if (!(wm > 0.0)) continue;
      const double lx = std::log(sg.s[std::size_t(j)]), ly = std::log(wm);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++n;
    }
    ojson d;
    d["s0"] = r.s0;
    d["halvings"] = r.halvings;
    d["iterations"] = r.iterations;
    d["delta"] = r.delta;
    d["kappa"] = r.kappa;
    d["J"] = cfg.J;
    d["updates"] = r.updates;
    d["ratios"] = r.ratios;
    d["restarts"] = r.restarts;
    d["w_norm"] = r.w_norm;
    d["tail_fraction"] = json_safe(r.tail_fraction);
    d["tail_model_error"] = json_safe(r.tail_model_error);
    d["pde_residual"] = res.max_relative;
    if (n >= 2) {
      const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
      d["w_decay_slope"] = slope;
      if (slope < 1.0 + r.delta - 0.3)
        m.warnings.push_back("solve: w decay slope " + num(slope) + " below 1 + delta - 0.3");
    }
    m.diagnostics["solve"] = d;
    double worst_ratio = 0.0;
    for (double q : r.ratios) worst_ratio = std::max(worst_ratio, q);
    check("solve.contraction", worst_ratio, 1.0, r.converged && worst_ratio < 1.0);
    check("solve.pde_residual", res.max_relative, cfg.residual_tolerance, res.max_relative < cfg.residual_tolerance);

    const int stride = std::max(1, cfg.n_y / 64);
    {
      CsvWriter w(dir, "solution_sy.csv", m);
      for (int j = 0; j < sg.size(); ++j) {
        const Eigen::ArrayXd v = st.sol->v(j);
        for (int i = 0; i < cfg.n_y; i += stride)
          w.row({sg.s[std::size_t(j)], st.sol->ygrid().y(i), v[i], st.sol->w[std::size_t(j)][i]});
      }
    }
    CsvWriter w(dir, "solution_tx.csv", m);
    int skipped = 0;
    for (int i = 0; i < cfg.n_x; ++i) {
      const double x = cfg.x_lo + (cfg.x_hi - cfg.x_lo) * i / std::max(1, cfg.n_x - 1);
      const double sl = st.sigma->slope(x), sig = st.sigma->value(x);
      for (int k = 1; k <= 8; ++k) {
        const double t = sig - 0.8 * r.s0 * std::sqrt(1 - sl * sl) * k / 8.0;
        try {
          const PushSample u = pushforward(*st.sol, r, t, x);
          w.row({t, x, u.u, u.u_t, u.u_x, u.s, u.y});
        } catch (const OutOfRegion&) {
          ++skipped;
        }
      }
    }
    if (skipped) m.warnings.push_back("solve: " + std::to_string(skipped) + " (t, x) samples outside the layer");
  }

  void stage_verify() {
    const SolutionField& sol = *st.sol;
    const PicardReport& rep = st.rep;
    const FieldSampler u = [&](double t, double x) { return pushforward(sol, rep, t, x).u; };
    std::vector<double> xs;
    for (int i = 0; i < cfg.n_x; ++i) xs.push_back(cfg.x_lo + (cfg.x_hi - cfg.x_lo) * i / std::max(1, cfg.n_x - 1));
    const double tau0 = std::min(cfg.tau0, 0.5 * rep.s0);
    const BlowupFitReport fit = blowup_coefficient_fit(u, *st.sigma, cfg.p, xs, tau0, cfg.fit_levels);
    ojson d;
    d["blowup_fit_max_error"] = fit.max_relerr;
    d["blowup_fit_monotone"] = fit.monotone;
    d["blowup_fit_tau0"] = tau0;
    {
      std::size_t mid = xs.size() / 2;
      d["blowup_coefficient_mid"] = fit.fitted[mid];
      d["blowup_target_mid"] = fit.target[mid];
    }
    check("verify.blowup_law", fit.max_relerr, cfg.tolerance, fit.max_relerr < cfg.tolerance);
    // differences at roundoff are not expected to be monotone
    if (!fit.monotone && fit.max_relerr > 1e-6) m.warnings.push_back("verify: blowup fit differences not monotone (resolution)");
    {
      CsvWriter w(dir, "blowup_fit.csv", m);
      for (std::size_t i = 0; i < xs.size(); ++i)
        w.row({fit.x[i], fit.sigma[i], fit.slope[i], fit.fitted[i], fit.target[i], fit.relerr[i]});
    }

    if (st.cantor) {
      const CantorReport& c = *st.cantor;
      d["cantor_epsilon_requested"] = c.epsilon_requested;
      d["cantor_epsilon"] = c.epsilon;
      d["cantor_s0"] = c.s0;
      d["cantor_set_mismatch_cells"] = c.set_mismatch_cells;
      d["cantor_lambda_constant"] = c.lambda_constant;
      d["cantor_lambda_constant_half"] = c.lambda_constant_half;
      d["cantor_off_relerr"] = c.off_rel;
      check("verify.cantor_set", c.set_mismatch_cells, 1.0, c.set_mismatch_cells <= 1.0);
      check("verify.cantor_bounded", c.bounded ? 0.0 : 1.0, 0.5, c.bounded);
      const double drift = std::abs(c.lambda_constant_half / c.lambda_constant - 1.0);
      check("verify.cantor_lambda_constant", drift, 0.1, drift < 0.1);
      CsvWriter w(dir, "cantor.csv", m);
      const CompactSetSpec spec = CompactSetSpec::middle_thirds(cfg.cantor_depth, c.epsilon);
      for (std::size_t i = 0; i < c.x.size(); ++i)
        w.row({c.x[i], c.sigma[i], spec.contains(c.x[i]) ? 1.0 : 0.0, c.u0[i], c.u0_t[i]});
      CsvWriter pw(dir, "cantor_probes.csv", m);
      for (std::size_t i = 0; i < c.off_x.size(); ++i) pw.row({c.off_x[i], c.off_u[i], c.off_rel[i]});
    } else {
      // Cauchy line below the window, low enough that every point is solved
      const double a = cfg.window_center - cfg.window_half, b = cfg.window_center + cfg.window_half;
      double smax = -1e300;
      for (int k = 0; k <= 200; ++k) smax = std::max(smax, st.sigma->value(a + (b - a) * k / 200.0));
      double tau = 0.6 * rep.s0, t_c = 0.0;
      bool ok = false;
      for (int attempt = 0; attempt < 30 && !ok; ++attempt, tau *= 0.8) {
        t_c = smax - tau;
        ok = true;
        for (int k = 0; k <= 200 && ok; ++k) {
          const double x = a + (b - a) * k / 200.0;
          if (!(st.sigma->value(x) > t_c)) ok = false;
          else {
            try {
              ok = st.map->invert(t_c, x).first <= 0.95 * rep.s0;
            } catch (const OutOfRegion&) {
              ok = false;
            }
          }
        }
      }
      if (!ok) throw StageError(kExitVerification, "no Cauchy line inside the solved layer over the leapfrog window; narrow [verify] window_half");
      const CauchySampler data = solution_sampler(sol, rep);
      LeapfrogOptions lo;
      lo.stop = cfg.leapfrog_stop;
      const LeapfrogField lf = leapfrog_oracle(sample_cauchy(data, t_c, a, b, cfg.leapfrog_points), *st.sigma, cfg.p, lo);
      const double agree = two_solver_agreement(lf, u);
      const ConvergenceReport cr =
          leapfrog_convergence(data, t_c, a, b, (cfg.leapfrog_points - 1) / 4 + 1, *st.sigma, cfg.p, lo);
      d["leapfrog_t_c"] = t_c;
      d["leapfrog_t_end"] = lf.t_end;
      d["two_solver_agreement"] = agree;
      d["leapfrog_energy_drift"] = lf.energy_drift;
      d["leapfrog_order"] = json_safe(cr.order);
      d["leapfrog_differences"] = cr.differences;
      check("verify.two_solver", agree, cfg.tolerance, agree < cfg.tolerance);
      check("verify.energy_drift", lf.energy_drift, 1e-2, lf.energy_drift < 1e-2);
      // exact data leaves nothing to converge; the order is then meaningless
      const bool resolved = cr.differences[1] < 1e-13 * lf.u.abs().maxCoeff();
      if (resolved) m.warnings.push_back("verify: leapfrog differences at roundoff; order not measured");
      check("verify.leapfrog_order", resolved ? 2.0 : cr.order, 1.8, resolved || cr.order >= 1.8);
      CsvWriter w(dir, "leapfrog.csv", m);
      for (int i = lf.lo; i <= lf.hi; ++i) {
        const double us = u(lf.t_end, lf.x(i));
        w.row({lf.x(i), lf.u[i], us, std::abs(us / lf.u[i] - 1.0)});
      }
    }
    m.diagnostics["verify"] = d;
  }
};

void write_manifest(const fs::path& dir, const RunManifest& m) {
  const fs::path tmp = dir / "manifest.json.tmp", fin = dir / "manifest.json";
  {
    std::ofstream f(tmp);
    if (!f) return;
    f << m.to_json().dump(2) << '\n';
  }
  fs::rename(tmp, fin);
}

}  // namespace

RunManifest run_pipeline(const RunConfig& cfg) {
  RunManifest m;
  m.config = cfg;
  const fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    m.exit_code = kExitConfig;
    m.error = "output: cannot create " + dir.string() + ": " + ec.message();
    return m;
  }
  if (cfg.threads > 0) set_max_threads(cfg.threads);
  Runner r{cfg, m, dir, {}};
  const bool solve = r.needs_solution();
  // prerequisites run even when their stage is not selected
  const std::vector<std::pair<std::string, bool>> plan{
      {"map", solve || cfg.has_stage("parametrix") || cfg.has_stage("map")},
      {"parametrix", solve || cfg.has_stage("parametrix")},
      {"kernel-selftest", cfg.has_stage("kernel-selftest")},
      {"solve", solve},
      {"verify", cfg.has_stage("verify")},
  };
  std::string current;
  try {
    for (const auto& [name, run] : plan) {
      if (!run) continue;
      current = name;
      const auto t0 = std::chrono::steady_clock::now();
      if (name == "map") r.stage_map();
      else if (name == "parametrix") r.stage_parametrix();
      else if (name == "kernel-selftest") r.stage_kernel();
      else if (name == "solve") r.stage_solve();
      else r.stage_verify();
      m.timings[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    if (!m.all_passed()) {
      m.exit_code = kExitVerification;
      for (const auto& c : m.checks)
        if (!c.pass) m.error += (m.error.empty() ? "" : "; ") + c.name + " = " + num(c.value);
    }
  } catch (const StageError& e) {
    m.exit_code = e.code;
    m.error = current + ": " + e.what();
  } catch (const ConfigError& e) {
    m.exit_code = kExitConfig;
    m.error = current + ": " + e.what();
  } catch (const SpacelikeViolation& e) {
    m.exit_code = kExitConfig;
    m.error = current + ": " + e.what();
  } catch (const ParseError& e) {
    m.exit_code = kExitConfig;
    m.error = current + ": " + e.what();
  } catch (const std::invalid_argument& e) {
    // bad surface expressions and catalog ids surface here
    m.exit_code = current == "map" ? kExitConfig : kExitNumeric;
    m.error = current + ": " + e.what();
  } catch (const std::exception& e) {
    m.exit_code = kExitNumeric;
    m.error = current + ": " + e.what();
  }
  write_manifest(dir, m);
  m.files.push_back("manifest.json");
  return m;
}

RunManifest run_config(const std::string& path) {
  try {
    return run_pipeline(load_config(path));
  } catch (const ConfigError& e) {
    RunManifest m;
    m.exit_code = kExitConfig;
    m.error = std::string("config: ") + e.what();
    return m;
  }
}

}  // namespace blowup
