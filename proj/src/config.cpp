#include "blowup/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace blowup {

namespace pt = boost::property_tree;

namespace {

std::string unquote(std::string v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  return v;
}

struct Reader {
  const pt::ptree& tree;
  std::set<std::string> used;

  template <class T>
  void get(const std::string& key, T& out) {
    used.insert(key);
    const auto node = tree.get_child_optional(pt::ptree::path_type(key, '.'));
    if (!node) return;
    const std::string raw = unquote(node->get_value<std::string>());
    if constexpr (std::is_same_v<T, std::string>) {
      out = raw;
    } else {
      std::istringstream is(raw);
      T v{};
      is >> v;
      if (is.fail() || !is.eof()) throw ConfigError(key + ": cannot read '" + raw + "' as a number");
      out = v;
    }
  }
};

void require(bool ok, const std::string& field, const std::string& range) {
  if (!ok) throw ConfigError(field + ": expected " + range);
}

}  // namespace

std::vector<std::string> parse_stages(const std::string& text) {
  if (text == "all") return stage_names();
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    if (std::find(stage_names().begin(), stage_names().end(), item) == stage_names().end())
      throw ConfigError("output.stages: unknown stage '" + item + "'");
    out.push_back(item);
  }
  if (out.empty()) throw ConfigError("output.stages: expected 'all' or a list of stage names");
  return out;
}

bool RunConfig::has_stage(const std::string& s) const {
  return std::find(stages.begin(), stages.end(), s) != stages.end();
}

void RunConfig::validate() const {
  require(kind == "catalog" || kind == "expression" || kind == "cantor", "surface.kind",
          "one of catalog, expression, cantor");
  if (kind == "expression") require(!expression.empty(), "surface.expression", "a non-empty expression");
  require(cantor_depth >= 0 && cantor_depth <= 8, "surface.cantor_depth", "0 <= depth <= 8");
  require(cantor_epsilon > 0.0 && cantor_epsilon <= 0.1, "surface.cantor_epsilon", "0 < epsilon <= 0.1");
  require(half_width > 0.0, "surface.half_width", "> 0");
  require(dx > 0.0 && dx <= 0.1, "surface.dx", "0 < dx <= 0.1");
  require(p > 0.0 && p <= 20.0, "model.p", "0 < p <= 20");
  if (has_stage("solve") || has_stage("verify"))
    require(J > 3.0 + 4.0 / p, "model.J", "order > 3 + 4/p = " + std::to_string(3.0 + 4.0 / p) +
                                              " for uniqueness when solving");
  require(J >= 1 && J <= 30, "model.J", "1 <= J <= 30");
  require(n_y >= 8 && (n_y & (n_y - 1)) == 0, "grid.n_y", "a power of two >= 8");
  require(y_length > 0.0, "grid.y_length", "> 0");
  require(ratio > 1.0 && ratio <= 1.5, "grid.ratio", "1 < ratio <= 1.5");
  require(smin_ratio >= 4.0, "grid.smin_ratio", ">= 4");
  require(s0 > 0.0 && s0 <= 2.0, "solver.s0", "0 < s0 <= 2");
  require(tol > 0.0 && tol < 1e-3, "solver.tol", "0 < tol < 1e-3");
  require(max_iter >= 1, "solver.max_iter", ">= 1");
  require(max_halvings >= 0 && max_halvings <= 20, "solver.max_halvings", "0 <= halvings <= 20");
  require(tolerance > 0.0, "verify.tolerance", "> 0");
  require(residual_tolerance > 0.0, "verify.residual_tolerance", "> 0");
  require(x_hi > x_lo, "verify.x_hi", "> verify.x_lo");
  require(n_x >= 2, "verify.n_x", ">= 2");
  require(tau0 > 0.0, "verify.tau0", "> 0");
  require(fit_levels >= 3 && fit_levels <= 30, "verify.fit_levels", "3 <= levels <= 30");
  require(window_half > 0.0, "verify.window_half", "> 0");
  require(leapfrog_points >= 16, "verify.leapfrog_points", ">= 16");
  require(leapfrog_stop > 0.0 && leapfrog_stop <= 0.9, "verify.leapfrog_stop", "0 < stop <= 0.9");
  require(!out_dir.empty(), "output.dir", "a directory path");
  require(threads >= 0, "output.threads", ">= 0");
}

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config syntax: " + e.message() + " at line " + std::to_string(e.line()));
  }
  RunConfig c;
  Reader r{tree, {}};
  r.get("surface.kind", c.kind);
  r.get("surface.catalog", c.catalog);
  r.get("surface.expression", c.expression);
  r.get("surface.cantor_depth", c.cantor_depth);
  r.get("surface.cantor_epsilon", c.cantor_epsilon);
  r.get("surface.half_width", c.half_width);
  r.get("surface.dx", c.dx);
  r.get("model.p", c.p);
  r.get("model.J", c.J);
  r.get("grid.n_y", c.n_y);
  r.get("grid.y_length", c.y_length);
  r.get("grid.y_center", c.y_center);
  r.get("grid.ratio", c.ratio);
  r.get("grid.smin_ratio", c.smin_ratio);
  r.get("solver.s0", c.s0);
  r.get("solver.tol", c.tol);
  r.get("solver.max_iter", c.max_iter);
  r.get("solver.max_halvings", c.max_halvings);
  r.get("verify.tolerance", c.tolerance);
  r.get("verify.residual_tolerance", c.residual_tolerance);
  r.get("verify.x_lo", c.x_lo);
  r.get("verify.x_hi", c.x_hi);
  r.get("verify.n_x", c.n_x);
  r.get("verify.tau0", c.tau0);
  r.get("verify.fit_levels", c.fit_levels);
  r.get("verify.window_center", c.window_center);
  r.get("verify.window_half", c.window_half);
  r.get("verify.leapfrog_points", c.leapfrog_points);
  r.get("verify.leapfrog_stop", c.leapfrog_stop);
  r.get("output.dir", c.out_dir);
  std::string stages = "all";
  r.get("output.stages", stages);
  c.stages = parse_stages(stages);
  r.get("output.threads", c.threads);
  // unknown keys are typos, not extensions
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError(section + ": keys must sit inside a [section]");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      if (!r.used.count(full)) throw ConfigError(full + ": unknown key");
    }
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const RunConfig& c) {
  std::ostringstream o;
  o.precision(17);
  auto stages = [&] {
    std::string s;
    for (const auto& n : c.stages) s += (s.empty() ? "" : ",") + n;
    return s;
  };
  o << "[surface]\nkind = " << c.kind << "\ncatalog = " << c.catalog << "\nexpression = " << c.expression
    << "\ncantor_depth = " << c.cantor_depth << "\ncantor_epsilon = " << c.cantor_epsilon
    << "\nhalf_width = " << c.half_width << "\ndx = " << c.dx << "\n\n";
  o << "[model]\np = " << c.p << "\nJ = " << c.J << "\n\n";
  o << "[grid]\nn_y = " << c.n_y << "\ny_length = " << c.y_length << "\ny_center = " << c.y_center
    << "\nratio = " << c.ratio << "\nsmin_ratio = " << c.smin_ratio << "\n\n";
  o << "[solver]\ns0 = " << c.s0 << "\ntol = " << c.tol << "\nmax_iter = " << c.max_iter
    << "\nmax_halvings = " << c.max_halvings << "\n\n";
  o << "[verify]\ntolerance = " << c.tolerance << "\nresidual_tolerance = " << c.residual_tolerance
    << "\nx_lo = " << c.x_lo << "\nx_hi = " << c.x_hi << "\nn_x = " << c.n_x << "\ntau0 = " << c.tau0
    << "\nfit_levels = " << c.fit_levels << "\nwindow_center = " << c.window_center
    << "\nwindow_half = " << c.window_half << "\nleapfrog_points = " << c.leapfrog_points
    << "\nleapfrog_stop = " << c.leapfrog_stop << "\n\n";
  o << "[output]\ndir = " << c.out_dir << "\nstages = " << stages() << "\nthreads = " << c.threads << "\n";
  return o.str();
}

}  // namespace blowup
