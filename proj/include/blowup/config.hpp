#pragma once

// Run configuration: a sectioned key = value file read with
// Boost.PropertyTree's INI parser, then range-checked.

#include <stdexcept>
#include <string>
#include <vector>

namespace blowup {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"map", "parametrix", "kernel-selftest", "solve", "verify"};
  return names;
}

struct RunConfig {
  // [surface]
  std::string kind = "catalog";  // catalog | expression | cantor
  std::string catalog = "flat:1";
  std::string expression;
  int cantor_depth = 2;
  double cantor_epsilon = 0.02;
  double half_width = 16.0;
  double dx = 1e-3;
  // [model]
  double p = 3.0;
  int J = 9;
  // [grid]
  int n_y = 128;
  double y_length = 16.0;
  double y_center = 0.0;
  double ratio = 1.1;
  double smin_ratio = 256.0;
  // [solver]
  double s0 = 0.25;
  double tol = 1e-11;
  int max_iter = 40;
  int max_halvings = 6;
  // [verify]
  double tolerance = 1e-3;
  double residual_tolerance = 1e-4;
  double x_lo = -1.0;
  double x_hi = 1.0;
  int n_x = 41;
  double tau0 = 0.02;
  int fit_levels = 6;
  double window_center = 0.0;
  double window_half = 0.5;
  int leapfrog_points = 1001;
  double leapfrog_stop = 0.5;
  // [output]
  std::string out_dir = "out";
  std::vector<std::string> stages = stage_names();
  int threads = 0;

  bool has_stage(const std::string& s) const;
  /// Range checks; throws ConfigError naming the field and its range.
  void validate() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Canonical text of a config; parse_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& c);
/// "all" or a comma-separated list of stage names.
std::vector<std::string> parse_stages(const std::string& text);

}  // namespace blowup
