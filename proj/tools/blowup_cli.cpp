// Command line front end: reads a run config, runs the selected stages and
// prints the manifest summary. The exit status is the manifest's code.

#include "blowup/config.hpp"
#include "blowup/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Blowup-surface solver for u_tt - u_xx = c |u|^p u"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir;
  std::vector<std::string> stages;
  int threads = -1;
  auto add_flags = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run config (INI sections)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides [output] dir)");
    sub->add_option("--threads", threads, "worker cap, 0 = hardware")->check(CLI::NonNegativeNumber);
  };
  CLI::App* run = app.add_subcommand("run", "run the configured stages");
  add_flags(run);
  run->add_option("--stage", stages, "restrict to these stages (repeatable)");
  for (const auto& name : blowup::stage_names()) add_flags(app.add_subcommand(name, "run the " + name + " stage"));
  add_flags(app.add_subcommand("cantor", "Cantor demo: the configured surface is replaced by [surface] cantor_*"));
  CLI11_PARSE(app, argc, argv);

  blowup::RunConfig cfg;
  try {
    cfg = blowup::load_config(config_path);
    const std::string sub = app.get_subcommands().front()->get_name();
    if (sub == "cantor") {
      cfg.kind = "cantor";
    } else if (sub != "run") {
      cfg.stages = {sub};
    } else if (!stages.empty()) {
      std::string joined;
      for (const auto& s : stages) joined += (joined.empty() ? "" : ",") + s;
      cfg.stages = blowup::parse_stages(joined);
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (threads >= 0) cfg.threads = threads;
    cfg.validate();
  } catch (const blowup::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return blowup::kExitConfig;
  }

  const blowup::RunManifest m = blowup::run_pipeline(cfg);
  for (const auto& c : m.checks)
    std::printf("%-34s %-4s %.3e (limit %.1e)\n", c.name.c_str(), c.pass ? "ok" : "FAIL", c.value, c.limit);
  for (const auto& w : m.warnings) std::printf("warning: %s\n", w.c_str());
  if (!m.error.empty()) std::fprintf(stderr, "error: %s\n", m.error.c_str());
  std::printf("manifest: %s/manifest.json (exit %d)\n", cfg.out_dir.c_str(), m.exit_code);
  return m.exit_code;
}
