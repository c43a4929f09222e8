#include "effdyn/config.hpp"
#include "effdyn/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Effective-dynamics laboratory: mean-field, Gross-Pitaevskii and exact many-body experiments"};
  app.set_version_flag("--version", std::string(effdyn::tool_version));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  int threads = 1;
  bool check_only = false;
  for (const auto& name : effdyn::experiment_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_flag("--check", check_only, "run the invariant checks only; write no data outputs");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : effdyn::exit_config;
  }

  const std::string experiment = app.get_subcommands().front()->get_name();
  const effdyn::RunManifest m = effdyn::run_file(experiment, config_path, {out_dir, threads, check_only});
  for (const auto& c : m.checks)
    std::cout << (c.passed ? "[pass] " : "[FAIL] ") << c.name << ": " << c.detail << "\n";
  for (const auto& [k, v] : m.results) std::cout << k << " = " << v << "\n";
  if (!m.error_kind.empty()) std::cerr << "error (" << m.error_kind << "): " << m.error_message << "\n";
  return m.exit_code;
}
