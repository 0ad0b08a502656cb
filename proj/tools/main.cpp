#include <CLI11.hpp>
#include <iostream>

#include "config.hpp"
#include "runner.hpp"

using namespace cusplab::cli;

namespace {

struct Overrides {
  std::string config;
  std::string seed, workers, out, select;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "INI configuration file")->envname("CUSPLAB_CONFIG")->required();
  cmd->add_option("--seed", o.seed, "base seed")->envname("CUSPLAB_SEED");
  cmd->add_option("--workers", o.workers, "worker threads")->envname("CUSPLAB_WORKERS");
  cmd->add_option("--out", o.out, "output directory")->envname("CUSPLAB_OUT");
  cmd->add_option("--select", o.select, "comma separated experiments or all")->envname("CUSPLAB_SELECT");
}

// Loads the file, applies overrides and checks ranges; prints every issue.
bool resolve(const Overrides& o, RunConfig& cfg) {
  std::vector<ConfigIssue> issues = parse_config_file(o.config, cfg);
  const std::pair<const char*, const std::string*> flags[] = {
      {"seed", &o.seed}, {"workers", &o.workers}, {"out", &o.out}, {"select", &o.select}};
  for (const auto& [key, value] : flags)
    if (!value->empty()) {
      auto more = set_knob(cfg, "run", key, *value);
      issues.insert(issues.end(), more.begin(), more.end());
    }
  if (issues.empty()) issues = check_config(cfg);
  for (const ConfigIssue& i : issues) std::cerr << "schema error: " << i.key << ": " << i.message << "\n";
  return issues.empty();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cusplab experiment runner"};
  app.require_subcommand(1);
  Overrides runOpts, validateOpts;
  CLI::App* runCmd = app.add_subcommand("run", "run the selected experiments");
  add_common(runCmd, runOpts);
  CLI::App* validateCmd = app.add_subcommand("validate", "check a configuration without running it");
  add_common(validateCmd, validateOpts);
  bool listKnobs = false;
  validateCmd->add_flag("--knobs", listKnobs, "also list every knob with its range");
  CLI11_PARSE(app, argc, argv);

  if (*validateCmd) {
    RunConfig cfg;
    if (!resolve(validateOpts, cfg)) return 2;
    std::cout << echo_config(cfg);
    if (listKnobs)
      for (const KnobInfo& k : knob_catalog())
        std::cout << "# " << k.section << "." << k.key << " " << k.range << " " << k.doc << "\n";
    try {
      std::cout << derived_constants(cfg);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
    return 0;
  }

  RunConfig cfg;
  if (!resolve(runOpts, cfg)) return 2;
  RunResult res = run(cfg, std::cerr);
  for (const std::string& f : res.files) std::cout << cfg.out << "/" << f << "\n";
  return res.status;
}
