#include <spdlog/spdlog.h>

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pocketgen/commands.hpp"

int main(int argc, char** argv) {
  using namespace pocketgen;

  CLI::App app{"pocketgen: pocket-conditioned ligand generation"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> assignments;
  std::int64_t seed = 0;
  std::string out_dir;
  bool quiet = false;
  bool show_config = false;

  for (auto name : command_names()) {
    auto* sub = app.add_subcommand(std::string(name));
    sub->add_option("-c,--config", config_path, "JSON config file");
    sub->add_option("-s,--set", assignments, "override a config key (key=value), repeatable");
    sub->add_option("--seed", seed, "global seed");
    sub->add_option("-o,--out-dir", out_dir, "output directory");
    sub->add_flag("-q,--quiet", quiet, "only warnings and errors on stderr");
    sub->add_flag("--show-config", show_config, "print the effective config and exit");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  spdlog::set_pattern("[%H:%M:%S] %v");
  spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);

  const std::string cmd = app.get_subcommands().front()->get_name();
  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg.load_json_file(config_path);
    for (const auto& a : assignments) cfg.set_assignment(a);
    auto* sub = app.get_subcommand(cmd);
    if (sub->count("--seed")) cfg.set("seed", std::to_string(seed));
    if (sub->count("--out-dir")) cfg.set("out_dir", out_dir);
  } catch (const std::exception& e) {
    std::cerr << cmd << ": " << e.what() << "\n";
    return exit_code_for(e);
  }
  if (show_config) {
    std::cout << cfg.to_json() << "\n";
    return kExitOk;
  }
  return run_command(cmd, cfg, std::cout, std::cerr);
}
