#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"  // vendored single-header CLI parser

#include "todasurf/errors.hpp"
#include "todasurf/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "Config-driven batch runner: builds a Toda model, sweeps a (z, zbar) "
      "grid, emits the fundamental-form CSV, the immersion CSV, and a JSON "
      "verification report."};
  std::string config_path;
  std::vector<std::string> overrides;
  bool quiet = false;
  bool check_only = false;
  app.add_option("--config", config_path, "Path to the run configuration file")
      ->required();
  app.add_option("--override", overrides,
                 "Config override of the form section.key=value (repeatable)");
  app.add_flag("--quiet", quiet, "Suppress the stdout summary");
  app.add_flag("--check-only", check_only,
               "Run the verification checks without CSV emission");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    todasurf::RawConfig raw = todasurf::load_ini(config_path);
    for (const std::string& o : overrides) todasurf::apply_override(raw, o);
    todasurf::RunConfig cfg = todasurf::make_run_config(raw);

    // A relative grid-file path is resolved against the config file's directory
    // when it exists there; output paths stay relative to the working directory.
    if (cfg.kind == todasurf::SolutionKind::grid_file) {
      std::filesystem::path f{cfg.file};
      if (f.is_relative()) {
        std::filesystem::path beside =
            std::filesystem::path(config_path).parent_path() / f;
        if (std::filesystem::exists(beside)) cfg.file = beside.string();
      }
    }

    todasurf::RunOptions options;
    options.check_only = check_only;
    options.quiet = quiet;
    todasurf::RunOutcome outcome = todasurf::run_batch(cfg, options);
    if (!quiet) std::cout << outcome.summary;
    return outcome.exit_code;
  } catch (const todasurf::ParseError& e) {
    std::cerr << "config error";
    if (e.line > 0) {
      std::cerr << " at line " << e.line;
      if (e.column > 0) std::cerr << ", column " << e.column;
    }
    std::cerr << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
