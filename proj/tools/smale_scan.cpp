// Command line front end:
//   smale_scan <subcommand> --config <path> [--out <dir>] [--threads N]

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "smale/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Conjugate radii, crossing forms and bifurcation on shrinking geodesic balls"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  int threads = 0;

  for (const auto& name : smale::subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "run configuration (section.key = value)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    sub->add_option("--threads", threads, "worker threads (default: $SMALE_SCAN_THREADS or 1)")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : smale::kExitUsage;
  }

  if (threads == 0) {
    threads = 1;
    if (const char* env = std::getenv("SMALE_SCAN_THREADS")) {
      try {
        threads = std::max(1, std::stoi(env));
      } catch (const std::exception&) {
        std::cerr << "ignoring invalid SMALE_SCAN_THREADS='" << env << "'\n";
      }
    }
  }

  const std::string subcommand = app.get_subcommands().front()->get_name();
  return smale::run(subcommand, config_path, threads, out_dir, std::cerr);
}
