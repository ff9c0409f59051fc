#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gmpp_cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"gmpp: tracking regression experts with a growing expert pool"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string out_dir;
  std::uint64_t seed = 0;
  app.add_option("--out", out_dir, "Output directory (overrides out_dir)");
  app.add_option("--seed", seed, "Random seed (overrides seed)");

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run one experiment and write trace.csv and report.json");
  run->add_option("config", config_path, "Config file")->required();
  auto* verify = app.add_subcommand("verify", "Check the engine against the truncated reference");
  verify->add_option("config", config_path, "Config file")->required();
  auto* sweep = app.add_subcommand("sweep", "Run every horizon and write summary.csv");
  sweep->add_option("config", config_path, "Config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : gmpp::cli::kExitError;
  }

  gmpp::cli::CommandOptions options;
  if (app.count("--out") > 0) options.out_dir = out_dir;
  if (app.count("--seed") > 0) options.seed = seed;

  if (*run) return gmpp::cli::cmd_run(config_path, options);
  if (*verify) return gmpp::cli::cmd_verify(config_path, options);
  return gmpp::cli::cmd_sweep(config_path, options);
}
