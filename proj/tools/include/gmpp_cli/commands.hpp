#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gmpp_cli/config.hpp"

namespace gmpp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInvariant = 2;

// Test hooks for cmd_verify.
struct VerifyHooks {
  // Called after step t with the analytic engine's weights of experts
  // 1..universe, before they are compared with the reference engine.
  std::function<void(std::size_t t, std::vector<double>& weights)> tamper_weights;
};

struct CommandOptions {
  std::optional<std::filesystem::path> out_dir;  // overrides out_dir
  std::optional<std::uint64_t> seed;             // overrides seed
  std::ostream* out = nullptr;                   // defaults to std::cout
  std::ostream* err = nullptr;                   // defaults to std::cerr
  VerifyHooks hooks;
};

// Headline numbers of one run, as written to report.json.
struct RunSummary {
  std::size_t horizon = 0;
  double eta = 0.0;
  double predictor_total = 0.0;   // H_T
  double mixloss_total = 0.0;     // M_T
  double comparator_total = 0.0;  // L_T(E) under the configured eligibility
  std::size_t switches = 0;       // k of the composite expert
  std::optional<double> bound_verbatim;
  std::optional<double> bound_recomputed;
  std::size_t clamp_count = 0;
  bool invariants_passed = true;
};

// Runs one experiment and writes trace.csv, report.json and optionally
// stream.csv into out_dir. Throws on configuration or I/O errors.
RunSummary execute_run(const RunConfig& config, const std::filesystem::path& out_dir);

// One line of the verify table.
struct CheckResult {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool passed = true;
  std::string detail;
};

// Runs the analytic engine against the truncated-universe engine for
// verify_horizon steps and evaluates every inequality check.
std::vector<CheckResult> run_verification(const RunConfig& config, const VerifyHooks& hooks = {});

int cmd_run(const std::filesystem::path& config_path, const CommandOptions& options = {});
int cmd_verify(const std::filesystem::path& config_path, const CommandOptions& options = {});
int cmd_sweep(const std::filesystem::path& config_path, const CommandOptions& options = {});

// Writes via a temporary file in the same directory and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace gmpp::cli
