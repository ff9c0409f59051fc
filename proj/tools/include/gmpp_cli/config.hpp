#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gmpp/datagen.hpp"
#include "gmpp/engine.hpp"
#include "gmpp/evaluation.hpp"

namespace gmpp::cli {

// Flat key=value run configuration. Every field has a default; see
// configs/default.cfg for the documented keys.
struct RunConfig {
  // datagen
  std::size_t horizon = 1000;  // T
  std::size_t segments = 10;
  std::size_t pool_size = 4;
  double noise_std = 1.0;
  SignalLaw signal_law = SignalLaw::uniform;
  std::size_t dims = 3;
  std::uint64_t seed = 1;
  bool allow_repeats = false;

  // engine
  std::string scheme = "gmpp";  // exponential | fixed_share | gmpp
  double alpha = 0.01;          // fixed_share only
  std::optional<double> eta;
  std::optional<double> range_lower;
  std::optional<double> range_upper;
  std::size_t window = 20;
  double ridge_sigma = 0.01;
  bool fit_intercept = false;
  std::optional<std::size_t> max_experts;
  std::size_t top_k = 1;

  // evaluation
  Eligibility eligibility = Eligibility::initialized_before_segment;

  // i/o
  std::filesystem::path out_dir = ".";
  std::optional<std::filesystem::path> stream_csv;
  bool export_stream = false;

  // sweep and verify
  std::vector<std::size_t> horizons;
  std::size_t verify_horizon = 100;
  std::size_t verify_universe = 10000;

  // Keys set explicitly in the file, in file order.
  std::vector<std::pair<std::string, std::string>> explicit_keys;

  MixingScheme mixing_scheme() const;
};

// Throws ConfigError on unknown keys, duplicates, malformed values or lines.
RunConfig parse_config(const std::string& text);
// Throws ConfigError when the file cannot be read or parsed.
RunConfig load_config(const std::filesystem::path& path);

// Checks everything that can be checked before touching the stream.
void validate(const RunConfig& config);

// Everything derived from a config: the stream, the schedule used by the
// oracle, the generator pool (when synthetic) and the engine settings.
struct Experiment {
  SegmentSchedule schedule;
  std::optional<GeneratorPool> pool;
  std::vector<Observation> stream;
  EngineConfig engine;
};

// Throws ConfigError or std::runtime_error (I/O) on failure.
Experiment prepare(const RunConfig& config);

// Stream CSV with header t,x_1..x_n,y.
std::string format_stream_csv(std::span<const Observation> stream);
std::vector<Observation> parse_stream_csv(const std::string& text, std::size_t dims);

// Shortest round-trip decimal form.
std::string format_double(double value);

}  // namespace gmpp::cli
