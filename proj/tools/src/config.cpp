#include "gmpp_cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <system_error>

#include "gmpp/errors.hpp"

namespace gmpp::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
  throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(value) +
                    "' as " + std::string(want));
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
    bad_value(key, v, "a finite number");
  }
  return out;
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v, "an unsigned integer");
  return out;
}

std::size_t parse_size(std::string_view key, std::string_view v) {
  return static_cast<std::size_t>(parse_u64(key, v));
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"T", [](RunConfig& c, auto k, auto v) { c.horizon = parse_size(k, v); }},
      {"segments", [](RunConfig& c, auto k, auto v) { c.segments = parse_size(k, v); }},
      {"pool_size", [](RunConfig& c, auto k, auto v) { c.pool_size = parse_size(k, v); }},
      {"noise_std", [](RunConfig& c, auto k, auto v) { c.noise_std = parse_double(k, v); }},
      {"signal_law", [](RunConfig& c, auto, auto v) { c.signal_law = parse_signal_law(v); }},
      {"dims", [](RunConfig& c, auto k, auto v) { c.dims = parse_size(k, v); }},
      {"seed", [](RunConfig& c, auto k, auto v) { c.seed = parse_u64(k, v); }},
      {"allow_repeats", [](RunConfig& c, auto k, auto v) { c.allow_repeats = parse_bool(k, v); }},
      {"scheme",
       [](RunConfig& c, auto k, auto v) {
         if (v != "exponential" && v != "fixed_share" && v != "gmpp") {
           bad_value(k, v, "one of exponential, fixed_share, gmpp");
         }
         c.scheme = std::string(v);
       }},
      {"alpha", [](RunConfig& c, auto k, auto v) { c.alpha = parse_double(k, v); }},
      {"eta", [](RunConfig& c, auto k, auto v) { c.eta = parse_double(k, v); }},
      {"range_lower", [](RunConfig& c, auto k, auto v) { c.range_lower = parse_double(k, v); }},
      {"range_upper", [](RunConfig& c, auto k, auto v) { c.range_upper = parse_double(k, v); }},
      {"window", [](RunConfig& c, auto k, auto v) { c.window = parse_size(k, v); }},
      {"ridge_sigma", [](RunConfig& c, auto k, auto v) { c.ridge_sigma = parse_double(k, v); }},
      {"fit_intercept", [](RunConfig& c, auto k, auto v) { c.fit_intercept = parse_bool(k, v); }},
      {"max_experts", [](RunConfig& c, auto k, auto v) { c.max_experts = parse_size(k, v); }},
      {"top_k", [](RunConfig& c, auto k, auto v) { c.top_k = parse_size(k, v); }},
      {"eligibility", [](RunConfig& c, auto, auto v) { c.eligibility = parse_eligibility(v); }},
      {"out_dir", [](RunConfig& c, auto, auto v) { c.out_dir = std::string(v); }},
      {"stream_csv", [](RunConfig& c, auto, auto v) { c.stream_csv = std::string(v); }},
      {"export_stream", [](RunConfig& c, auto k, auto v) { c.export_stream = parse_bool(k, v); }},
      {"horizons",
       [](RunConfig& c, auto k, auto v) {
         c.horizons.clear();
         std::size_t pos = 0;
         while (pos <= v.size()) {
           const auto comma = std::min(v.find(',', pos), v.size());
           c.horizons.push_back(parse_size(k, trim(v.substr(pos, comma - pos))));
           pos = comma + 1;
         }
       }},
      {"verify_horizon", [](RunConfig& c, auto k, auto v) { c.verify_horizon = parse_size(k, v); }},
      {"verify_universe",
       [](RunConfig& c, auto k, auto v) { c.verify_universe = parse_size(k, v); }},
  };
  return table;
}

}  // namespace

MixingScheme RunConfig::mixing_scheme() const {
  if (scheme == "exponential") return MixingScheme::exponential();
  if (scheme == "fixed_share") return MixingScheme::fixed_share(alpha);
  return MixingScheme::gmpp();
}

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" +
                        std::string(key) + "'");
    }
    const bool seen = std::any_of(config.explicit_keys.begin(), config.explicit_keys.end(),
                                  [&](const auto& kv) { return kv.first == key; });
    if (seen) throw ConfigError("config key '" + std::string(key) + "' given twice");
    if (value.empty()) throw ConfigError("config key '" + std::string(key) + "' has no value");
    it->second(config, key, value);
    config.explicit_keys.emplace_back(std::string(key), std::string(value));
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  RunConfig config = parse_config(buffer.str());
  if (config.stream_csv && config.stream_csv->is_relative()) {
    config.stream_csv = path.parent_path() / *config.stream_csv;
  }
  return config;
}

namespace {

bool is_explicit(const RunConfig& c, std::string_view key) {
  return std::any_of(c.explicit_keys.begin(), c.explicit_keys.end(),
                     [&](const auto& kv) { return kv.first == key; });
}

}  // namespace

void validate(const RunConfig& c) {
  if (c.horizon == 0 && !c.stream_csv) throw ConfigError("T must be positive");
  if (c.dims == 0) throw ConfigError("dims must be positive");
  if (c.segments == 0) throw ConfigError("segments must be positive");
  if (!c.stream_csv && c.segments > c.horizon) {
    throw ConfigError("segments (" + std::to_string(c.segments) + ") exceeds T (" +
                      std::to_string(c.horizon) + ")");
  }
  if (c.pool_size == 0) throw ConfigError("pool_size must be positive");
  if (!(c.noise_std >= 0.0)) throw ConfigError("noise_std must be nonnegative");
  if (c.scheme == "fixed_share" && !(c.alpha >= 0.0 && c.alpha <= 1.0)) {
    throw ConfigError("alpha must lie in [0, 1]");
  }
  if (c.range_lower.has_value() != c.range_upper.has_value()) {
    throw ConfigError("range_lower and range_upper must be given together");
  }
  if (c.range_lower) OutcomeRange(*c.range_lower, *c.range_upper);
  if (c.stream_csv && !c.range_lower) {
    throw ConfigError("an imported stream needs range_lower and range_upper");
  }
  if (c.eta && !(*c.eta > 0.0)) throw ConfigError("eta must be positive");
  if (c.eta && c.range_lower) check_mixable_eta(*c.eta, OutcomeRange(*c.range_lower, *c.range_upper));
  if (c.window == 0) throw ConfigError("window must be positive");
  if (!(c.ridge_sigma > 0.0)) throw ConfigError("ridge_sigma must be positive");
  if (c.max_experts && *c.max_experts == 0) throw ConfigError("max_experts must be positive");
  if (c.verify_horizon == 0 || c.verify_horizon > 100) {
    throw ConfigError("verify_horizon must lie in [1, 100]");
  }
  if (c.verify_universe < c.verify_horizon) {
    throw ConfigError("verify_universe must be at least verify_horizon");
  }
  for (std::size_t i = 0; i < c.horizons.size(); ++i) {
    if (c.horizons[i] < c.segments) throw ConfigError("every horizon must be at least segments");
    if (i > 0 && c.horizons[i] <= c.horizons[i - 1]) {
      throw ConfigError("horizons must be strictly increasing");
    }
  }
  if (c.stream_csv && !c.horizons.empty()) {
    throw ConfigError("horizons cannot be combined with an imported stream");
  }
}

Experiment prepare(const RunConfig& c) {
  validate(c);
  std::optional<GeneratorPool> pool;
  std::vector<Observation> stream;
  std::size_t horizon = c.horizon;
  if (c.stream_csv) {
    std::ifstream in(*c.stream_csv, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read stream file '" + c.stream_csv->string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    stream = parse_stream_csv(buffer.str(), c.dims);
    if (is_explicit(c, "T") && stream.size() != c.horizon) {
      throw ConfigError("T = " + std::to_string(c.horizon) + " but the stream has " +
                        std::to_string(stream.size()) + " rows");
    }
    horizon = stream.size();
    if (c.segments > horizon) throw ConfigError("segments exceeds the stream length");
  } else {
    pool = make_generator_pool(c.pool_size, c.dims, c.noise_std, c.signal_law, c.seed);
  }
  SegmentSchedule schedule =
      make_schedule(horizon, c.segments, c.pool_size, c.seed, c.allow_repeats);
  if (pool) stream = generate_stream(*pool, schedule, c.seed);

  const OutcomeRange range = c.range_lower ? OutcomeRange(*c.range_lower, *c.range_upper)
                                           : default_outcome_range(*pool);
  EngineConfig engine(range, c.dims);
  engine.eta = c.eta;
  engine.experts.window = c.window;
  engine.experts.ridge_sigma = c.ridge_sigma;
  engine.experts.fit_intercept = c.fit_intercept;
  engine.scheme = c.mixing_scheme();
  engine.max_experts = c.max_experts;
  engine.top_k = std::max<std::size_t>(c.top_k, 1);
  engine.validate();
  return Experiment{std::move(schedule), std::move(pool), std::move(stream), std::move(engine)};
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw std::runtime_error("cannot format double");
  return std::string(buf, ptr);
}

std::string format_stream_csv(std::span<const Observation> stream) {
  std::string out = "t";
  const std::size_t dims = stream.empty() ? 0 : stream.front().signal.size();
  for (std::size_t j = 1; j <= dims; ++j) out += ",x_" + std::to_string(j);
  out += ",y\n";
  for (std::size_t t = 0; t < stream.size(); ++t) {
    out += std::to_string(t + 1);
    for (double x : stream[t].signal) out += "," + format_double(x);
    out += "," + format_double(stream[t].response) + "\n";
  }
  return out;
}

std::vector<Observation> parse_stream_csv(const std::string& text, std::size_t dims) {
  std::istringstream in(text);
  std::string line;
  std::string expected = "t";
  for (std::size_t j = 1; j <= dims; ++j) expected += ",x_" + std::to_string(j);
  expected += ",y";
  if (!std::getline(in, line) || trim(line) != expected) {
    throw ConfigError("stream CSV header must be '" + expected + "'");
  }
  std::vector<Observation> stream;
  while (std::getline(in, line)) {
    const auto row = trim(line);
    if (row.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (pos <= row.size()) {
      const auto comma = std::min(row.find(',', pos), row.size());
      fields.push_back(trim(row.substr(pos, comma - pos)));
      pos = comma + 1;
    }
    const std::string where = "stream CSV row " + std::to_string(stream.size() + 1);
    if (fields.size() != dims + 2) throw ConfigError(where + ": expected " + std::to_string(dims + 2) + " fields");
    if (parse_u64(where, fields[0]) != stream.size() + 1) {
      throw ConfigError(where + ": t must count up from 1");
    }
    Observation obs;
    for (std::size_t j = 0; j < dims; ++j) obs.signal.push_back(parse_double(where, fields[j + 1]));
    obs.response = parse_double(where, fields[dims + 1]);
    stream.push_back(std::move(obs));
  }
  if (stream.empty()) throw ConfigError("stream CSV has no rows");
  return stream;
}

}  // namespace gmpp::cli
