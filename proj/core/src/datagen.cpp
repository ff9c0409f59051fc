#include "gmpp/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gmpp/errors.hpp"

namespace gmpp {
namespace {

enum Stream : std::uint64_t {
  kScheduleStream = 1,
  kGeneratorStream = 2,
  kSignalStream = 3,
  kNoiseStream = 4,
};

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

namespace counter_rng {

std::uint64_t hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t index,
                   std::uint64_t lane) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ stream);
  h = splitmix(h ^ index);
  return splitmix(h ^ lane);
}

double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index, std::uint64_t lane) {
  const std::uint64_t bits = hash(seed, stream, index, lane) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index, std::uint64_t lane) {
  // Box-Muller on two independent lanes.
  const double u1 = uniform(seed, stream, index, 2 * lane);
  const double u2 = uniform(seed, stream, index, 2 * lane + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace counter_rng

std::size_t SegmentSchedule::segment_of(std::size_t t) const {
  if (t < 1 || t > horizon()) {
    throw ContractError("step " + std::to_string(t) + " outside schedule [1, " +
                        std::to_string(horizon()) + "]");
  }
  auto it = std::upper_bound(boundaries.begin(), boundaries.end(), t);
  return static_cast<std::size_t>(it - boundaries.begin()) - 1;
}

std::size_t SegmentSchedule::switches() const {
  std::size_t count = 0;
  for (std::size_t j = 1; j < generator_ids.size(); ++j) {
    if (generator_ids[j] != generator_ids[j - 1]) ++count;
  }
  return count;
}

SegmentSchedule make_schedule(std::size_t horizon, std::size_t segments, std::size_t pool_size,
                              std::uint64_t seed, bool allow_repeats) {
  if (segments == 0) throw ConfigError("segments must be >= 1");
  if (segments > horizon) {
    throw ConfigError("segments (" + std::to_string(segments) + ") exceed the horizon T (" +
                      std::to_string(horizon) + ")");
  }
  if (pool_size == 0) throw ConfigError("pool_size must be >= 1");
  SegmentSchedule schedule;
  const std::size_t base = horizon / segments;
  const std::size_t extra = horizon % segments;
  std::size_t start = 1;
  schedule.boundaries.push_back(start);
  for (std::size_t j = 0; j < segments; ++j) {
    start += base + (j < extra ? 1 : 0);
    schedule.boundaries.push_back(start);
  }
  const bool distinct = !allow_repeats && pool_size >= 2;
  for (std::size_t j = 0; j < segments; ++j) {
    const std::uint64_t h = counter_rng::hash(seed, kScheduleStream, j, 0);
    std::size_t id;
    if (j == 0 || !distinct) {
      id = h % pool_size;
    } else {
      const std::size_t prev = schedule.generator_ids.back();
      id = h % (pool_size - 1);
      if (id >= prev) ++id;
    }
    schedule.generator_ids.push_back(id);
  }
  return schedule;
}

SignalLaw parse_signal_law(std::string_view name) {
  if (name == "uniform") return SignalLaw::uniform;
  if (name == "gaussian") return SignalLaw::gaussian;
  throw ConfigError("unknown signal law '" + std::string(name) + "' (expected uniform|gaussian)");
}

const char* to_string(SignalLaw law) {
  return law == SignalLaw::uniform ? "uniform" : "gaussian";
}

GeneratorPool make_generator_pool(std::size_t pool_size, std::size_t dims, double noise_std,
                                  SignalLaw law, std::uint64_t seed) {
  if (pool_size == 0) throw ConfigError("pool_size must be >= 1");
  if (dims == 0) throw ConfigError("dims must be >= 1");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw ConfigError("noise_std must be finite and >= 0");
  }
  GeneratorPool pool;
  pool.noise_std = noise_std;
  pool.signal_law = law;
  for (std::size_t s = 0; s < pool_size; ++s) {
    std::vector<double> a(dims);
    for (std::size_t j = 0; j < dims; ++j) {
      a[j] = 2.0 * counter_rng::uniform(seed, kGeneratorStream, s, j) - 1.0;
    }
    pool.weight_vectors.push_back(std::move(a));
  }
  return pool;
}

OutcomeRange default_outcome_range(const GeneratorPool& pool) {
  double norm = 0.0;
  for (const auto& a : pool.weight_vectors) {
    double l1 = 0.0;
    for (double v : a) l1 += std::abs(v);
    norm = std::max(norm, l1);
  }
  double bound = norm + 4.0 * pool.noise_std;
  if (!(bound > 0.0)) bound = 1.0;
  return OutcomeRange(-bound, bound);
}

Observation sample_pair(const GeneratorPool& pool, const SegmentSchedule& schedule, std::size_t t,
                        std::uint64_t seed) {
  const auto& a = pool.weight_vectors.at(schedule.generator_at(t));
  Observation obs;
  obs.signal.resize(a.size());
  double y = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double x = pool.signal_law == SignalLaw::uniform
                         ? 2.0 * counter_rng::uniform(seed, kSignalStream, t, j) - 1.0
                         : counter_rng::normal(seed, kSignalStream, t, j);
    obs.signal[j] = x;
    y += a[j] * x;
  }
  if (pool.noise_std > 0.0) {
    y += pool.noise_std * counter_rng::normal(seed, kNoiseStream, t, 0);
  }
  obs.response = y;
  return obs;
}

std::vector<Observation> generate_stream(const GeneratorPool& pool,
                                         const SegmentSchedule& schedule, std::uint64_t seed) {
  std::vector<Observation> stream;
  stream.reserve(schedule.horizon());
  for (std::size_t t = 1; t <= schedule.horizon(); ++t) {
    stream.push_back(sample_pair(pool, schedule, t, seed));
  }
  return stream;
}

}  // namespace gmpp
