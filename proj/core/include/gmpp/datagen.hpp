#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "gmpp/experts.hpp"
#include "gmpp/mixable_loss.hpp"

namespace gmpp {

// Partition of steps 1..T into consecutive segments, each driven by one
// generator. boundaries = {t_0 = 1 < t_1 < ... < t_k = T + 1}.
struct SegmentSchedule {
  std::vector<std::size_t> boundaries;
  std::vector<std::size_t> generator_ids;  // one per segment, 0-based

  std::size_t horizon() const { return boundaries.back() - 1; }
  std::size_t segment_count() const { return generator_ids.size(); }
  // 0-based segment holding step t (1-based).
  std::size_t segment_of(std::size_t t) const;
  std::size_t generator_at(std::size_t t) const { return generator_ids[segment_of(t)]; }
  // Number of segment starts at which the generator changes.
  std::size_t switches() const;
};

// Equal-length segments (the first T mod segments get one extra step) with
// generator ids drawn from `seed`. Unless allow_repeats, adjacent segments use
// different generators whenever pool_size >= 2. Throws ConfigError when
// segments is 0 or exceeds T, or pool_size is 0.
SegmentSchedule make_schedule(std::size_t horizon, std::size_t segments, std::size_t pool_size,
                              std::uint64_t seed, bool allow_repeats = false);

enum class SignalLaw { uniform, gaussian };

SignalLaw parse_signal_law(std::string_view name);
const char* to_string(SignalLaw law);

// Linear response generators y = (a_s . x) + noise_std * eps.
struct GeneratorPool {
  std::vector<std::vector<double>> weight_vectors;
  double noise_std = 1.0;
  SignalLaw signal_law = SignalLaw::uniform;

  std::size_t dims() const { return weight_vectors.front().size(); }
};

// Weight vectors with coordinates uniform on [-1, 1], drawn from `seed`.
GeneratorPool make_generator_pool(std::size_t pool_size, std::size_t dims, double noise_std,
                                  SignalLaw law, std::uint64_t seed);

// [a, b] = +/-(max_s ||a_s||_1 + 4 noise_std).
OutcomeRange default_outcome_range(const GeneratorPool& pool);

// Counter-based: the pair at step t depends only on (seed, t), so streams can
// be sampled in any order.
Observation sample_pair(const GeneratorPool& pool, const SegmentSchedule& schedule, std::size_t t,
                        std::uint64_t seed);

std::vector<Observation> generate_stream(const GeneratorPool& pool,
                                         const SegmentSchedule& schedule, std::uint64_t seed);

// Deterministic uniform and normal draws keyed by (seed, stream, index, lane).
namespace counter_rng {
std::uint64_t hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t index,
                   std::uint64_t lane);
// Uniform on the open interval (0, 1).
double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index, std::uint64_t lane);
double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index, std::uint64_t lane);
}  // namespace counter_rng

}  // namespace gmpp
