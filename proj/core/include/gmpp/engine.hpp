#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gmpp/experts.hpp"
#include "gmpp/mixable_loss.hpp"
#include "gmpp/weight_state.hpp"

namespace gmpp {

struct EngineConfig {
  EngineConfig(OutcomeRange range, std::size_t dims) : range(range), dims(dims) {}

  OutcomeRange range;
  std::size_t dims;
  // Learning rate; defaults to the mixability limit 2/(b-a)^2.
  std::optional<double> eta;
  ExpertSettings experts;
  MixingScheme scheme = MixingScheme::gmpp();
  // Stop creating experts once this many exist.
  std::optional<std::size_t> max_experts;
  // Number of heaviest weights kept in each StepRecord.
  std::size_t top_k = 1;
  // Keep per-expert forecasts and losses in every StepRecord. Needed by the
  // ledger and the composite oracle; costs O(T^2) memory.
  bool record_expert_detail = true;

  double learning_rate() const { return eta.value_or(range.max_eta()); }

  // Throws ConfigError when eta, h, sigma or dims are out of range.
  void validate() const;
};

struct StepRecord {
  std::size_t t = 0;
  std::vector<double> signal;
  double gamma = 0.0;
  double y = 0.0;      // outcome after clamping to [a,b]
  double raw_y = 0.0;  // outcome as received
  bool clamped = false;
  double predictor_loss = 0.0;  // h_t
  double mixloss = 0.0;         // m_t
  double cumulative_predictor_loss = 0.0;  // H_t
  double cumulative_mixloss = 0.0;         // M_t
  // Clamped forecasts f_{i,t} and losses l_{i,t} for initialized experts i <= t.
  std::vector<double> forecasts;
  std::vector<double> expert_losses;
  // Heaviest weights of w_{t+1} and the mass of uninitialized experts.
  std::vector<std::pair<ExpertId, double>> top_weights;
  double tail_mass = 0.0;
  // |total mass of w_{t+1} - 1|.
  double mass_error = 0.0;
  std::size_t initialized_experts = 0;

  std::size_t initialized() const { return initialized_experts; }
  bool has_expert_detail() const { return expert_losses.size() == initialized_experts; }
  // l_{i,t}; uninitialized experts take the predictor's loss.
  double expert_loss(ExpertId i) const {
    return i <= expert_losses.size() ? expert_losses[i - 1] : predictor_loss;
  }
};

inline constexpr double kMixlossTolerance = 1e-10;
inline constexpr double kMassTolerance = 1e-12;

// Sequential GMPP learner: predict(x_t) and observe(y_t) must alternate.
class Engine {
 public:
  // keep_posterior retains a copy of w~_t for last_posterior().
  explicit Engine(EngineConfig config, bool keep_posterior = false);

  // Initializes expert t (unless capped), evaluates the initialized experts
  // on x and returns the substitution forecast over the normalized weights of
  // the initialized experts.
  double predict(std::span<const double> x);

  // Computes the losses, the mixloss over the full expert set, and applies
  // the Loss and Mixing Updates. Throws ProtocolError without a pending
  // prediction.
  const StepRecord& observe(double y);

  const EngineConfig& config() const { return config_; }
  double eta() const { return eta_; }
  std::size_t steps_completed() const { return records_.size(); }
  const WeightState& weights() const { return state_; }
  // Loss-updated weights w~_t of the most recent step (requires keep_posterior).
  const WeightState& last_posterior() const;
  std::span<const LinearExpert> experts() const { return experts_; }
  std::span<const StepRecord> records() const { return records_; }
  // Moves the records out; the engine must not be stepped afterwards.
  std::vector<StepRecord> release_records() { return std::move(records_); }
  std::span<const double> pending_forecasts() const { return forecasts_; }

  std::size_t clamp_count() const { return clamp_count_; }
  // Steps at which h_t > m_t + kMixlossTolerance.
  std::size_t mixloss_violations() const { return mixloss_violations_; }
  // Steps at which the weight mass drifted by more than kMassTolerance.
  std::size_t mass_violations() const { return mass_violations_; }

 private:
  EngineConfig config_;
  bool keep_posterior_;
  double eta_;
  WeightState state_;
  WeightState posterior_;
  std::optional<PosteriorHistory> history_;
  std::vector<LinearExpert> experts_;
  std::vector<Observation> observed_;
  std::vector<StepRecord> records_;

  bool pending_ = false;
  std::vector<double> signal_;
  std::vector<double> forecasts_;
  std::vector<double> auxiliary_;
  std::vector<double> losses_;
  double gamma_ = 0.0;

  double cumulative_h_ = 0.0;
  double cumulative_m_ = 0.0;
  std::size_t clamp_count_ = 0;
  std::size_t mixloss_violations_ = 0;
  std::size_t mass_violations_ = 0;
};

struct RunResult {
  std::vector<StepRecord> records;
  std::size_t clamp_count = 0;
  std::size_t mixloss_violations = 0;
  std::size_t mass_violations = 0;
  std::size_t experts_created = 0;
};

// Drives predict/observe over the stream. Throws ContractError on an empty
// stream or inconsistent signal dimensions.
RunResult run(const EngineConfig& config, std::span<const Observation> stream);

}  // namespace gmpp
