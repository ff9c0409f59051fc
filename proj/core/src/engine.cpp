#include "gmpp/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gmpp/errors.hpp"

namespace gmpp {

void EngineConfig::validate() const {
  if (dims == 0) throw ConfigError("signal dimension must be >= 1");
  check_mixable_eta(learning_rate(), range);
  experts.validate();
  if (max_experts && *max_experts == 0) throw ConfigError("max_experts must be >= 1");
}

Engine::Engine(EngineConfig config, bool keep_posterior)
    : config_(std::move(config)), keep_posterior_(keep_posterior) {
  config_.validate();
  eta_ = config_.learning_rate();
  if (config_.scheme.kind() == MixingScheme::Kind::general) {
    history_.emplace();
  }
}

namespace {

// Heaviest k weights, ties to the smaller id.
std::vector<std::pair<ExpertId, double>> top_weights(std::span<const double> w, std::size_t k) {
  std::vector<std::pair<ExpertId, double>> top;
  if (k == 0) return top;
  top.reserve(k + 1);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (top.size() == k && !(w[i] > top.back().second)) continue;
    auto pos = std::find_if(top.begin(), top.end(),
                            [&](const auto& e) { return w[i] > e.second; });
    top.insert(pos, {static_cast<ExpertId>(i + 1), w[i]});
    if (top.size() > k) top.pop_back();
  }
  return top;
}

}  // namespace

const WeightState& Engine::last_posterior() const {
  if (!keep_posterior_) throw ContractError("engine was built without keep_posterior");
  return posterior_;
}

double Engine::predict(std::span<const double> x) {
  if (pending_) throw ProtocolError("predict called twice without observe");
  if (x.size() != config_.dims) {
    throw ContractError("signal has dimension " + std::to_string(x.size()) + ", expected " +
                        std::to_string(config_.dims));
  }
  const std::size_t t = records_.size() + 1;
  if (!config_.max_experts || experts_.size() < *config_.max_experts) {
    const ExpertId id = experts_.size() + 1;
    state_.materialize(id);
    experts_.push_back(init_expert(observed_, t, config_.dims, config_.experts));
  }
  signal_.assign(x.begin(), x.end());
  forecasts_.resize(experts_.size());
  for (std::size_t i = 0; i < experts_.size(); ++i) {
    forecasts_[i] = config_.range.clamp(experts_[i].predict(x));
  }
  // Uninitialized experts forecast gamma itself, so substitution over the
  // normalized initialized weights w^p is the fixed point over the full set.
  const auto w = state_.weights();
  const double mass = state_.initialized_mass();
  if (!(mass > 0.0)) throw ContractError("initialized experts carry zero mass");
  auxiliary_.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) auxiliary_[i] = w[i] / mass;
  gamma_ = substitute(forecasts_, auxiliary_, eta_, config_.range);
  pending_ = true;
  return gamma_;
}

const StepRecord& Engine::observe(double y) {
  if (!pending_) throw ProtocolError("observe called without a pending prediction");
  pending_ = false;

  StepRecord rec;
  rec.t = records_.size() + 1;
  rec.raw_y = y;
  rec.y = config_.range.clamp(y);
  rec.clamped = rec.y != y;
  if (rec.clamped) ++clamp_count_;
  rec.gamma = gamma_;
  rec.signal = signal_;
  rec.predictor_loss = square_loss(gamma_, rec.y);
  rec.initialized_experts = forecasts_.size();
  auto& losses = losses_;
  losses.resize(forecasts_.size());
  for (std::size_t i = 0; i < forecasts_.size(); ++i) {
    losses[i] = square_loss(forecasts_[i], rec.y);
  }

  // The loss-update normalizer is the mixloss over the full expert set.
  rec.mixloss = state_.apply_loss_update(losses, rec.predictor_loss, eta_);
  if (rec.predictor_loss > rec.mixloss + kMixlossTolerance) ++mixloss_violations_;
  if (keep_posterior_) posterior_ = state_;
  if (history_) history_->record(state_);
  state_.apply_mixing(config_.scheme, rec.t, history_ ? &*history_ : nullptr);

  cumulative_h_ += rec.predictor_loss;
  cumulative_m_ += rec.mixloss;
  rec.cumulative_predictor_loss = cumulative_h_;
  rec.cumulative_mixloss = cumulative_m_;

  rec.tail_mass = state_.tail_mass();
  rec.mass_error = std::abs(state_.total_mass() - 1.0);
  if (rec.mass_error > kMassTolerance) ++mass_violations_;

  rec.top_weights = top_weights(state_.weights(), config_.top_k);
  if (config_.record_expert_detail) {
    rec.forecasts = forecasts_;
    rec.expert_losses = losses;
  }

  observed_.push_back(Observation{signal_, rec.y});
  records_.push_back(std::move(rec));
  return records_.back();
}

RunResult run(const EngineConfig& config, std::span<const Observation> stream) {
  if (stream.empty()) throw ContractError("run: empty stream");
  Engine engine(config);
  for (const auto& obs : stream) {
    engine.predict(obs.signal);
    engine.observe(obs.response);
  }
  RunResult result;
  result.clamp_count = engine.clamp_count();
  result.mixloss_violations = engine.mixloss_violations();
  result.mass_violations = engine.mass_violations();
  result.experts_created = engine.experts().size();
  result.records = engine.release_records();
  return result;
}

}  // namespace gmpp
