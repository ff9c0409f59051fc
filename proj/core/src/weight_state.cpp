#include "gmpp/weight_state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "gmpp/errors.hpp"

namespace gmpp {

WeightState::WeightState() : tail_coefficient_(1.0), prior_tail_(1.0) {}

WeightState::WeightState(std::vector<double> weights, double tail_coefficient)
    : weights_(std::move(weights)), tail_coefficient_(tail_coefficient) {
  if (!(tail_coefficient_ >= 0.0)) {
    throw ContractError("tail coefficient must be nonnegative");
  }
  for (double w : weights_) {
    if (!(w >= 0.0)) throw ContractError("weights must be nonnegative");
  }
  prior_tail_ = PriorWeights::standard().tail_mass_after(weights_.size());
}

double WeightState::weight(ExpertId i) const {
  if (i < 1) throw ContractError("expert ids start at 1");
  if (i <= weights_.size()) return weights_[i - 1];
  return tail_coefficient_ * prior_weight(i);
}

double WeightState::initialized_mass() const {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

Distribution WeightState::to_distribution() const {
  return Distribution::dense(weights_, tail_coefficient_);
}

MixingScheme::MixingScheme(Kind kind, double alpha, CoefficientProvider provider)
    : kind_(kind), alpha_(alpha), provider_(std::move(provider)) {}

MixingScheme MixingScheme::exponential() { return MixingScheme(Kind::exponential, 0.0, {}); }

MixingScheme MixingScheme::fixed_share(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("fixed-share alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  return MixingScheme(Kind::fixed_share, alpha, {});
}

MixingScheme MixingScheme::gmpp() { return MixingScheme(Kind::gmpp, 0.0, {}); }

MixingScheme MixingScheme::general(CoefficientProvider provider) {
  if (!provider) throw ConfigError("general mixing scheme needs a coefficient provider");
  return MixingScheme(Kind::general, 0.0, std::move(provider));
}

double MixingScheme::share_rate(std::size_t t) const {
  switch (kind_) {
    case Kind::exponential:
      return 0.0;
    case Kind::fixed_share:
      return alpha_;
    case Kind::gmpp:
      return 1.0 / (static_cast<double>(t) + 1.0);
    case Kind::general:
      break;
  }
  throw ContractError("share_rate is not defined for the general mixing scheme");
}

std::vector<double> MixingScheme::coefficients(std::size_t t) const {
  if (kind_ == Kind::general) {
    auto beta = provider_(t);
    if (beta.size() != t + 1) {
      throw ContractError("mixing scheme returned " + std::to_string(beta.size()) +
                          " coefficients for step " + std::to_string(t));
    }
    double sum = 0.0;
    for (double b : beta) {
      if (!(b >= 0.0)) throw ContractError("mixing coefficients must be nonnegative");
      sum += b;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw ContractError("mixing coefficients must sum to 1");
    }
    return beta;
  }
  std::vector<double> beta(t + 1, 0.0);
  if (t == 0) {
    beta[0] = 1.0;
    return beta;
  }
  const double alpha = share_rate(t);
  beta[0] += alpha;
  beta[t] += 1.0 - alpha;
  return beta;
}

const char* to_string(MixingScheme::Kind kind) {
  switch (kind) {
    case MixingScheme::Kind::exponential:
      return "exponential";
    case MixingScheme::Kind::fixed_share:
      return "fixed_share";
    case MixingScheme::Kind::gmpp:
      return "gmpp";
    case MixingScheme::Kind::general:
      return "general";
  }
  return "unknown";
}

PosteriorHistory::PosteriorHistory() { snapshots_.emplace_back(); }

void PosteriorHistory::record(WeightState posterior) { snapshots_.push_back(std::move(posterior)); }

double WeightState::apply_loss_update(std::span<const double> losses, double predictor_loss,
                                      double eta) {
  if (losses.size() != weights_.size()) {
    throw ContractError("loss_update: " + std::to_string(losses.size()) + " losses for " +
                        std::to_string(weights_.size()) + " initialized experts");
  }
  if (!(eta > 0.0)) throw ContractError("loss_update requires eta > 0");
  // Shift exponents by the smallest active loss so the largest factor is 1.
  const double tail = tail_mass();
  double shift = tail > 0.0 ? predictor_loss : std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] > 0.0) shift = std::min(shift, losses[i]);
  }
  if (std::isinf(shift)) {
    throw DomainError("loss_update: all weights are zero");
  }
  double z = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] > 0.0) {
      weights_[i] *= std::exp(-eta * (losses[i] - shift));
      z += weights_[i];
    }
  }
  const double tail_factor = std::exp(-eta * (predictor_loss - shift));
  z += tail * tail_factor;
  for (double& w : weights_) w /= z;
  tail_coefficient_ = tail_coefficient_ * tail_factor / z;
  return shift - std::log(z) / eta;
}

void WeightState::apply_mixing(const MixingScheme& scheme, std::size_t t,
                               const PosteriorHistory* history) {
  using Kind = MixingScheme::Kind;
  if (scheme.kind() == Kind::exponential) {
    return;
  }
  if (scheme.kind() == Kind::general) {
    if (history == nullptr) {
      throw ContractError("general mixing scheme requires the posterior history");
    }
    const auto snapshots = history->snapshots();
    const auto beta = scheme.coefficients(t);
    if (snapshots.size() != beta.size()) {
      throw ContractError("posterior history holds " + std::to_string(snapshots.size()) +
                          " snapshots, mixing step " + std::to_string(t) + " needs " +
                          std::to_string(beta.size()));
    }
    const std::size_t n = weights_.size();
    std::vector<double> mixed(n, 0.0);
    double kappa = 0.0;
    for (std::size_t s = 0; s < snapshots.size(); ++s) {
      if (beta[s] == 0.0) continue;
      const auto& snap = snapshots[s];
      if (snap.step() > n) {
        throw ContractError("posterior snapshot has more experts than the current state");
      }
      for (std::size_t i = 0; i < n; ++i) {
        mixed[i] += beta[s] * snap.weight(i + 1);
      }
      kappa += beta[s] * snap.tail_coefficient();
    }
    weights_ = std::move(mixed);
    tail_coefficient_ = kappa;
    return;
  }

  const double alpha = scheme.share_rate(t);
  const auto& prior = PriorWeights::standard();
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    weights_[i] = alpha * prior.weight(i + 1) + (1.0 - alpha) * weights_[i];
  }
  tail_coefficient_ = alpha + (1.0 - alpha) * tail_coefficient_;
}

void WeightState::materialize(ExpertId i) {
  if (i != weights_.size() + 1) {
    throw ContractError("experts are initialized in order: expected id " +
                        std::to_string(weights_.size() + 1) + ", got " + std::to_string(i));
  }
  weights_.push_back(tail_coefficient_ * prior_weight(i));
  prior_tail_ = PriorWeights::standard().tail_mass_after(weights_.size());
}

WeightState loss_update(WeightState state, std::span<const double> losses, double predictor_loss,
                        double eta, double* mixloss) {
  const double m = state.apply_loss_update(losses, predictor_loss, eta);
  if (mixloss != nullptr) *mixloss = m;
  return state;
}

WeightState mixing_update(WeightState state, const MixingScheme& scheme, std::size_t t,
                          const PosteriorHistory* history) {
  state.apply_mixing(scheme, t, history);
  return state;
}

WeightState materialize_expert(WeightState state, ExpertId i) {
  state.materialize(i);
  return state;
}

Distribution normalized_initialized(const WeightState& state) {
  if (state.step() == 0) {
    throw ContractError("normalized_initialized: no initialized experts");
  }
  const double mass = state.initialized_mass();
  if (!(mass > 0.0)) {
    throw ContractError("normalized_initialized: initialized experts carry zero mass");
  }
  std::vector<double> normalized(state.weights().begin(), state.weights().end());
  for (double& w : normalized) w /= mass;
  return Distribution::dense(normalized, 0.0);
}

}  // namespace gmpp
