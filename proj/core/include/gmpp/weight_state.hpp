#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "gmpp/core_math.hpp"

namespace gmpp {

class MixingScheme;
class PosteriorHistory;

// Weights over the infinite expert set. Experts 1..step() are initialized and
// carry explicit weights; every expert i > step() has weight
// tail_coefficient() * prior_weight(i).
class WeightState {
 public:
  // t = 0: no initialized experts, tail coefficient 1 (the prior itself).
  WeightState();

  // Explicit construction; used by tests and the general mixing scheme.
  WeightState(std::vector<double> weights, double tail_coefficient);

  std::size_t step() const { return weights_.size(); }
  std::span<const double> weights() const { return weights_; }
  double tail_coefficient() const { return tail_coefficient_; }

  // Weight of any expert id >= 1, initialized or not.
  double weight(ExpertId i) const;

  // sum_{i <= step} w_i.
  double initialized_mass() const;
  // Prior mass of the uninitialized experts, sum_{i > step} prior_weight(i).
  double prior_tail() const { return prior_tail_; }
  // tail_coefficient * prior_tail().
  double tail_mass() const { return tail_coefficient_ * prior_tail_; }
  double total_mass() const { return initialized_mass() + tail_mass(); }

  Distribution to_distribution() const;

  // In-place forms of loss_update, mixing_update and materialize_expert.
  // apply_loss_update returns the mixloss m_t = -(1/eta) ln Z.
  double apply_loss_update(std::span<const double> losses, double predictor_loss, double eta);
  void apply_mixing(const MixingScheme& scheme, std::size_t t, const PosteriorHistory* history);
  void materialize(ExpertId i);

 private:
  std::vector<double> weights_;
  double tail_coefficient_;
  double prior_tail_;
};

// Rule producing the mixing coefficients beta^{t+1}_0..beta^{t+1}_t over the
// posteriors w~_0..w~_t (w~_0 is the prior).
class MixingScheme {
 public:
  enum class Kind { exponential, fixed_share, gmpp, general };

  // beta^{t+1} for time step t; must have t+1 nonnegative entries summing to 1.
  using CoefficientProvider = std::function<std::vector<double>(std::size_t t)>;

  static MixingScheme exponential();
  // Throws ConfigError unless alpha is in [0, 1].
  static MixingScheme fixed_share(double alpha);
  // alpha_t = 1/(t+1).
  static MixingScheme gmpp();
  static MixingScheme general(CoefficientProvider provider);

  Kind kind() const { return kind_; }

  // Weight given to the prior after step t (exponential: 0). Not defined for
  // the general scheme.
  double share_rate(std::size_t t) const;

  // beta^{t+1} over s = 0..t.
  std::vector<double> coefficients(std::size_t t) const;

 private:
  MixingScheme(Kind kind, double alpha, CoefficientProvider provider);

  Kind kind_;
  double alpha_;
  CoefficientProvider provider_;
};

const char* to_string(MixingScheme::Kind kind);

// Loss-updated posteriors w~_0, w~_1, ..., kept only for the general scheme.
class PosteriorHistory {
 public:
  // Starts with w~_0 = prior.
  PosteriorHistory();

  void record(WeightState posterior);
  std::span<const WeightState> snapshots() const { return snapshots_; }

 private:
  std::vector<WeightState> snapshots_;
};

// Loss Update. Initialized experts incur `losses`; every uninitialized expert
// incurs `predictor_loss`:
//   w~_i = w_i e^{-eta l_i} / Z,  Z = sum_{j<=t} w_j e^{-eta l_j} + e^{-eta h}(1 - sum_{j<=t} w_j).
// If `mixloss` is given it receives -(1/eta) ln Z. Throws ContractError if
// losses.size() != state.step().
WeightState loss_update(WeightState state, std::span<const double> losses, double predictor_loss,
                        double eta, double* mixloss = nullptr);

// Mixing Update after time step t. Fixed-share kinds compute
//   w_i <- alpha_t prior_i + (1 - alpha_t) w~_i,  kappa <- alpha_t + (1 - alpha_t) kappa~.
// The general scheme mixes history.snapshots() (which must end with `state`)
// and throws ContractError when history is null.
WeightState mixing_update(WeightState state, const MixingScheme& scheme, std::size_t t,
                          const PosteriorHistory* history = nullptr);

// Moves expert i = state.step() + 1 out of the tail with weight
// kappa * prior_weight(i). Throws ContractError for any other i.
WeightState materialize_expert(WeightState state, ExpertId i);

// w^p_i = w_i / sum_{j<=t} w_j. Throws ContractError when t = 0 or the
// initialized mass is zero.
Distribution normalized_initialized(const WeightState& state);

}  // namespace gmpp
