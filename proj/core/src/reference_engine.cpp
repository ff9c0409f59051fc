#include "gmpp/reference_engine.hpp"

#include <cmath>
#include <string>

#include "gmpp/errors.hpp"

namespace gmpp {

TruncatedUniverseEngine::TruncatedUniverseEngine(EngineConfig config, std::size_t universe)
    : config_(std::move(config)) {
  config_.validate();
  if (universe == 0) throw ConfigError("truncated universe must hold at least one expert");
  eta_ = config_.learning_rate();
  prior_.resize(universe);
  double inside = 0.0;
  for (std::size_t i = 0; i < universe; ++i) {
    prior_[i] = prior_weight(i + 1);
    inside += prior_[i];
  }
  prior_residual_ = 1.0 - inside;
  weights_ = prior_;
  residual_ = prior_residual_;
  if (config_.scheme.kind() == MixingScheme::Kind::general) {
    posteriors_.push_back(prior_);
    posterior_residuals_.push_back(prior_residual_);
  }
}

double TruncatedUniverseEngine::fixed_point_map(double gamma) const {
  const double a = config_.range.lower();
  const double b = config_.range.upper();
  double upper = 0.0;
  double lower = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const double f = i < forecasts_.size() ? forecasts_[i] : gamma;
    upper += weights_[i] * std::exp(-eta_ * (b - f) * (b - f));
    lower += weights_[i] * std::exp(-eta_ * (a - f) * (a - f));
  }
  upper += residual_ * std::exp(-eta_ * (b - gamma) * (b - gamma));
  lower += residual_ * std::exp(-eta_ * (a - gamma) * (a - gamma));
  return 0.5 * (a + b) + std::log(upper / lower) / (2.0 * eta_ * (b - a));
}

double TruncatedUniverseEngine::predict(std::span<const double> x) {
  if (pending_) throw ProtocolError("predict called twice without observe");
  ++t_;
  if (!config_.max_experts || experts_.size() < *config_.max_experts) {
    if (experts_.size() >= weights_.size()) {
      throw ContractError("truncated universe of " + std::to_string(weights_.size()) +
                          " experts exhausted");
    }
    experts_.push_back(init_expert(observed_, t_, config_.dims, config_.experts));
  }
  signal_.assign(x.begin(), x.end());
  forecasts_.clear();
  for (const auto& e : experts_) forecasts_.push_back(config_.range.clamp(e.predict(x)));

  // fixed_point_map maps [a,b] into [a,b], so map(g) - g changes sign.
  double lo = config_.range.lower();
  double hi = config_.range.upper();
  for (int iter = 0; iter < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (fixed_point_map(mid) > mid) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  gamma_ = 0.5 * (lo + hi);
  pending_ = true;
  return gamma_;
}

double TruncatedUniverseEngine::observe(double raw_y) {
  if (!pending_) throw ProtocolError("observe called without a pending prediction");
  pending_ = false;
  const double y = config_.range.clamp(raw_y);
  predictor_loss_ = (gamma_ - y) * (gamma_ - y);

  std::vector<double> factors(weights_.size());
  double z = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const double f = i < forecasts_.size() ? forecasts_[i] : gamma_;
    factors[i] = std::exp(-eta_ * (f - y) * (f - y));
    z += weights_[i] * factors[i];
  }
  const double residual_factor = std::exp(-eta_ * predictor_loss_);
  z += residual_ * residual_factor;
  const double mixloss = -std::log(z) / eta_;

  for (std::size_t i = 0; i < weights_.size(); ++i) weights_[i] = weights_[i] * factors[i] / z;
  residual_ = residual_ * residual_factor / z;

  using Kind = MixingScheme::Kind;
  const auto kind = config_.scheme.kind();
  if (kind == Kind::general) {
    posteriors_.push_back(weights_);
    posterior_residuals_.push_back(residual_);
    const auto beta = config_.scheme.coefficients(t_);
    std::vector<double> mixed(weights_.size(), 0.0);
    double mixed_residual = 0.0;
    for (std::size_t s = 0; s < beta.size(); ++s) {
      for (std::size_t i = 0; i < mixed.size(); ++i) mixed[i] += beta[s] * posteriors_[s][i];
      mixed_residual += beta[s] * posterior_residuals_[s];
    }
    weights_ = std::move(mixed);
    residual_ = mixed_residual;
  } else if (kind != Kind::exponential) {
    const double alpha = config_.scheme.share_rate(t_);
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      weights_[i] = alpha * prior_[i] + (1.0 - alpha) * weights_[i];
    }
    residual_ = alpha * prior_residual_ + (1.0 - alpha) * residual_;
  }
  observed_.push_back(Observation{signal_, y});
  return mixloss;
}

}  // namespace gmpp
