#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gmpp/engine.hpp"

namespace gmpp {

// Brute-force counterpart of Engine used for verification. Experts
// 1..universe carry explicit weights from the start; all ids beyond the
// universe share one residual bucket holding their prior mass. Forecasts are
// found by bisection on the fixed-point condition over the whole universe,
// with uninitialized experts forecasting the candidate value itself.
class TruncatedUniverseEngine {
 public:
  // Throws ConfigError when the universe is empty.
  TruncatedUniverseEngine(EngineConfig config, std::size_t universe);

  double predict(std::span<const double> x);
  // Returns the mixloss m_t.
  double observe(double y);

  std::size_t universe() const { return weights_.size(); }
  std::size_t initialized() const { return experts_.size(); }
  // Current weight of expert i (1 <= i <= universe).
  double weight(ExpertId i) const { return weights_.at(i - 1); }
  double residual() const { return residual_; }
  double predictor_loss() const { return predictor_loss_; }

 private:
  double fixed_point_map(double gamma) const;

  EngineConfig config_;
  double eta_;
  std::vector<double> prior_;
  double prior_residual_;
  std::vector<double> weights_;
  double residual_;
  std::vector<std::vector<double>> posteriors_;  // general scheme only
  std::vector<double> posterior_residuals_;
  std::vector<LinearExpert> experts_;
  std::vector<Observation> observed_;
  std::vector<double> signal_;
  std::vector<double> forecasts_;
  double gamma_ = 0.0;
  double predictor_loss_ = 0.0;
  bool pending_ = false;
  std::size_t t_ = 0;
};

}  // namespace gmpp
