#pragma once

#include <span>

#include "gmpp/core_math.hpp"

namespace gmpp {

// Outcomes are assumed to lie in [lower, upper].
class OutcomeRange {
 public:
  // Throws ConfigError unless lower < upper and both are finite.
  OutcomeRange(double lower, double upper);

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double width() const { return upper_ - lower_; }
  double midpoint() const { return 0.5 * (lower_ + upper_); }

  // Largest learning rate for which the square loss is mixable: 2/(b-a)^2.
  double max_eta() const { return 2.0 / (width() * width()); }

  bool contains(double y) const { return y >= lower_ && y <= upper_; }
  double clamp(double y) const;

  friend bool operator==(const OutcomeRange&, const OutcomeRange&) = default;

 private:
  double lower_;
  double upper_;
};

double square_loss(double gamma, double y);

// g(y) = -(1/eta) ln sum_i w_i e^{-eta lambda(f_i, y)}. `forecasts` is aligned
// with weights.support(); ids in the tail all forecast `tail_forecast`.
double superprediction(std::span<const double> forecasts, const Distribution& weights,
                       double tail_forecast, double eta, double y);

// Square-loss substitution rule
//   gamma = (a+b)/2 + 1/(2 eta (b-a)) ln( sum w_i e^{-eta (b-f_i)^2} / sum w_i e^{-eta (a-f_i)^2} ),
// forecasts clamped to [a,b] first. The result satisfies
// lambda(gamma, y) <= g(y) for all y in [a,b]. Weights need not be normalized.
// Throws ConfigError if eta is outside (0, 2/(b-a)^2].
double substitute(std::span<const double> forecasts, std::span<const double> weights,
                  double eta, const OutcomeRange& range);

// Same rule over a Distribution; tail ids forecast `tail_forecast`.
double substitute(std::span<const double> forecasts, const Distribution& weights,
                  double tail_forecast, double eta, const OutcomeRange& range);

// Throws ConfigError naming the mixability bound if eta is not in (0, max_eta].
void check_mixable_eta(double eta, const OutcomeRange& range);

// A loss function together with its aggregating-algorithm certificate.
class MixableLoss {
 public:
  virtual ~MixableLoss() = default;

  virtual double loss(double gamma, double y) const = 0;
  virtual double max_eta(const OutcomeRange& range) const = 0;
  virtual double superprediction(std::span<const double> forecasts, const Distribution& weights,
                                 double tail_forecast, double eta, double y) const = 0;
  virtual double substitute(std::span<const double> forecasts, std::span<const double> weights,
                            double eta, const OutcomeRange& range) const = 0;
};

class SquareLoss final : public MixableLoss {
 public:
  double loss(double gamma, double y) const override { return square_loss(gamma, y); }
  double max_eta(const OutcomeRange& range) const override { return range.max_eta(); }
  double superprediction(std::span<const double> forecasts, const Distribution& weights,
                         double tail_forecast, double eta, double y) const override {
    return gmpp::superprediction(forecasts, weights, tail_forecast, eta, y);
  }
  double substitute(std::span<const double> forecasts, std::span<const double> weights,
                    double eta, const OutcomeRange& range) const override {
    return gmpp::substitute(forecasts, weights, eta, range);
  }
};

}  // namespace gmpp
