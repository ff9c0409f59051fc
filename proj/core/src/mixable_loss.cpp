#include "gmpp/mixable_loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "gmpp/errors.hpp"

namespace gmpp {

OutcomeRange::OutcomeRange(double lower, double upper) : lower_(lower), upper_(upper) {
  if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper)) {
    std::ostringstream msg;
    msg << "outcome range requires finite a < b, got [" << lower << ", " << upper << "]";
    throw ConfigError(msg.str());
  }
}

double OutcomeRange::clamp(double y) const { return std::clamp(y, lower_, upper_); }

double square_loss(double gamma, double y) {
  const double d = gamma - y;
  return d * d;
}

double superprediction(std::span<const double> forecasts, const Distribution& weights,
                       double tail_forecast, double eta, double y) {
  std::vector<double> losses(forecasts.size());
  std::transform(forecasts.begin(), forecasts.end(), losses.begin(),
                 [y](double f) { return square_loss(f, y); });
  return log_mix(weights, losses, square_loss(tail_forecast, y), eta);
}

void check_mixable_eta(double eta, const OutcomeRange& range) {
  // Allow a few ulps so that eta computed as 2/(b-a)^2 elsewhere is accepted.
  const double bound = range.max_eta();
  if (!(eta > 0.0) || eta > bound * (1.0 + 4.0 * std::numeric_limits<double>::epsilon())) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "eta=" << eta << " violates the square-loss mixability bound 0 < eta <= 2/(b-a)^2 = "
        << bound << " for [a,b]=[" << range.lower() << ", " << range.upper() << "]";
    throw ConfigError(msg.str());
  }
}

double substitute(std::span<const double> forecasts, std::span<const double> weights,
                  double eta, const OutcomeRange& range) {
  check_mixable_eta(eta, range);
  if (forecasts.size() != weights.size()) {
    throw ContractError("substitute: forecasts and weights differ in length");
  }
  double largest = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ContractError("substitute: negative weight");
    largest = std::max(largest, w);
  }
  if (!(largest > 0.0)) {
    throw DomainError("substitute: all weights are zero");
  }
  // With eta <= 2/(b-a)^2 and clamped forecasts every exponent lies in
  // [-2, 0], so the sums cannot underflow once weights are scaled by the max.
  const double a = range.lower();
  const double b = range.upper();
  double at_upper = 0.0;
  double at_lower = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const double f = range.clamp(forecasts[i]);
    const double r = weights[i] / largest;
    at_upper += r * std::exp(-eta * square_loss(b, f));
    at_lower += r * std::exp(-eta * square_loss(a, f));
  }
  const double gamma =
      range.midpoint() + std::log(at_upper / at_lower) / (2.0 * eta * range.width());
  return range.clamp(gamma);
}

double substitute(std::span<const double> forecasts, const Distribution& weights,
                  double tail_forecast, double eta, const OutcomeRange& range) {
  check_mixable_eta(eta, range);
  const auto support = weights.support();
  if (forecasts.size() != support.size()) {
    throw ContractError("substitute: forecasts and support differ in length");
  }
  std::vector<double> masses;
  std::vector<double> fs(forecasts.begin(), forecasts.end());
  masses.reserve(support.size() + 1);
  for (const auto& e : support) masses.push_back(e.mass);
  if (weights.tail_mass() > 0.0) {
    masses.push_back(weights.tail_mass());
    fs.push_back(tail_forecast);
  }
  return substitute(fs, masses, eta, range);
}

}  // namespace gmpp
