#include "gmpp/experts.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <numeric>
#include <string>

#include "gmpp/errors.hpp"

namespace gmpp {

void ExpertSettings::validate() const {
  if (window < 1) throw ConfigError("expert window h must be >= 1");
  if (!(ridge_sigma > 0.0)) throw ConfigError("ridge sigma must be > 0");
}

LinearExpert::LinearExpert(ExpertId id, std::vector<double> coefficients, bool intercept)
    : id_(id), coefficients_(std::move(coefficients)), intercept_(intercept) {
  if (intercept_ && coefficients_.empty()) {
    throw ContractError("an intercept model needs at least the bias coefficient");
  }
}

double LinearExpert::predict(std::span<const double> x) const {
  if (x.size() != signal_dimension()) {
    throw ContractError("expert " + std::to_string(id_) + " expects signals of dimension " +
                        std::to_string(signal_dimension()) + ", got " + std::to_string(x.size()));
  }
  double y = std::inner_product(x.begin(), x.end(), coefficients_.begin(), 0.0);
  if (intercept_) y += coefficients_.back();
  return y;
}

std::vector<double> ridge_fit(std::span<const Observation> window, double sigma,
                              bool fit_intercept) {
  if (window.empty()) throw ContractError("ridge_fit: empty window");
  if (!(sigma > 0.0)) throw ContractError("ridge_fit: sigma must be > 0");
  const std::size_t n = window.front().signal.size();
  const std::size_t cols = n + (fit_intercept ? 1 : 0);
  Eigen::MatrixXd x(window.size(), cols);
  Eigen::VectorXd y(window.size());
  for (std::size_t r = 0; r < window.size(); ++r) {
    const auto& obs = window[r];
    if (obs.signal.size() != n) {
      throw ContractError("ridge_fit: window signals differ in dimension");
    }
    for (std::size_t c = 0; c < n; ++c) x(r, c) = obs.signal[c];
    if (fit_intercept) x(r, n) = 1.0;
    y(r) = obs.response;
  }
  Eigen::MatrixXd gram = x.transpose() * x;
  gram.diagonal().array() += sigma;
  const Eigen::VectorXd a = gram.llt().solve(x.transpose() * y);
  return {a.data(), a.data() + a.size()};
}

LinearExpert init_expert(std::span<const Observation> history, ExpertId t, std::size_t dims,
                         const ExpertSettings& settings) {
  if (t < 1) throw ContractError("init_expert: steps start at 1");
  const std::size_t h = settings.window;
  const std::size_t cols = dims + (settings.fit_intercept ? 1 : 0);
  if (t <= h) {
    std::vector<double> fallback = settings.fallback;
    if (fallback.empty()) fallback.assign(cols, 0.0);
    if (fallback.size() != cols) {
      throw ContractError("fallback coefficients have dimension " +
                          std::to_string(fallback.size()) + ", expected " + std::to_string(cols));
    }
    return LinearExpert(t, std::move(fallback), settings.fit_intercept);
  }
  if (history.size() < t - 1) {
    throw ContractError("init_expert: history shorter than t-1");
  }
  const auto window = history.subspan(t - 1 - h, h);
  return LinearExpert(t, ridge_fit(window, settings.ridge_sigma, settings.fit_intercept),
                      settings.fit_intercept);
}

}  // namespace gmpp
