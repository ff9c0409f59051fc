#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gmpp/core_math.hpp"

namespace gmpp {

// One (signal, response) pair of the observed stream.
struct Observation {
  std::vector<double> signal;
  double response = 0.0;
};

struct ExpertSettings {
  std::size_t window = 20;   // h
  double ridge_sigma = 0.01;  // sigma > 0
  // Coefficients used for t <= h. Empty means the zero vector.
  std::vector<double> fallback;
  // Append a constant 1 feature to every signal.
  bool fit_intercept = false;

  // Throws ConfigError on h = 0 or sigma <= 0.
  void validate() const;
};

// A frozen linear predictor f(x) = (a . x), created at step id().
class LinearExpert {
 public:
  LinearExpert(ExpertId id, std::vector<double> coefficients, bool intercept = false);

  ExpertId id() const { return id_; }
  std::span<const double> coefficients() const { return coefficients_; }
  bool has_intercept() const { return intercept_; }
  // Dimension of the signals this expert accepts.
  std::size_t signal_dimension() const { return coefficients_.size() - (intercept_ ? 1 : 0); }

  // Throws ContractError on a dimension mismatch.
  double predict(std::span<const double> x) const;

 private:
  ExpertId id_;
  std::vector<double> coefficients_;
  bool intercept_;
};

// a = (sigma I + X^T X)^{-1} X^T y with the window signals as rows of X.
// With fit_intercept each row gets a trailing 1.
std::vector<double> ridge_fit(std::span<const Observation> window, double sigma,
                              bool fit_intercept = false);

// Expert for step t from the observations of steps 1..t-1 (`history` must hold
// at least t-1 entries). For t > h fits ridge regression on the h most recent
// pairs; otherwise uses settings.fallback (zero by default).
LinearExpert init_expert(std::span<const Observation> history, ExpertId t, std::size_t dims,
                         const ExpertSettings& settings);

}  // namespace gmpp
