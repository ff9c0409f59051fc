#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace gmpp {

using ExpertId = std::uint64_t;

// Prior over the countable expert set {1, 2, ...}:
//   w_i = 1 / (c (i+1) ln^2(i+1)),   c = sum_{i>=1} 1 / ((i+1) ln^2(i+1)).
// Index 0 is excluded since ln(1) = 0.
class PriorWeights {
 public:
  // The process-wide instance; c is computed once on first use.
  static const PriorWeights& standard();

  double normalizing_constant() const { return c_; }

  // Throws DomainError for i < 1.
  double weight(ExpertId i) const;

  // -ln w_i, evaluated without forming w_i.
  double neg_log_weight(ExpertId i) const;

  // sum_{i=1..n} w_i.
  double mass_up_to(ExpertId n) const;

  // sum_{i>n} w_i, evaluated from the tail integral for large n so that it
  // does not lose precision to cancellation.
  double tail_mass_after(ExpertId n) const;

  // Smallest N with tail_mass_after(N) < eps.
  ExpertId index_bound(double eps) const;

 private:
  PriorWeights();
  double c_;
  std::vector<double> table_;  // w_1..w_{kTableSize}
};

// Unnormalized series term 1 / ((i+1) ln^2(i+1)).
double prior_series_term(double i);

// c, summed to 10^6 terms plus an Euler-Maclaurin tail; |error| < 1e-10.
double prior_constant();

double prior_weight(ExpertId i);

struct WeightedIndex {
  ExpertId index;
  double mass;
};

// A probability distribution over expert ids: explicit masses on a finite
// support, and every id outside the support carries tail_coefficient times its
// prior weight.
class Distribution {
 public:
  Distribution() = default;

  // Support entries may be given in any order; duplicates or negative masses
  // throw ContractError. The distribution is not renormalized.
  Distribution(std::vector<WeightedIndex> support, double tail_coefficient);

  // Dense support over ids 1..masses.size().
  static Distribution dense(std::span<const double> masses, double tail_coefficient);

  static Distribution prior();
  static Distribution point_mass(ExpertId i);

  // Explicit mass if i is in the support, otherwise tail_coefficient * w_i.
  double mass(ExpertId i) const;

  bool in_support(ExpertId i) const;

  std::span<const WeightedIndex> support() const { return support_; }
  double tail_coefficient() const { return tail_coefficient_; }

  // Prior mass of all ids outside the support.
  double prior_mass_outside() const { return prior_outside_; }

  // tail_coefficient * prior_mass_outside().
  double tail_mass() const { return tail_coefficient_ * prior_outside_; }

  double support_mass() const;
  double total_mass() const { return support_mass() + tail_mass(); }

 private:
  std::vector<WeightedIndex> support_;  // sorted by index
  double tail_coefficient_ = 0.0;
  double prior_outside_ = 1.0;
};

// D(p||q) = sum_i p_i ln(p_i / q_i), with 0 ln 0 = 0. Ids outside both
// supports are handled in closed form. Returns +infinity when p_i > 0 and
// q_i = 0 for some i.
double relative_entropy(const Distribution& p, const Distribution& q);

// -(1/eta) ln( sum_{i in support} w_i e^{-eta x_i} + tail_mass e^{-eta x_tail} ).
// `exponents` is aligned with weights.support(). Throws DomainError when every
// weight is zero, ContractError on size mismatch.
double log_mix(const Distribution& weights, std::span<const double> exponents,
               double tail_exponent, double eta);

// ln sum_i e^{v_i} with max-shift. Returns -infinity for an empty or all
// -infinity input.
double log_sum_exp(std::span<const double> values);

}  // namespace gmpp
