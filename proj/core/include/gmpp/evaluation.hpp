#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "gmpp/core_math.hpp"
#include "gmpp/datagen.hpp"
#include "gmpp/engine.hpp"

namespace gmpp {

// Cumulative losses of the predictor, the mixloss and every initialized
// expert. An expert created at step i is charged the predictor's loss h_t for
// every t < i.
class RegretLedger {
 public:
  RegretLedger() = default;
  static RegretLedger from_records(std::span<const StepRecord> records);

  void append(const StepRecord& record);

  std::size_t horizon() const { return predictor_losses_.size(); }
  double predictor_total() const { return predictor_total_; }  // H_T
  double mixloss_total() const { return mixloss_total_; }      // M_T
  std::span<const double> predictor_losses() const { return predictor_losses_; }
  std::span<const double> mixlosses() const { return mixlosses_; }
  std::size_t expert_count() const { return expert_totals_.size(); }
  std::size_t clamp_count() const { return clamp_count_; }

  // L_{i,T}. Throws std::out_of_range for an unknown expert.
  double expert_total(ExpertId i) const;

 private:
  std::vector<double> predictor_losses_;
  std::vector<double> mixlosses_;
  std::vector<double> expert_totals_;
  double predictor_total_ = 0.0;
  double mixloss_total_ = 0.0;
  std::size_t clamp_count_ = 0;
};

// R_{i,T} = H_T - L_{i,T}.
double regret(const RegretLedger& ledger, ExpertId i);

enum class Eligibility {
  initialized_before_segment,  // expert id <= first step of the segment
  initialized_by_segment_end,  // expert id <= last step of the segment
};

Eligibility parse_eligibility(std::string_view name);
const char* to_string(Eligibility rule);

struct CompositeSegment {
  std::size_t begin = 0;  // first step
  std::size_t end = 0;    // one past the last step
  ExpertId expert = 0;
  double loss = 0.0;
  // No expert met the eligibility rule; chosen among all initialized ones.
  bool fallback = false;
};

// A sequence of elementary experts over consecutive intervals covering 1..T.
struct CompositeExpert {
  std::vector<CompositeSegment> segments;
  double total_loss = 0.0;  // L_T(E)
  bool fallback_used = false;

  // Steps t_1 < ... < t_k at which the chosen expert changes.
  std::vector<std::size_t> change_steps() const;
  std::size_t switches() const { return change_steps().size(); }
  // Experts in use at t_0 = 1, t_1, ..., t_k.
  std::vector<ExpertId> experts_at_changes() const;
};

// Per segment of `schedule`, the eligible expert with the least summed loss
// (ties to the smallest id). Throws ContractError if records and schedule
// cover different horizons.
CompositeExpert composite_oracle(std::span<const StepRecord> records,
                                 const SegmentSchedule& schedule, Eligibility rule);

// D(e_i || prior) = ln(1 / prior_weight(i)).
double prior_entropy(ExpertId i);

// ln(T+1) + 2 ln ln(T+1) + ln c: upper bound on prior_entropy(i) for i <= T.
double prior_entropy_cap(std::size_t horizon);

// Right-hand side of the GMPP tracking bound as printed, minus L_T(E):
//   sum(entropy_terms) + (1/eta)(k+1) ln c
//   + (1/eta)(k+1)(ln(T+1) + 2 ln ln(T+1) + ln c + ln T) + (1/eta) ln(T-k-1).
// Throws DomainError when T-k-1 <= 0 or eta <= 0.
double bound_rhs(std::size_t horizon, std::size_t switches, double eta,
                 std::span<const double> entropy_terms);

// Fixed-Share tracking bound with constant alpha, minus L_T(E):
//   (1/eta)(k+1)(ln(T+1) + 2 ln ln(T+1) + ln c) + (1/eta)(k+1) ln(1/alpha)
//   + (1/eta)(T-k-1) ln(1/(1-alpha)).
double fixed_share_bound_rhs(std::size_t horizon, std::size_t switches, double eta, double alpha);

// Fixed-Share bound for a switching comparison sequence, minus sum_t (q_t . l_t):
//   (1/eta) sum_j (D(q_{t_j} || w_1) - D(q_{t_j} || w~_{t_{j+1}-1}))
//   + (1/eta)(k+1) ln(1/alpha) + (1/eta)(T-k-1) ln(1/(1-alpha)).
// entry/exit hold the k+1 divergences at the start and end of each interval.
double fixed_share_switching_rhs(std::size_t horizon, double eta, double alpha,
                                 std::span<const double> entry_entropies,
                                 std::span<const double> exit_entropies);

// Tracking bound recomputed from the per-step mixloss inequality with
// alpha_t = 1/(t+1), minus L_T(E):
//   (1/eta)[ sum_{j=0..k} entropy_j + sum_{j=1..k} ln t_j
//            + sum_{t=2..T, t not a change} ln(t/(t-1)) ].
// `entropies` has k+1 entries, `change_steps` the k steps t_j.
double recomputed_gmpp_bound(std::size_t horizon, double eta,
                             std::span<const std::size_t> change_steps,
                             std::span<const double> entropies);

struct HorizonRegret {
  std::size_t horizon = 0;
  double predictor_total = 0.0;  // H_T
  double comparator_total = 0.0;  // L_T(E)
};

struct VanishingRegretReport {
  std::vector<std::size_t> horizons;
  std::vector<double> average_regret;  // (H_T - L_T(E)) / T, by increasing T
  std::size_t inversions = 0;          // steps where the average increased
  double worst_relative_increase = 0.0;
  bool passed = true;
};

// Average regret must not increase across horizons, except for at most
// `allowed_inversions` increases each within `tolerance` of the previous value.
VanishingRegretReport vanishing_regret_check(std::span<const HorizonRegret> series,
                                             double tolerance = 0.10,
                                             std::size_t allowed_inversions = 1);

}  // namespace gmpp
