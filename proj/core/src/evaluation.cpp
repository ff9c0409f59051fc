#include "gmpp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "gmpp/errors.hpp"

namespace gmpp {

RegretLedger RegretLedger::from_records(std::span<const StepRecord> records) {
  RegretLedger ledger;
  for (const auto& r : records) ledger.append(r);
  return ledger;
}

void RegretLedger::append(const StepRecord& record) {
  if (!record.has_expert_detail()) {
    throw ContractError("regret ledger needs records with per-expert losses");
  }
  // New experts inherit H_{t-1}: they were virtual until now.
  while (expert_totals_.size() < record.initialized()) {
    expert_totals_.push_back(predictor_total_);
  }
  for (std::size_t i = 0; i < expert_totals_.size(); ++i) {
    expert_totals_[i] += record.expert_loss(i + 1);
  }
  predictor_losses_.push_back(record.predictor_loss);
  mixlosses_.push_back(record.mixloss);
  predictor_total_ += record.predictor_loss;
  mixloss_total_ += record.mixloss;
  if (record.clamped) ++clamp_count_;
}

double RegretLedger::expert_total(ExpertId i) const {
  if (i < 1 || i > expert_totals_.size()) {
    throw std::out_of_range("expert " + std::to_string(i) + " is not in the ledger");
  }
  return expert_totals_[i - 1];
}

double regret(const RegretLedger& ledger, ExpertId i) {
  return ledger.predictor_total() - ledger.expert_total(i);
}

Eligibility parse_eligibility(std::string_view name) {
  if (name == "initialized_before_segment") return Eligibility::initialized_before_segment;
  if (name == "initialized_by_segment_end") return Eligibility::initialized_by_segment_end;
  throw ConfigError("unknown eligibility rule '" + std::string(name) +
                    "' (expected initialized_before_segment|initialized_by_segment_end)");
}

const char* to_string(Eligibility rule) {
  return rule == Eligibility::initialized_before_segment ? "initialized_before_segment"
                                                         : "initialized_by_segment_end";
}

std::vector<std::size_t> CompositeExpert::change_steps() const {
  std::vector<std::size_t> steps;
  for (std::size_t j = 1; j < segments.size(); ++j) {
    if (segments[j].expert != segments[j - 1].expert) steps.push_back(segments[j].begin);
  }
  return steps;
}

std::vector<ExpertId> CompositeExpert::experts_at_changes() const {
  std::vector<ExpertId> ids;
  for (std::size_t j = 0; j < segments.size(); ++j) {
    if (j == 0 || segments[j].expert != segments[j - 1].expert) ids.push_back(segments[j].expert);
  }
  return ids;
}

CompositeExpert composite_oracle(std::span<const StepRecord> records,
                                 const SegmentSchedule& schedule, Eligibility rule) {
  if (records.size() != schedule.horizon()) {
    throw ContractError("composite_oracle: " + std::to_string(records.size()) +
                        " records for a schedule of horizon " +
                        std::to_string(schedule.horizon()));
  }
  const std::size_t experts = records.empty() ? 0 : records.back().initialized();
  for (const auto& rec : records) {
    if (!rec.has_expert_detail()) {
      throw ContractError("composite_oracle needs records with per-expert losses");
    }
  }
  CompositeExpert composite;
  for (std::size_t j = 0; j < schedule.segment_count(); ++j) {
    CompositeSegment seg;
    seg.begin = schedule.boundaries[j];
    seg.end = schedule.boundaries[j + 1];
    const std::size_t limit = rule == Eligibility::initialized_before_segment ? seg.begin
                                                                             : seg.end - 1;
    std::size_t eligible = std::min(limit, experts);
    if (eligible == 0) {
      eligible = experts;
      seg.fallback = true;
      composite.fallback_used = true;
    }
    std::vector<double> totals(eligible, 0.0);
    for (std::size_t t = seg.begin; t < seg.end; ++t) {
      const auto& rec = records[t - 1];
      for (std::size_t i = 0; i < eligible; ++i) totals[i] += rec.expert_loss(i + 1);
    }
    const auto best = std::min_element(totals.begin(), totals.end());
    seg.expert = static_cast<ExpertId>(best - totals.begin()) + 1;
    seg.loss = *best;
    composite.total_loss += seg.loss;
    composite.segments.push_back(seg);
  }
  return composite;
}

double prior_entropy(ExpertId i) { return PriorWeights::standard().neg_log_weight(i); }

double prior_entropy_cap(std::size_t horizon) {
  const double l = std::log(static_cast<double>(horizon) + 1.0);
  return l + 2.0 * std::log(l) + std::log(prior_constant());
}

double bound_rhs(std::size_t horizon, std::size_t switches, double eta,
                 std::span<const double> entropy_terms) {
  if (!(eta > 0.0)) throw DomainError("bound_rhs requires eta > 0");
  if (horizon <= switches + 1) {
    throw DomainError("bound_rhs requires T - k - 1 > 0 (T=" + std::to_string(horizon) +
                      ", k=" + std::to_string(switches) + ")");
  }
  const double t = static_cast<double>(horizon);
  const double k1 = static_cast<double>(switches) + 1.0;
  const double ln_c = std::log(prior_constant());
  double entropy = 0.0;
  for (double d : entropy_terms) entropy += d;
  const double lt1 = std::log(t + 1.0);
  return entropy + k1 * ln_c / eta + k1 * (lt1 + 2.0 * std::log(lt1) + ln_c + std::log(t)) / eta +
         std::log(t - k1) / eta;
}

double fixed_share_bound_rhs(std::size_t horizon, std::size_t switches, double eta, double alpha) {
  if (!(eta > 0.0)) throw DomainError("fixed_share_bound_rhs requires eta > 0");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("fixed_share_bound_rhs requires 0 < alpha < 1");
  }
  if (horizon < switches + 1) throw DomainError("fixed_share_bound_rhs requires k < T");
  const double k1 = static_cast<double>(switches) + 1.0;
  const double rest = static_cast<double>(horizon) - k1;
  return (k1 * prior_entropy_cap(horizon) + k1 * std::log(1.0 / alpha) +
          rest * std::log(1.0 / (1.0 - alpha))) /
         eta;
}

double fixed_share_switching_rhs(std::size_t horizon, double eta, double alpha,
                                 std::span<const double> entry_entropies,
                                 std::span<const double> exit_entropies) {
  if (!(eta > 0.0)) throw DomainError("fixed_share_switching_rhs requires eta > 0");
  if (entry_entropies.size() != exit_entropies.size() || entry_entropies.empty()) {
    throw ContractError("fixed_share_switching_rhs: need k+1 entry and exit divergences");
  }
  const double k1 = static_cast<double>(entry_entropies.size());
  const double rest = static_cast<double>(horizon) - k1;
  double sum = 0.0;
  for (std::size_t j = 0; j < entry_entropies.size(); ++j) {
    sum += entry_entropies[j] - exit_entropies[j];
  }
  return (sum + k1 * std::log(1.0 / alpha) + rest * std::log(1.0 / (1.0 - alpha))) / eta;
}

double recomputed_gmpp_bound(std::size_t horizon, double eta,
                             std::span<const std::size_t> change_steps,
                             std::span<const double> entropies) {
  if (!(eta > 0.0)) throw DomainError("recomputed_gmpp_bound requires eta > 0");
  if (entropies.size() != change_steps.size() + 1) {
    throw ContractError("recomputed_gmpp_bound: need one divergence per interval");
  }
  double sum = 0.0;
  for (double d : entropies) sum += d;
  std::size_t next = 0;
  for (std::size_t t = 2; t <= horizon; ++t) {
    const double td = static_cast<double>(t);
    if (next < change_steps.size() && change_steps[next] == t) {
      sum += std::log(td);  // ln(1/alpha_{t-1})
      ++next;
    } else {
      sum += std::log(td / (td - 1.0));  // ln(1/(1-alpha_{t-1}))
    }
  }
  if (next != change_steps.size()) {
    throw ContractError("recomputed_gmpp_bound: change steps must be increasing within [2, T]");
  }
  return sum / eta;
}

VanishingRegretReport vanishing_regret_check(std::span<const HorizonRegret> series,
                                             double tolerance, std::size_t allowed_inversions) {
  if (series.size() < 3) {
    throw ContractError("vanishing_regret_check needs at least three horizons");
  }
  std::vector<HorizonRegret> sorted(series.begin(), series.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.horizon < b.horizon; });
  VanishingRegretReport report;
  for (const auto& h : sorted) {
    if (h.horizon == 0) throw ContractError("vanishing_regret_check: horizon 0");
    report.horizons.push_back(h.horizon);
    report.average_regret.push_back((h.predictor_total - h.comparator_total) /
                                    static_cast<double>(h.horizon));
  }
  for (std::size_t j = 1; j < report.average_regret.size(); ++j) {
    const double prev = report.average_regret[j - 1];
    const double cur = report.average_regret[j];
    if (cur > prev) {
      ++report.inversions;
      const double relative = (cur - prev) / std::max(std::abs(prev), 1e-12);
      report.worst_relative_increase = std::max(report.worst_relative_increase, relative);
    }
  }
  report.passed = report.inversions <= allowed_inversions &&
                  report.worst_relative_increase <= tolerance;
  return report;
}

}  // namespace gmpp
