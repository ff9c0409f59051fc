#include "gmpp/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gmpp/errors.hpp"

namespace gmpp {
namespace {

constexpr double kSummationLimit = 1e6;
constexpr std::size_t kTableSize = std::size_t{1} << 16;
// Below this index tail masses come from direct summation; above it the
// Euler-Maclaurin tail is accurate to well below 1e-15.
constexpr ExpertId kDirectTailLimit = 1000;

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// sum_{i>n} f(i) for f(x) = 1/((x+1) ln^2(x+1)):
//   int_n^inf f = 1/ln(n+1), corrected by -f(n)/2 - f'(n)/12.
double series_tail(double n) {
  const double l = std::log1p(n);
  const double f = 1.0 / ((n + 1.0) * l * l);
  const double fprime = -(l + 2.0) / ((n + 1.0) * (n + 1.0) * l * l * l);
  return 1.0 / l - 0.5 * f - fprime / 12.0;
}

double compute_prior_constant() {
  CompensatedSum sum;
  // Smallest terms first.
  for (double i = kSummationLimit; i >= 1.0; i -= 1.0) {
    sum.add(prior_series_term(i));
  }
  sum.add(series_tail(kSummationLimit));
  return sum.value();
}

}  // namespace

double prior_series_term(double i) {
  const double l = std::log1p(i);
  return 1.0 / ((i + 1.0) * l * l);
}

PriorWeights::PriorWeights() : c_(compute_prior_constant()) {
  table_.resize(kTableSize);
  for (std::size_t i = 0; i < kTableSize; ++i) {
    table_[i] = prior_series_term(static_cast<double>(i + 1)) / c_;
  }
}

const PriorWeights& PriorWeights::standard() {
  static const PriorWeights instance;
  return instance;
}

double PriorWeights::weight(ExpertId i) const {
  if (i < 1) {
    throw DomainError("prior weight is undefined for expert index 0");
  }
  if (i <= table_.size()) return table_[i - 1];
  return prior_series_term(static_cast<double>(i)) / c_;
}

double PriorWeights::neg_log_weight(ExpertId i) const {
  if (i < 1) {
    throw DomainError("prior weight is undefined for expert index 0");
  }
  const double l = std::log1p(static_cast<double>(i));
  return std::log(c_) + l + 2.0 * std::log(l);
}

double PriorWeights::mass_up_to(ExpertId n) const {
  if (n < kDirectTailLimit) {
    CompensatedSum sum;
    for (ExpertId i = n; i >= 1; --i) {
      sum.add(weight(i));
    }
    return sum.value();
  }
  return 1.0 - tail_mass_after(n);
}

double PriorWeights::tail_mass_after(ExpertId n) const {
  if (n < kDirectTailLimit) {
    return 1.0 - mass_up_to(n);
  }
  return series_tail(static_cast<double>(n)) / c_;
}

ExpertId PriorWeights::index_bound(double eps) const {
  if (!(eps > 0.0)) {
    throw DomainError("index_bound requires eps > 0");
  }
  if (tail_mass_after(0) < eps) {
    return 0;
  }
  // tail ~ 1/(c ln(N+1)), so the bound grows like exp(1/(c eps)).
  const double max_n = static_cast<double>(std::numeric_limits<ExpertId>::max()) / 2.0;
  if (series_tail(max_n) / c_ >= eps) {
    throw DomainError("index bound for eps=" + std::to_string(eps) +
                      " exceeds the representable expert range");
  }
  ExpertId lo = 0;
  ExpertId hi = 1;
  while (tail_mass_after(hi) >= eps) {
    lo = hi;
    hi *= 2;
  }
  while (hi - lo > 1) {
    const ExpertId mid = lo + (hi - lo) / 2;
    if (tail_mass_after(mid) < eps) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double prior_constant() { return PriorWeights::standard().normalizing_constant(); }

double prior_weight(ExpertId i) { return PriorWeights::standard().weight(i); }

Distribution::Distribution(std::vector<WeightedIndex> support, double tail_coefficient)
    : support_(std::move(support)), tail_coefficient_(tail_coefficient) {
  if (!(tail_coefficient_ >= 0.0)) {
    throw ContractError("tail coefficient must be nonnegative");
  }
  std::sort(support_.begin(), support_.end(),
            [](const WeightedIndex& a, const WeightedIndex& b) { return a.index < b.index; });
  const auto& prior = PriorWeights::standard();
  bool contiguous = true;
  for (std::size_t k = 0; k < support_.size(); ++k) {
    const auto& e = support_[k];
    if (e.index < 1) {
      throw ContractError("expert ids start at 1");
    }
    if (!(e.mass >= 0.0)) {
      throw ContractError("distribution masses must be nonnegative");
    }
    if (k > 0 && support_[k - 1].index == e.index) {
      throw ContractError("duplicate index " + std::to_string(e.index) + " in distribution support");
    }
    contiguous = contiguous && e.index == k + 1;
  }
  if (contiguous) {
    prior_outside_ = prior.tail_mass_after(support_.size());
  } else {
    CompensatedSum inside;
    for (const auto& e : support_) {
      inside.add(prior.weight(e.index));
    }
    prior_outside_ = 1.0 - inside.value();
  }
}

Distribution Distribution::dense(std::span<const double> masses, double tail_coefficient) {
  std::vector<WeightedIndex> support;
  support.reserve(masses.size());
  for (std::size_t k = 0; k < masses.size(); ++k) {
    support.push_back({static_cast<ExpertId>(k + 1), masses[k]});
  }
  return Distribution(std::move(support), tail_coefficient);
}

Distribution Distribution::prior() { return Distribution({}, 1.0); }

Distribution Distribution::point_mass(ExpertId i) { return Distribution({{i, 1.0}}, 0.0); }

bool Distribution::in_support(ExpertId i) const {
  return std::binary_search(
      support_.begin(), support_.end(), WeightedIndex{i, 0.0},
      [](const WeightedIndex& a, const WeightedIndex& b) { return a.index < b.index; });
}

double Distribution::mass(ExpertId i) const {
  auto it = std::lower_bound(
      support_.begin(), support_.end(), i,
      [](const WeightedIndex& a, ExpertId id) { return a.index < id; });
  if (it != support_.end() && it->index == i) {
    return it->mass;
  }
  return tail_coefficient_ * prior_weight(i);
}

double Distribution::support_mass() const {
  CompensatedSum sum;
  for (const auto& e : support_) {
    sum.add(e.mass);
  }
  return sum.value();
}

namespace {

double entropy_term(double p, double q) {
  if (p == 0.0) {
    return 0.0;
  }
  if (q == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return p * std::log(p / q);
}

}  // namespace

double relative_entropy(const Distribution& p, const Distribution& q) {
  std::vector<ExpertId> ids;
  ids.reserve(p.support().size() + q.support().size());
  for (const auto& e : p.support()) ids.push_back(e.index);
  for (const auto& e : q.support()) ids.push_back(e.index);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  CompensatedSum sum;
  double outside = p.prior_mass_outside();
  for (ExpertId id : ids) {
    const double term = entropy_term(p.mass(id), q.mass(id));
    if (std::isinf(term)) {
      return term;
    }
    sum.add(term);
    if (!p.in_support(id)) {
      outside -= prior_weight(id);
    }
  }
  // Outside both supports p_i = kp w_i and q_i = kq w_i.
  const double kp = p.tail_coefficient();
  const double kq = q.tail_coefficient();
  if (kp > 0.0 && outside > 0.0) {
    if (kq == 0.0) {
      return std::numeric_limits<double>::infinity();
    }
    sum.add(kp * outside * std::log(kp / kq));
  }
  return std::max(0.0, sum.value());
}

double log_sum_exp(std::span<const double> values) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) hi = std::max(hi, v);
  if (std::isinf(hi)) {
    return hi;
  }
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

double log_mix(const Distribution& weights, std::span<const double> exponents,
               double tail_exponent, double eta) {
  if (!(eta > 0.0)) {
    throw DomainError("log_mix requires eta > 0");
  }
  const auto support = weights.support();
  if (exponents.size() != support.size()) {
    throw ContractError("log_mix: " + std::to_string(exponents.size()) + " exponents for " +
                        std::to_string(support.size()) + " support entries");
  }
  std::vector<double> logs;
  logs.reserve(support.size() + 1);
  for (std::size_t k = 0; k < support.size(); ++k) {
    if (support[k].mass > 0.0) {
      logs.push_back(std::log(support[k].mass) - eta * exponents[k]);
    }
  }
  const double tail = weights.tail_mass();
  if (tail > 0.0) {
    logs.push_back(std::log(tail) - eta * tail_exponent);
  }
  if (logs.empty()) {
    throw DomainError("log_mix: all weights are zero");
  }
  return -log_sum_exp(logs) / eta;
}

}  // namespace gmpp
