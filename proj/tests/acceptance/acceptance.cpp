// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gmpp/datagen.hpp"
#include "gmpp/engine.hpp"
#include "gmpp/evaluation.hpp"
#include "gmpp/mixable_loss.hpp"
#include "gmpp/weight_state.hpp"
#include "gmpp_cli/commands.hpp"
#include "gmpp_cli/config.hpp"

namespace {

using namespace gmpp;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool passed = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

// 1. Substitution never loses to the superprediction on a 101-point grid.
Outcome mixability() {
  const auto start = Clock::now();
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const OutcomeRange range(0.0, 1.0);
  const double eta = 2.0;
  double worst = -std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 1 + trial % 10;
    std::vector<double> f(n), w(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      f[i] = u(rng);
      sum += w[i] = u(rng) + 1e-6;
    }
    for (double& v : w) v /= sum;
    const double gamma = substitute(f, w, eta, range);
    const auto d = Distribution::dense(w, 0.0);
    for (int k = 0; k <= 100; ++k) {
      const double y = k / 100.0;
      worst = std::max(worst, square_loss(gamma, y) - superprediction(f, d, 0.0, eta, y));
    }
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-10 && elapsed < 5.0,
          fmt("max lambda - g = %.3e (tol 1e-10), %.2f s (limit 5 s)", worst, elapsed)};
}

cli::RunConfig base_config(std::uint64_t seed, double noise, std::size_t horizon) {
  cli::RunConfig c;
  c.seed = seed;
  c.noise_std = noise;
  c.horizon = horizon;
  c.segments = 10;
  c.pool_size = 4;
  c.dims = 3;
  return c;
}

// 2. Analytic tail against eagerly materialized experts 1..10^4.
Outcome oracle_equivalence() {
  const auto start = Clock::now();
  auto c = base_config(1, 1.0, 100);
  c.verify_horizon = 100;
  c.verify_universe = 10000;
  const auto checks = cli::run_verification(c);
  double weight = NAN, forecast = NAN;
  for (const auto& ch : checks) {
    if (ch.name == "weight_deviation") weight = ch.value;
    if (ch.name == "forecast_deviation") forecast = ch.value;
  }
  const double elapsed = seconds_since(start);
  return {weight <= 1e-9 && forecast <= 1e-9 && elapsed < 30.0,
          fmt("max weight dev %.3e, max forecast dev %.3e (tol 1e-9), %.2f s (limit 30 s)", weight,
              forecast, elapsed)};
}

RunResult run_task(const cli::RunConfig& c, SegmentSchedule* schedule = nullptr,
                   double* eta = nullptr) {
  auto ex = cli::prepare(c);
  if (schedule) *schedule = ex.schedule;
  if (eta) *eta = ex.engine.learning_rate();
  return run(ex.engine, ex.stream);
}

// 3. Exponential scheme: M_T <= L_i,T + ln(1/w_i,1)/eta for every expert, H_T <= M_T.
Outcome single_expert_bound() {
  double worst = -std::numeric_limits<double>::infinity();
  double worst_hm = -std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto c = base_config(seed, 1.0, 500);
    c.scheme = "exponential";
    double eta = 0.0;
    const auto result = run_task(c, nullptr, &eta);
    const auto ledger = RegretLedger::from_records(result.records);
    for (ExpertId i = 1; i <= ledger.expert_count(); ++i) {
      worst = std::max(worst, ledger.mixloss_total() - ledger.expert_total(i) - prior_entropy(i) / eta);
    }
    worst_hm = std::max(worst_hm, ledger.predictor_total() - ledger.mixloss_total());
  }
  return {worst <= 1e-8 && worst_hm <= 1e-8,
          fmt("max M_T - L_i,T - ln(1/w_i)/eta = %.3e, max H_T - M_T = %.3e (tol 1e-8)", worst,
              worst_hm)};
}

double divergence(const std::vector<double>& q, const WeightState& w) {
  return relative_entropy(Distribution::dense(q, 0.0), w.to_distribution());
}

// 4. Per-step mixloss bounds on random (state, losses, comparison vector) triples.
Outcome per_step_bounds() {
  std::mt19937_64 rng(4004);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto random_q = [&](std::size_t support) {
    std::vector<double> q(support, 0.0);
    if (u(rng) < 0.3) {
      q[static_cast<std::size_t>(u(rng) * support) % support] = 1.0;
    } else {
      double s = 0.0;
      for (double& v : q) s += v = u(rng);
      for (double& v : q) v /= s;
    }
    return q;
  };
  double worst_step = -std::numeric_limits<double>::infinity();
  double worst_mixed = -std::numeric_limits<double>::infinity();
  int triples = 0;
  while (triples < 1000) {
    // A short random history under a random general scheme produces the state.
    std::vector<std::vector<double>> betas;
    const auto scheme = MixingScheme::general([&betas](std::size_t t) { return betas.at(t); });
    const double eta = 0.05 + 2.0 * u(rng);
    const std::size_t steps = 1 + triples % 7;
    PosteriorHistory history;
    WeightState w;
    for (std::size_t t = 1; t <= steps; ++t) {
      w = materialize_expert(w, t);
      std::vector<double> losses(t);
      for (double& l : losses) l = 4.0 * u(rng);
      const double h = 4.0 * u(rng);
      double m = 0.0;
      const auto post = loss_update(w, losses, h, eta, &m);
      if (t == steps) {
        const auto q = random_q(t + 3);
        double ql = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) ql += q[i] * (i < t ? losses[i] : h);
        const double d_post = divergence(q, post);
        worst_step = std::max(worst_step, m - ql - (divergence(q, w) - d_post) / eta);
        const auto snaps = history.snapshots();
        const auto& beta = t == 1 ? std::vector<double>{1.0} : betas.at(t - 1);
        for (std::size_t s = 0; s < beta.size(); ++s) {
          if (beta[s] <= 0.0) continue;
          const double rhs = ql + (divergence(q, snaps[s]) - d_post + std::log(1.0 / beta[s])) / eta;
          worst_mixed = std::max(worst_mixed, m - rhs);
        }
        ++triples;
        break;
      }
      history.record(post);
      std::vector<double> beta(t + 1);
      double sum = 0.0;
      for (double& b : beta) sum += b = u(rng) < 0.3 ? 0.0 : u(rng);
      if (sum == 0.0) beta[t] = sum = 1.0;
      for (double& b : beta) b /= sum;
      betas.resize(t + 1);
      betas[t] = beta;
      w = mixing_update(post, scheme, t, &history);
    }
  }
  return {worst_step <= 1e-10 && worst_mixed <= 1e-10,
          fmt("%.0f triples: max excess over per-step bound %.3e, over mixed-posterior bound %.3e "
              "(tol 1e-10)",
              triples, worst_step, worst_mixed)};
}

struct SweepRow {
  std::uint64_t seed;
  double noise;
  std::size_t horizon;
  double h_total;
  double comparator[2];
  double verbatim[2];
  double recomputed[2];
};

const std::vector<SweepRow>& sweep() {
  static const std::vector<SweepRow> rows = [] {
    std::vector<SweepRow> out;
    for (double noise : {0.0, 0.1}) {
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        for (std::size_t horizon : {500u, 1000u, 2000u}) {
          const auto c = base_config(seed, noise, horizon);
          SegmentSchedule schedule;
          double eta = 0.0;
          const auto result = run_task(c, &schedule, &eta);
          SweepRow row{seed, noise, horizon, result.records.back().cumulative_predictor_loss, {}, {}, {}};
          int r = 0;
          for (auto rule : {Eligibility::initialized_before_segment,
                            Eligibility::initialized_by_segment_end}) {
            const auto e = composite_oracle(result.records, schedule, rule);
            std::vector<double> d;
            for (ExpertId i : e.experts_at_changes()) d.push_back(prior_entropy(i));
            row.comparator[r] = e.total_loss;
            row.verbatim[r] = bound_rhs(horizon, e.switches(), eta, d);
            row.recomputed[r] = recomputed_gmpp_bound(horizon, eta, e.change_steps(), d);
            ++r;
          }
          out.push_back(row);
        }
      }
    }
    return out;
  }();
  return rows;
}

// 5. Tracking bound on the default synthetic task.
Outcome tracking_bound() {
  const auto& rows = sweep();
  double worst_ratio = 0.0, worst_tight = 0.0;
  int violations = 0;
  for (const auto& row : rows) {
    for (int r = 0; r < 2; ++r) {
      const double regret = row.h_total - row.comparator[r];
      if (regret > row.verbatim[r]) ++violations;
      worst_ratio = std::max(worst_ratio, regret / row.verbatim[r]);
      worst_tight = std::max(worst_tight, regret / row.recomputed[r]);
    }
  }
  return {violations == 0,
          fmt("%.0f runs x 2 eligibility rules: %.0f violations; max regret/bound %.3f "
              "(recomputed bound: %.3f)",
              static_cast<double>(rows.size()), violations, worst_ratio, worst_tight)};
}

// 6. Average regret non-increasing in T for every seed.
Outcome vanishing_regret() {
  const auto& rows = sweep();
  int failures = 0, series_count = 0, inversions = 0;
  double worst = 0.0;
  for (std::size_t start = 0; start < rows.size(); start += 3) {
    for (int r = 0; r < 2; ++r) {
      std::vector<HorizonRegret> series;
      for (std::size_t j = start; j < start + 3; ++j) {
        series.push_back({rows[j].horizon, rows[j].h_total, rows[j].comparator[r]});
      }
      const auto report = vanishing_regret_check(series, 0.10, 1);
      ++series_count;
      failures += report.passed ? 0 : 1;
      inversions += static_cast<int>(report.inversions);
      worst = std::max(worst, report.worst_relative_increase);
    }
  }
  return {failures == 0, fmt("%.0f series: %.0f failing, %.0f inversions, worst increase %.2f%% "
                             "(allowed: one inversion <= 10%%)",
                             series_count, failures, inversions, 100.0 * worst)};
}

// 7. Noiseless single generator: average h_t over [3h, T] <= 1e-3.
Outcome learnability() {
  constexpr std::size_t kHorizon = 25000;
  constexpr std::size_t kWindow = 20;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto c = base_config(seed, 0.0, kHorizon);
    c.segments = 1;
    c.pool_size = 1;
    c.window = kWindow;
    c.ridge_sigma = 0.01;
    auto ex = cli::prepare(c);
    ex.engine.record_expert_detail = false;
    ex.engine.top_k = 0;
    const auto result = run(ex.engine, ex.stream);
    double sum = 0.0;
    for (std::size_t t = 3 * kWindow; t <= kHorizon; ++t) sum += result.records[t - 1].predictor_loss;
    worst = std::max(worst, sum / static_cast<double>(kHorizon - 3 * kWindow + 1));
  }
  return {worst <= 1e-3, fmt("T = 25000, seeds 1-5: worst average h_t over [60, T] = %.3e (limit 1e-3)",
                             worst)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 8. Two runs of the same config give byte-identical files.
Outcome determinism() {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "gmpp_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto cfg = dir / "run.cfg";
  std::ofstream(cfg) << "T = 1000\nsegments = 10\npool_size = 4\nnoise_std = 0.1\ndims = 3\nseed = 7\n";
  std::ostringstream sink;
  cli::CommandOptions o;
  o.out = &sink;
  o.err = &sink;
  o.out_dir = dir / "a";
  const int first = cli::cmd_run(cfg, o);
  o.out_dir = dir / "b";
  const int second = cli::cmd_run(cfg, o);
  const bool trace = slurp(dir / "a" / "trace.csv") == slurp(dir / "b" / "trace.csv");
  const bool report = slurp(dir / "a" / "report.json") == slurp(dir / "b" / "report.json");
  const bool nonempty = !slurp(dir / "a" / "trace.csv").empty();
  fs::remove_all(dir);
  return {first == 0 && second == 0 && trace && report && nonempty,
          std::string("exit codes ") + std::to_string(first) + "/" + std::to_string(second) +
              ", trace " + (trace ? "identical" : "differs") + ", report " +
              (report ? "identical" : "differs")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"mixability", mixability},
      {"oracle equivalence", oracle_equivalence},
      {"single-expert bound (exponential scheme)", single_expert_bound},
      {"per-step mixloss bounds", per_step_bounds},
      {"tracking bound", tracking_bound},
      {"vanishing average regret", vanishing_regret},
      {"learnability", learnability},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failed += outcome.passed ? 0 : 1;
    std::printf("%s criterion %zu (%s): %s\n", outcome.passed ? "PASS" : "FAIL", i + 1,
                criteria[i].first, outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
