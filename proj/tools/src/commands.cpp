#include "gmpp_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "gmpp/errors.hpp"
#include "gmpp/reference_engine.hpp"

namespace gmpp::cli {

namespace {

using Json = nlohmann::ordered_json;

std::ostream& out_of(const CommandOptions& o) { return o.out ? *o.out : std::cout; }
std::ostream& err_of(const CommandOptions& o) { return o.err ? *o.err : std::cerr; }

RunConfig load_with_overrides(const std::filesystem::path& path, const CommandOptions& options) {
  RunConfig config = load_config(path);
  if (options.out_dir) config.out_dir = *options.out_dir;
  if (options.seed) config.seed = *options.seed;
  return config;
}

Json config_echo(const RunConfig& c, const EngineConfig& engine, std::size_t horizon) {
  Json j;
  j["T"] = horizon;
  j["segments"] = c.segments;
  j["pool_size"] = c.pool_size;
  j["noise_std"] = c.noise_std;
  j["signal_law"] = to_string(c.signal_law);
  j["dims"] = c.dims;
  j["seed"] = c.seed;
  j["allow_repeats"] = c.allow_repeats;
  j["scheme"] = c.scheme;
  if (c.scheme == "fixed_share") j["alpha"] = c.alpha;
  j["eta"] = engine.learning_rate();
  j["range_lower"] = engine.range.lower();
  j["range_upper"] = engine.range.upper();
  j["window"] = c.window;
  j["ridge_sigma"] = c.ridge_sigma;
  j["fit_intercept"] = c.fit_intercept;
  j["max_experts"] = c.max_experts ? Json(*c.max_experts) : Json(nullptr);
  j["top_k"] = engine.top_k;
  j["eligibility"] = to_string(c.eligibility);
  j["stream_csv"] = c.stream_csv ? Json(c.stream_csv->generic_string()) : Json(nullptr);
  return j;
}

// Experiment constants the source leaves open; listed when left at defaults.
Json defaulted_constants(const RunConfig& c) {
  const char* keys[] = {"T",         "noise_std", "signal_law",  "dims",
                        "window",    "ridge_sigma", "range_lower", "eta"};
  Json list = Json::array();
  for (const char* key : keys) {
    const bool set = std::any_of(c.explicit_keys.begin(), c.explicit_keys.end(),
                                 [&](const auto& kv) { return kv.first == key; });
    if (!set) list.push_back(key);
  }
  return list;
}

struct OracleEvaluation {
  CompositeExpert composite;
  double regret = 0.0;  // H_T - L_T(E)
  std::optional<double> verbatim;
  std::optional<double> verbatim_cap;
  std::optional<double> recomputed;
  std::optional<double> fixed_share;  // M_T - L_T(E) bound
};

OracleEvaluation evaluate_oracle(std::span<const StepRecord> records,
                                 const SegmentSchedule& schedule, Eligibility rule,
                                 const RunConfig& c, double eta) {
  OracleEvaluation ev;
  ev.composite = composite_oracle(records, schedule, rule);
  const std::size_t horizon = records.size();
  const double h_total = records.back().cumulative_predictor_loss;
  ev.regret = h_total - ev.composite.total_loss;
  const auto changes = ev.composite.change_steps();
  const auto ids = ev.composite.experts_at_changes();
  const std::size_t k = changes.size();
  std::vector<double> exact;
  for (ExpertId i : ids) exact.push_back(prior_entropy(i));
  const std::vector<double> cap(ids.size(), prior_entropy_cap(horizon));
  if (horizon > k + 1) {
    ev.verbatim = bound_rhs(horizon, k, eta, exact);
    ev.verbatim_cap = bound_rhs(horizon, k, eta, cap);
  }
  ev.recomputed = recomputed_gmpp_bound(horizon, eta, changes, exact);
  if (c.scheme == "fixed_share") ev.fixed_share = fixed_share_bound_rhs(horizon, k, eta, c.alpha);
  return ev;
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json oracle_json(const OracleEvaluation& ev, const RunConfig& c, double m_total) {
  Json j;
  j["L_T_E"] = ev.composite.total_loss;
  j["switches"] = ev.composite.switches();
  j["change_steps"] = ev.composite.change_steps();
  j["experts_at_changes"] = ev.composite.experts_at_changes();
  j["fallback_used"] = ev.composite.fallback_used;
  Json segments = Json::array();
  for (const auto& s : ev.composite.segments) {
    segments.push_back(Json{{"begin", s.begin},
                            {"end", s.end},
                            {"expert", s.expert},
                            {"loss", s.loss},
                            {"fallback", s.fallback}});
  }
  j["segments"] = std::move(segments);
  j["regret"] = ev.regret;
  Json bounds;
  bounds["verbatim"] = optional_json(ev.verbatim);
  bounds["verbatim_holds"] = ev.verbatim ? Json(ev.regret <= *ev.verbatim) : Json(nullptr);
  bounds["verbatim_entropy_cap"] = optional_json(ev.verbatim_cap);
  bounds["recomputed"] = optional_json(ev.recomputed);
  bounds["recomputed_applies"] = c.scheme == "gmpp";
  bounds["recomputed_holds"] = ev.recomputed ? Json(ev.regret <= *ev.recomputed) : Json(nullptr);
  if (ev.fixed_share) {
    const double excess = m_total - ev.composite.total_loss;
    bounds["fixed_share"] = *ev.fixed_share;
    bounds["fixed_share_mixloss_excess"] = excess;
    bounds["fixed_share_holds"] = excess <= *ev.fixed_share;
  }
  j["bounds"] = std::move(bounds);
  return j;
}

std::string trace_csv(std::span<const StepRecord> records, const SegmentSchedule& schedule,
                      bool synthetic) {
  std::string out =
      "t,segment_id,generator_id,y,gamma,h_t,m_t,H_t,M_t,tail_mass,top1_expert,top1_weight,"
      "clamped_flag\n";
  for (const auto& r : records) {
    const std::size_t seg = schedule.segment_of(r.t);
    out += std::to_string(r.t);
    out += ',' + std::to_string(seg);
    out += ',' + (synthetic ? std::to_string(schedule.generator_ids[seg]) : std::string());
    out += ',' + format_double(r.y);
    out += ',' + format_double(r.gamma);
    out += ',' + format_double(r.predictor_loss);
    out += ',' + format_double(r.mixloss);
    out += ',' + format_double(r.cumulative_predictor_loss);
    out += ',' + format_double(r.cumulative_mixloss);
    out += ',' + format_double(r.tail_mass);
    if (r.top_weights.empty()) {
      out += ",,";
    } else {
      out += ',' + std::to_string(r.top_weights.front().first);
      out += ',' + format_double(r.top_weights.front().second);
    }
    out += r.clamped ? ",1\n" : ",0\n";
  }
  return out;
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!f) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw std::runtime_error("cannot rename into '" + path.string() + "'");
  }
}

RunSummary execute_run(const RunConfig& config, const std::filesystem::path& out_dir) {
  Experiment ex = prepare(config);
  ex.engine.record_expert_detail = true;
  const double eta = ex.engine.learning_rate();

  RunResult result = run(ex.engine, ex.stream);
  const auto& records = result.records;
  const double h_total = records.back().cumulative_predictor_loss;
  const double m_total = records.back().cumulative_mixloss;

  double max_excess = -std::numeric_limits<double>::infinity();
  double max_mass_error = 0.0;
  for (const auto& r : records) {
    max_excess = std::max(max_excess, r.predictor_loss - r.mixloss);
    max_mass_error = std::max(max_mass_error, r.mass_error);
  }
  const bool invariants_ok = result.mixloss_violations == 0 && result.mass_violations == 0;

  RunSummary summary;
  summary.horizon = records.size();
  summary.eta = eta;
  summary.predictor_total = h_total;
  summary.mixloss_total = m_total;
  summary.clamp_count = result.clamp_count;
  summary.invariants_passed = invariants_ok;

  Json report;
  report["config"] = config_echo(config, ex.engine, records.size());
  report["defaulted_constants"] = defaulted_constants(config);
  Json run_j;
  run_j["T"] = records.size();
  run_j["eta"] = eta;
  run_j["experts_created"] = result.experts_created;
  run_j["schedule_boundaries"] = ex.schedule.boundaries;
  if (ex.pool) run_j["generator_ids"] = ex.schedule.generator_ids;
  run_j["schedule_switches"] = ex.schedule.switches();
  run_j["H_T"] = h_total;
  run_j["M_T"] = m_total;
  run_j["clamp_count"] = result.clamp_count;
  report["run"] = std::move(run_j);

  Json inv;
  inv["mixloss_dominates_predictor_loss"] = Json{{"violations", result.mixloss_violations},
                                                 {"max_excess", max_excess},
                                                 {"tolerance", kMixlossTolerance},
                                                 {"passed", result.mixloss_violations == 0}};
  inv["mass_normalization"] = Json{{"violations", result.mass_violations},
                                   {"max_error", max_mass_error},
                                   {"tolerance", kMassTolerance},
                                   {"passed", result.mass_violations == 0}};
  inv["passed"] = invariants_ok;
  report["invariants"] = std::move(inv);

  const RegretLedger ledger = RegretLedger::from_records(records);
  ExpertId best = 1;
  for (ExpertId i = 2; i <= ledger.expert_count(); ++i) {
    if (ledger.expert_total(i) < ledger.expert_total(best)) best = i;
  }
  Json best_j{{"expert", best},
              {"L_i_T", ledger.expert_total(best)},
              {"regret", regret(ledger, best)}};
  if (config.scheme == "exponential") {
    // Single-expert bound for every initialized expert.
    double worst = -std::numeric_limits<double>::infinity();
    for (ExpertId i = 1; i <= ledger.expert_count(); ++i) {
      worst = std::max(worst, m_total - ledger.expert_total(i) - prior_entropy(i) / eta);
    }
    best_j["single_expert_bound_max_excess"] = worst;
    best_j["single_expert_bound_holds"] = worst <= 1e-8 && h_total <= m_total + 1e-8;
  }
  report["best_expert"] = std::move(best_j);

  Json oracles;
  for (Eligibility rule :
       {Eligibility::initialized_before_segment, Eligibility::initialized_by_segment_end}) {
    const auto ev = evaluate_oracle(records, ex.schedule, rule, config, eta);
    oracles[to_string(rule)] = oracle_json(ev, config, m_total);
    if (rule == config.eligibility) {
      summary.comparator_total = ev.composite.total_loss;
      summary.switches = ev.composite.switches();
      summary.bound_verbatim = ev.verbatim;
      summary.bound_recomputed = ev.recomputed;
    }
  }
  report["oracle"] = std::move(oracles);
  report["oracle_eligibility"] = to_string(config.eligibility);

  std::filesystem::create_directories(out_dir);
  if (config.export_stream) write_file_atomic(out_dir / "stream.csv", format_stream_csv(ex.stream));
  write_file_atomic(out_dir / "trace.csv", trace_csv(records, ex.schedule, ex.pool.has_value()));
  write_file_atomic(out_dir / "report.json", report.dump(2) + "\n");
  return summary;
}

std::vector<CheckResult> run_verification(const RunConfig& input, const VerifyHooks& hooks) {
  RunConfig config = input;
  if (!config.stream_csv) config.horizon = std::min(config.horizon, config.verify_horizon);
  Experiment ex = prepare(config);
  std::size_t horizon = std::min(ex.stream.size(), config.verify_horizon);
  if (ex.stream.size() > horizon) {
    ex.stream.resize(horizon);
    ex.schedule = make_schedule(horizon, std::min(config.segments, horizon), config.pool_size,
                                config.seed, config.allow_repeats);
  }
  ex.engine.record_expert_detail = true;
  const std::size_t universe = config.verify_universe;
  const double eta = ex.engine.learning_rate();
  const MixingScheme& scheme = ex.engine.scheme;

  Engine engine(ex.engine, /*keep_posterior=*/true);
  TruncatedUniverseEngine reference(ex.engine, universe);

  double weight_dev = 0.0;
  double residual_dev = 0.0;
  double forecast_dev = 0.0;
  double mixloss_dev = 0.0;
  double mixloss_excess = -std::numeric_limits<double>::infinity();
  double mass_error = 0.0;
  double step_bound_excess = -std::numeric_limits<double>::infinity();
  double mixed_bound_excess = -std::numeric_limits<double>::infinity();

  // D(q || w) for q supported on the first q.size() experts.
  const auto divergence = [](std::span<const double> q, const WeightState& w) {
    double d = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (q[i] > 0.0) d += q[i] * std::log(q[i] / w.weight(i + 1));
    }
    return d;
  };

  WeightState previous_posterior;  // w~_{t-1}, starting from the prior
  std::vector<double> analytic(universe);
  for (std::size_t t = 1; t <= horizon; ++t) {
    const auto& obs = ex.stream[t - 1];
    const double gamma = engine.predict(obs.signal);
    const double gamma_ref = reference.predict(obs.signal);
    forecast_dev = std::max(forecast_dev, std::abs(gamma - gamma_ref));
    const WeightState before = engine.weights();  // w_t
    const StepRecord& rec = engine.observe(obs.response);
    const double m_ref = reference.observe(obs.response);
    mixloss_dev = std::max(mixloss_dev, std::abs(rec.mixloss - m_ref));
    mixloss_excess = std::max(mixloss_excess, rec.predictor_loss - rec.mixloss);
    mass_error = std::max(mass_error, rec.mass_error);
    const WeightState& posterior = engine.last_posterior();  // w~_t

    for (std::size_t i = 0; i < universe; ++i) analytic[i] = engine.weights().weight(i + 1);
    if (hooks.tamper_weights) hooks.tamper_weights(t, analytic);
    double tail_outside = 0.0;
    for (std::size_t i = 0; i < universe; ++i) {
      weight_dev = std::max(weight_dev, std::abs(analytic[i] - reference.weight(i + 1)));
      tail_outside += analytic[i];
    }
    residual_dev = std::max(residual_dev, std::abs((1.0 - tail_outside) - reference.residual()));

    // Comparison vectors: every unit vector on the initialized experts and
    // their uniform mixture.
    const std::size_t n = rec.initialized();
    std::vector<std::vector<double>> comparisons;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> q(n, 0.0);
      q[i] = 1.0;
      comparisons.push_back(std::move(q));
    }
    comparisons.emplace_back(n, 1.0 / static_cast<double>(n));

    // w_t = beta_0 w~_0 + beta_{t-1} w~_{t-1} for the schemes the CLI runs.
    const double share = t == 1 ? 1.0 : scheme.share_rate(t - 1);
    for (const auto& q : comparisons) {
      double ql = 0.0;
      for (std::size_t i = 0; i < n; ++i) ql += q[i] * rec.expert_losses[i];
      const double d_post = divergence(q, posterior);
      const double step_rhs = ql + (divergence(q, before) - d_post) / eta;
      step_bound_excess = std::max(step_bound_excess, rec.mixloss - step_rhs);
      if (share > 0.0) {
        const double via_prior =
            ql + (divergence(q, WeightState()) - d_post + std::log(1.0 / share)) / eta;
        mixed_bound_excess = std::max(mixed_bound_excess, rec.mixloss - via_prior);
      }
      if (share < 1.0) {
        const double via_last =
            ql + (divergence(q, previous_posterior) - d_post + std::log(1.0 / (1.0 - share))) / eta;
        mixed_bound_excess = std::max(mixed_bound_excess, rec.mixloss - via_last);
      }
    }
    previous_posterior = posterior;
  }

  std::vector<CheckResult> checks;
  const auto add = [&](std::string name, double value, double limit, std::string detail = {}) {
    checks.push_back(CheckResult{std::move(name), value, limit, value <= limit, std::move(detail)});
  };
  add("weight_deviation", weight_dev, 1e-9, "max |w_i - w_i^ref|, i <= universe");
  add("residual_deviation", residual_dev, 1e-9, "mass beyond the universe");
  add("forecast_deviation", forecast_dev, 1e-9, "max |gamma - gamma^ref|");
  add("mixloss_deviation", mixloss_dev, 1e-9, "max |m_t - m_t^ref|");
  add("mixloss_dominates", mixloss_excess, kMixlossTolerance, "max h_t - m_t");
  add("mass_normalization", mass_error, kMassTolerance, "max |sum w - 1|");
  add("per_step_mixloss_bound", step_bound_excess, 1e-10,
      "m_t <= q.l_t + (D(q||w_t) - D(q||w~_t))/eta");
  add("mixed_posterior_bound", mixed_bound_excess, 1e-10,
      "m_t <= q.l_t + (D(q||w~_s) - D(q||w~_t) + ln(1/beta_s))/eta");

  const auto records = engine.records();
  const double h_total = records.back().cumulative_predictor_loss;
  const double m_total = records.back().cumulative_mixloss;
  const RegretLedger ledger = RegretLedger::from_records(records);
  if (scheme.kind() == MixingScheme::Kind::exponential) {
    double worst = h_total - m_total;
    for (ExpertId i = 1; i <= ledger.expert_count(); ++i) {
      worst = std::max(worst, m_total - ledger.expert_total(i) - prior_entropy(i) / eta);
    }
    add("single_expert_bound", worst, 1e-8, "M_T <= L_i,T + ln(1/w_i,1)/eta and H_T <= M_T");
  }
  const auto ev = evaluate_oracle(records, ex.schedule, config.eligibility, config, eta);
  if (scheme.kind() == MixingScheme::Kind::gmpp) {
    if (ev.verbatim) add("tracking_bound_verbatim", ev.regret - *ev.verbatim, 0.0, "H_T - L_T(E) - rhs");
    add("tracking_bound_recomputed", ev.regret - *ev.recomputed, 1e-9, "H_T - L_T(E) - rhs");
  }
  if (ev.fixed_share) {
    add("fixed_share_bound", m_total - ev.composite.total_loss - *ev.fixed_share, 1e-9,
        "M_T - L_T(E) - rhs");
  }
  return checks;
}

namespace {

template <typename Body>
int guarded(const CommandOptions& options, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err_of(options) << "config error: " << e.what() << "\n";
  } catch (const DomainError& e) {
    err_of(options) << "domain error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err_of(options) << "error: " << e.what() << "\n";
  }
  return kExitError;
}

std::string fixed(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << std::scientific << v;
  return s.str();
}

}  // namespace

int cmd_run(const std::filesystem::path& config_path, const CommandOptions& options) {
  return guarded(options, [&] {
    const RunConfig config = load_with_overrides(config_path, options);
    const RunSummary s = execute_run(config, config.out_dir);
    auto& out = out_of(options);
    out << "T=" << s.horizon << " eta=" << format_double(s.eta)
        << " H_T=" << format_double(s.predictor_total) << " M_T=" << format_double(s.mixloss_total)
        << " L_T(E)=" << format_double(s.comparator_total) << " k=" << s.switches
        << " clamped=" << s.clamp_count << "\n";
    if (!s.invariants_passed) {
      err_of(options) << "invariant violation: see report.json\n";
      return kExitInvariant;
    }
    return kExitOk;
  });
}

int cmd_verify(const std::filesystem::path& config_path, const CommandOptions& options) {
  return guarded(options, [&] {
    const RunConfig config = load_with_overrides(config_path, options);
    const auto checks = run_verification(config, options.hooks);
    auto& out = out_of(options);
    out << std::left << std::setw(28) << "check" << std::setw(16) << "value" << std::setw(16)
        << "limit"
        << "result\n";
    bool all = true;
    for (const auto& c : checks) {
      out << std::setw(28) << c.name << std::setw(16) << fixed(c.value) << std::setw(16)
          << fixed(c.limit) << (c.passed ? "PASS" : "FAIL") << "  " << c.detail << "\n";
      all = all && c.passed;
    }
    out << (all ? "all checks passed\n" : "some checks failed\n");
    return all ? kExitOk : kExitInvariant;
  });
}

int cmd_sweep(const std::filesystem::path& config_path, const CommandOptions& options) {
  return guarded(options, [&] {
    const RunConfig config = load_with_overrides(config_path, options);
    if (config.horizons.empty()) throw ConfigError("sweep needs the horizons key");
    validate(config);
    std::string csv = "T,H_T,M_T,L_T_E,bound_rhs,recomputed_bound,regret,average_regret\n";
    std::vector<HorizonRegret> series;
    bool invariants_ok = true;
    for (std::size_t horizon : config.horizons) {
      RunConfig one = config;
      one.horizon = horizon;
      one.explicit_keys.emplace_back("T", std::to_string(horizon));
      const RunSummary s = execute_run(one, config.out_dir / ("T" + std::to_string(horizon)));
      invariants_ok = invariants_ok && s.invariants_passed;
      const double r = s.predictor_total - s.comparator_total;
      csv += std::to_string(horizon) + ',' + format_double(s.predictor_total) + ',' +
             format_double(s.mixloss_total) + ',' + format_double(s.comparator_total) + ',' +
             (s.bound_verbatim ? format_double(*s.bound_verbatim) : std::string()) + ',' +
             (s.bound_recomputed ? format_double(*s.bound_recomputed) : std::string()) + ',' +
             format_double(r) + ',' + format_double(r / static_cast<double>(horizon)) + '\n';
      series.push_back(HorizonRegret{horizon, s.predictor_total, s.comparator_total});
    }
    std::filesystem::create_directories(config.out_dir);
    write_file_atomic(config.out_dir / "summary.csv", csv);
    auto& out = out_of(options);
    out << csv;
    if (series.size() >= 3) {
      const auto report = vanishing_regret_check(series);
      out << "average regret non-increasing: " << (report.passed ? "yes" : "no")
          << " (inversions " << report.inversions << ")\n";
    }
    return invariants_ok ? kExitOk : kExitInvariant;
  });
}

}  // namespace gmpp::cli
