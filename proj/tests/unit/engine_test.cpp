#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "gmpp/datagen.hpp"
#include "gmpp/engine.hpp"
#include "gmpp/errors.hpp"
#include "gmpp/evaluation.hpp"
#include "gmpp/reference_engine.hpp"

namespace gmpp {
namespace {

struct Task {
  EngineConfig config;
  std::vector<Observation> stream;
};

Task synthetic(std::size_t horizon, std::uint64_t seed, double noise = 0.1, std::size_t window = 5) {
  const auto pool = make_generator_pool(4, 3, noise, SignalLaw::uniform, seed);
  const auto schedule = make_schedule(horizon, std::min<std::size_t>(10, horizon), 4, seed);
  EngineConfig config(default_outcome_range(pool), 3);
  config.experts.window = window;
  return {config, generate_stream(pool, schedule, seed)};
}

TEST(EngineTest, FirstForecastWithZeroFallbackIsZero) {
  EngineConfig config(OutcomeRange(0.0, 1.0), 2);
  Engine engine(config);
  EXPECT_EQ(engine.predict(std::vector<double>{0.3, 0.4}), 0.0);
}

TEST(EngineTest, IdenticalExpertsForecastTheirCommonValue) {
  EngineConfig config(OutcomeRange(-2.0, 2.0), 2);
  config.experts.window = 100;
  config.experts.fallback = {0.5, 0.25};
  Engine engine(config);
  const std::vector<double> x = {1.0, 2.0};
  for (int t = 0; t < 5; ++t) {
    EXPECT_NEAR(engine.predict(x), 1.0, 1e-14);
    engine.observe(0.3 * t);
  }
}

// phi(gamma) over the full weight vector with uninitialized experts forecasting gamma.
double fixed_point_map(const WeightState& w, std::span<const double> f, double gamma,
                       double eta, const OutcomeRange& r) {
  const double a = r.lower(), b = r.upper();
  double up = w.tail_mass() * std::exp(-eta * (b - gamma) * (b - gamma));
  double lo = w.tail_mass() * std::exp(-eta * (a - gamma) * (a - gamma));
  for (std::size_t i = 0; i < f.size(); ++i) {
    up += w.weights()[i] * std::exp(-eta * (b - f[i]) * (b - f[i]));
    lo += w.weights()[i] * std::exp(-eta * (a - f[i]) * (a - f[i]));
  }
  return r.midpoint() + std::log(up / lo) / (2.0 * eta * r.width());
}

TEST(EngineTest, ForecastSolvesInfiniteFixedPoint) {
  auto task = synthetic(40, 5, 0.1, 1);
  Engine engine(task.config);
  const double eta = engine.eta();
  for (std::size_t t = 1; t <= 3; ++t) {
    const double gamma = engine.predict(task.stream[t - 1].signal);
    double lo = task.config.range.lower(), hi = task.config.range.upper();
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double g = fixed_point_map(engine.weights(), engine.pending_forecasts(), mid, eta,
                                       task.config.range) - mid;
      (g > 0.0 ? lo : hi) = mid;
    }
    EXPECT_NEAR(gamma, 0.5 * (lo + hi), 1e-8) << "t=" << t;
    engine.observe(task.stream[t - 1].response);
  }
  EXPECT_EQ(engine.experts().size(), 3u);
}

TEST(EngineTest, ZeroLossStep) {
  EngineConfig config(OutcomeRange(0.0, 1.0), 1);
  Engine engine(config);
  const double gamma = engine.predict(std::vector<double>{0.5});
  const auto& rec = engine.observe(gamma);
  EXPECT_EQ(rec.predictor_loss, 0.0);
  EXPECT_EQ(rec.expert_loss(5), 0.0);
}

TEST(EngineTest, SingleExpertMixlossMatchesDirectEvaluation) {
  EngineConfig config(OutcomeRange(0.0, 1.0), 1);
  config.scheme = MixingScheme::exponential();
  Engine engine(config);
  const double gamma = engine.predict(std::vector<double>{0.5});
  const auto& rec = engine.observe(0.8);
  const double w = prior_weight(1);
  const double eta = 2.0;
  const double l1 = square_loss(0.0, 0.8);
  const double h = square_loss(gamma, 0.8);
  const double direct = -std::log(w * std::exp(-eta * l1) + (1.0 - w) * std::exp(-eta * h)) / eta;
  EXPECT_NEAR(rec.mixloss, direct, 1e-14);
  EXPECT_LE(rec.predictor_loss, rec.mixloss + kMixlossTolerance);
}

TEST(EngineTest, FiftyStepsMatchEagerUniverse) {
  auto task = synthetic(50, 6);
  Engine engine(task.config);
  TruncatedUniverseEngine reference(task.config, 10000);
  for (std::size_t t = 1; t <= 50; ++t) {
    const auto& o = task.stream[t - 1];
    ASSERT_NEAR(engine.predict(o.signal), reference.predict(o.signal), 1e-9) << t;
    const auto& rec = engine.observe(o.response);
    ASSERT_NEAR(rec.mixloss, reference.observe(o.response), 1e-9) << t;
    for (ExpertId i = 1; i <= 10000; ++i) {
      ASSERT_NEAR(engine.weights().weight(i), reference.weight(i), 1e-9) << "t=" << t << " i=" << i;
    }
  }
}

TEST(EngineTest, FixedShareAndExponentialMatchEagerUniverse) {
  for (const auto& scheme : {MixingScheme::fixed_share(0.05), MixingScheme::exponential()}) {
    auto task = synthetic(30, 7);
    task.config.scheme = scheme;
    Engine engine(task.config);
    TruncatedUniverseEngine reference(task.config, 10000);
    for (const auto& o : task.stream) {
      ASSERT_NEAR(engine.predict(o.signal), reference.predict(o.signal), 1e-9);
      engine.observe(o.response);
      reference.observe(o.response);
    }
    for (ExpertId i = 1; i <= 10000; i += 7) {
      EXPECT_NEAR(engine.weights().weight(i), reference.weight(i), 1e-9);
    }
  }
}

TEST(EngineTest, GeneralSchemeMatchesEagerUniverse) {
  // beta puts 0.1 on the prior, 0.2 on w~_{t-1} and 0.7 on w~_t.
  auto task = synthetic(25, 8);
  task.config.scheme = MixingScheme::general([](std::size_t t) {
    std::vector<double> b(t + 1, 0.0);
    if (t == 1) {
      b[0] = 0.3;
      b[1] = 0.7;
    } else {
      b[0] = 0.1;
      b[t - 1] = 0.2;
      b[t] = 0.7;
    }
    return b;
  });
  Engine engine(task.config);
  TruncatedUniverseEngine reference(task.config, 10000);
  for (const auto& o : task.stream) {
    ASSERT_NEAR(engine.predict(o.signal), reference.predict(o.signal), 1e-9);
    engine.observe(o.response);
    reference.observe(o.response);
  }
  for (ExpertId i = 1; i <= 10000; i += 3) {
    EXPECT_NEAR(engine.weights().weight(i), reference.weight(i), 1e-9);
  }
}

TEST(EngineTest, StreamOfLengthOne) {
  auto task = synthetic(1, 9);
  const auto result = run(task.config, task.stream);
  EXPECT_EQ(result.records.size(), 1u);
  EXPECT_EQ(result.experts_created, 1u);
}

TEST(EngineTest, RunsAreBitwiseDeterministic) {
  auto task = synthetic(200, 10, 1.0);
  const auto a = run(task.config, task.stream);
  const auto b = run(task.config, task.stream);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t t = 0; t < a.records.size(); ++t) {
    EXPECT_EQ(a.records[t].gamma, b.records[t].gamma);
    EXPECT_EQ(a.records[t].mixloss, b.records[t].mixloss);
    EXPECT_EQ(a.records[t].forecasts, b.records[t].forecasts);
    EXPECT_EQ(a.records[t].top_weights, b.records[t].top_weights);
  }
}

TEST(EngineTest, PredictorNeverWorseThanMixloss) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto task = synthetic(300, seed, 1.0);
    const auto result = run(task.config, task.stream);
    EXPECT_EQ(result.mixloss_violations, 0u);
    EXPECT_EQ(result.mass_violations, 0u);
    for (const auto& r : result.records) {
      EXPECT_LE(r.predictor_loss, r.mixloss + kMixlossTolerance);
      EXPECT_GE(r.gamma, task.config.range.lower());
      EXPECT_LE(r.gamma, task.config.range.upper());
    }
  }
}

TEST(EngineTest, SingleExpertBoundUnderExponentialScheme) {
  auto task = synthetic(300, 11);
  task.config.scheme = MixingScheme::exponential();
  const auto result = run(task.config, task.stream);
  const auto ledger = RegretLedger::from_records(result.records);
  const double eta = task.config.learning_rate();
  EXPECT_LE(ledger.predictor_total(), ledger.mixloss_total() + 1e-8);
  for (ExpertId i = 1; i <= ledger.expert_count(); ++i) {
    EXPECT_LE(ledger.mixloss_total(), ledger.expert_total(i) + prior_entropy(i) / eta + 1e-8);
  }
}

TEST(EngineTest, ExpertCapStopsCreationButKeepsTail) {
  auto task = synthetic(60, 12);
  task.config.max_experts = 10;
  Engine engine(task.config);
  TruncatedUniverseEngine reference(task.config, 1000);
  for (const auto& o : task.stream) {
    EXPECT_NEAR(engine.predict(o.signal), reference.predict(o.signal), 1e-9);
    engine.observe(o.response);
    reference.observe(o.response);
  }
  EXPECT_EQ(engine.experts().size(), 10u);
  EXPECT_GT(engine.weights().tail_mass(), 0.0);
  EXPECT_NEAR(engine.weights().total_mass(), 1.0, 1e-12);
  for (ExpertId i = 1; i <= 1000; i += 11) {
    EXPECT_NEAR(engine.weights().weight(i), reference.weight(i), 1e-9);
  }
}

TEST(EngineTest, ClampsOutcomes) {
  EngineConfig config(OutcomeRange(0.0, 1.0), 1);
  Engine engine(config);
  engine.predict(std::vector<double>{0.5});
  const auto& rec = engine.observe(3.0);
  EXPECT_TRUE(rec.clamped);
  EXPECT_EQ(rec.y, 1.0);
  EXPECT_EQ(rec.raw_y, 3.0);
  EXPECT_EQ(engine.clamp_count(), 1u);
}

TEST(EngineTest, ProtocolErrors) {
  EngineConfig config(OutcomeRange(0.0, 1.0), 1);
  Engine engine(config);
  EXPECT_THROW(engine.observe(0.5), ProtocolError);
  engine.predict(std::vector<double>{0.5});
  EXPECT_THROW(engine.predict(std::vector<double>{0.5}), ProtocolError);
  EXPECT_THROW(engine.last_posterior(), ContractError);
}

TEST(EngineTest, RejectsSignalOfWrongDimension) {
  EngineConfig config(OutcomeRange(0.0, 1.0), 2);
  Engine engine(config);
  EXPECT_THROW(engine.predict(std::vector<double>{0.5}), ContractError);
}

TEST(EngineConfigTest, Validation) {
  EngineConfig config(OutcomeRange(0.0, 1.0), 2);
  EXPECT_DOUBLE_EQ(config.learning_rate(), 2.0);
  config.eta = 2.5;
  EXPECT_THROW(config.validate(), ConfigError);
  config.eta = 1.0;
  EXPECT_NO_THROW(config.validate());
  config.experts.ridge_sigma = -1.0;
  EXPECT_THROW(config.validate(), ConfigError);
}

}  // namespace
}  // namespace gmpp
