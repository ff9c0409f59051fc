#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "gmpp/errors.hpp"
#include "gmpp/experts.hpp"

namespace gmpp {
namespace {

double objective(std::span<const Observation> window, std::span<const double> a, double sigma) {
  double v = 0.0;
  for (const auto& o : window) {
    double p = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) p += a[j] * o.signal[j];
    v += (p - o.response) * (p - o.response);
  }
  for (double c : a) v += sigma * c * c;
  return v;
}

TEST(RidgeFit, OneDimensionalExample) {
  const std::vector<Observation> w = {{{1.0}, 1.0}, {{2.0}, 2.0}};
  const auto a = ridge_fit(w, 1.0);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_NEAR(a[0], 5.0 / 6.0, 1e-15);
}

TEST(RidgeFit, ZeroResponsesGiveZero) {
  const std::vector<Observation> w = {{{1.0, 2.0}, 0.0}, {{-1.0, 0.5}, 0.0}, {{3.0, 1.0}, 0.0}};
  for (double c : ridge_fit(w, 0.1)) EXPECT_EQ(c, 0.0);
}

TEST(RidgeFit, OrthonormalRowsShrinkMonotonically) {
  // X = I_2, so a_j = y_j / (1 + sigma).
  const std::vector<Observation> w = {{{1.0, 0.0}, 2.0}, {{0.0, 1.0}, -3.0}};
  double prev = INFINITY;
  for (double sigma : {1.0, 10.0, 100.0}) {
    const auto a = ridge_fit(w, sigma);
    EXPECT_NEAR(a[0], 2.0 / (1.0 + sigma), 1e-14);
    EXPECT_NEAR(a[1], -3.0 / (1.0 + sigma), 1e-14);
    const double norm = std::hypot(a[0], a[1]);
    EXPECT_LT(norm, prev);
    prev = norm;
  }
}

TEST(RidgeFit, DimensionMismatchIsContractError) {
  const std::vector<Observation> w = {{{1.0, 2.0}, 1.0}, {{1.0}, 1.0}};
  EXPECT_THROW(ridge_fit(w, 1.0), ContractError);
}

TEST(RidgeFit, Deterministic) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> n;
  std::vector<Observation> w(20);
  for (auto& o : w) o = {{n(rng), n(rng), n(rng)}, n(rng)};
  EXPECT_EQ(ridge_fit(w, 0.01), ridge_fit(w, 0.01));
}

TEST(RidgeFit, ObjectiveIsMinimal) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> n;
  std::vector<Observation> w(15);
  for (auto& o : w) o = {{n(rng), n(rng), n(rng)}, n(rng)};
  const double sigma = 0.5;
  const auto a = ridge_fit(w, sigma);
  const double best = objective(w, a, sigma);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> d = {n(rng), n(rng), n(rng)};
    const double norm = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    std::vector<double> b = a;
    for (std::size_t j = 0; j < 3; ++j) b[j] += 1e-3 * d[j] / norm;
    EXPECT_LE(best, objective(w, b, sigma));
  }
}

TEST(RidgeFit, InterceptColumn) {
  // y = 2x + 5 exactly; with a tiny sigma the intercept is recovered.
  std::vector<Observation> w;
  for (int i = 0; i < 10; ++i) w.push_back({{static_cast<double>(i)}, 2.0 * i + 5.0});
  const auto a = ridge_fit(w, 1e-9, true);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_NEAR(a[0], 2.0, 1e-6);
  EXPECT_NEAR(a[1], 5.0, 1e-6);
}

TEST(LinearExpertTest, Predict) {
  EXPECT_EQ(LinearExpert(1, {0.0, 0.0}).predict(std::vector<double>{4.0, -2.0}), 0.0);
  EXPECT_EQ(LinearExpert(1, {1.0, 0.0, 0.0}).predict(std::vector<double>{3.5, 9.0, 1.0}), 3.5);
  EXPECT_EQ(LinearExpert(1, {0.5, -1.0}).predict(std::vector<double>{2.0, 1.0}), 0.0);
  EXPECT_EQ(LinearExpert(1, {2.0, 1.0}, true).predict(std::vector<double>{3.0}), 7.0);
  EXPECT_THROW(LinearExpert(1, {1.0}).predict(std::vector<double>{1.0, 2.0}), ContractError);
}

std::vector<Observation> noiseless(std::size_t count, const std::vector<double>& a_hat,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Observation> out(count);
  for (auto& o : out) {
    o.signal.resize(a_hat.size());
    o.response = 0.0;
    for (std::size_t j = 0; j < a_hat.size(); ++j) {
      o.signal[j] = u(rng);
      o.response += a_hat[j] * o.signal[j];
    }
  }
  return out;
}

TEST(InitExpert, FallbackBeforeWindowFills) {
  ExpertSettings s;
  s.window = 5;
  const auto history = noiseless(10, {1.0, 2.0}, 1);
  const auto e1 = init_expert(history, 1, 2, s);
  EXPECT_EQ(e1.id(), 1u);
  for (double c : e1.coefficients()) EXPECT_EQ(c, 0.0);
  const auto e5 = init_expert(history, 5, 2, s);
  for (double c : e5.coefficients()) EXPECT_EQ(c, 0.0);
  s.fallback = {0.5, -0.5};
  EXPECT_EQ(init_expert(history, 2, 2, s).coefficients()[0], 0.5);
}

TEST(InitExpert, WindowBoundary) {
  ExpertSettings s;
  s.window = 4;
  const auto history = noiseless(10, {1.0, -1.0}, 2);
  const auto e = init_expert(history, 5, 2, s);
  const auto direct = ridge_fit(std::span(history).subspan(0, 4), s.ridge_sigma);
  EXPECT_EQ(std::vector<double>(e.coefficients().begin(), e.coefficients().end()), direct);
  const auto later = init_expert(history, 9, 2, s);
  const auto direct_later = ridge_fit(std::span(history).subspan(4, 4), s.ridge_sigma);
  EXPECT_EQ(std::vector<double>(later.coefficients().begin(), later.coefficients().end()),
            direct_later);
}

TEST(InitExpert, PerturbationBoundOnNoiselessData) {
  const std::vector<double> a_hat = {0.7, -0.4, 0.9};
  ExpertSettings s;
  s.window = 20;
  s.ridge_sigma = 0.01;
  const auto history = noiseless(30, a_hat, 3);
  const std::size_t t = s.window + 5;
  const auto e = init_expert(history, t, 3, s);
  Eigen::MatrixXd x(s.window, 3);
  for (std::size_t r = 0; r < s.window; ++r) {
    for (std::size_t j = 0; j < 3; ++j) x(r, j) = history[t - 1 - s.window + r].signal[j];
  }
  const Eigen::MatrixXd gram = x.transpose() * x;
  const double lambda_min = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram).eigenvalues()(0);
  double err = 0.0, norm = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    err += std::pow(e.coefficients()[j] - a_hat[j], 2);
    norm += a_hat[j] * a_hat[j];
  }
  EXPECT_LE(std::sqrt(err), s.ridge_sigma * std::sqrt(norm) / lambda_min);
}

TEST(InitExpert, InWindowErrorVanishesAsSigmaShrinks) {
  const std::vector<double> a_hat = {0.3, 0.8};
  const auto history = noiseless(12, a_hat, 4);
  double prev = INFINITY;
  for (double sigma : {1e-1, 1e-3, 1e-5, 1e-7}) {
    const auto a = ridge_fit(std::span(history).subspan(0, 10), sigma);
    double sq = 0.0;
    for (std::size_t r = 0; r < 10; ++r) {
      const double p = a[0] * history[r].signal[0] + a[1] * history[r].signal[1];
      sq += std::pow(p - history[r].response, 2);
    }
    EXPECT_LT(sq, prev);
    prev = sq;
  }
  EXPECT_LT(prev, 1e-12);
}

TEST(ExpertSettingsTest, Validate) {
  ExpertSettings s;
  s.window = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  s.window = 3;
  s.ridge_sigma = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
}

}  // namespace
}  // namespace gmpp
