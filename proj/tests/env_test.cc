/*
* Copyright 2026 The ipwz Authors.
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     https://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
* ============================================================================
*/
#include "ipwz/env.h"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "ipwz/error.h"
#include "ipwz/rng.h"
#include "test_util.h"

namespace ipwz {
namespace {

using nlohmann::json;

Vector Scalar(double v) { return Vector::Constant(1, v); }

TEST(BuildEnvironmentTest, NonconvDemo) {
  const auto env = BuildEnvironment("nonconv_demo", json::object(), 0);
  EXPECT_EQ(env.num_arms, 2);
  EXPECT_EQ(env.context_dim, 1);
  EXPECT_FALSE(env.has_latent());
  const auto support = env.ObservedSupport();
  ASSERT_TRUE(support.has_value());
  std::set<double> points;
  for (const auto& x : *support) points.insert(x(0));
  EXPECT_EQ(points, (std::set<double>{-4.0, 1.0}));
  for (double x : {-4.0, 1.0}) {
    EXPECT_DOUBLE_EQ(env.MeanReward(Scalar(x), 0), 0.5);
    EXPECT_DOUBLE_EQ(env.MeanReward(Scalar(x), 1), 1.0 / 12.0);
  }
  EXPECT_GT(env.reward_noise_sd, 0.0);
}

TEST(BuildEnvironmentTest, NcHard1) {
  const auto env = BuildEnvironment("nc_hard1", json::object(), 0);
  EXPECT_EQ(env.context_dim, 1);
  EXPECT_EQ(env.num_arms, 2);
  ASSERT_TRUE(env.has_latent());
  EXPECT_DOUBLE_EQ(env.MeanReward(Scalar(-1.0), 0), -3.0);
  EXPECT_DOUBLE_EQ(env.MeanReward(Scalar(-1.0), 1), -1.0);
  const auto& table = std::get<TableNoise>(env.latent_noise);
  std::map<std::pair<double, double>, double> probs;
  for (const auto& e : table.entries) probs[{e.given(0), e.value(0)}] += e.prob;
  EXPECT_NEAR((probs[{0.0, 1.0}]), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR((probs[{0.0, -2.0}]), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR((probs[{-1.0, -2.0}]), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR((probs[{-1.0, 1.0}]), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(env.SigmaE()(0, 0), 2.0, 1e-12);
}

TEST(BuildEnvironmentTest, NcHard2FlipsCoefficients) {
  const auto env = BuildEnvironment("nc_hard2", json::object(), 0);
  EXPECT_DOUBLE_EQ(env.MeanReward(Scalar(-1.0), 0), 3.0);
  EXPECT_DOUBLE_EQ(env.MeanReward(Scalar(-1.0), 1), 1.0);
}

TEST(BuildEnvironmentTest, PolynomialOfDegreeOneIsLinear) {
  const json params = {{"degree", 1}, {"theta", {{0.7}, {-1.3}}}};
  const auto env = BuildEnvironment("ms_polynomial", params, 0);
  for (double x : {-2.0, -0.5, 0.0, 1.0, 3.0}) {
    EXPECT_NEAR(env.MeanReward(Scalar(x), 0), 0.7 * x, 1e-15);
    EXPECT_NEAR(env.MeanReward(Scalar(x), 1), -1.3 * x, 1e-15);
  }
  const auto exact = ExactOracle(env, ScoreTarget::MisspecLinear(), 0);
  ASSERT_TRUE(exact.has_value());
  EXPECT_NEAR((*exact)(0), 0.7, 1e-12);
}

TEST(BuildEnvironmentTest, RandomParametersFollowSeed) {
  const auto a = BuildEnvironment("nc_gaussian", json::object(), 1);
  const auto b = BuildEnvironment("nc_gaussian", json::object(), 1);
  const auto c = BuildEnvironment("nc_gaussian", json::object(), 2);
  EXPECT_EQ(a.resolved_params, b.resolved_params);
  EXPECT_NE(a.resolved_params["theta"], c.resolved_params["theta"]);
  EXPECT_EQ(a.context_dim, 2);
}

TEST(BuildEnvironmentTest, ResolvedParamsRoundTrip) {
  for (const auto& name : EnvironmentNames()) {
    const auto env = BuildEnvironment(name, json::object(), 17);
    const auto again = EnvironmentFromJson(EnvironmentToJson(env));
    EXPECT_EQ(again.resolved_params, env.resolved_params) << name;
    RandomStream r1(3), r2(3);
    for (int i = 0; i < 20; ++i) {
      const auto d1 = SampleRound(env, r1);
      const auto d2 = SampleRound(again, r2);
      EXPECT_EQ(d1.context, d2.context) << name;
      EXPECT_EQ(d1.potential_outcomes, d2.potential_outcomes) << name;
    }
  }
}

TEST(BuildEnvironmentTest, Errors) {
  EXPECT_THROW(BuildEnvironment("no_such_env", json::object(), 0), ConfigError);
  try {
    BuildEnvironment("nc_hard1", {{"bogus", 1}}, 0);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "params.bogus");
  }
  EXPECT_THROW(BuildEnvironment("nc_gaussian", {{"sigma_s", {{1.0, 2.0}, {2.0, 1.0}}}}, 0),
               ConfigError);
}

TEST(SampleRoundTest, NoiselessNonconvDemo) {
  const auto env = BuildEnvironment("nonconv_demo", {{"sigma_eta", 0.0}}, 0);
  RandomStream rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto draw = SampleRound(env, rng);
    EXPECT_EQ(draw.potential_outcomes(0), 0.5);
    EXPECT_EQ(draw.potential_outcomes(1), 1.0 / 12.0);
  }
}

TEST(SampleRoundTest, NcHard1Supports) {
  const auto env = BuildEnvironment("nc_hard1", json::object(), 0);
  RandomStream rng(2);
  for (int i = 0; i < 5000; ++i) {
    const auto draw = SampleRound(env, rng);
    ASSERT_TRUE(draw.latent.has_value());
    EXPECT_TRUE(draw.context(0) == 1.0 || draw.context(0) == -2.0);
    EXPECT_TRUE((*draw.latent)(0) == 0.0 || (*draw.latent)(0) == -1.0);
  }
}

TEST(SampleRoundTest, Reproducible) {
  for (const auto& name : EnvironmentNames()) {
    const auto env = BuildEnvironment(name, json::object(), 4);
    RandomStream a(9), b(9);
    for (int i = 0; i < 100; ++i) {
      const auto d1 = SampleRound(env, a);
      const auto d2 = SampleRound(env, b);
      ASSERT_EQ(d1.context, d2.context);
      ASSERT_EQ(d1.potential_outcomes, d2.potential_outcomes);
      ASSERT_EQ(d1.latent.has_value(), d2.latent.has_value());
    }
  }
}

TEST(EnvironmentInvariantTest, TableNoiseHasZeroConditionalMean) {
  for (const char* name : {"nc_hard1", "nc_hard2"}) {
    const auto env = BuildEnvironment(name, json::object(), 0);
    const auto& table = std::get<TableNoise>(env.latent_noise);
    std::map<double, double> mean, mass;
    for (const auto& e : table.entries) {
      mean[e.given(0)] += e.prob * (e.value(0) - e.given(0));
      mass[e.given(0)] += e.prob;
    }
    for (const auto& [s, m] : mean) {
      EXPECT_NEAR(m, 0.0, 1e-15) << name << " s=" << s;
      EXPECT_NEAR(mass[s], 1.0, 1e-15);
    }
  }
}

TEST(EnvironmentInvariantTest, GaussianNoiseMeanAndCovariance) {
  const json params = {{"sigma_s", {{2.0, 0.5}, {0.5, 1.0}}}, {"sigma_e", 0.5}};
  const auto env = BuildEnvironment("nc_gaussian", params, 3);
  RandomStream rng(21);
  const int n = 100000;
  Vector mean_e = Vector::Zero(2), mean_es = Vector::Zero(2);
  Matrix cov_x = Matrix::Zero(2, 2), cov_s = Matrix::Zero(2, 2);
  for (int i = 0; i < n; ++i) {
    const auto draw = SampleRound(env, rng);
    const Vector e = draw.context - *draw.latent;
    mean_e += e;
    mean_es += e.cwiseProduct(*draw.latent);
    cov_x += draw.context * draw.context.transpose();
    cov_s += *draw.latent * draw.latent->transpose();
  }
  mean_e /= n;
  mean_es /= n;
  cov_x /= n;
  cov_s /= n;
  Matrix sigma_s(2, 2);
  sigma_s << 2.0, 0.5, 0.5, 1.0;
  const Matrix sigma_x = sigma_s + 0.5 * Matrix::Identity(2, 2);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(mean_e(i), 0.0, 3.0 * std::sqrt(0.5 / n));
    EXPECT_NEAR(mean_es(i), 0.0, 3.0 * std::sqrt(0.5 * sigma_s(i, i) / n));
    for (int j = 0; j < 2; ++j) {
      const double se_x = std::sqrt((sigma_x(i, i) * sigma_x(j, j) + sigma_x(i, j) * sigma_x(i, j)) / n);
      const double se_s = std::sqrt((sigma_s(i, i) * sigma_s(j, j) + sigma_s(i, j) * sigma_s(i, j)) / n);
      EXPECT_NEAR(cov_x(i, j), sigma_x(i, j), 3.0 * se_x);
      EXPECT_NEAR(cov_s(i, j), sigma_s(i, j), 3.0 * se_s);
    }
  }
  EXPECT_NEAR((env.SigmaE() - 0.5 * Matrix::Identity(2, 2)).norm(), 0.0, 1e-15);
}

TEST(OracleTest, NonconvDemoMisspecifiedExact) {
  const auto env = BuildEnvironment("nonconv_demo", json::object(), 0);
  const auto exact = ExactOracle(env, ScoreTarget::MisspecLinear(), 0);
  ASSERT_TRUE(exact.has_value());
  // E[X Y(a0)] / E[X^2] with X uniform on {-4, 1} and mean 1/2.
  EXPECT_NEAR((*exact)(0), -3.0 / 34.0, 1e-15);
}

TEST(OracleTest, NonconvDemoOpeValue) {
  const auto env = BuildEnvironment("nonconv_demo", json::object(), 0);
  const auto target = ScoreTarget::Ope(TargetPolicy::Uniform());
  double value = 0.0;
  for (int a = 0; a < 2; ++a) value += (*ExactOracle(env, target, a))(0);
  EXPECT_NEAR(value, 7.0 / 24.0, 1e-15);
}

TEST(OracleTest, NcHardNoisyTargetRecoversCoefficients) {
  const auto env1 = BuildEnvironment("nc_hard1", json::object(), 0);
  const auto env2 = BuildEnvironment("nc_hard2", json::object(), 0);
  ScoreTarget target;
  target.family = TargetFamily::kNoisyContext;
  target.sigma_source = SigmaSource::kFromEnvironment;
  EXPECT_NEAR((*ExactOracle(env1, ResolveTarget(target, env1), 0))(0), 3.0, 1e-12);
  EXPECT_NEAR((*ExactOracle(env1, ResolveTarget(target, env1), 1))(0), 1.0, 1e-12);
  EXPECT_NEAR((*ExactOracle(env2, ResolveTarget(target, env2), 0))(0), -3.0, 1e-12);
}

TEST(OracleTest, ExactAgreesWithMonteCarloOnFiniteSupport) {
  ScoreTarget noisy;
  noisy.family = TargetFamily::kNoisyContext;
  const std::vector<ScoreTarget> targets = {
      ScoreTarget::MisspecLinear(), noisy,
      ScoreTarget::Ope(TargetPolicy::Fixed({0.3, 0.7}))};
  for (const char* name : {"nonconv_demo", "nc_hard1", "nc_hard2"}) {
    const auto env = BuildEnvironment(name, json::object(), 0);
    for (const auto& raw : targets) {
      if (raw.family == TargetFamily::kNoisyContext && !env.has_latent()) continue;
      const ScoreTarget target = ResolveTarget(raw, env);
      for (int arm = 0; arm < env.num_arms; ++arm) {
        const auto exact = ExactOracle(env, target, arm);
        ASSERT_TRUE(exact.has_value());
        const auto mc = MonteCarloOracle(env, target, arm, 400000, 77 + arm);
        for (Eigen::Index i = 0; i < exact->size(); ++i) {
          EXPECT_GT(mc.std_error(i), 0.0);
          EXPECT_LE(std::abs(mc.theta(i) - (*exact)(i)), 3.0 * mc.std_error(i))
              << name << " " << TargetFamilyName(raw.family) << " arm " << arm;
        }
      }
    }
  }
}

TEST(OracleTest, GaussianClosedFormsAgreeWithMonteCarlo) {
  ScoreTarget noisy;
  noisy.family = TargetFamily::kNoisyContext;
  const std::vector<std::pair<std::string, ScoreTarget>> cases = {
      {"nc_gaussian", ScoreTarget::MisspecLinear()},
      {"nc_gaussian", noisy},
      {"ms_polynomial", ScoreTarget::MisspecLinear()},
      {"ms_neural", ScoreTarget::MisspecLinear()},
      {"ms_neural", ScoreTarget::Ope(TargetPolicy::Uniform())}};
  for (const auto& [name, raw] : cases) {
    const auto env = BuildEnvironment(name, json::object(), 5);
    const ScoreTarget target = ResolveTarget(raw, env);
    for (int arm = 0; arm < env.num_arms; ++arm) {
      const auto exact = ExactOracle(env, target, arm);
      ASSERT_TRUE(exact.has_value()) << name;
      const auto mc = MonteCarloOracle(env, target, arm, 400000, 99 + arm);
      for (Eigen::Index i = 0; i < exact->size(); ++i) {
        EXPECT_LE(std::abs(mc.theta(i) - (*exact)(i)), 3.5 * mc.std_error(i))
            << name << " " << TargetFamilyName(raw.family) << " arm " << arm;
      }
    }
  }
}

TEST(OracleTest, MonteCarloIsDeterministicAcrossParallelism) {
  const auto env = BuildEnvironment("ms_neural", json::object(), 5);
  const auto a = MonteCarloOracle(env, ScoreTarget::MisspecLinear(), 0, 100000, 3, true);
  const auto b = MonteCarloOracle(env, ScoreTarget::MisspecLinear(), 0, 100000, 3, false);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(a.std_error, b.std_error);
}

TEST(ResolveTargetTest, FillsSigmaFromEnvironment) {
  const auto env = BuildEnvironment("nc_hard1", json::object(), 0);
  ScoreTarget target;
  target.family = TargetFamily::kNoisyContext;
  target.sigma_source = SigmaSource::kFromEnvironment;
  EXPECT_NEAR(ResolveTarget(target, env).sigma_e(0, 0), 2.0, 1e-12);
  const auto plain = BuildEnvironment("nonconv_demo", json::object(), 0);
  EXPECT_THROW(ResolveTarget(ScoreTarget::NoisyContext(Matrix::Ones(2, 2)), plain),
               ConfigError);
}

}  // namespace
}  // namespace ipwz
