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
#include "ipwz/policy.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ipwz/env.h"
#include "ipwz/error.h"
#include "ipwz/stats.h"
#include "simplex_oracle.h"
#include "test_util.h"

namespace ipwz {
namespace {

using nlohmann::json;
using testing::Distance;
using testing::ProjectedGradientOracle;

// Exhaustive KKT enumeration over the set of coordinates held at the floor.
std::vector<double> KktOracle(const std::vector<double>& v, double floor) {
  const int k = static_cast<int>(v.size());
  for (int mask = 0; mask < (1 << k) - 1; ++mask) {
    int fixed = 0;
    double free_sum = 0.0;
    for (int i = 0; i < k; ++i) {
      if (mask >> i & 1) {
        ++fixed;
      } else {
        free_sum += v[i];
      }
    }
    const double nu = (free_sum - (1.0 - fixed * floor)) / (k - fixed);
    bool ok = true;
    std::vector<double> p(k);
    for (int i = 0; i < k; ++i) {
      if (mask >> i & 1) {
        p[i] = floor;
        ok = ok && v[i] - nu <= floor + 1e-14;
      } else {
        p[i] = v[i] - nu;
        ok = ok && p[i] >= floor - 1e-14;
      }
    }
    if (ok) return p;
  }
  ADD_FAILURE() << "no KKT point";
  return {};
}

void ExpectProbs(const std::vector<double>& actual, const std::vector<double>& expected,
                 double tol = 1e-12) {
  ASSERT_EQ(actual.size(), expected.size());
  for (std::size_t i = 0; i < actual.size(); ++i) {
    EXPECT_NEAR(actual[i], expected[i], tol) << "entry " << i;
  }
}

TEST(ClipSimplexTest, Examples) {
  ExpectProbs(ClipSimplex(std::vector<double>{0.5, 0.5}, 0.05), {0.5, 0.5});
  ExpectProbs(ClipSimplex(std::vector<double>{0.9, 0.1}, 0.25), {0.75, 0.25});
  ExpectProbs(ClipSimplex(std::vector<double>{1.0, 0.0, 0.0}, 0.1), {0.8, 0.1, 0.1});
}

TEST(ClipSimplexTest, ExamplesMatchOracles) {
  for (const auto& [v, floor] :
       std::vector<std::pair<std::vector<double>, double>>{{{0.9, 0.1}, 0.25},
                                                           {{1.0, 0.0, 0.0}, 0.1}}) {
    EXPECT_LT(Distance(ProjectedGradientOracle(v, floor), ClipSimplex(v, floor)), 1e-8);
    EXPECT_LT(Distance(KktOracle(v, floor), ClipSimplex(v, floor)), 1e-12);
  }
}

TEST(ClipSimplexTest, MatchesProjectedGradientOracle) {
  testing::Gen gen(7);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = gen.Int(2, 5);
    const auto v = gen.SimplexPoint(k);
    const double floor = gen.Uniform(0.0, 1.0 / k);
    const auto clipped = ClipSimplex(v, floor);
    worst = std::max(worst, Distance(clipped, ProjectedGradientOracle(v, floor)));
    EXPECT_LT(Distance(clipped, KktOracle(v, floor)), 1e-12);
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(ClipSimplexTest, OutputIsFeasible) {
  testing::Gen gen(8);
  for (int trial = 0; trial < 2000; ++trial) {
    const int k = gen.Int(2, 8);
    const double floor = gen.Uniform(0.0, 1.0 / k);
    const auto p = ClipSimplex(gen.SimplexPoint(k), floor);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    for (double v : p) EXPECT_GE(v, floor);
  }
}

TEST(ClipSimplexTest, LipschitzBound) {
  testing::Gen gen(9);
  for (int trial = 0; trial < 10000; ++trial) {
    const int k = gen.Int(2, 5);
    const double floor = gen.Uniform(0.0, 1.0 / k);
    const auto p = gen.SimplexPoint(k), q = gen.SimplexPoint(k);
    EXPECT_LE(Distance(ClipSimplex(p, floor), ClipSimplex(q, floor)),
              (k + 1) * Distance(p, q) + 1e-12);
  }
}

TEST(ClipSimplexTest, InfeasibleFloor) {
  EXPECT_THROW(ClipSimplex(std::vector<double>{0.5, 0.5}, 0.6), ConfigError);
}

TEST(MabTest, EpsGreedyExample) {
  ExpectProbs(EpsGreedyDistribution(std::vector<double>{1.0, 0.5}, 0.2), {0.9, 0.1});
}

TEST(MabTest, UcbExample) {
  const std::vector<double> means = {1.0, 0.5};
  const std::vector<int> counts = {100, 1};
  ExpectProbs(UcbDistribution(means, counts, 2.0, 0.05), {0.05, 0.95});
}

TEST(MabTest, UcbPrefersUnpulledArm) {
  const std::vector<double> means = {5.0, 0.0, 0.0};
  const std::vector<int> counts = {10, 3, 0};
  ExpectProbs(UcbDistribution(means, counts, 2.0, 0.1), {0.1, 0.1, 0.8});
}

TEST(MabTest, ArgmaxInvariantToCommonShift) {
  testing::Gen gen(10);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = gen.Int(2, 5);
    std::vector<double> means(k), shifted(k);
    std::vector<int> counts(k);
    const double c = gen.Normal(0.0, 10.0);
    for (int a = 0; a < k; ++a) {
      means[a] = gen.Normal();
      shifted[a] = means[a] + c;
      counts[a] = gen.Int(1, 50);
    }
    EXPECT_EQ(EpsGreedyDistribution(means, 0.3), EpsGreedyDistribution(shifted, 0.3));
    EXPECT_EQ(UcbDistribution(means, counts, 1.5, 0.05),
              UcbDistribution(shifted, counts, 1.5, 0.05));
  }
}

TEST(MabTest, TsSymmetricPosteriors) {
  PolicyState state;
  state.counts = {4, 4};
  state.means = {0.3, 0.3};
  PolicyConfig config;
  config.kind = PolicyKind::kTsMab;
  ExpectProbs(MabDistribution(PolicyKind::kTsMab, state, config), {0.5, 0.5});
}

TEST(TsOptimalProbTest, Examples) {
  const auto two = TsOptimalProb(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0, 1.0});
  EXPECT_NEAR(two[1], 0.5 * std::erfc(-1.0 / 2.0), 1e-9);
  EXPECT_NEAR(two[1], 0.760250, 1e-6);
  ExpectProbs(TsOptimalProb(std::vector<double>{0.2, 0.2, 0.2},
                            std::vector<double>{2.0, 2.0, 2.0}),
              {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 1e-9);
  ExpectProbs(TsOptimalProb(std::vector<double>{1.0, 0.0},
                            std::vector<double>{1e-12, 1e-12}),
              {1.0, 0.0}, 1e-6);
  EXPECT_THROW(TsOptimalProb(std::vector<double>{0.0, 0.0}, std::vector<double>{1.0, 0.0}),
               InputError);
}

TEST(TsOptimalProbTest, MatchesMonteCarlo) {
  testing::Gen gen(11);
  for (int trial = 0; trial < 8; ++trial) {
    const int k = gen.Int(2, 4);
    std::vector<double> means(k), vars(k);
    for (int a = 0; a < k; ++a) {
      means[a] = gen.Normal();
      vars[a] = gen.Uniform(0.05, 2.0);
    }
    std::vector<double> wins(k, 0.0);
    const int draws = 200000;
    for (int i = 0; i < draws; ++i) {
      int best = 0;
      double top = -INFINITY;
      for (int a = 0; a < k; ++a) {
        const double v = gen.Normal(means[a], std::sqrt(vars[a]));
        if (v > top) {
          top = v;
          best = a;
        }
      }
      wins[best] += 1.0 / draws;
    }
    ExpectProbs(TsOptimalProb(means, vars), wins, 0.01);
  }
}

TEST(BoltzmannTest, Examples) {
  const Vector x = Vector::Ones(1);
  std::vector<Vector> equal(3, Vector::Constant(1, 0.7));
  ExpectProbs(BoltzmannDistribution(equal, x, 0.3, 0.05), {1 / 3.0, 1 / 3.0, 1 / 3.0});
  const double gamma = 2.5;
  std::vector<Vector> beta = {Vector::Zero(1), Vector::Constant(1, gamma * std::log(3.0))};
  ExpectProbs(BoltzmannDistribution(beta, x, gamma, 0.2), {0.25, 0.75});
  std::vector<Vector> fixed = {Vector::Constant(1, -3.0), Vector::Constant(1, 5.0)};
  ExpectProbs(BoltzmannDistribution(fixed, x, 1e9, 0.05), {0.5, 0.5}, 1e-6);
}

TEST(BoltzmannTest, StableForHugeScores) {
  std::vector<Vector> beta = {Vector::Constant(1, 1e6), Vector::Constant(1, -1e6)};
  const auto p = BoltzmannDistribution(beta, Vector::Ones(1), 1e-3, 0.05);
  ExpectProbs(p, {0.95, 0.05});
}

PolicyConfig Config(PolicyKind kind, double pi_min = 0.05) {
  PolicyConfig config;
  config.kind = kind;
  config.pi_min = pi_min;
  return config;
}

TEST(LinUcbTest, TieGoesToFirstArm) {
  const Policy policy(Config(PolicyKind::kLinUcb, 0.01), 2, 1, ScoreTarget::MisspecLinear());
  const auto state = policy.InitialState();
  ExpectProbs(policy.Distribution(state, Vector::Ones(1)), {0.99, 0.01});
}

TEST(LinUcbTest, RidgeIndexByHand) {
  const Policy policy(Config(PolicyKind::kLinUcb, 0.05), 2, 1, ScoreTarget::MisspecLinear());
  auto state = policy.InitialState();
  const Vector x = Vector::Constant(1, 2.0);
  policy.Update(state, x, 0, 0.5, 3.0);
  EXPECT_NEAR(state.ridge_beta[0](0), 6.0 / 5.0, 1e-15);
  EXPECT_NEAR(state.ridge_beta[0].dot(x), 2.4, 1e-15);
  ExpectProbs(LinUcbDistribution(state, x, 0.0, 0.05), {0.95, 0.05});
  ExpectProbs(LinUcbDistribution(state, -x, 0.0, 0.05), {0.05, 0.95});
}

TEST(SelectTest, RandomPolicyPropensity) {
  const Policy policy(Config(PolicyKind::kRandom), 4, 1, ScoreTarget::MisspecLinear());
  const auto state = policy.InitialState();
  RandomStream rng(1);
  std::vector<int> seen(4, 0);
  for (int i = 0; i < 1000; ++i) {
    const auto choice = policy.Select(state, Vector::Zero(1), rng);
    EXPECT_EQ(choice.propensity, 0.25);
    ++seen[choice.arm];
  }
  for (int c : seen) EXPECT_GT(c, 0);
}

TEST(SelectTest, SameStreamSameArm) {
  const Policy policy(Config(PolicyKind::kEpsGreedyMab), 3, 1, ScoreTarget::MisspecLinear());
  const auto state = policy.InitialState();
  RandomStream a(4), b(4);
  for (int i = 0; i < 200; ++i) {
    EXPECT_EQ(policy.Select(state, Vector::Zero(1), a).arm,
              policy.Select(state, Vector::Zero(1), b).arm);
  }
}

TEST(UpdateTest, SgdOneStep) {
  PolicyConfig config = Config(PolicyKind::kBoltzmannSgd);
  config.sgd_rate = 0.1;
  const Policy policy(config, 2, 1, ScoreTarget::MisspecLinear());
  auto state = policy.InitialState();
  policy.Update(state, Vector::Ones(1), 0, 0.5, 2.0);
  EXPECT_NEAR(state.sgd_beta[0](0), 0.2, 1e-15);
  EXPECT_EQ(state.sgd_beta[1](0), 0.0);
  EXPECT_EQ(state.sgd_clip_count, 0);
}

TEST(UpdateTest, RidgeFirstObservation) {
  const Policy policy(Config(PolicyKind::kBoltzmannRidge), 2, 1, ScoreTarget::MisspecLinear());
  auto state = policy.InitialState();
  policy.Update(state, Vector::Constant(1, 2.0), 1, 0.5, 3.0);
  EXPECT_NEAR(state.ridge_beta[1](0), 1.2, 1e-15);
  EXPECT_EQ(state.ridge_beta[0](0), 0.0);
}

TEST(UpdateTest, RidgeRecursiveMatchesBatch) {
  const auto env = BuildEnvironment("nc_gaussian", {{"d", 3}, {"K", 3}}, 2);
  const Policy policy(Config(PolicyKind::kBoltzmannRidge), 3, 3, ScoreTarget::MisspecLinear());
  auto state = policy.InitialState();
  RandomStream rng(5);
  std::vector<std::vector<std::pair<Vector, double>>> seen(3);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto draw = SampleRound(env, rng);
    const auto choice = policy.Select(state, draw.context, rng);
    const double y = draw.potential_outcomes(choice.arm);
    policy.Update(state, draw.context, choice.arm, choice.propensity, y);
    seen[choice.arm].emplace_back(draw.context, y);
    for (int a = 0; a < 3; ++a) {
      Matrix gram = Matrix::Identity(3, 3);
      Vector cross = Vector::Zero(3);
      for (const auto& [x, yy] : seen[a]) {
        gram += x * x.transpose();
        cross += yy * x;
      }
      const Vector batch = gram.colPivHouseholderQr().solve(cross);
      worst = std::max(worst, (batch - state.ridge_beta[a]).cwiseAbs().maxCoeff());
    }
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(UpdateTest, IpwzGreedyFallsBackToUniform) {
  const Policy policy(Config(PolicyKind::kIpwzGreedy), 3, 2, ScoreTarget::MisspecLinear());
  auto state = policy.InitialState();
  const Vector x = Vector::Ones(2);
  ExpectProbs(policy.Distribution(state, x), {1 / 3.0, 1 / 3.0, 1 / 3.0});
  policy.Update(state, x, 0, 1 / 3.0, 1.0);
  policy.Update(state, -x, 0, 1 / 3.0, 1.0);
  ExpectProbs(policy.Distribution(state, x), {1 / 3.0, 1 / 3.0, 1 / 3.0});
}

TEST(PolicyPropertyTest, ClippedDistributionsRespectFloor) {
  const double pi_min = 0.04;
  for (const char* name : {"nc_gaussian", "nc_hard2", "ms_neural"}) {
    const auto env = BuildEnvironment(name, json::object(), 1);
    for (PolicyKind kind : AllPolicyKinds()) {
      const Policy policy(Config(kind, pi_min), env.num_arms, env.context_dim,
                          ResolveTarget(ScoreTarget::MisspecLinear(), env));
      auto state = policy.InitialState();
      RandomStream rng(12);
      for (int t = 0; t < 400; ++t) {
        const auto draw = SampleRound(env, rng);
        const auto choice = policy.Select(state, draw.context, rng);
        const double sum = std::accumulate(choice.probs.begin(), choice.probs.end(), 0.0);
        ASSERT_NEAR(sum, 1.0, 1e-12) << PolicyKindName(kind);
        for (double p : choice.probs) ASSERT_GE(p, pi_min - 1e-15) << PolicyKindName(kind);
        ASSERT_GE(choice.propensity, pi_min - 1e-15);
        policy.Update(state, draw.context, choice.arm, choice.propensity,
                      draw.potential_outcomes(choice.arm));
      }
    }
  }
}

TEST(PolicyConfigTest, Validation) {
  EXPECT_THROW(Config(PolicyKind::kRandom, 0.6).Validate(2), ConfigError);
  PolicyConfig eps = Config(PolicyKind::kEpsGreedyMab, 0.05);
  eps.epsilon = 0.05;
  try {
    eps.Validate(2);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "policy.epsilon");
  }
  PolicyConfig sgd = Config(PolicyKind::kBoltzmannSgd);
  sgd.sgd_power = 0.5;
  EXPECT_THROW(sgd.Validate(2), ConfigError);
  EXPECT_THROW(ParsePolicyKind("softmax"), ConfigError);
}

TEST(PolicyConfigTest, JsonRoundTrip) {
  PolicyConfig config = Config(PolicyKind::kTsMab, 0.02);
  config.ts_mu0 = 0.5;
  config.gamma = 7.0;
  config.working_target = ScoreTarget::Ope();
  const auto back = PolicyConfig::FromJson(config.ToJson());
  EXPECT_EQ(back.ToJson(), config.ToJson());
  EXPECT_THROW(PolicyConfig::FromJson({{"kind", "random"}, {"bogus", 1}}), ConfigError);
}

TEST(PolicyConfigTest, Schedules) {
  PolicyConfig config;
  EXPECT_NEAR(config.UcbRadius(10), 2.0 * std::log(10.0), 1e-15);
  EXPECT_NEAR(config.SgdRate(1), config.sgd_rate, 1e-15);
  EXPECT_NEAR(config.Epsilon(5, 2), 2 * config.pi_min, 1e-15);
}

}  // namespace
}  // namespace ipwz
