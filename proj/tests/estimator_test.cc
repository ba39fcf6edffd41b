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
#include "ipwz/estimator.h"

#include <gtest/gtest.h>

#include <cmath>

#include "ipwz/env.h"
#include "ipwz/error.h"
#include "ipwz/harness.h"
#include "test_util.h"

namespace ipwz {
namespace {

using nlohmann::json;

Vector Scalar(double v) { return Vector::Constant(1, v); }

TEST(IpwzSolveTest, OpeSelfNormalizedMean) {
  BanditLog log(1, 2);
  log.Append(Scalar(0.0), std::nullopt, 0, 0.5, 1.0);
  log.Append(Scalar(0.0), std::nullopt, 0, 0.5, 3.0);
  const auto target = ScoreTarget::Ope(TargetPolicy::Fixed({1.0, 0.0}));
  EXPECT_NEAR(IpwzSolve(log, target, 0)(0), 2.0, 1e-15);
}

TEST(IpwzSolveTest, MisspecifiedEqualsLeastSquaresWithUnitWeights) {
  BanditLog log(1, 2);
  log.Append(Scalar(1.0), std::nullopt, 0, 1.0, 2.0);
  log.Append(Scalar(2.0), std::nullopt, 0, 1.0, 4.0);
  EXPECT_NEAR(IpwzSolve(log, ScoreTarget::MisspecLinear(), 0)(0), 2.0, 1e-15);
}

TEST(IpwzSolveTest, ConstantPropensityMatchesOlsOracle) {
  testing::Gen gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = gen.Int(1, 4);
    const int n = 50;
    BanditLog log(d, 2);
    Matrix design(n, d);
    Vector response(n);
    for (int i = 0; i < n; ++i) {
      const Vector x = gen.NormalVector(d);
      const double y = gen.Normal(x.sum(), 1.0);
      log.Append(x, std::nullopt, 1, 0.3, y);
      design.row(i) = x.transpose();
      response(i) = y;
    }
    const Vector ols = design.colPivHouseholderQr().solve(response);
    EXPECT_LT((IpwzSolve(log, ScoreTarget::MisspecLinear(), 1) - ols).norm(), 1e-10);
  }
}

TEST(IpwzSolveTest, NoDataForArm) {
  BanditLog log(1, 3);
  log.Append(Scalar(1.0), std::nullopt, 0, 0.5, 1.0);
  try {
    IpwzSolve(log, ScoreTarget::MisspecLinear(), 2);
    FAIL();
  } catch (const NoDataForArm& e) {
    EXPECT_EQ(e.arm(), 2);
  }
}

TEST(IpwzSolveTest, SingularDesign) {
  BanditLog log(2, 2);
  Vector x(2);
  x << 1.0, 1.0;
  log.Append(x, std::nullopt, 0, 0.5, 1.0);
  log.Append(2.0 * x, std::nullopt, 0, 0.5, 1.0);
  EXPECT_THROW(IpwzSolve(log, ScoreTarget::MisspecLinear(), 0), SingularDesign);
}

TEST(IpwzSolveTest, RootProperty) {
  testing::Gen gen(4);
  const TargetPolicy softmax = TargetPolicy::LinearSoftmax(
      {Vector::Constant(2, 0.3), Vector::Constant(2, -0.2), Vector::Zero(2)}, 1.0);
  const std::vector<ScoreTarget> targets = {
      ScoreTarget::MisspecLinear(),
      ScoreTarget::NoisyContext(0.2 * Matrix::Identity(2, 2)),
      ScoreTarget::Ope(softmax)};
  for (int trial = 0; trial < 30; ++trial) {
    const BanditLog log = gen.RandomLog(gen.Int(30, 300), 2, 3);
    for (const auto& target : targets) {
      for (int arm = 0; arm < 3; ++arm) {
        const Vector theta = IpwzSolve(log, target, arm);
        EXPECT_LT(EstimatingEquation(log, target, arm, theta).norm(), 1e-8);
      }
    }
  }
}

TEST(IpwzSolveTest, OpeInvariantToConstantPropensity) {
  testing::Gen gen(5);
  BanditLog a(1, 2), b(1, 2);
  for (int i = 0; i < 100; ++i) {
    const double y = gen.Normal();
    const int arm = gen.Int(0, 1);
    a.Append(Scalar(0.0), std::nullopt, arm, 0.2, y);
    b.Append(Scalar(0.0), std::nullopt, arm, 0.7, y);
  }
  const auto target = ScoreTarget::Ope(TargetPolicy::Fixed({0.4, 0.6}));
  for (int arm = 0; arm < 2; ++arm) {
    EXPECT_NEAR(IpwzSolve(a, target, arm)(0), IpwzSolve(b, target, arm)(0), 1e-14);
  }
}

TEST(EstimateSigmaETest, Examples) {
  AuxiliaryData aux(1);
  aux.Append(Scalar(1.0), Scalar(0.0));
  aux.Append(Scalar(-1.0), Scalar(0.0));
  EXPECT_NEAR(EstimateSigmaE(aux)(0, 0), 1.0, 1e-15);
  AuxiliaryData single(1);
  single.Append(Scalar(0.4), Scalar(0.4));
  EXPECT_EQ(EstimateSigmaE(single)(0, 0), 0.0);
  EXPECT_THROW(EstimateSigmaE(AuxiliaryData(1)), InputError);
}

TEST(EstimatedSigmaTest, ZeroMeasurementErrorReducesToMisspecified) {
  testing::Gen gen(6);
  const BanditLog log = gen.RandomLog(200, 2, 2);
  AuxiliaryData aux(2);
  for (int i = 0; i < 30; ++i) {
    const Vector s = gen.NormalVector(2);
    aux.Append(s, s);
  }
  for (int arm = 0; arm < 2; ++arm) {
    const auto fit = IpwzSolveEstimatedSigma(log, aux, arm);
    EXPECT_EQ(fit.sigma_e_hat.norm(), 0.0);
    EXPECT_LT((fit.theta - IpwzSolve(log, ScoreTarget::MisspecLinear(), arm)).norm(), 1e-12);
  }
}

TEST(ConsistencyTest, ErrorShrinksWithHorizon) {
  const auto env = BuildEnvironment("nc_gaussian", json::object(), 8);
  const ScoreTarget target = ScoreTarget::MisspecLinear();
  const Vector truth = *ExactOracle(env, target, 0);
  for (PolicyKind kind : {PolicyKind::kRandom, PolicyKind::kBoltzmannRidge,
                          PolicyKind::kBoltzmannSgd, PolicyKind::kIpwzGreedy}) {
    PolicyConfig config;
    config.kind = kind;
    config.gamma = 5.0;
    const Policy policy(config, env.num_arms, env.context_dim, target);
    int improved = 0;
    for (int r = 0; r < 100; ++r) {
      const auto trajectory =
          RunTrajectory(env, policy, 20000, RandomStream(1000 + r), TrajectoryOptions{});
      const double early = (IpwzSolve(trajectory.log.Prefix(2000), target, 0) - truth).norm();
      const double late = (IpwzSolve(trajectory.log, target, 0) - truth).norm();
      improved += late < early;
    }
    EXPECT_GE(improved, 90) << PolicyKindName(kind) << " improved in " << improved;
  }
}

TEST(CrossArmTest, ErrorsAreAsymptoticallyUncorrelated) {
  ExperimentConfig config;
  config.env = BuildEnvironment("nc_gaussian", json::object(), 9);
  config.target = ScoreTarget::MisspecLinear();
  config.horizon = 10000;
  config.replications = 500;
  config.seed = 31;
  const auto summary = Replicate(config);
  const int d = config.env.context_dim;
  for (int i = 0; i < d; ++i) {
    const auto a = summary.Standardized(i);
    const auto b = summary.Standardized(d + i);
    double ma = 0, mb = 0;
    for (std::size_t r = 0; r < a.size(); ++r) {
      ma += a[r] / a.size();
      mb += b[r] / b.size();
    }
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t r = 0; r < a.size(); ++r) {
      sab += (a[r] - ma) * (b[r] - mb);
      saa += (a[r] - ma) * (a[r] - ma);
      sbb += (b[r] - mb) * (b[r] - mb);
    }
    EXPECT_LT(std::abs(sab / std::sqrt(saa * sbb)), 0.1) << "coordinate " << i;
  }
}

}  // namespace
}  // namespace ipwz
