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
#include "ipwz/harness.h"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ipwz/error.h"
#include "ipwz/stats.h"

namespace ipwz {
namespace {

using nlohmann::json;

ExperimentConfig SmallConfig() {
  ExperimentConfig config;
  config.env = BuildEnvironment("nc_gaussian", json::object(), 3);
  config.policy.kind = PolicyKind::kBoltzmannRidge;
  config.policy.gamma = 5.0;
  config.target = ScoreTarget::MisspecLinear();
  config.horizon = 300;
  config.replications = 24;
  config.seed = 17;
  config.levels = {0.5, 0.8, 0.95};
  config.diagnostic_contexts = {Vector::Constant(2, 0.5)};
  config.snapshot_times = {100, 300};
  return config;
}

TEST(ReplicateTest, ParallelMatchesSerial) {
  const ExperimentConfig config = SmallConfig();
  const auto parallel = Replicate(config, true);
  const auto serial = ReplicateSerial(config);
  ASSERT_EQ(parallel.records.size(), serial.records.size());
  for (std::size_t r = 0; r < serial.records.size(); ++r) {
    EXPECT_EQ(parallel.records[r].estimate, serial.records[r].estimate);
    EXPECT_EQ(parallel.records[r].variance, serial.records[r].variance);
    EXPECT_EQ(parallel.records[r].last_probs, serial.records[r].last_probs);
    EXPECT_EQ(parallel.records[r].snapshot_estimate, serial.records[r].snapshot_estimate);
  }
  std::ostringstream a, b;
  WriteCoverageCsv(parallel, a);
  WriteCoverageCsv(serial, b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(ReplicateTest, SameSeedSameSummary) {
  const ExperimentConfig config = SmallConfig();
  std::ostringstream a, b;
  WriteReplicationsCsv(Replicate(config), a);
  WriteReplicationsCsv(Replicate(config), b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(ReplicateTest, SingleReplicationCoverageIsZeroOrOne) {
  ExperimentConfig config = SmallConfig();
  config.replications = 1;
  const auto summary = Replicate(config);
  ASSERT_EQ(summary.coverage.size(), config.levels.size());
  for (const auto& row : summary.coverage) {
    for (double c : row.by_quantity) EXPECT_TRUE(c == 0.0 || c == 1.0);
  }
  std::ostringstream out;
  WriteCoverageCsv(summary, out);
  int lines = 0;
  for (char c : out.str()) lines += c == '\n';
  EXPECT_EQ(lines, 1 + static_cast<int>(config.levels.size()));
}

TEST(ReplicateTest, CoverageIsMonotoneInLevel) {
  const auto summary = Replicate(SmallConfig());
  for (const auto& record : summary.records) {
    for (std::size_t l = 1; l < record.covered.size(); ++l) {
      for (std::size_t q = 0; q < record.covered[l].size(); ++q) {
        EXPECT_GE(record.covered[l][q], record.covered[l - 1][q]);
      }
    }
  }
  for (std::size_t l = 1; l < summary.coverage.size(); ++l) {
    EXPECT_GE(summary.coverage[l].coverage, summary.coverage[l - 1].coverage);
  }
}

TEST(ReplicateTest, NoiselessEnvironmentIsCoveredExactly) {
  ExperimentConfig config = SmallConfig();
  config.env = BuildEnvironment("nc_gaussian", {{"sigma_e", 0.0}, {"sigma_eta", 0.0}}, 3);
  config.replications = 8;
  const auto summary = Replicate(config);
  EXPECT_EQ(summary.failures, 0);
  for (const auto& record : summary.records) {
    for (std::size_t q = 0; q < record.estimate.size(); ++q) {
      EXPECT_NEAR(record.estimate[q], summary.truth.values[q], 1e-10);
      EXPECT_LT(record.variance[q], 1e-18);
    }
  }
  for (const auto& row : summary.coverage) EXPECT_EQ(row.coverage, 1.0);
}

TEST(ReplicateTest, SnapshotAtHorizonMatchesFinalEstimate) {
  const auto summary = Replicate(SmallConfig());
  for (const auto& record : summary.records) {
    EXPECT_EQ(record.snapshot_estimate[1], record.estimate);
  }
}

TEST(ReplicateTest, OpeRecordsPolicyValue) {
  ExperimentConfig config;
  config.env = BuildEnvironment("nonconv_demo", json::object(), 0);
  config.target = ScoreTarget::Ope(TargetPolicy::Uniform());
  config.horizon = 400;
  config.replications = 6;
  config.cadr = {CadrRegression::kZero};
  const auto summary = Replicate(config);
  ASSERT_EQ(summary.truth.names.back(), "V");
  EXPECT_NEAR(summary.truth.values.back(), 7.0 / 24.0, 1e-14);
  for (const auto& record : summary.records) {
    EXPECT_NEAR(record.estimate.back(), record.estimate[0] + record.estimate[1], 1e-14);
    EXPECT_EQ(record.cadr_value.size(), 1u);
  }
}

TEST(QqPointsTest, Example) {
  const auto points = QqPoints({3.0, 1.0, 2.0});
  ASSERT_EQ(points.size(), 3u);
  EXPECT_NEAR(points[0].first, -0.9674215661017009, 1e-12);
  EXPECT_NEAR(points[1].first, 0.0, 1e-15);
  EXPECT_NEAR(points[2].first, 0.9674215661017009, 1e-12);
  EXPECT_EQ(points[0].second, 1.0);
  EXPECT_EQ(points[2].second, 3.0);
}

TEST(ConvergenceDiagnosticTest, RandomPolicyIsAPointMass) {
  ExperimentConfig config = SmallConfig();
  config.policy = PolicyConfig{};
  const auto summary = Replicate(config);
  const auto stats = ConvergenceDiagnostic(summary, config.diagnostic_contexts[0], 0);
  EXPECT_DOUBLE_EQ(stats.mean, 0.5);
  EXPECT_EQ(stats.sd, 0.0);
  EXPECT_EQ(stats.low_mass, 0.0);
  EXPECT_EQ(stats.high_mass, 0.0);
  EXPECT_EQ(stats.histogram[25], config.replications);
}

TEST(MartingaleTest, TrueParameterCentersTheScore) {
  const auto env = BuildEnvironment("nc_gaussian", json::object(), 5);
  const ScoreTarget target = ScoreTarget::MisspecLinear();
  PolicyConfig config;
  config.kind = PolicyKind::kBoltzmannRidge;
  const Policy policy(config, env.num_arms, env.context_dim, target);
  const auto trajectory = RunTrajectory(env, policy, 200, RandomStream(6));
  for (int arm = 0; arm < 2; ++arm) {
    const Vector theta = *ExactOracle(env, target, arm);
    const auto check = FrozenHistoryMartingale(env, policy, trajectory.final_state, target, arm,
                                               theta, 20000, RandomStream(7 + arm));
    EXPECT_TRUE(check.Within(4.0)) << check.mean.transpose();
    const auto shifted = FrozenHistoryMartingale(env, policy, trajectory.final_state, target,
                                                 arm, theta + Vector::Ones(2), 20000,
                                                 RandomStream(7 + arm));
    EXPECT_FALSE(shifted.Within(4.0));
  }
}

TEST(ExperimentConfigTest, Validation) {
  ExperimentConfig config = SmallConfig();
  EXPECT_NO_THROW(config.Validate());
  config.horizon = 0;
  EXPECT_THROW(config.Validate(), ConfigError);
  config = SmallConfig();
  config.levels = {1.0};
  EXPECT_THROW(config.Validate(), ConfigError);
  config = SmallConfig();
  config.snapshot_times = {301};
  EXPECT_THROW(config.Validate(), ConfigError);
  config = SmallConfig();
  config.arms = {2};
  EXPECT_THROW(config.Validate(), ConfigError);
  config = SmallConfig();
  config.cadr = {CadrRegression::kZero};
  EXPECT_THROW(config.Validate(), ConfigError);
  config = SmallConfig();
  config.diagnostic_contexts = {Vector::Zero(3)};
  EXPECT_THROW(config.Validate(), ConfigError);
}

TEST(CsvTest, Layouts) {
  const auto summary = Replicate(SmallConfig());
  std::ostringstream coverage, replications, snapshots;
  WriteCoverageCsv(summary, coverage);
  WriteReplicationsCsv(summary, replications);
  WriteSnapshotsCsv(summary, snapshots);
  EXPECT_EQ(coverage.str().substr(0, coverage.str().find('\n')),
            "level,empirical_coverage,mc_stderr");
  EXPECT_EQ(replications.str().rfind("replication,quantity,ok,truth,estimate,variance,"
                                     "standardized,covered_",
                                     0),
            0u);
  EXPECT_EQ(snapshots.str().rfind("t,quantity,available,mean_estimate,empirical_variance", 0),
            0u);
}

}  // namespace
}  // namespace ipwz
