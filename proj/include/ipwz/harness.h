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
// Trajectories, Monte Carlo replication and diagnostics.

#ifndef IPWZ_HARNESS_H_
#define IPWZ_HARNESS_H_

#include <cstdint>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ipwz/bandit_log.h"
#include "ipwz/cadr.h"
#include "ipwz/env.h"
#include "ipwz/inference.h"
#include "ipwz/policy.h"
#include "ipwz/score.h"

namespace ipwz {

struct ExperimentConfig {
  EnvironmentSpec env;
  PolicyConfig policy;
  ScoreTarget target;
  int horizon = 1000;
  int replications = 100;
  std::uint64_t seed = 0;
  std::vector<double> levels = {0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
  // Contexts at which the last-step action distribution is recorded.
  std::vector<Vector> diagnostic_contexts;
  // Rounds at which estimates are also computed on the log prefix.
  std::vector<int> snapshot_times;
  VarianceMode variance_mode = VarianceMode::kFull;
  // 0-based arms to estimate; all arms when empty.
  std::vector<int> arms;
  // Auxiliary sample size for targets that estimate Sigma_e.
  int aux_size = 0;
  SigmaRegime regime = SigmaRegime::kAuto;
  std::int64_t n_oracle = 1000000;
  // CADR models evaluated next to IPW-Z for the ope target.
  std::vector<CadrRegression> cadr;
  CadrOptions cadr_options;

  // Throws ConfigError on inconsistent settings.
  void Validate() const;
  std::vector<int> EstimatedArms() const;
};

struct TrajectoryOptions {
  bool record_distributions = false;
  // Keep the policy state before every round (needed to evaluate g_t at
  // past contexts).
  bool record_states = false;
};

struct Trajectory {
  BanditLog log;
  PolicyState final_state;
  // states[t - 1] is the state used to act in round t.
  std::vector<PolicyState> states;
};

Trajectory RunTrajectory(const EnvironmentSpec& env, const Policy& policy,
                         int horizon, const RandomStream& stream,
                         const TrajectoryOptions& options = {});
// Convenience form keyed by a seed; the working target defaults to `target`.
BanditLog RunTrajectory(const EnvironmentSpec& env, const PolicyConfig& config,
                        const ScoreTarget& target, int horizon,
                        std::uint64_t seed, bool record_distributions = false);

// Resolved working score of the behavior policy.
ScoreTarget WorkingTarget(const PolicyConfig& config, const ScoreTarget& target,
                          const EnvironmentSpec& env);

AuxiliaryData SampleAuxiliary(const EnvironmentSpec& env, int n,
                              const RandomStream& stream);

// Names and ground truth of the estimated quantities: one entry per
// (arm, coordinate), plus the policy value V for the ope target.
struct GroundTruth {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> std_errors;
  bool exact = true;
};

GroundTruth ComputeGroundTruth(const ExperimentConfig& config);

struct ReplicationRecord {
  bool ok = false;
  std::string error;
  std::vector<double> estimate;      // per quantity
  std::vector<double> variance;      // Sigma_ii per quantity
  std::vector<double> standardized;  // sqrt(n)(est - truth)/sqrt(Sigma_ii)
  std::vector<std::vector<char>> covered;     // [level][quantity]
  std::vector<std::vector<double>> last_probs;  // [context][arm]
  std::vector<std::vector<double>> snapshot_estimate;  // [snapshot][quantity]
  std::vector<std::vector<char>> snapshot_covered;     // [snapshot][level * Q + q]
  std::vector<double> cadr_value;                      // [model]
  std::vector<std::vector<char>> cadr_covered;         // [model][level]
  int sgd_clips = 0;
  int floored = 0;
};

struct CoverageRow {
  double level = 0.0;
  double coverage = 0.0;  // pooled over quantities
  double mc_stderr = 0.0;
  std::vector<double> by_quantity;
};

struct ReplicationSummary {
  GroundTruth truth;
  std::vector<double> levels;
  int horizon = 0;
  std::vector<ReplicationRecord> records;
  int failures = 0;
  std::vector<CoverageRow> coverage;
  std::vector<Vector> diagnostic_contexts;
  std::vector<int> snapshot_times;
  std::vector<std::string> cadr_names;

  int succeeded() const {
    return static_cast<int>(records.size()) - failures;
  }
  // Values of one recorded quantity over successful replications.
  std::vector<double> Estimates(int quantity) const;
  std::vector<double> Standardized(int quantity) const;
  std::vector<double> Variances(int quantity) const;
  double EmpiricalVariance(int quantity) const;
  double CadrCoverage(int model, int level) const;
  std::vector<double> CadrValues(int model) const;
};

// Runs every replication on its own substream and folds the records in
// index order. The parallel and serial paths give identical summaries.
ReplicationSummary Replicate(const ExperimentConfig& config, bool parallel = true);
ReplicationSummary ReplicateSerial(const ExperimentConfig& config);
// One replication; exposed for testing.
ReplicationRecord RunReplication(const ExperimentConfig& config,
                                 const GroundTruth& truth, int replication);

// Sorted values against standard-normal quantiles at (i - 0.5)/n.
std::vector<std::pair<double, double>> QqPoints(std::vector<double> values);

struct ConvergenceStats {
  std::vector<int> histogram;  // 50 bins on [0, 1]
  double mean = 0.0;
  double sd = 0.0;
  double low_mass = 0.0;   // share in [0, 0.2]
  double high_mass = 0.0;  // share in [0.8, 1]
};

// Across-replication distribution of the last-step pi_T(arm | context).
ConvergenceStats ConvergenceDiagnostic(const ReplicationSummary& summary,
                                       const Eigen::Ref<const Vector>& context,
                                       int arm);

struct MartingaleCheck {
  Vector mean;
  Vector std_error;
  int draws = 0;
  // |mean_i| <= k * se_i for every coordinate (both zero counts as within).
  bool Within(double k) const;
};

// Mean of 1{A = arm}/pi(A) g(X, Y(arm); theta) over fresh rounds drawn with
// the policy frozen at `state`.
MartingaleCheck FrozenHistoryMartingale(const EnvironmentSpec& env,
                                        const Policy& policy,
                                        const PolicyState& state,
                                        const ScoreTarget& target, int arm,
                                        const Eigen::Ref<const Vector>& theta,
                                        int draws, const RandomStream& stream);

// File outputs.
void WriteCoverageCsv(const ReplicationSummary& summary, std::ostream& out);
void WriteCoverageByQuantityCsv(const ReplicationSummary& summary,
                                std::ostream& out);
void WriteQqCsv(const std::vector<std::pair<double, double>>& points,
                std::ostream& out);
void WriteHistogramCsv(const ConvergenceStats& stats, std::ostream& out);
void WriteReplicationsCsv(const ReplicationSummary& summary, std::ostream& out);
void WriteSnapshotsCsv(const ReplicationSummary& summary, std::ostream& out);

}  // namespace ipwz

#endif  // IPWZ_HARNESS_H_
