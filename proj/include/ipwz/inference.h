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
// Sandwich variances, confidence intervals and the policy-value estimate.

#ifndef IPWZ_INFERENCE_H_
#define IPWZ_INFERENCE_H_

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "ipwz/bandit_log.h"
#include "ipwz/linalg.h"
#include "ipwz/score.h"

namespace ipwz {

// kSimplified swaps the weighted design for its unweighted plug-in: the
// average of X X^T (minus Sigma_e for the noisy-context target) over every
// round, or 1 for off-policy evaluation.
enum class VarianceMode { kFull, kSimplified };

const char* VarianceModeName(VarianceMode mode);
VarianceMode ParseVarianceMode(const std::string& name);

struct SandwichResult {
  Matrix sigma;   // G^-1 I G^-T
  Matrix g_dot;   // (1/T) sum w J(X), reported as a positive design
  Matrix info;    // (1/T) sum w^2 g g^T
};

SandwichResult SandwichVariance(const BanditLog& log, const ScoreTarget& target,
                                int arm, const Eigen::Ref<const Vector>& theta_hat,
                                VarianceMode mode);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool Contains(double value) const { return lo <= value && value <= hi; }
};

// result[l][i] is the level-l interval for coordinate i. Negative diagonal
// entries are treated as zero and counted in `floored` when given.
std::vector<std::vector<Interval>> ConfidenceIntervals(
    const Eigen::Ref<const Vector>& theta_hat, const Matrix& sigma,
    double sample_size, const std::vector<double>& levels,
    int* floored = nullptr);

struct ArmReport {
  int arm = 0;
  Vector theta;
  SandwichResult sandwich;
  std::vector<std::vector<Interval>> ci;
};

struct EstimateReport {
  int horizon = 0;
  std::vector<double> levels;
  std::vector<ArmReport> arms;
  int floored_diagonals = 0;

  nlohmann::json ToJson() const;
};

// Fits every arm in `arms` (all arms when empty).
EstimateReport Estimate(const BanditLog& log, const ScoreTarget& target,
                        const std::vector<double>& levels, VarianceMode mode,
                        std::vector<int> arms = {});

struct OpeReport {
  int horizon = 0;
  double value = 0.0;
  double variance = 0.0;
  std::vector<double> levels;
  std::vector<Interval> ci;
  std::vector<double> arm_theta;

  nlohmann::json ToJson() const;
};

// V = sum_a theta_a with variance sum_a G_a^-2 I_a.
OpeReport OpeValue(const BanditLog& log, const ScoreTarget& target,
                   const std::vector<double>& levels, VarianceMode mode);

enum class SigmaRegime { kAuto, kNDominant, kProportional, kTDominant };

const char* SigmaRegimeName(SigmaRegime regime);
SigmaRegime ParseSigmaRegime(const std::string& name);
// n/T > 10 -> n-dominant, n/T < 0.1 -> T-dominant, else proportional.
SigmaRegime ChooseSigmaRegime(int n, int horizon);

struct EstimatedSigmaVariance {
  Matrix sigma;
  SigmaRegime regime = SigmaRegime::kProportional;
  // Intervals use sqrt(sample_size): T, or n in the T-dominant regime.
  double sample_size = 1.0;
  Matrix h_bar;
};

EstimatedSigmaVariance VarianceEstimatedSigma(
    const BanditLog& log, const AuxiliaryData& aux, int arm,
    const Eigen::Ref<const Vector>& theta_tilde, const Matrix& sigma_e_hat,
    SigmaRegime regime);

nlohmann::json MatrixToJson(const Matrix& m);
std::string LevelKey(double level);

}  // namespace ipwz

#endif  // IPWZ_INFERENCE_H_
