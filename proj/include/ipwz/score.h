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
// Estimands and their score functions.
//
// All three supported families are affine in theta:
//
//   g(x, y; theta) = m(x, y) - J(x) theta
//
// with (m, J) = (x y, x x^T) for the misspecified-linear target,
// (x y, x x^T - Sigma_e) for the noisy-context target and
// (pi_e(a|x) y, 1) for off-policy evaluation. The estimator, the variance
// estimator, the SGD policy and the oracles all work off this (m, J) form.

#ifndef IPWZ_SCORE_H_
#define IPWZ_SCORE_H_

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "ipwz/linalg.h"

namespace ipwz {

// Evaluation policy pi_e(. | x) for the OPE target.
class TargetPolicy {
 public:
  enum class Kind { kUniform, kFixed, kLinearSoftmax };

  static TargetPolicy Uniform() { return TargetPolicy(); }
  static TargetPolicy Fixed(std::vector<double> probs);
  // pi_e(a|x) proportional to exp(<w_a, x> / temperature).
  static TargetPolicy LinearSoftmax(std::vector<Vector> weights,
                                    double temperature);

  Kind kind() const { return kind_; }
  bool context_free() const { return kind_ != Kind::kLinearSoftmax; }

  // Full distribution over `num_arms` arms at context x.
  std::vector<double> Probabilities(const Eigen::Ref<const Vector>& x,
                                    int num_arms) const;
  double Probability(int arm, const Eigen::Ref<const Vector>& x,
                     int num_arms) const;

  nlohmann::json ToJson() const;
  static TargetPolicy FromJson(const nlohmann::json& j);

 private:
  Kind kind_ = Kind::kUniform;
  std::vector<double> probs_;
  std::vector<Vector> weights_;
  double temperature_ = 1.0;
};

enum class TargetFamily { kMisspecLinear, kNoisyContext, kOpe };

const char* TargetFamilyName(TargetFamily family);
TargetFamily ParseTargetFamily(const std::string& name);

// Where the noisy-context target gets Sigma_e from.
enum class SigmaSource { kKnown, kFromEnvironment, kEstimateFromAux };

struct ScoreTarget {
  TargetFamily family = TargetFamily::kMisspecLinear;
  SigmaSource sigma_source = SigmaSource::kFromEnvironment;
  Matrix sigma_e;  // used when family == kNoisyContext
  TargetPolicy target_policy;

  static ScoreTarget MisspecLinear() { return {}; }
  static ScoreTarget NoisyContext(Matrix sigma_e);
  static ScoreTarget Ope(TargetPolicy policy = TargetPolicy::Uniform());

  // Parameter dimension for contexts of dimension d.
  int Dimension(int context_dim) const {
    return family == TargetFamily::kOpe ? 1 : context_dim;
  }

  nlohmann::json ToJson() const;
  static ScoreTarget FromJson(const nlohmann::json& j);
};

// m(x, y) for `arm`. `num_arms` is only consulted by the OPE family.
Vector ScoreMoment(const ScoreTarget& target, int arm, int num_arms,
                   const Eigen::Ref<const Vector>& x, double y);

// J(x) = -grad_theta g, independent of theta and y for every family.
Matrix ScoreDesign(const ScoreTarget& target, int arm, int num_arms,
                   const Eigen::Ref<const Vector>& x);

// g(x, y; theta). Throws InputError on a dimension mismatch.
Vector Score(const ScoreTarget& target, int arm, int num_arms,
             const Eigen::Ref<const Vector>& x, double y,
             const Eigen::Ref<const Vector>& theta);

}  // namespace ipwz

#endif  // IPWZ_SCORE_H_
