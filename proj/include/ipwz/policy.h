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
// Behavior policies: action distributions, summary-statistic updates and
// the clipping operator.

#ifndef IPWZ_POLICY_H_
#define IPWZ_POLICY_H_

#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ipwz/linalg.h"
#include "ipwz/rng.h"
#include "ipwz/score.h"

namespace ipwz {

enum class PolicyKind {
  kRandom,
  kEpsGreedyMab,
  kUcbMab,
  kTsMab,
  kBoltzmannRidge,
  kBoltzmannSgd,
  kIpwzGreedy,
  kLinUcb,
};

const char* PolicyKindName(PolicyKind kind);
PolicyKind ParsePolicyKind(const std::string& name);
const std::vector<PolicyKind>& AllPolicyKinds();

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kRandom;
  double pi_min = 0.05;
  // Exploration mass of the greedy policies; unset means K * pi_min. A
  // non-empty schedule gives eps_t for t = 1, 2, ... and then holds its
  // last value.
  std::optional<double> epsilon;
  std::vector<double> epsilon_schedule;
  // C_t = ucb_scale * log t.
  double ucb_scale = 2.0;
  // Gaussian prior N(ts_mu0, ts_sigma0_sq) and observation variance.
  double ts_mu0 = 0.0;
  double ts_sigma0_sq = 1.0;
  double ts_sigma_sq = 1.0;
  double gamma = 1.0;
  double ridge_lambda = 1.0;
  // eta_t = sgd_rate / t^sgd_power with sgd_power in (1/2, 1].
  double sgd_rate = 0.5;
  double sgd_power = 0.7;
  double sgd_radius = 1e3;
  double linucb_alpha = 1.0;
  // Score driving boltzmann_sgd and ipwz_greedy; the experiment target
  // when unset.
  std::optional<ScoreTarget> working_target;

  double Epsilon(int t, int num_arms) const;
  double UcbRadius(int t) const;
  double SgdRate(int t) const;
  // Throws ConfigError naming the offending "policy.<key>".
  void Validate(int num_arms) const;

  nlohmann::json ToJson() const;
  static PolicyConfig FromJson(const nlohmann::json& j);
};

// Summary statistics after t rounds. Only the blocks used by the policy
// kind are maintained; the rest stay at their initial values.
struct PolicyState {
  int t = 0;
  std::vector<int> counts;
  std::vector<double> means;
  // Ridge: lambda I + sum X X^T, sum X Y, the solved coefficients and the
  // inverse Gram (for LinUCB widths).
  std::vector<Matrix> gram;
  std::vector<Vector> cross;
  std::vector<Vector> ridge_beta;
  std::vector<Matrix> gram_inverse;
  // Boltzmann-SGD coefficients and the number of radius projections.
  std::vector<Vector> sgd_beta;
  int sgd_clip_count = 0;
  // IPW-Z running sums sum w J(X), sum w m(X, Y) and their root.
  std::vector<Matrix> ipw_design;
  std::vector<Vector> ipw_moment;
  std::vector<Vector> ipw_theta;
  std::vector<bool> ipw_ready;
};

// Euclidean projection onto {p : sum p = 1, p >= pi_min}, computed exactly
// by sorting. Throws ConfigError when K * pi_min > 1.
std::vector<double> ClipSimplex(std::span<const double> probs, double pi_min);

// Arm `best` gets 1 - (K - 1) * floor, the others `floor`.
std::vector<double> ArgmaxDistribution(int best, int num_arms, double floor);
// Lowest index among the maxima.
int ArgmaxLowest(std::span<const double> values);

std::vector<double> EpsGreedyDistribution(std::span<const double> means,
                                          double epsilon);
// Arms with no pulls have an infinite index.
std::vector<double> UcbDistribution(std::span<const double> means,
                                    std::span<const int> counts, double c_t,
                                    double pi_min);
// P(arm a has the largest draw) for independent N(means, vars), by adaptive
// quadrature. Throws InputError on a nonpositive variance.
std::vector<double> TsOptimalProb(std::span<const double> means,
                                  std::span<const double> vars);
std::vector<double> TsDistribution(std::span<const double> means,
                                   std::span<const int> counts,
                                   const PolicyConfig& config);
std::vector<double> BoltzmannDistribution(const std::vector<Vector>& beta,
                                          const Eigen::Ref<const Vector>& x,
                                          double gamma, double pi_min);
std::vector<double> LinUcbDistribution(const PolicyState& state,
                                       const Eigen::Ref<const Vector>& x,
                                       double alpha, double pi_min);
// eps_greedy, ucb_mab or ts_mab evaluated on `state`.
std::vector<double> MabDistribution(PolicyKind kind, const PolicyState& state,
                                    const PolicyConfig& config);

struct ActionChoice {
  int arm = 0;
  double propensity = 1.0;
  std::vector<double> probs;
};

class Policy {
 public:
  // `working_target` must be resolved (Sigma_e filled in).
  Policy(PolicyConfig config, int num_arms, int context_dim,
         ScoreTarget working_target);

  const PolicyConfig& config() const { return config_; }
  int num_arms() const { return num_arms_; }
  int context_dim() const { return context_dim_; }

  PolicyState InitialState() const;
  // Distribution for the next round given the state after state.t rounds.
  std::vector<double> Distribution(const PolicyState& state,
                                   const Eigen::Ref<const Vector>& x) const;
  ActionChoice Select(const PolicyState& state,
                      const Eigen::Ref<const Vector>& x,
                      RandomStream& rng) const;
  void Update(PolicyState& state, const Eigen::Ref<const Vector>& x, int arm,
              double propensity, double y) const;

 private:
  double ActionValue(const Vector& coefficients,
                     const Eigen::Ref<const Vector>& x) const;

  PolicyConfig config_;
  int num_arms_;
  int context_dim_;
  ScoreTarget working_;
};

}  // namespace ipwz

#endif  // IPWZ_POLICY_H_
