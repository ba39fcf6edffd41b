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
// Generative contextual-bandit environments and ground-truth oracles.
//
// Each round draws a latent state S (when the environment has one), an
// observed context X and the full vector of potential outcomes Y(a). Only
// the harness decides which single outcome is revealed.

#ifndef IPWZ_ENV_H_
#define IPWZ_ENV_H_

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ipwz/linalg.h"
#include "ipwz/rng.h"
#include "ipwz/score.h"

namespace ipwz {

enum class EnvKind {
  kNonconvDemo,
  kNcHard1,
  kNcHard2,
  kNcGaussian,
  kMsPolynomial,
  kMsNeural,
};

struct CategoricalLaw {
  std::vector<Vector> points;
  std::vector<double> weights;
};

struct GaussianLaw {
  Matrix covariance;
  Matrix root;  // root * root^T == covariance
};

using ContextLaw = std::variant<CategoricalLaw, GaussianLaw>;

// Observed context equals the latent state.
struct IdentityNoise {};

// P(X = value | S = given) = prob.
struct ConditionalTableEntry {
  Vector given;
  Vector value;
  double prob = 0.0;
};
struct TableNoise {
  std::vector<ConditionalTableEntry> entries;
};

// X = S + e with e ~ N(0, covariance), independent of S.
struct GaussianNoise {
  Matrix covariance;
  Matrix root;
};

using LatentNoiseLaw = std::variant<IdentityNoise, TableNoise, GaussianNoise>;

enum class RewardKind {
  kArmMeans,     // y(x, a) = mean_a
  kLinear,       // y(s, a) = <theta_a, s>
  kPolynomial,   // y(x, a) = sum_k <theta_{a,k}, x^k> (elementwise powers)
  kRelu,         // y(x, a) = max(0, <theta_a, x>)
};

struct RewardModel {
  RewardKind kind = RewardKind::kLinear;
  std::vector<double> arm_means;
  // Per arm: 1 x d for linear/relu, degree x d for polynomial.
  std::vector<Matrix> coefficients;
};

struct EnvironmentSpec {
  std::string name;
  EnvKind kind = EnvKind::kNcGaussian;
  int num_arms = 2;
  int context_dim = 1;
  // Law of the latent state for noisy-context environments, of the observed
  // context otherwise.
  ContextLaw context_law;
  LatentNoiseLaw latent_noise = IdentityNoise{};
  RewardModel reward;
  double reward_noise_sd = 1.0;
  std::uint64_t seed = 0;
  // Every parameter after defaults, overrides and seeded sampling.
  nlohmann::json resolved_params;

  bool has_latent() const {
    return !std::holds_alternative<IdentityNoise>(latent_noise);
  }
  bool finite_support() const {
    return std::holds_alternative<CategoricalLaw>(context_law);
  }
  // Covariance of X - S; zero for environments without a latent state.
  Matrix SigmaE() const;
  // Mean reward of `arm` at `state` (S when has_latent(), X otherwise).
  double MeanReward(const Eigen::Ref<const Vector>& state, int arm) const;
  // Distinct observed contexts, for finite-support environments.
  std::optional<std::vector<Vector>> ObservedSupport() const;
};

struct RoundDraw {
  Vector context;
  std::optional<Vector> latent;
  Vector potential_outcomes;
};

// Names accepted by BuildEnvironment.
const std::vector<std::string>& EnvironmentNames();

// Resolves a named environment. `params` may only touch declared
// parameters; random parameters (theta for nc_gaussian and ms_*) are drawn
// from `seed`. Throws ConfigError naming the offending key.
EnvironmentSpec BuildEnvironment(const std::string& name,
                                 const nlohmann::json& params,
                                 std::uint64_t seed);

// {"name": ..., "params": {...}, "seed": ...}
EnvironmentSpec EnvironmentFromJson(const nlohmann::json& j);
nlohmann::json EnvironmentToJson(const EnvironmentSpec& env);

// Draws one i.i.d. round. The overload reuses the buffers in `out`.
void SampleRound(const EnvironmentSpec& env, RandomStream& rng, RoundDraw& out);
RoundDraw SampleRound(const EnvironmentSpec& env, RandomStream& rng);

// Fills in Sigma_e for noisy-context targets that take it from the
// environment (or estimate it, in which case the truth is kept for oracles).
ScoreTarget ResolveTarget(const ScoreTarget& target, const EnvironmentSpec& env);

struct OracleResult {
  Vector theta;
  Vector std_error;  // zero on the exact path
  bool exact = false;
  std::int64_t draws = 0;
};

// Closed-form theta* solving E[g(X, Y(a); theta)] = 0, when the
// environment admits one (finite support, linear-Gaussian, Gaussian
// polynomial with d = 1, Gaussian ReLU). `target` must be resolved.
std::optional<Vector> ExactOracle(const EnvironmentSpec& env,
                                  const ScoreTarget& target, int arm);

// Empirical root over n fresh i.i.d. draws with a sandwich standard error.
// Chunks of draws use their own substreams, so `parallel` does not change
// the result.
OracleResult MonteCarloOracle(const EnvironmentSpec& env,
                              const ScoreTarget& target, int arm,
                              std::int64_t n, std::uint64_t seed,
                              bool parallel = true);

// Exact path when available, Monte Carlo otherwise.
OracleResult OracleTarget(const EnvironmentSpec& env, const ScoreTarget& target,
                          int arm, std::int64_t n_oracle, std::uint64_t seed);

}  // namespace ipwz

#endif  // IPWZ_ENV_H_
