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

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "ipwz/error.h"
#include "ipwz/stats.h"

namespace ipwz {
namespace {

using nlohmann::json;

struct KindName {
  PolicyKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {PolicyKind::kRandom, "random"},
    {PolicyKind::kEpsGreedyMab, "eps_greedy_mab"},
    {PolicyKind::kUcbMab, "ucb_mab"},
    {PolicyKind::kTsMab, "ts_mab"},
    {PolicyKind::kBoltzmannRidge, "boltzmann_ridge"},
    {PolicyKind::kBoltzmannSgd, "boltzmann_sgd"},
    {PolicyKind::kIpwzGreedy, "ipwz_greedy"},
    {PolicyKind::kLinUcb, "linucb"},
};

std::vector<double> SoftmaxClip(std::span<const double> values, double gamma,
                                double pi_min) {
  const double top = *std::max_element(values.begin(), values.end());
  std::vector<double> probs(values.size());
  double total = 0.0;
  for (std::size_t a = 0; a < values.size(); ++a) {
    probs[a] = std::exp((values[a] - top) / gamma);
    total += probs[a];
  }
  for (double& p : probs) p /= total;
  return ClipSimplex(probs, pi_min);
}

// Adaptive Simpson on [a, b] with the usual Richardson correction.
double AdaptiveSimpson(const std::function<double(double)>& f, double a,
                       double b, double fa, double fm, double fb, double whole,
                       double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return AdaptiveSimpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         AdaptiveSimpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double Integrate(const std::function<double(double)>& f, double lo, double hi,
                 int panels, double tol) {
  double total = 0.0;
  const double width = (hi - lo) / panels;
  for (int i = 0; i < panels; ++i) {
    const double a = lo + i * width;
    const double b = a + width;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = width / 6.0 * (fa + 4.0 * fm + fb);
    total += AdaptiveSimpson(f, a, b, fa, fm, fb, whole, tol / panels, 50);
  }
  return total;
}

void RequirePositive(double value, const char* key) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ConfigError(std::string("policy.") + key, "must be positive");
  }
}

}  // namespace

const char* PolicyKindName(PolicyKind kind) {
  for (const auto& entry : kKindNames) {
    if (entry.kind == kind) return entry.name;
  }
  return "unknown";
}

PolicyKind ParsePolicyKind(const std::string& name) {
  for (const auto& entry : kKindNames) {
    if (name == entry.name) return entry.kind;
  }
  throw ConfigError("policy.kind", "unknown policy '" + name + "'");
}

const std::vector<PolicyKind>& AllPolicyKinds() {
  static const std::vector<PolicyKind> kinds = [] {
    std::vector<PolicyKind> out;
    for (const auto& entry : kKindNames) out.push_back(entry.kind);
    return out;
  }();
  return kinds;
}

double PolicyConfig::Epsilon(int t, int num_arms) const {
  if (!epsilon_schedule.empty()) {
    const std::size_t index =
        std::min<std::size_t>(std::max(t, 1) - 1, epsilon_schedule.size() - 1);
    return epsilon_schedule[index];
  }
  return epsilon.value_or(num_arms * pi_min);
}

double PolicyConfig::UcbRadius(int t) const {
  return ucb_scale * std::log(static_cast<double>(std::max(t, 1)));
}

double PolicyConfig::SgdRate(int t) const {
  return sgd_rate / std::pow(static_cast<double>(std::max(t, 1)), sgd_power);
}

void PolicyConfig::Validate(int num_arms) const {
  if (num_arms < 2) throw ConfigError("env.K", "need at least two arms");
  if (!(pi_min > 0.0) || num_arms * pi_min > 1.0 + 1e-12) {
    throw ConfigError("policy.pi_min",
                      "need 0 < pi_min <= 1/K (K = " + std::to_string(num_arms) +
                          ")");
  }
  auto check_epsilon = [&](double eps) {
    if (eps > 1.0 || eps < num_arms * pi_min - 1e-12) {
      throw ConfigError("policy.epsilon",
                        "need K * pi_min <= epsilon <= 1 so every arm keeps "
                        "probability pi_min");
    }
  };
  if (epsilon) check_epsilon(*epsilon);
  for (double eps : epsilon_schedule) check_epsilon(eps);
  RequirePositive(ucb_scale, "ucb_scale");
  RequirePositive(ts_sigma0_sq, "ts_sigma0_sq");
  RequirePositive(ts_sigma_sq, "ts_sigma_sq");
  RequirePositive(gamma, "gamma");
  RequirePositive(ridge_lambda, "ridge_lambda");
  RequirePositive(sgd_rate, "sgd_rate");
  RequirePositive(sgd_radius, "sgd_radius");
  RequirePositive(linucb_alpha, "linucb_alpha");
  if (!(sgd_power > 0.5 && sgd_power <= 1.0)) {
    throw ConfigError("policy.sgd_power",
                      "need 1/2 < sgd_power <= 1 so that sum eta_t diverges and "
                      "sum eta_t^2 converges");
  }
}

json PolicyConfig::ToJson() const {
  json j = {{"kind", PolicyKindName(kind)},
            {"pi_min", pi_min},
            {"ucb_scale", ucb_scale},
            {"ts_prior",
             {{"mu0", ts_mu0}, {"sigma0_sq", ts_sigma0_sq}, {"sigma_sq", ts_sigma_sq}}},
            {"gamma", gamma},
            {"ridge_lambda", ridge_lambda},
            {"sgd_rate", sgd_rate},
            {"sgd_power", sgd_power},
            {"sgd_radius", sgd_radius},
            {"linucb_alpha", linucb_alpha}};
  if (epsilon) j["epsilon"] = *epsilon;
  if (!epsilon_schedule.empty()) j["epsilon_schedule"] = epsilon_schedule;
  if (working_target) j["working_target"] = working_target->ToJson();
  return j;
}

PolicyConfig PolicyConfig::FromJson(const json& j) {
  if (!j.is_object()) throw ConfigError("policy", "expected an object");
  PolicyConfig config;
  auto number = [&](const std::string& key, double& slot) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number()) {
      throw ConfigError("policy." + key, "expected a number");
    }
    slot = j.at(key).get<double>();
  };
  for (const auto& [key, value] : j.items()) {
    static const char* kKnown[] = {
        "kind",         "pi_min",    "epsilon",      "epsilon_schedule",
        "ucb_scale",    "ts_prior",  "gamma",        "ridge_lambda",
        "sgd_rate",     "sgd_power", "sgd_radius",   "linucb_alpha",
        "working_target"};
    if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
      throw ConfigError("policy." + key, "unknown key");
    }
  }
  if (!j.contains("kind") || !j.at("kind").is_string()) {
    throw ConfigError("policy.kind", "missing policy kind");
  }
  config.kind = ParsePolicyKind(j.at("kind").get<std::string>());
  number("pi_min", config.pi_min);
  if (j.contains("epsilon")) {
    double eps = 0.0;
    number("epsilon", eps);
    config.epsilon = eps;
  }
  if (j.contains("epsilon_schedule")) {
    try {
      config.epsilon_schedule = j.at("epsilon_schedule").get<std::vector<double>>();
    } catch (const json::exception&) {
      throw ConfigError("policy.epsilon_schedule", "expected an array of numbers");
    }
  }
  number("ucb_scale", config.ucb_scale);
  if (j.contains("ts_prior")) {
    const auto& prior = j.at("ts_prior");
    if (!prior.is_object()) throw ConfigError("policy.ts_prior", "expected an object");
    for (const auto& [key, value] : prior.items()) {
      if (!value.is_number()) {
        throw ConfigError("policy.ts_prior." + key, "expected a number");
      }
      if (key == "mu0") {
        config.ts_mu0 = value.get<double>();
      } else if (key == "sigma0_sq") {
        config.ts_sigma0_sq = value.get<double>();
      } else if (key == "sigma_sq") {
        config.ts_sigma_sq = value.get<double>();
      } else {
        throw ConfigError("policy.ts_prior." + key, "unknown key");
      }
    }
  }
  number("gamma", config.gamma);
  number("ridge_lambda", config.ridge_lambda);
  number("sgd_rate", config.sgd_rate);
  number("sgd_power", config.sgd_power);
  number("sgd_radius", config.sgd_radius);
  number("linucb_alpha", config.linucb_alpha);
  if (j.contains("working_target")) {
    config.working_target = ScoreTarget::FromJson(j.at("working_target"));
  }
  return config;
}

std::vector<double> ClipSimplex(std::span<const double> probs, double pi_min) {
  const int k = static_cast<int>(probs.size());
  if (k == 0) throw InputError("cannot clip an empty distribution");
  if (pi_min < 0.0 || k * pi_min > 1.0 + 1e-12) {
    throw ConfigError("pi_min", "infeasible clip level: K * pi_min = " +
                                    std::to_string(k * pi_min) + " > 1");
  }
  std::vector<double> sorted(probs.begin(), probs.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  // q(nu) = sum max(p_i - nu, pi_min) is piecewise linear and decreasing;
  // with the top j coordinates above the floor its root is
  // nu = (sum_{i<j} p_(i) - 1 + (K - j) pi_min) / j.
  double nu = 0.0;
  bool found = false;
  double prefix = 0.0;
  for (int j = 1; j <= k; ++j) {
    prefix += sorted[j - 1];
    const double candidate = (prefix - 1.0 + (k - j) * pi_min) / j;
    const bool top_free = sorted[j - 1] - candidate > pi_min;
    const bool rest_floored = j == k || sorted[j] - candidate <= pi_min;
    if (top_free && rest_floored) {
      nu = candidate;
      found = true;
      break;
    }
  }
  std::vector<double> out(k, pi_min);
  if (found) {
    for (int a = 0; a < k; ++a) out[a] = std::max(probs[a] - nu, pi_min);
  }
  return out;
}

std::vector<double> ArgmaxDistribution(int best, int num_arms, double floor) {
  std::vector<double> probs(num_arms, floor);
  probs[best] = 1.0 - (num_arms - 1) * floor;
  return probs;
}

int ArgmaxLowest(std::span<const double> values) {
  int best = 0;
  for (int a = 1; a < static_cast<int>(values.size()); ++a) {
    if (values[a] > values[best]) best = a;
  }
  return best;
}

std::vector<double> EpsGreedyDistribution(std::span<const double> means,
                                          double epsilon) {
  const int k = static_cast<int>(means.size());
  return ArgmaxDistribution(ArgmaxLowest(means), k, epsilon / k);
}

std::vector<double> UcbDistribution(std::span<const double> means,
                                    std::span<const int> counts, double c_t,
                                    double pi_min) {
  const int k = static_cast<int>(means.size());
  std::vector<double> index(k);
  for (int a = 0; a < k; ++a) {
    index[a] = counts[a] == 0
                   ? std::numeric_limits<double>::infinity()
                   : means[a] + std::sqrt(std::max(c_t, 0.0) / counts[a]);
  }
  return ArgmaxDistribution(ArgmaxLowest(index), k, pi_min);
}

std::vector<double> TsOptimalProb(std::span<const double> means,
                                  std::span<const double> vars) {
  const int k = static_cast<int>(means.size());
  if (static_cast<int>(vars.size()) != k || k == 0) {
    throw InputError("posterior means and variances differ in length");
  }
  std::vector<double> sd(k);
  for (int a = 0; a < k; ++a) {
    if (!(vars[a] > 0.0)) throw InputError("posterior variance must be positive");
    sd[a] = std::sqrt(vars[a]);
  }
  std::vector<double> probs(k);
  for (int a = 0; a < k; ++a) {
    // P(arm a wins) = E_z[prod_{i != a} Phi((m_a + s_a z - m_i) / s_i)].
    auto integrand = [&](double z) {
      const double u = means[a] + sd[a] * z;
      double value = NormalPdf(z);
      for (int i = 0; i < k && value > 0.0; ++i) {
        if (i != a) value *= NormalCdf((u - means[i]) / sd[i]);
      }
      return value;
    };
    probs[a] = Integrate(integrand, -9.0, 9.0, 72, 1e-11);
  }
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  for (double& p : probs) p /= total;
  return probs;
}

std::vector<double> TsDistribution(std::span<const double> means,
                                   std::span<const int> counts,
                                   const PolicyConfig& config) {
  const int k = static_cast<int>(means.size());
  std::vector<double> post_mean(k), post_var(k);
  for (int a = 0; a < k; ++a) {
    const double precision =
        1.0 / config.ts_sigma0_sq + counts[a] / config.ts_sigma_sq;
    post_var[a] = 1.0 / precision;
    post_mean[a] = post_var[a] * (config.ts_mu0 / config.ts_sigma0_sq +
                                  counts[a] * means[a] / config.ts_sigma_sq);
  }
  return ClipSimplex(TsOptimalProb(post_mean, post_var), config.pi_min);
}

std::vector<double> BoltzmannDistribution(const std::vector<Vector>& beta,
                                          const Eigen::Ref<const Vector>& x,
                                          double gamma, double pi_min) {
  std::vector<double> values(beta.size());
  for (std::size_t a = 0; a < beta.size(); ++a) values[a] = beta[a].dot(x);
  return SoftmaxClip(values, gamma, pi_min);
}

std::vector<double> LinUcbDistribution(const PolicyState& state,
                                       const Eigen::Ref<const Vector>& x,
                                       double alpha, double pi_min) {
  const int k = static_cast<int>(state.ridge_beta.size());
  std::vector<double> index(k);
  for (int a = 0; a < k; ++a) {
    const double width = std::sqrt(std::max(0.0, x.dot(state.gram_inverse[a] * x)));
    index[a] = state.ridge_beta[a].dot(x) + alpha * width;
  }
  return ArgmaxDistribution(ArgmaxLowest(index), k, pi_min);
}

std::vector<double> MabDistribution(PolicyKind kind, const PolicyState& state,
                                    const PolicyConfig& config) {
  const int k = static_cast<int>(state.counts.size());
  switch (kind) {
    case PolicyKind::kEpsGreedyMab:
      return EpsGreedyDistribution(state.means, config.Epsilon(state.t + 1, k));
    case PolicyKind::kUcbMab:
      return UcbDistribution(state.means, state.counts,
                             config.UcbRadius(state.t + 1), config.pi_min);
    case PolicyKind::kTsMab:
      return TsDistribution(state.means, state.counts, config);
    default:
      throw InputError(std::string("not a multi-armed bandit policy: ") +
                       PolicyKindName(kind));
  }
}

Policy::Policy(PolicyConfig config, int num_arms, int context_dim,
               ScoreTarget working_target)
    : config_(std::move(config)),
      num_arms_(num_arms),
      context_dim_(context_dim),
      working_(std::move(working_target)) {
  config_.Validate(num_arms_);
}

PolicyState Policy::InitialState() const {
  const int k = num_arms_;
  const int d = context_dim_;
  const int p = working_.Dimension(d);
  PolicyState state;
  state.counts.assign(k, 0);
  state.means.assign(k, 0.0);
  const Matrix ridge = config_.ridge_lambda * Matrix::Identity(d, d);
  state.gram.assign(k, ridge);
  state.cross.assign(k, Vector::Zero(d));
  state.ridge_beta.assign(k, Vector::Zero(d));
  state.gram_inverse.assign(k, ridge.inverse());
  state.sgd_beta.assign(k, Vector::Zero(p));
  state.ipw_design.assign(k, Matrix::Zero(p, p));
  state.ipw_moment.assign(k, Vector::Zero(p));
  state.ipw_theta.assign(k, Vector::Zero(p));
  state.ipw_ready.assign(k, false);
  return state;
}

double Policy::ActionValue(const Vector& coefficients,
                           const Eigen::Ref<const Vector>& x) const {
  if (working_.family == TargetFamily::kOpe) return coefficients(0);
  return coefficients.dot(x);
}

std::vector<double> Policy::Distribution(const PolicyState& state,
                                         const Eigen::Ref<const Vector>& x) const {
  const int k = num_arms_;
  switch (config_.kind) {
    case PolicyKind::kRandom:
      return std::vector<double>(k, 1.0 / k);
    case PolicyKind::kEpsGreedyMab:
    case PolicyKind::kUcbMab:
    case PolicyKind::kTsMab:
      return MabDistribution(config_.kind, state, config_);
    case PolicyKind::kBoltzmannRidge:
      return BoltzmannDistribution(state.ridge_beta, x, config_.gamma,
                                   config_.pi_min);
    case PolicyKind::kBoltzmannSgd: {
      std::vector<double> values(k);
      for (int a = 0; a < k; ++a) values[a] = ActionValue(state.sgd_beta[a], x);
      return SoftmaxClip(values, config_.gamma, config_.pi_min);
    }
    case PolicyKind::kIpwzGreedy: {
      for (int a = 0; a < k; ++a) {
        if (!state.ipw_ready[a]) return std::vector<double>(k, 1.0 / k);
      }
      std::vector<double> values(k);
      for (int a = 0; a < k; ++a) values[a] = ActionValue(state.ipw_theta[a], x);
      return EpsGreedyDistribution(values, config_.Epsilon(state.t + 1, k));
    }
    case PolicyKind::kLinUcb:
      return LinUcbDistribution(state, x, config_.linucb_alpha, config_.pi_min);
  }
  return std::vector<double>(k, 1.0 / k);
}

ActionChoice Policy::Select(const PolicyState& state,
                            const Eigen::Ref<const Vector>& x,
                            RandomStream& rng) const {
  ActionChoice choice;
  choice.probs = Distribution(state, x);
  choice.arm = rng.Categorical(choice.probs);
  choice.propensity = choice.probs[choice.arm];
  return choice;
}

void Policy::Update(PolicyState& state, const Eigen::Ref<const Vector>& x,
                    int arm, double propensity, double y) const {
  if (arm < 0 || arm >= num_arms_) {
    throw InputError("arm " + std::to_string(arm + 1) + " out of range");
  }
  if (!(propensity > 0.0)) throw InputError("propensity must be positive");
  ++state.t;
  ++state.counts[arm];
  state.means[arm] += (y - state.means[arm]) / state.counts[arm];

  switch (config_.kind) {
    case PolicyKind::kBoltzmannRidge:
    case PolicyKind::kLinUcb: {
      state.gram[arm] += x * x.transpose();
      state.cross[arm] += y * x;
      const Eigen::LLT<Matrix> llt(state.gram[arm]);
      state.ridge_beta[arm] = llt.solve(state.cross[arm]);
      if (config_.kind == PolicyKind::kLinUcb) {
        state.gram_inverse[arm] =
            llt.solve(Matrix::Identity(context_dim_, context_dim_));
      }
      break;
    }
    case PolicyKind::kBoltzmannSgd: {
      Vector& beta = state.sgd_beta[arm];
      beta += config_.SgdRate(state.t) *
              Score(working_, arm, num_arms_, x, y, beta);
      const double norm = beta.norm();
      if (norm > config_.sgd_radius) {
        beta *= config_.sgd_radius / norm;
        ++state.sgd_clip_count;
      }
      break;
    }
    case PolicyKind::kIpwzGreedy: {
      const double w = 1.0 / propensity;
      state.ipw_design[arm] += w * ScoreDesign(working_, arm, num_arms_, x);
      state.ipw_moment[arm] += w * ScoreMoment(working_, arm, num_arms_, x, y);
      const int p = working_.Dimension(context_dim_);
      state.ipw_ready[arm] = false;
      if (state.counts[arm] >= p &&
          ConditionNumber(state.ipw_design[arm]) <= kMaxCondition) {
        state.ipw_theta[arm] =
            state.ipw_design[arm].fullPivLu().solve(state.ipw_moment[arm]);
        state.ipw_ready[arm] = true;
      }
      break;
    }
    default:
      break;
  }
}

}  // namespace ipwz
