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
#include "ipwz/cadr.h"

#include <cmath>
#include <map>

#include "ipwz/error.h"
#include "ipwz/stats.h"

namespace ipwz {
namespace {

// Per-arm recursive ridge on features (1, x); the zero model predicts 0.
class OutcomeModel {
 public:
  OutcomeModel(CadrRegression regression, int num_arms, int context_dim,
               double lambda)
      : linear_(regression == CadrRegression::kOnlineLinear) {
    if (!linear_) return;
    const int p = context_dim + 1;
    gram_.assign(num_arms, lambda * Matrix::Identity(p, p));
    cross_.assign(num_arms, Vector::Zero(p));
    beta_.assign(num_arms, Vector::Zero(p));
  }

  double Predict(int arm, const Eigen::Ref<const Vector>& x) const {
    if (!linear_) return 0.0;
    return beta_[arm](0) + beta_[arm].tail(x.size()).dot(x);
  }

  void Update(int arm, const Eigen::Ref<const Vector>& x, double y) {
    if (!linear_) return;
    Vector phi(x.size() + 1);
    phi << 1.0, x;
    gram_[arm] += phi * phi.transpose();
    cross_[arm] += y * phi;
    beta_[arm] = gram_[arm].llt().solve(cross_[arm]);
  }

 private:
  bool linear_;
  std::vector<Matrix> gram_;
  std::vector<Vector> cross_;
  std::vector<Vector> beta_;
};

void CheckInputs(const BanditLog& log, const CadrOptions& options,
                 const LoggingPolicyFn& logging_policy) {
  if (log.size() <= options.burn_in) {
    throw InputError("CADR needs more than " + std::to_string(options.burn_in) +
                     " rounds, the log has " + std::to_string(log.size()));
  }
  if (!logging_policy && !log.has_distributions()) {
    throw InputError(
        "CADR needs the full logging distribution of every round; the log "
        "has no p_1..p_K columns");
  }
  if (options.burn_in < 0) {
    throw ConfigError("cadr.burn_in", "must be non-negative");
  }
  if (!(options.variance_floor > 0.0)) {
    throw ConfigError("cadr.variance_floor", "must be positive");
  }
}

// Folds sigma_t and D'_{t,t} into the final estimate.
class Accumulator {
 public:
  void Add(double sigma, double d_tt) {
    inv_sum_ += 1.0 / sigma;
    weighted_ += d_tt / sigma;
  }
  CadrResult Finish(int horizon, const std::vector<double>& levels, int floored) {
    CadrResult result;
    result.value = weighted_ / inv_sum_;
    result.gamma = horizon / inv_sum_;
    result.levels = levels;
    result.floored = floored;
    const double se = result.gamma / std::sqrt(static_cast<double>(horizon));
    for (double level : levels) {
      const double z = NormalCriticalValue(level);
      result.ci.push_back({result.value - z * se, result.value + z * se});
    }
    return result;
  }

 private:
  double inv_sum_ = 0.0;
  double weighted_ = 0.0;
};

double DiagonalTerm(const BanditLog& log, const TargetPolicy& target_policy,
                    const OutcomeModel& model, int t) {
  const int k = log.num_arms();
  const auto x = log.context(t);
  const int a = log.arm(t);
  double baseline = 0.0;
  for (int b = 0; b < k; ++b) {
    baseline += model.Predict(b, x) * target_policy.Probability(b, x, k);
  }
  return target_policy.Probability(a, x, k) / log.propensity(t) *
             (log.outcome(t) - model.Predict(a, x)) +
         baseline;
}

double FloorVariance(double variance, const CadrOptions& options, int& floored) {
  if (variance < options.variance_floor) {
    ++floored;
    return options.variance_floor;
  }
  return variance;
}

}  // namespace

const char* CadrRegressionName(CadrRegression regression) {
  return regression == CadrRegression::kZero ? "zero" : "online_linear";
}

CadrRegression ParseCadrRegression(const std::string& name) {
  if (name == "zero") return CadrRegression::kZero;
  if (name == "online_linear" || name == "linear") return CadrRegression::kOnlineLinear;
  throw ConfigError("cadr.regression", "expected 'zero' or 'online_linear'");
}

CadrResult CadrOpeReference(const BanditLog& log,
                            const TargetPolicy& target_policy,
                            const std::vector<double>& levels,
                            const CadrOptions& options,
                            const LoggingPolicyFn& logging_policy) {
  CheckInputs(log, options, logging_policy);
  const int k = log.num_arms();
  const int horizon = log.size();
  OutcomeModel model(options.regression, k, log.context_dim(),
                     options.ridge_lambda);
  Accumulator acc;
  int floored = 0;
  std::vector<double> g_t(k), g_star(k), q(k);
  for (int t = 1; t <= horizon; ++t) {
    double sigma = 1.0;
    if (t > options.burn_in) {
      double s1 = 0.0, s2 = 0.0;
      for (int s = 0; s < t - 1; ++s) {
        const auto x = log.context(s);
        if (logging_policy) {
          logging_policy(t, x, g_t);
        } else {
          const auto logged = log.distribution(s);
          g_t.assign(logged.begin(), logged.end());
        }
        g_star = target_policy.Probabilities(x, k);
        double baseline = 0.0;
        for (int b = 0; b < k; ++b) {
          q[b] = model.Predict(b, x);
          baseline += q[b] * g_star[b];
        }
        const int a = log.arm(s);
        const double d = g_star[a] / g_t[a] * (log.outcome(s) - q[a]) + baseline;
        const double ratio = g_t[a] / log.propensity(s);
        s1 += ratio * d;
        s2 += ratio * d * d;
      }
      const double n = t - 1;
      const double variance = t > 1 ? s2 / n - (s1 / n) * (s1 / n) : 0.0;
      sigma = std::sqrt(FloorVariance(variance, options, floored));
    }
    acc.Add(sigma, DiagonalTerm(log, target_policy, model, t - 1));
    model.Update(log.arm(t - 1), log.context(t - 1), log.outcome(t - 1));
  }
  return acc.Finish(horizon, levels, floored);
}

CadrResult CadrOpe(const BanditLog& log, const TargetPolicy& target_policy,
                   const std::vector<double>& levels, const CadrOptions& options,
                   const LoggingPolicyFn& logging_policy) {
  CheckInputs(log, options, logging_policy);
  const int k = log.num_arms();
  const int horizon = log.size();

  // Rounds sharing a context share g_t(. | x), Q(., x) and pi_e(. | x), so
  // the sums over past rounds reduce to per-(context, arm) moments.
  std::map<std::vector<double>, int> index;
  std::vector<int> group(horizon);
  std::vector<int> representative;
  for (int t = 0; t < horizon; ++t) {
    const auto x = log.context(t);
    std::vector<double> key(x.data(), x.data() + x.size());
    auto [it, inserted] = index.emplace(std::move(key), static_cast<int>(index.size()));
    if (inserted) representative.push_back(t);
    group[t] = it->second;
  }
  constexpr std::size_t kMaxGroups = 512;
  if (index.size() > kMaxGroups) {
    return CadrOpeReference(log, target_policy, levels, options, logging_policy);
  }
  const int groups = static_cast<int>(index.size());

  struct Moments {
    double count = 0, n0 = 0, n1 = 0, p2 = 0, q0 = 0, q1 = 0, q2 = 0;
  };
  std::vector<Moments> moments(static_cast<std::size_t>(groups) * k);
  std::vector<std::vector<double>> g_star(groups);
  for (int u = 0; u < groups; ++u) {
    g_star[u] = target_policy.Probabilities(log.context(representative[u]), k);
  }

  OutcomeModel model(options.regression, k, log.context_dim(),
                     options.ridge_lambda);
  Accumulator acc;
  int floored = 0;
  std::vector<double> g_t(k), q(k);
  for (int t = 1; t <= horizon; ++t) {
    double sigma = 1.0;
    if (t > options.burn_in) {
      double s1 = 0.0, s2 = 0.0;
      for (int u = 0; u < groups; ++u) {
        const auto x = log.context(representative[u]);
        if (logging_policy) logging_policy(t, x, g_t);
        double baseline = 0.0;
        for (int b = 0; b < k; ++b) {
          q[b] = model.Predict(b, x);
          baseline += q[b] * g_star[u][b];
        }
        for (int a = 0; a < k; ++a) {
          const Moments& m = moments[static_cast<std::size_t>(u) * k + a];
          if (m.count == 0) continue;
          const double gs = g_star[u][a];
          const double c = baseline;
          if (logging_policy) {
            // ratio * D' = g*(Y - Q)/pi + c g_t/pi.
            const double r = gs / g_t[a];
            s1 += gs * (m.n1 - q[a] * m.n0) + c * g_t[a] * m.n0;
            s2 += g_t[a] * (r * r * (m.p2 - 2.0 * q[a] * m.n1 + q[a] * q[a] * m.n0) +
                            2.0 * r * c * (m.n1 - q[a] * m.n0) + c * c * m.n0);
          } else {
            // g_t(. | X_s) = g_s(. | X_s): ratio 1, D' = g*(Y - Q)/pi + c.
            s1 += gs * (m.n1 - q[a] * m.n0) + c * m.count;
            s2 += gs * gs * (m.q2 - 2.0 * q[a] * m.q1 + q[a] * q[a] * m.q0) +
                  2.0 * gs * c * (m.n1 - q[a] * m.n0) + c * c * m.count;
          }
        }
      }
      const double n = t - 1;
      const double variance = t > 1 ? s2 / n - (s1 / n) * (s1 / n) : 0.0;
      sigma = std::sqrt(FloorVariance(variance, options, floored));
    }
    const int row = t - 1;
    acc.Add(sigma, DiagonalTerm(log, target_policy, model, row));
    model.Update(log.arm(row), log.context(row), log.outcome(row));

    Moments& m = moments[static_cast<std::size_t>(group[row]) * k + log.arm(row)];
    const double w = 1.0 / log.propensity(row);
    const double y = log.outcome(row);
    m.count += 1.0;
    m.n0 += w;
    m.n1 += w * y;
    m.p2 += w * y * y;
    m.q0 += w * w;
    m.q1 += w * w * y;
    m.q2 += w * w * y * y;
  }
  return acc.Finish(horizon, levels, floored);
}

}  // namespace ipwz
