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
#include "ipwz/inference.h"

#include <cmath>
#include <cstdio>

#include "ipwz/error.h"
#include "ipwz/estimator.h"
#include "ipwz/stats.h"

namespace ipwz {

using nlohmann::json;

const char* VarianceModeName(VarianceMode mode) {
  return mode == VarianceMode::kFull ? "full" : "simplified";
}

VarianceMode ParseVarianceMode(const std::string& name) {
  if (name == "full") return VarianceMode::kFull;
  if (name == "simplified") return VarianceMode::kSimplified;
  throw ConfigError("harness.variance_mode", "expected 'full' or 'simplified'");
}

SandwichResult SandwichVariance(const BanditLog& log, const ScoreTarget& target,
                                int arm, const Eigen::Ref<const Vector>& theta_hat,
                                VarianceMode mode) {
  if (log.empty()) throw InputError("cannot estimate a variance from an empty log");
  const int k = log.num_arms();
  const int p = target.Dimension(log.context_dim());
  SandwichResult result;
  result.g_dot = Matrix::Zero(p, p);
  result.info = Matrix::Zero(p, p);
  int pulls = 0;
  for (int t = 0; t < log.size(); ++t) {
    const auto x = log.context(t);
    if (log.arm(t) == arm) {
      const double w = 1.0 / log.propensity(t);
      const Vector g = Score(target, arm, k, x, log.outcome(t), theta_hat);
      result.info += (w * w) * g * g.transpose();
      if (mode == VarianceMode::kFull) result.g_dot += w * ScoreDesign(target, arm, k, x);
      ++pulls;
    }
    if (mode == VarianceMode::kSimplified && target.family != TargetFamily::kOpe) {
      result.g_dot += ScoreDesign(target, arm, k, x);
    }
  }
  if (pulls == 0) throw NoDataForArm(arm);
  const double scale = 1.0 / log.size();
  result.info *= scale;
  if (mode == VarianceMode::kSimplified && target.family == TargetFamily::kOpe) {
    result.g_dot = Matrix::Identity(1, 1);
  } else {
    result.g_dot *= scale;
  }
  const Matrix inverse = InverseChecked(
      result.g_dot, "variance design for arm " + std::to_string(arm + 1));
  const Matrix sigma = inverse * result.info * inverse.transpose();
  result.sigma = 0.5 * (sigma + sigma.transpose());
  return result;
}

std::vector<std::vector<Interval>> ConfidenceIntervals(
    const Eigen::Ref<const Vector>& theta_hat, const Matrix& sigma,
    double sample_size, const std::vector<double>& levels, int* floored) {
  if (!(sample_size >= 1.0)) throw InputError("sample size must be at least 1");
  std::vector<double> se(theta_hat.size());
  for (Eigen::Index i = 0; i < theta_hat.size(); ++i) {
    double v = sigma(i, i);
    if (v < 0.0) {
      v = 0.0;
      if (floored != nullptr) ++*floored;
    }
    se[i] = std::sqrt(v / sample_size);
  }
  std::vector<std::vector<Interval>> out;
  for (double level : levels) {
    const double z = NormalCriticalValue(level);
    std::vector<Interval> row(theta_hat.size());
    for (Eigen::Index i = 0; i < theta_hat.size(); ++i) {
      row[i] = {theta_hat(i) - z * se[i], theta_hat(i) + z * se[i]};
    }
    out.push_back(std::move(row));
  }
  return out;
}

json MatrixToJson(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

std::string LevelKey(double level) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%g", level);
  return buffer;
}

namespace {

json IntervalsToJson(const std::vector<double>& levels,
                     const std::vector<std::vector<Interval>>& ci) {
  json out = json::object();
  for (std::size_t l = 0; l < levels.size(); ++l) {
    json rows = json::array();
    for (const auto& interval : ci[l]) rows.push_back({interval.lo, interval.hi});
    out[LevelKey(levels[l])] = rows;
  }
  return out;
}

}  // namespace

json EstimateReport::ToJson() const {
  json out = json::array();
  for (const auto& a : arms) {
    out.push_back({{"arm", a.arm + 1},
                   {"theta", std::vector<double>(a.theta.data(),
                                                 a.theta.data() + a.theta.size())},
                   {"sigma", MatrixToJson(a.sandwich.sigma)},
                   {"g_dot", MatrixToJson(a.sandwich.g_dot)},
                   {"info", MatrixToJson(a.sandwich.info)},
                   {"ci", IntervalsToJson(levels, a.ci)},
                   {"T", horizon}});
  }
  return {{"T", horizon}, {"arms", out}, {"floored_diagonals", floored_diagonals}};
}

EstimateReport Estimate(const BanditLog& log, const ScoreTarget& target,
                        const std::vector<double>& levels, VarianceMode mode,
                        std::vector<int> arms) {
  if (arms.empty()) {
    for (int a = 0; a < log.num_arms(); ++a) arms.push_back(a);
  }
  EstimateReport report;
  report.horizon = log.size();
  report.levels = levels;
  for (int arm : arms) {
    ArmReport r;
    r.arm = arm;
    r.theta = IpwzSolve(log, target, arm);
    r.sandwich = SandwichVariance(log, target, arm, r.theta, mode);
    r.ci = ConfidenceIntervals(r.theta, r.sandwich.sigma, log.size(), levels,
                               &report.floored_diagonals);
    report.arms.push_back(std::move(r));
  }
  return report;
}

json OpeReport::ToJson() const {
  json ci_json = json::object();
  for (std::size_t l = 0; l < levels.size(); ++l) {
    ci_json[LevelKey(levels[l])] = {ci[l].lo, ci[l].hi};
  }
  return {{"value", value},     {"variance", variance}, {"ci", ci_json},
          {"theta", arm_theta}, {"T", horizon}};
}

OpeReport OpeValue(const BanditLog& log, const ScoreTarget& target,
                   const std::vector<double>& levels, VarianceMode mode) {
  if (target.family != TargetFamily::kOpe) {
    throw ConfigError("target.family", "policy value needs the ope target");
  }
  OpeReport report;
  report.horizon = log.size();
  report.levels = levels;
  for (int a = 0; a < log.num_arms(); ++a) {
    const Vector theta = IpwzSolve(log, target, a);
    const SandwichResult s = SandwichVariance(log, target, a, theta, mode);
    report.arm_theta.push_back(theta(0));
    report.value += theta(0);
    report.variance += s.sigma(0, 0);
  }
  const auto ci = ConfidenceIntervals(Vector::Constant(1, report.value),
                                      Matrix::Constant(1, 1, report.variance),
                                      log.size(), levels);
  for (const auto& row : ci) report.ci.push_back(row[0]);
  return report;
}

const char* SigmaRegimeName(SigmaRegime regime) {
  switch (regime) {
    case SigmaRegime::kAuto:
      return "auto";
    case SigmaRegime::kNDominant:
      return "n_dominant";
    case SigmaRegime::kProportional:
      return "proportional";
    case SigmaRegime::kTDominant:
      return "t_dominant";
  }
  return "auto";
}

SigmaRegime ParseSigmaRegime(const std::string& name) {
  for (auto r : {SigmaRegime::kAuto, SigmaRegime::kNDominant,
                 SigmaRegime::kProportional, SigmaRegime::kTDominant}) {
    if (name == SigmaRegimeName(r)) return r;
  }
  throw ConfigError("regime", "unknown regime '" + name + "'");
}

SigmaRegime ChooseSigmaRegime(int n, int horizon) {
  const double ratio = static_cast<double>(n) / horizon;
  if (ratio > 10.0) return SigmaRegime::kNDominant;
  if (ratio < 0.1) return SigmaRegime::kTDominant;
  return SigmaRegime::kProportional;
}

EstimatedSigmaVariance VarianceEstimatedSigma(
    const BanditLog& log, const AuxiliaryData& aux, int arm,
    const Eigen::Ref<const Vector>& theta_tilde, const Matrix& sigma_e_hat,
    SigmaRegime regime) {
  if (aux.size() == 0) throw InputError("auxiliary data is empty");
  const ScoreTarget target = ScoreTarget::NoisyContext(sigma_e_hat);
  const SandwichResult s =
      SandwichVariance(log, target, arm, theta_tilde, VarianceMode::kFull);
  const Matrix inverse = InverseChecked(s.g_dot, "plug-in Sigma_S");

  const int d = aux.dim();
  Matrix h_bar = Matrix::Zero(d, d);
  for (int i = 0; i < aux.size(); ++i) {
    const Vector err = aux.observed(i) - aux.latent(i);
    const Vector u = (err * err.transpose() - sigma_e_hat) * theta_tilde;
    h_bar += u * u.transpose();
  }
  h_bar /= aux.size();

  EstimatedSigmaVariance out;
  out.h_bar = h_bar;
  out.regime = regime == SigmaRegime::kAuto
                   ? ChooseSigmaRegime(aux.size(), log.size())
                   : regime;
  Matrix middle;
  switch (out.regime) {
    case SigmaRegime::kNDominant:
      middle = s.info;
      out.sample_size = log.size();
      break;
    case SigmaRegime::kProportional: {
      const double kappa = static_cast<double>(aux.size()) / log.size();
      middle = s.info + h_bar / kappa;
      out.sample_size = log.size();
      break;
    }
    default:
      middle = h_bar;
      out.sample_size = aux.size();
      break;
  }
  const Matrix sigma = inverse * middle * inverse.transpose();
  out.sigma = 0.5 * (sigma + sigma.transpose());
  return out;
}

}  // namespace ipwz
