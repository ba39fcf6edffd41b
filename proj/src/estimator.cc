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

#include "ipwz/error.h"

namespace ipwz {
namespace {

void CheckArm(const BanditLog& log, int arm) {
  if (arm < 0 || arm >= log.num_arms()) {
    throw InputError("arm " + std::to_string(arm + 1) + " out of range 1.." +
                     std::to_string(log.num_arms()));
  }
}

}  // namespace

ArmFit IpwzFit(const BanditLog& log, const ScoreTarget& target, int arm) {
  CheckArm(log, arm);
  const int k = log.num_arms();
  const int p = target.Dimension(log.context_dim());
  ArmFit fit;
  fit.design = Matrix::Zero(p, p);
  fit.moment = Vector::Zero(p);
  for (int t = 0; t < log.size(); ++t) {
    if (log.arm(t) != arm) continue;
    const double w = 1.0 / log.propensity(t);
    const auto x = log.context(t);
    fit.design += w * ScoreDesign(target, arm, k, x);
    fit.moment += w * ScoreMoment(target, arm, k, x, log.outcome(t));
    ++fit.pulls;
  }
  if (fit.pulls == 0) throw NoDataForArm(arm);
  const double scale = 1.0 / log.size();
  fit.design *= scale;
  fit.moment *= scale;
  fit.theta = SolveChecked(fit.design, fit.moment,
                           "weighted design for arm " + std::to_string(arm + 1));
  return fit;
}

Vector IpwzSolve(const BanditLog& log, const ScoreTarget& target, int arm) {
  return IpwzFit(log, target, arm).theta;
}

Vector EstimatingEquation(const BanditLog& log, const ScoreTarget& target,
                          int arm, const Eigen::Ref<const Vector>& theta) {
  CheckArm(log, arm);
  Vector total = Vector::Zero(target.Dimension(log.context_dim()));
  for (int t = 0; t < log.size(); ++t) {
    if (log.arm(t) != arm) continue;
    total += Score(target, arm, log.num_arms(), log.context(t), log.outcome(t),
                   theta) /
             log.propensity(t);
  }
  return log.empty() ? total : Vector(total / log.size());
}

Matrix EstimateSigmaE(const AuxiliaryData& aux) {
  if (aux.size() == 0) throw InputError("auxiliary data is empty");
  Matrix sigma = Matrix::Zero(aux.dim(), aux.dim());
  for (int i = 0; i < aux.size(); ++i) {
    const Vector err = aux.observed(i) - aux.latent(i);
    sigma += err * err.transpose();
  }
  return sigma / aux.size();
}

EstimatedSigmaFit IpwzSolveEstimatedSigma(const BanditLog& log,
                                          const AuxiliaryData& aux, int arm) {
  if (aux.size() == 0) throw InputError("auxiliary data is empty");
  if (aux.dim() != log.context_dim()) {
    throw InputError("auxiliary data dimension " + std::to_string(aux.dim()) +
                     " does not match the log's " +
                     std::to_string(log.context_dim()));
  }
  EstimatedSigmaFit fit;
  fit.sigma_e_hat = EstimateSigmaE(aux);
  ScoreTarget target = ScoreTarget::NoisyContext(fit.sigma_e_hat);
  fit.theta = IpwzSolve(log, target, arm);
  return fit;
}

}  // namespace ipwz
