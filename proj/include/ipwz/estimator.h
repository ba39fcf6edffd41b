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
// Inverse-probability-weighted Z-estimation.
//
// For arm a the estimate solves
//
//   (1/T) sum_t W_t 1{A_t = a} g(X_t, Y_t; theta) = 0,  W_t = 1 / pi_t,
//
// which for the affine scores reduces to one linear system per arm.

#ifndef IPWZ_ESTIMATOR_H_
#define IPWZ_ESTIMATOR_H_

#include "ipwz/bandit_log.h"
#include "ipwz/linalg.h"
#include "ipwz/score.h"

namespace ipwz {

struct ArmFit {
  Vector theta;
  Matrix design;   // (1/T) sum w J(X)
  Vector moment;   // (1/T) sum w m(X, Y)
  int pulls = 0;
};

// Throws NoDataForArm when the arm was never pulled and SingularDesign when
// the weighted design is too ill-conditioned.
ArmFit IpwzFit(const BanditLog& log, const ScoreTarget& target, int arm);
Vector IpwzSolve(const BanditLog& log, const ScoreTarget& target, int arm);

// G_T(theta) = (1/T) sum w g(X, Y; theta).
Vector EstimatingEquation(const BanditLog& log, const ScoreTarget& target,
                          int arm, const Eigen::Ref<const Vector>& theta);

// Mean of (X~ - S~)(X~ - S~)^T over the auxiliary rows.
Matrix EstimateSigmaE(const AuxiliaryData& aux);

struct EstimatedSigmaFit {
  Vector theta;
  Matrix sigma_e_hat;
};

// Noisy-context estimate with Sigma_e replaced by its auxiliary estimate.
EstimatedSigmaFit IpwzSolveEstimatedSigma(const BanditLog& log,
                                          const AuxiliaryData& aux, int arm);

}  // namespace ipwz

#endif  // IPWZ_ESTIMATOR_H_
