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
// Contextual adaptive doubly robust (CADR) policy-value estimate, used as
// a baseline for off-policy evaluation on adaptively collected logs.

#ifndef IPWZ_CADR_H_
#define IPWZ_CADR_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ipwz/bandit_log.h"
#include "ipwz/inference.h"
#include "ipwz/score.h"

namespace ipwz {

enum class CadrRegression { kZero, kOnlineLinear };

const char* CadrRegressionName(CadrRegression regression);
CadrRegression ParseCadrRegression(const std::string& name);

struct CadrOptions {
  CadrRegression regression = CadrRegression::kZero;
  double variance_floor = 1e-6;
  // Rounds t <= burn_in use sigma_t = 1.
  int burn_in = 10;
  // Ridge penalty of the per-arm outcome model on features (1, x).
  double ridge_lambda = 1.0;
};

// g_t(. | x): the logging distribution of round t (1-based) evaluated at an
// arbitrary context, written into `out` (length K).
using LoggingPolicyFn =
    std::function<void(int t, const Eigen::Ref<const Vector>& x,
                       std::span<double> out)>;

struct CadrResult {
  double value = 0.0;
  double gamma = 0.0;  // Gamma_T; the standard error is gamma / sqrt(T)
  std::vector<double> levels;
  std::vector<Interval> ci;
  int floored = 0;     // rounds whose sigma_t^2 hit the floor
};

// Without `logging_policy`, g_t(. | X_s) is taken to be the distribution
// logged at round s, which needs a log with full distributions.
CadrResult CadrOpe(const BanditLog& log, const TargetPolicy& target_policy,
                   const std::vector<double>& levels,
                   const CadrOptions& options = {},
                   const LoggingPolicyFn& logging_policy = nullptr);

// Same estimate by direct O(T^2) summation over past rounds; kept as a
// reference for testing the grouped evaluation.
CadrResult CadrOpeReference(const BanditLog& log,
                            const TargetPolicy& target_policy,
                            const std::vector<double>& levels,
                            const CadrOptions& options = {},
                            const LoggingPolicyFn& logging_policy = nullptr);

}  // namespace ipwz

#endif  // IPWZ_CADR_H_
