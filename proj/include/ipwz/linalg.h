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
#ifndef IPWZ_LINALG_H_
#define IPWZ_LINALG_H_

#include <Eigen/Dense>
#include <string>

namespace ipwz {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Designs whose 2-norm condition estimate exceeds this are rejected.
inline constexpr double kMaxCondition = 1e12;

// 2-norm condition number from the singular values; +inf when singular.
double ConditionNumber(const Matrix& a);

// Solves a x = b, throwing SingularDesign (tagged with `what`) when the
// condition estimate of `a` exceeds max_condition.
Vector SolveChecked(const Matrix& a, const Vector& b, const std::string& what,
                    double max_condition = kMaxCondition);

// Inverse with the same singularity guard.
Matrix InverseChecked(const Matrix& a, const std::string& what,
                      double max_condition = kMaxCondition);

bool IsSymmetric(const Matrix& a, double tol = 1e-10);
bool IsPositiveSemidefinite(const Matrix& a, double tol = 1e-10);

// Symmetric square root R with R R^T = a for symmetric PSD a.
Matrix PsdSqrt(const Matrix& a);

}  // namespace ipwz

#endif  // IPWZ_LINALG_H_
