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
#include "ipwz/linalg.h"

#include <cmath>
#include <limits>

#include "ipwz/error.h"

namespace ipwz {

double ConditionNumber(const Matrix& a) {
  if (a.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  const double smallest = s(s.size() - 1);
  if (!(smallest > 0.0) || !std::isfinite(s(0))) {
    return std::numeric_limits<double>::infinity();
  }
  return s(0) / smallest;
}

Vector SolveChecked(const Matrix& a, const Vector& b, const std::string& what,
                    double max_condition) {
  if (a.rows() == 1) {
    // Scalar fast path; the condition of a 1x1 matrix is 1 unless it is 0.
    const double pivot = a(0, 0);
    if (pivot == 0.0 || !std::isfinite(pivot)) {
      throw SingularDesign(what, std::numeric_limits<double>::infinity());
    }
    return Vector::Constant(1, b(0) / pivot);
  }
  const double cond = ConditionNumber(a);
  if (!(cond <= max_condition)) throw SingularDesign(what, cond);
  return a.fullPivLu().solve(b);
}

Matrix InverseChecked(const Matrix& a, const std::string& what,
                      double max_condition) {
  if (a.rows() == 1) {
    const double pivot = a(0, 0);
    if (pivot == 0.0 || !std::isfinite(pivot)) {
      throw SingularDesign(what, std::numeric_limits<double>::infinity());
    }
    return Matrix::Constant(1, 1, 1.0 / pivot);
  }
  const double cond = ConditionNumber(a);
  if (!(cond <= max_condition)) throw SingularDesign(what, cond);
  return a.fullPivLu().inverse();
}

bool IsSymmetric(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

bool IsPositiveSemidefinite(const Matrix& a, double tol) {
  if (!IsSymmetric(a, tol)) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return eig.eigenvalues().minCoeff() >= -tol * scale;
}

Matrix PsdSqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  const Vector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace ipwz
