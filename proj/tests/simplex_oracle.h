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
// Independent solvers for the Euclidean projection onto the floored simplex.

#ifndef IPWZ_TESTS_SIMPLEX_ORACLE_H_
#define IPWZ_TESTS_SIMPLEX_ORACLE_H_

#include <algorithm>
#include <cmath>
#include <vector>

namespace ipwz::testing {

// Projection onto {p : sum p = 1, p >= floor} by Dykstra's alternating
// projections between the hyperplane and the box.
inline std::vector<double> DykstraProjection(const std::vector<double>& v,
                                             double floor) {
  const int k = static_cast<int>(v.size());
  std::vector<double> x = v, p(k, 0.0), q(k, 0.0), y(k);
  for (int iter = 0; iter < 200000; ++iter) {
    std::vector<double> before = x;
    double shift = 0.0;
    for (int i = 0; i < k; ++i) shift += x[i] + p[i];
    shift = (shift - 1.0) / k;
    for (int i = 0; i < k; ++i) {
      y[i] = x[i] + p[i] - shift;
      p[i] = x[i] + p[i] - y[i];
    }
    for (int i = 0; i < k; ++i) {
      const double z = y[i] + q[i];
      x[i] = std::max(z, floor);
      q[i] = z - x[i];
    }
    double change = 0.0;
    for (int i = 0; i < k; ++i) change = std::max(change, std::abs(x[i] - before[i]));
    if (change < 1e-16) break;
  }
  return x;
}

// Projected gradient descent on 0.5 |p - v|^2 with step 1/2.
inline std::vector<double> ProjectedGradientOracle(const std::vector<double>& v,
                                                   double floor) {
  const int k = static_cast<int>(v.size());
  std::vector<double> p(k, 1.0 / k);
  for (int iter = 0; iter < 80; ++iter) {
    std::vector<double> step(k);
    for (int i = 0; i < k; ++i) step[i] = p[i] - 0.5 * (p[i] - v[i]);
    p = DykstraProjection(step, floor);
  }
  return p;
}

inline double Distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace ipwz::testing

#endif  // IPWZ_TESTS_SIMPLEX_ORACLE_H_
