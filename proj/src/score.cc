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
#include "ipwz/score.h"

#include <algorithm>
#include <cmath>

#include "ipwz/error.h"

namespace ipwz {

TargetPolicy TargetPolicy::Fixed(std::vector<double> probs) {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) {
      throw ConfigError("target_policy.probs", "negative probability");
    }
    total += p;
  }
  if (probs.empty() || std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("target_policy.probs", "probabilities must sum to 1");
  }
  TargetPolicy policy;
  policy.kind_ = Kind::kFixed;
  policy.probs_ = std::move(probs);
  return policy;
}

TargetPolicy TargetPolicy::LinearSoftmax(std::vector<Vector> weights,
                                         double temperature) {
  if (weights.empty()) {
    throw ConfigError("target_policy.weights", "need one weight per arm");
  }
  if (!(temperature > 0.0)) {
    throw ConfigError("target_policy.temperature", "must be positive");
  }
  TargetPolicy policy;
  policy.kind_ = Kind::kLinearSoftmax;
  policy.weights_ = std::move(weights);
  policy.temperature_ = temperature;
  return policy;
}

std::vector<double> TargetPolicy::Probabilities(
    const Eigen::Ref<const Vector>& x, int num_arms) const {
  switch (kind_) {
    case Kind::kUniform:
      return std::vector<double>(num_arms, 1.0 / num_arms);
    case Kind::kFixed:
      if (static_cast<int>(probs_.size()) != num_arms) {
        throw InputError("target policy has " + std::to_string(probs_.size()) +
                         " arms, environment has " + std::to_string(num_arms));
      }
      return probs_;
    case Kind::kLinearSoftmax: {
      if (static_cast<int>(weights_.size()) != num_arms) {
        throw InputError("target policy weight count does not match arms");
      }
      std::vector<double> logits(num_arms);
      for (int a = 0; a < num_arms; ++a) {
        if (weights_[a].size() != x.size()) {
          throw InputError("target policy weight dimension mismatch");
        }
        logits[a] = weights_[a].dot(x) / temperature_;
      }
      const double top = *std::max_element(logits.begin(), logits.end());
      double total = 0.0;
      for (double& l : logits) {
        l = std::exp(l - top);
        total += l;
      }
      for (double& l : logits) l /= total;
      return logits;
    }
  }
  return {};
}

double TargetPolicy::Probability(int arm, const Eigen::Ref<const Vector>& x,
                                 int num_arms) const {
  if (kind_ == Kind::kUniform) return 1.0 / num_arms;
  if (kind_ == Kind::kFixed) return Probabilities(x, num_arms)[arm];
  return Probabilities(x, num_arms)[arm];
}

nlohmann::json TargetPolicy::ToJson() const {
  switch (kind_) {
    case Kind::kUniform:
      return {{"kind", "uniform"}};
    case Kind::kFixed:
      return {{"kind", "fixed"}, {"probs", probs_}};
    case Kind::kLinearSoftmax: {
      nlohmann::json w = nlohmann::json::array();
      for (const auto& v : weights_) {
        w.push_back(std::vector<double>(v.data(), v.data() + v.size()));
      }
      return {{"kind", "linear_softmax"},
              {"weights", w},
              {"temperature", temperature_}};
    }
  }
  return {};
}

TargetPolicy TargetPolicy::FromJson(const nlohmann::json& j) {
  const std::string kind = j.value("kind", "uniform");
  if (kind == "uniform") return Uniform();
  if (kind == "fixed") {
    return Fixed(j.at("probs").get<std::vector<double>>());
  }
  if (kind == "linear_softmax") {
    std::vector<Vector> weights;
    for (const auto& row : j.at("weights")) {
      const auto values = row.get<std::vector<double>>();
      weights.push_back(Eigen::Map<const Vector>(
          values.data(), static_cast<Eigen::Index>(values.size())));
    }
    return LinearSoftmax(std::move(weights), j.value("temperature", 1.0));
  }
  throw ConfigError("target_policy.kind", "unknown target policy '" + kind + "'");
}

const char* TargetFamilyName(TargetFamily family) {
  switch (family) {
    case TargetFamily::kMisspecLinear:
      return "misspec_linear";
    case TargetFamily::kNoisyContext:
      return "noisy_context";
    case TargetFamily::kOpe:
      return "ope";
  }
  return "?";
}

TargetFamily ParseTargetFamily(const std::string& name) {
  if (name == "misspec_linear") return TargetFamily::kMisspecLinear;
  if (name == "noisy_context") return TargetFamily::kNoisyContext;
  if (name == "ope") return TargetFamily::kOpe;
  throw ConfigError("target.family", "unknown target family '" + name + "'");
}

ScoreTarget ScoreTarget::NoisyContext(Matrix sigma_e) {
  if (!IsPositiveSemidefinite(sigma_e)) {
    throw ConfigError("target.sigma_e", "must be symmetric positive semidefinite");
  }
  ScoreTarget target;
  target.family = TargetFamily::kNoisyContext;
  target.sigma_source = SigmaSource::kKnown;
  target.sigma_e = std::move(sigma_e);
  return target;
}

ScoreTarget ScoreTarget::Ope(TargetPolicy policy) {
  ScoreTarget target;
  target.family = TargetFamily::kOpe;
  target.target_policy = std::move(policy);
  return target;
}

nlohmann::json ScoreTarget::ToJson() const {
  nlohmann::json j = {{"family", TargetFamilyName(family)}};
  if (family == TargetFamily::kNoisyContext) {
    switch (sigma_source) {
      case SigmaSource::kKnown: {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < sigma_e.rows(); ++r) {
          nlohmann::json row = nlohmann::json::array();
          for (Eigen::Index c = 0; c < sigma_e.cols(); ++c) {
            row.push_back(sigma_e(r, c));
          }
          rows.push_back(row);
        }
        j["sigma_e"] = rows;
        break;
      }
      case SigmaSource::kFromEnvironment:
        j["sigma_e"] = "env";
        break;
      case SigmaSource::kEstimateFromAux:
        j["sigma_e"] = "estimate-from-aux";
        break;
    }
  }
  if (family == TargetFamily::kOpe) j["target_policy"] = target_policy.ToJson();
  return j;
}

ScoreTarget ScoreTarget::FromJson(const nlohmann::json& j) {
  static const char* kKeys[] = {"family", "sigma_e", "target_policy"};
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(std::begin(kKeys), std::end(kKeys), [&](const char* k) {
          return key == k;
        }) == std::end(kKeys)) {
      throw ConfigError("target." + key, "unknown key");
    }
  }
  ScoreTarget target;
  target.family = ParseTargetFamily(j.value("family", "misspec_linear"));
  if (j.contains("sigma_e")) {
    const auto& s = j.at("sigma_e");
    if (s.is_string()) {
      const auto mode = s.get<std::string>();
      if (mode == "estimate-from-aux") {
        target.sigma_source = SigmaSource::kEstimateFromAux;
      } else if (mode == "env") {
        target.sigma_source = SigmaSource::kFromEnvironment;
      } else {
        throw ConfigError("target.sigma_e", "unknown mode '" + mode + "'");
      }
    } else {
      Matrix m;
      if (s.is_number()) {
        m = Matrix::Constant(1, 1, s.get<double>());
      } else {
        const auto rows = s.get<std::vector<std::vector<double>>>();
        m.resize(static_cast<Eigen::Index>(rows.size()),
                 rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
          if (rows[r].size() != rows[0].size()) {
            throw ConfigError("target.sigma_e", "ragged matrix");
          }
          for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
        }
      }
      if (!IsPositiveSemidefinite(m)) {
        throw ConfigError("target.sigma_e",
                          "must be symmetric positive semidefinite");
      }
      target.sigma_source = SigmaSource::kKnown;
      target.sigma_e = std::move(m);
    }
  }
  if (j.contains("target_policy")) {
    target.target_policy = TargetPolicy::FromJson(j.at("target_policy"));
  }
  return target;
}

Vector ScoreMoment(const ScoreTarget& target, int arm, int num_arms,
                   const Eigen::Ref<const Vector>& x, double y) {
  if (target.family == TargetFamily::kOpe) {
    return Vector::Constant(1, target.target_policy.Probability(arm, x, num_arms) * y);
  }
  return x * y;
}

Matrix ScoreDesign(const ScoreTarget& target, int arm, int num_arms,
                   const Eigen::Ref<const Vector>& x) {
  (void)arm;
  (void)num_arms;
  switch (target.family) {
    case TargetFamily::kMisspecLinear:
      return x * x.transpose();
    case TargetFamily::kNoisyContext:
      if (target.sigma_e.rows() != x.size() || target.sigma_e.cols() != x.size()) {
        throw InputError("sigma_e is " + std::to_string(target.sigma_e.rows()) +
                         "x" + std::to_string(target.sigma_e.cols()) +
                         " but the context has dimension " +
                         std::to_string(x.size()));
      }
      return x * x.transpose() - target.sigma_e;
    case TargetFamily::kOpe:
      return Matrix::Identity(1, 1);
  }
  return {};
}

Vector Score(const ScoreTarget& target, int arm, int num_arms,
             const Eigen::Ref<const Vector>& x, double y,
             const Eigen::Ref<const Vector>& theta) {
  const int dim = target.Dimension(static_cast<int>(x.size()));
  if (theta.size() != dim) {
    throw InputError("theta has dimension " + std::to_string(theta.size()) +
                     ", expected " + std::to_string(dim));
  }
  return ScoreMoment(target, arm, num_arms, x, y) -
         ScoreDesign(target, arm, num_arms, x) * theta;
}

}  // namespace ipwz
