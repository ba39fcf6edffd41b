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
#include "ipwz/env.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "ipwz/error.h"

namespace ipwz {
namespace {

using nlohmann::json;

// Reads declared parameters from an override object and rejects the rest.
class ParamReader {
 public:
  ParamReader(const json& params, std::set<std::string> allowed)
      : params_(params.is_null() ? json::object() : params) {
    if (!params_.is_object()) {
      throw ConfigError("params", "environment params must be an object");
    }
    for (const auto& [key, value] : params_.items()) {
      if (!allowed.count(key)) {
        throw ConfigError("params." + key, "not a parameter of this environment");
      }
    }
  }

  bool Has(const std::string& key) const { return params_.contains(key); }

  double Number(const std::string& key, double fallback) const {
    if (!Has(key)) return fallback;
    const auto& v = params_.at(key);
    if (!v.is_number()) throw ConfigError("params." + key, "expected a number");
    return v.get<double>();
  }

  int Integer(const std::string& key, int fallback, int min_value) const {
    if (!Has(key)) return fallback;
    const auto& v = params_.at(key);
    if (!v.is_number_integer()) {
      throw ConfigError("params." + key, "expected an integer");
    }
    const int value = v.get<int>();
    if (value < min_value) {
      throw ConfigError("params." + key,
                        "must be at least " + std::to_string(min_value));
    }
    return value;
  }

  // A number means a multiple of the identity.
  Matrix Covariance(const std::string& key, int dim) const {
    Matrix m = Matrix::Identity(dim, dim);
    if (Has(key)) {
      const auto& v = params_.at(key);
      if (v.is_number()) {
        m *= v.get<double>();
      } else {
        m = ParseMatrix(v, "params." + key);
        if (m.rows() != dim || m.cols() != dim) {
          throw ConfigError("params." + key,
                            "expected a " + std::to_string(dim) + "x" +
                                std::to_string(dim) + " matrix");
        }
      }
    }
    if (!IsPositiveSemidefinite(m)) {
      throw ConfigError("params." + key, "covariance is not symmetric PSD");
    }
    return m;
  }

  const json& Raw(const std::string& key) const { return params_.at(key); }

  static Matrix ParseMatrix(const json& v, const std::string& key) {
    if (!v.is_array() || v.empty()) throw ConfigError(key, "expected a matrix");
    std::vector<std::vector<double>> rows;
    try {
      rows = v.get<std::vector<std::vector<double>>>();
    } catch (const json::exception&) {
      throw ConfigError(key, "expected an array of numeric rows");
    }
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows[0].size()) throw ConfigError(key, "ragged matrix");
      for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    }
    return m;
  }

 private:
  json params_;
};

Vector ToVector(const json& v, const std::string& key) {
  if (v.is_number()) return Vector::Constant(1, v.get<double>());
  std::vector<double> values;
  try {
    values = v.get<std::vector<double>>();
  } catch (const json::exception&) {
    throw ConfigError(key, "expected a number or numeric array");
  }
  return Eigen::Map<const Vector>(values.data(),
                                  static_cast<Eigen::Index>(values.size()));
}

json FromVector(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

json FromMatrix(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Vector DrawGaussian(const Matrix& root, RandomStream& rng) {
  Vector z(root.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.Normal();
  return root * z;
}

// Per-arm coefficient rows: 1 x d (linear/relu) or degree x d (polynomial).
std::vector<Matrix> ResolveCoefficients(const ParamReader& reader, int num_arms,
                                        int rows, int dim,
                                        const Matrix& sigma_theta,
                                        std::uint64_t seed) {
  std::vector<Matrix> coefficients;
  if (reader.Has("theta")) {
    const auto& raw = reader.Raw("theta");
    if (!raw.is_array() || static_cast<int>(raw.size()) != num_arms) {
      throw ConfigError("params.theta", "need one entry per arm (" +
                                            std::to_string(num_arms) + ")");
    }
    for (const auto& arm : raw) {
      Matrix m(rows, dim);
      if (rows == 1) {
        const Vector v = ToVector(arm, "params.theta");
        if (v.size() != dim) throw ConfigError("params.theta", "wrong dimension");
        m.row(0) = v.transpose();
      } else {
        if (!arm.is_array() || static_cast<int>(arm.size()) != rows) {
          throw ConfigError("params.theta",
                            "need " + std::to_string(rows) + " coefficients per arm");
        }
        for (int k = 0; k < rows; ++k) {
          const Vector v = ToVector(arm[k], "params.theta");
          if (v.size() != dim) throw ConfigError("params.theta", "wrong dimension");
          m.row(k) = v.transpose();
        }
      }
      coefficients.push_back(m);
    }
    return coefficients;
  }
  RandomStream rng =
      RandomStream(seed).Substream(StreamPurpose::kEnvironmentParameters);
  const Matrix root = PsdSqrt(sigma_theta);
  for (int a = 0; a < num_arms; ++a) {
    Matrix m(rows, dim);
    for (int k = 0; k < rows; ++k) m.row(k) = DrawGaussian(root, rng).transpose();
    coefficients.push_back(m);
  }
  return coefficients;
}

json CoefficientsToJson(const std::vector<Matrix>& coefficients, bool flat_rows) {
  json out = json::array();
  for (const auto& m : coefficients) {
    if (flat_rows) {
      out.push_back(FromVector(m.row(0).transpose()));
    } else {
      json arm = json::array();
      for (Eigen::Index k = 0; k < m.rows(); ++k) {
        if (m.cols() == 1) {
          arm.push_back(m(k, 0));
        } else {
          arm.push_back(FromVector(m.row(k).transpose()));
        }
      }
      out.push_back(arm);
    }
  }
  return out;
}

EnvironmentSpec BuildNonconvDemo(const json& params, std::uint64_t seed) {
  ParamReader reader(params, {"sigma_eta", "means", "contexts", "weights"});
  EnvironmentSpec env;
  env.name = "nonconv_demo";
  env.kind = EnvKind::kNonconvDemo;
  env.seed = seed;
  env.reward_noise_sd = reader.Number("sigma_eta", 1.0);

  std::vector<double> means = {0.5, 1.0 / 12.0};
  if (reader.Has("means")) {
    const Vector v = ToVector(reader.Raw("means"), "params.means");
    means.assign(v.data(), v.data() + v.size());
  }
  CategoricalLaw law;
  law.points = {Vector::Constant(1, -4.0), Vector::Constant(1, 1.0)};
  if (reader.Has("contexts")) {
    law.points.clear();
    for (const auto& p : reader.Raw("contexts")) {
      law.points.push_back(ToVector(p, "params.contexts"));
    }
  }
  law.weights.assign(law.points.size(), 1.0 / law.points.size());
  if (reader.Has("weights")) {
    const Vector w = ToVector(reader.Raw("weights"), "params.weights");
    law.weights.assign(w.data(), w.data() + w.size());
  }
  if (law.points.empty() || law.weights.size() != law.points.size()) {
    throw ConfigError("params.weights", "need one weight per context");
  }
  env.num_arms = static_cast<int>(means.size());
  env.context_dim = static_cast<int>(law.points[0].size());
  for (const auto& p : law.points) {
    if (p.size() != env.context_dim) {
      throw ConfigError("params.contexts", "contexts differ in dimension");
    }
  }
  env.reward.kind = RewardKind::kArmMeans;
  env.reward.arm_means = means;
  env.resolved_params = {{"sigma_eta", env.reward_noise_sd},
                         {"means", means},
                         {"weights", law.weights}};
  json contexts = json::array();
  for (const auto& p : law.points) contexts.push_back(FromVector(p));
  env.resolved_params["contexts"] = contexts;
  env.context_law = std::move(law);
  return env;
}

EnvironmentSpec BuildNcHard(bool second, const json& params, std::uint64_t seed) {
  ParamReader reader(params, {"sigma_eta", "theta", "latent_points",
                              "latent_weights", "noise_table"});
  EnvironmentSpec env;
  env.name = second ? "nc_hard2" : "nc_hard1";
  env.kind = second ? EnvKind::kNcHard2 : EnvKind::kNcHard1;
  env.seed = seed;
  env.reward_noise_sd = reader.Number("sigma_eta", 1.0);

  CategoricalLaw law;
  law.points = {Vector::Constant(1, 0.0), Vector::Constant(1, -1.0)};
  if (reader.Has("latent_points")) {
    law.points.clear();
    for (const auto& p : reader.Raw("latent_points")) {
      law.points.push_back(ToVector(p, "params.latent_points"));
    }
  }
  law.weights.assign(law.points.size(), 1.0 / law.points.size());
  if (reader.Has("latent_weights")) {
    const Vector w = ToVector(reader.Raw("latent_weights"), "params.latent_weights");
    law.weights.assign(w.data(), w.data() + w.size());
  }
  if (law.points.empty() || law.weights.size() != law.points.size()) {
    throw ConfigError("params.latent_weights", "need one weight per latent point");
  }
  env.context_dim = static_cast<int>(law.points[0].size());

  TableNoise table;
  if (reader.Has("noise_table")) {
    for (const auto& e : reader.Raw("noise_table")) {
      if (!e.is_object() || !e.contains("given") || !e.contains("value") ||
          !e.contains("prob")) {
        throw ConfigError("params.noise_table",
                          "entries must be {given, value, prob}");
      }
      table.entries.push_back({ToVector(e.at("given"), "params.noise_table"),
                               ToVector(e.at("value"), "params.noise_table"),
                               e.at("prob").get<double>()});
    }
  } else {
    auto v = [](double x) { return Vector::Constant(1, x); };
    table.entries = {{v(0), v(1), 2.0 / 3.0},
                     {v(0), v(-2), 1.0 / 3.0},
                     {v(-1), v(-2), 2.0 / 3.0},
                     {v(-1), v(1), 1.0 / 3.0}};
  }
  // Each latent point needs a proper conditional law with mean-zero error.
  for (const auto& point : law.points) {
    double mass = 0.0;
    Vector error_mean = Vector::Zero(env.context_dim);
    for (const auto& e : table.entries) {
      if (e.given.size() != env.context_dim || e.value.size() != env.context_dim) {
        throw ConfigError("params.noise_table", "entry dimension mismatch");
      }
      if (e.prob < 0.0) throw ConfigError("params.noise_table", "negative prob");
      if ((e.given - point).norm() == 0.0) {
        mass += e.prob;
        error_mean += e.prob * (e.value - e.given);
      }
    }
    if (std::abs(mass - 1.0) > 1e-9) {
      throw ConfigError("params.noise_table",
                        "conditional probabilities do not sum to 1");
    }
    if (error_mean.norm() > 1e-9) {
      throw ConfigError("params.noise_table",
                        "observed - latent must have conditional mean zero");
    }
  }

  std::vector<double> theta = second ? std::vector<double>{-3.0, -1.0}
                                     : std::vector<double>{3.0, 1.0};
  env.reward.kind = RewardKind::kLinear;
  if (reader.Has("theta")) {
    const auto& raw = reader.Raw("theta");
    if (!raw.is_array() || raw.size() < 2) {
      throw ConfigError("params.theta", "need one coefficient per arm");
    }
    for (const auto& arm : raw) {
      const Vector c = ToVector(arm, "params.theta");
      if (c.size() != env.context_dim) {
        throw ConfigError("params.theta", "wrong dimension");
      }
      env.reward.coefficients.push_back(c.transpose());
    }
  } else {
    for (double t : theta) env.reward.coefficients.push_back(Matrix::Constant(1, 1, t));
  }
  env.num_arms = static_cast<int>(env.reward.coefficients.size());

  json latent = json::array();
  for (const auto& p : law.points) latent.push_back(FromVector(p));
  json entries = json::array();
  for (const auto& e : table.entries) {
    entries.push_back({{"given", FromVector(e.given)},
                       {"value", FromVector(e.value)},
                       {"prob", e.prob}});
  }
  env.resolved_params = {{"sigma_eta", env.reward_noise_sd},
                         {"theta", CoefficientsToJson(env.reward.coefficients, true)},
                         {"latent_points", latent},
                         {"latent_weights", law.weights},
                         {"noise_table", entries}};
  env.context_law = std::move(law);
  env.latent_noise = std::move(table);
  return env;
}

EnvironmentSpec BuildNcGaussian(const json& params, std::uint64_t seed) {
  ParamReader reader(params, {"d", "K", "sigma_s", "sigma_e", "sigma_theta",
                              "sigma_eta", "theta"});
  EnvironmentSpec env;
  env.name = "nc_gaussian";
  env.kind = EnvKind::kNcGaussian;
  env.seed = seed;
  env.context_dim = reader.Integer("d", 2, 1);
  env.num_arms = reader.Integer("K", 2, 2);
  env.reward_noise_sd = reader.Number("sigma_eta", 1.0);
  const Matrix sigma_s = reader.Covariance("sigma_s", env.context_dim);
  const Matrix sigma_e = reader.Covariance("sigma_e", env.context_dim);
  const Matrix sigma_theta = reader.Covariance("sigma_theta", env.context_dim);
  env.context_law = GaussianLaw{sigma_s, PsdSqrt(sigma_s)};
  env.latent_noise = GaussianNoise{sigma_e, PsdSqrt(sigma_e)};
  env.reward.kind = RewardKind::kLinear;
  env.reward.coefficients = ResolveCoefficients(reader, env.num_arms, 1,
                                                env.context_dim, sigma_theta, seed);
  env.resolved_params = {{"d", env.context_dim},
                         {"K", env.num_arms},
                         {"sigma_s", FromMatrix(sigma_s)},
                         {"sigma_e", FromMatrix(sigma_e)},
                         {"sigma_theta", FromMatrix(sigma_theta)},
                         {"sigma_eta", env.reward_noise_sd},
                         {"theta", CoefficientsToJson(env.reward.coefficients, true)}};
  return env;
}

EnvironmentSpec BuildMisspecified(bool polynomial, const json& params,
                                  std::uint64_t seed) {
  std::set<std::string> allowed = {"d", "K", "sigma_x", "sigma_theta",
                                   "sigma_eta", "theta"};
  if (polynomial) allowed.insert("degree");
  ParamReader reader(params, allowed);
  EnvironmentSpec env;
  env.name = polynomial ? "ms_polynomial" : "ms_neural";
  env.kind = polynomial ? EnvKind::kMsPolynomial : EnvKind::kMsNeural;
  env.seed = seed;
  env.context_dim = reader.Integer("d", 1, 1);
  env.num_arms = reader.Integer("K", 2, 2);
  env.reward_noise_sd = reader.Number("sigma_eta", 1.0);
  const int degree = polynomial ? reader.Integer("degree", 3, 1) : 1;
  const Matrix sigma_x = reader.Covariance("sigma_x", env.context_dim);
  const Matrix sigma_theta = reader.Covariance("sigma_theta", env.context_dim);
  env.context_law = GaussianLaw{sigma_x, PsdSqrt(sigma_x)};
  env.reward.kind = polynomial ? RewardKind::kPolynomial : RewardKind::kRelu;
  env.reward.coefficients = ResolveCoefficients(
      reader, env.num_arms, degree, env.context_dim, sigma_theta, seed);
  env.resolved_params = {
      {"d", env.context_dim},
      {"K", env.num_arms},
      {"sigma_x", FromMatrix(sigma_x)},
      {"sigma_theta", FromMatrix(sigma_theta)},
      {"sigma_eta", env.reward_noise_sd},
      {"theta", CoefficientsToJson(env.reward.coefficients, !polynomial)}};
  if (polynomial) env.resolved_params["degree"] = degree;
  return env;
}

// Moments E[X^k] of N(0, variance) in one dimension.
double GaussianMoment(int k, double variance) {
  if (k % 2 == 1) return 0.0;
  double double_factorial = 1.0;
  for (int i = k - 1; i > 1; i -= 2) double_factorial *= i;
  return double_factorial * std::pow(variance, k / 2);
}

}  // namespace

Matrix EnvironmentSpec::SigmaE() const {
  const int d = context_dim;
  if (const auto* g = std::get_if<GaussianNoise>(&latent_noise)) {
    return g->covariance;
  }
  if (const auto* t = std::get_if<TableNoise>(&latent_noise)) {
    const auto& law = std::get<CategoricalLaw>(context_law);
    Matrix sigma = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < law.points.size(); ++i) {
      for (const auto& e : t->entries) {
        if ((e.given - law.points[i]).norm() == 0.0) {
          const Vector err = e.value - e.given;
          sigma += law.weights[i] * e.prob * err * err.transpose();
        }
      }
    }
    return sigma;
  }
  return Matrix::Zero(d, d);
}

double EnvironmentSpec::MeanReward(const Eigen::Ref<const Vector>& state,
                                   int arm) const {
  switch (reward.kind) {
    case RewardKind::kArmMeans:
      return reward.arm_means[arm];
    case RewardKind::kLinear:
      return reward.coefficients[arm].row(0).dot(state);
    case RewardKind::kPolynomial: {
      const Matrix& c = reward.coefficients[arm];
      double value = 0.0;
      Vector power = state;
      for (Eigen::Index k = 0; k < c.rows(); ++k) {
        value += c.row(k).dot(power);
        power = power.cwiseProduct(state);
      }
      return value;
    }
    case RewardKind::kRelu:
      return std::max(0.0, reward.coefficients[arm].row(0).dot(state));
  }
  return 0.0;
}

std::optional<std::vector<Vector>> EnvironmentSpec::ObservedSupport() const {
  const auto* law = std::get_if<CategoricalLaw>(&context_law);
  if (law == nullptr) return std::nullopt;
  if (std::holds_alternative<GaussianNoise>(latent_noise)) return std::nullopt;
  std::vector<Vector> support;
  auto add = [&](const Vector& v) {
    for (const auto& s : support) {
      if ((s - v).norm() == 0.0) return;
    }
    support.push_back(v);
  };
  if (const auto* t = std::get_if<TableNoise>(&latent_noise)) {
    for (const auto& e : t->entries) {
      if (e.prob > 0.0) add(e.value);
    }
  } else {
    for (const auto& p : law->points) add(p);
  }
  return support;
}

const std::vector<std::string>& EnvironmentNames() {
  static const std::vector<std::string> names = {
      "nonconv_demo", "nc_hard1",      "nc_hard2",
      "nc_gaussian",  "ms_polynomial", "ms_neural"};
  return names;
}

EnvironmentSpec BuildEnvironment(const std::string& name, const json& params,
                                 std::uint64_t seed) {
  if (name == "nonconv_demo") return BuildNonconvDemo(params, seed);
  if (name == "nc_hard1") return BuildNcHard(false, params, seed);
  if (name == "nc_hard2") return BuildNcHard(true, params, seed);
  if (name == "nc_gaussian") return BuildNcGaussian(params, seed);
  if (name == "ms_polynomial") return BuildMisspecified(true, params, seed);
  if (name == "ms_neural") return BuildMisspecified(false, params, seed);
  throw ConfigError("env.name", "unknown environment '" + name + "'");
}

EnvironmentSpec EnvironmentFromJson(const json& j) {
  if (!j.is_object() || !j.contains("name")) {
    throw ConfigError("env.name", "environment config needs a name");
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "name" && key != "params" && key != "seed") {
      throw ConfigError("env." + key, "unknown key");
    }
  }
  return BuildEnvironment(j.at("name").get<std::string>(),
                          j.value("params", json::object()),
                          j.value("seed", std::uint64_t{0}));
}

json EnvironmentToJson(const EnvironmentSpec& env) {
  return {{"name", env.name}, {"params", env.resolved_params}, {"seed", env.seed}};
}

void SampleRound(const EnvironmentSpec& env, RandomStream& rng, RoundDraw& out) {
  const int d = env.context_dim;
  Vector state(d);
  if (const auto* law = std::get_if<CategoricalLaw>(&env.context_law)) {
    state = law->points[rng.Categorical(law->weights)];
  } else {
    const auto& g = std::get<GaussianLaw>(env.context_law);
    state = DrawGaussian(g.root, rng);
  }
  if (const auto* t = std::get_if<TableNoise>(&env.latent_noise)) {
    const double u = rng.Uniform();
    double cumulative = 0.0;
    const Vector* chosen = nullptr;
    for (const auto& e : t->entries) {
      if ((e.given - state).norm() != 0.0) continue;
      cumulative += e.prob;
      chosen = &e.value;
      if (u < cumulative) break;
    }
    out.context = *chosen;
    out.latent = state;
  } else if (const auto* g = std::get_if<GaussianNoise>(&env.latent_noise)) {
    out.context = state + DrawGaussian(g->root, rng);
    out.latent = state;
  } else {
    out.context = state;
    out.latent.reset();
  }
  out.potential_outcomes.resize(env.num_arms);
  for (int a = 0; a < env.num_arms; ++a) {
    out.potential_outcomes(a) =
        env.MeanReward(state, a) + env.reward_noise_sd * rng.Normal();
  }
}

RoundDraw SampleRound(const EnvironmentSpec& env, RandomStream& rng) {
  RoundDraw draw;
  SampleRound(env, rng, draw);
  return draw;
}

ScoreTarget ResolveTarget(const ScoreTarget& target, const EnvironmentSpec& env) {
  ScoreTarget resolved = target;
  if (target.family == TargetFamily::kNoisyContext &&
      target.sigma_source != SigmaSource::kKnown) {
    resolved.sigma_e = env.SigmaE();
  }
  if (target.family == TargetFamily::kNoisyContext &&
      resolved.sigma_e.rows() != env.context_dim) {
    throw ConfigError("target.sigma_e", "dimension does not match the context");
  }
  return resolved;
}

std::optional<Vector> ExactOracle(const EnvironmentSpec& env,
                                  const ScoreTarget& target, int arm) {
  const int d = env.context_dim;
  const int k = env.num_arms;
  const int dim = target.Dimension(d);
  Matrix expected_design = Matrix::Zero(dim, dim);
  Vector expected_moment = Vector::Zero(dim);

  if (const auto* law = std::get_if<CategoricalLaw>(&env.context_law)) {
    if (std::holds_alternative<GaussianNoise>(env.latent_noise)) return std::nullopt;
    for (std::size_t i = 0; i < law->points.size(); ++i) {
      const Vector& state = law->points[i];
      const double mean = env.MeanReward(state, arm);
      auto accumulate = [&](const Vector& x, double p) {
        expected_design += p * ScoreDesign(target, arm, k, x);
        expected_moment += p * ScoreMoment(target, arm, k, x, mean);
      };
      if (const auto* t = std::get_if<TableNoise>(&env.latent_noise)) {
        for (const auto& e : t->entries) {
          if ((e.given - state).norm() == 0.0) {
            accumulate(e.value, law->weights[i] * e.prob);
          }
        }
      } else {
        accumulate(state, law->weights[i]);
      }
    }
  } else {
    const Matrix& sigma = std::get<GaussianLaw>(env.context_law).covariance;
    const Matrix sigma_x =
        sigma + (env.has_latent() ? env.SigmaE() : Matrix::Zero(d, d));
    // E[X Y(a)] and E[Y(a)] under the Gaussian law.
    Vector cross(d);
    double mean_reward = 0.0;
    switch (env.reward.kind) {
      case RewardKind::kLinear: {
        const Vector theta = env.reward.coefficients[arm].row(0).transpose();
        cross = sigma * theta;  // E[(S + e) S^T theta]
        mean_reward = 0.0;
        break;
      }
      case RewardKind::kPolynomial: {
        if (d != 1) return std::nullopt;
        const Matrix& c = env.reward.coefficients[arm];
        const double var = sigma(0, 0);
        cross(0) = 0.0;
        for (Eigen::Index p = 0; p < c.rows(); ++p) {
          cross(0) += c(p, 0) * GaussianMoment(static_cast<int>(p) + 2, var);
          mean_reward += c(p, 0) * GaussianMoment(static_cast<int>(p) + 1, var);
        }
        break;
      }
      case RewardKind::kRelu: {
        const Vector theta = env.reward.coefficients[arm].row(0).transpose();
        cross = 0.5 * sigma * theta;
        mean_reward = std::sqrt(theta.dot(sigma * theta)) /
                      std::sqrt(2.0 * std::numbers::pi);
        break;
      }
      case RewardKind::kArmMeans:
        cross = Vector::Zero(d);
        mean_reward = env.reward.arm_means[arm];
        break;
    }
    switch (target.family) {
      case TargetFamily::kMisspecLinear:
        expected_design = sigma_x;
        expected_moment = cross;
        break;
      case TargetFamily::kNoisyContext:
        expected_design = sigma_x - target.sigma_e;
        expected_moment = cross;
        break;
      case TargetFamily::kOpe:
        if (!target.target_policy.context_free()) return std::nullopt;
        expected_design(0, 0) = 1.0;
        expected_moment(0) =
            target.target_policy.Probability(arm, Vector::Zero(d), k) * mean_reward;
        break;
    }
  }
  return SolveChecked(expected_design, expected_moment,
                      "oracle design E[J] for arm " + std::to_string(arm + 1));
}

OracleResult MonteCarloOracle(const EnvironmentSpec& env,
                              const ScoreTarget& target, int arm,
                              std::int64_t n, std::uint64_t seed, bool parallel) {
  if (n < 2) throw ConfigError("n_oracle", "need at least two draws");
  const int k = env.num_arms;
  const int dim = target.Dimension(env.context_dim);
  constexpr std::int64_t kChunk = 1 << 15;
  const std::int64_t chunks = (n + kChunk - 1) / kChunk;
  const RandomStream base = RandomStream(seed).Substream(StreamPurpose::kOracle);

  // Pass 1: sums of J and m. Pass 2: sum of g g^T at the root. Both passes
  // replay identical draws from the per-chunk substreams.
  std::vector<Matrix> design_parts(chunks, Matrix::Zero(dim, dim));
  std::vector<Vector> moment_parts(chunks, Vector::Zero(dim));
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::int64_t c = 0; c < chunks; ++c) {
    RandomStream rng = base.Substream(static_cast<std::uint64_t>(c));
    RoundDraw draw;
    const std::int64_t count = std::min(kChunk, n - c * kChunk);
    for (std::int64_t i = 0; i < count; ++i) {
      SampleRound(env, rng, draw);
      design_parts[c] += ScoreDesign(target, arm, k, draw.context);
      moment_parts[c] +=
          ScoreMoment(target, arm, k, draw.context, draw.potential_outcomes(arm));
    }
  }
  Matrix design = Matrix::Zero(dim, dim);
  Vector moment = Vector::Zero(dim);
  for (std::int64_t c = 0; c < chunks; ++c) {
    design += design_parts[c];
    moment += moment_parts[c];
  }
  design /= static_cast<double>(n);
  moment /= static_cast<double>(n);
  const Vector theta = SolveChecked(
      design, moment, "Monte Carlo oracle design for arm " + std::to_string(arm + 1));

  std::vector<Matrix> info_parts(chunks, Matrix::Zero(dim, dim));
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::int64_t c = 0; c < chunks; ++c) {
    RandomStream rng = base.Substream(static_cast<std::uint64_t>(c));
    RoundDraw draw;
    const std::int64_t count = std::min(kChunk, n - c * kChunk);
    for (std::int64_t i = 0; i < count; ++i) {
      SampleRound(env, rng, draw);
      const Vector g = Score(target, arm, k, draw.context,
                             draw.potential_outcomes(arm), theta);
      info_parts[c] += g * g.transpose();
    }
  }
  Matrix info = Matrix::Zero(dim, dim);
  for (const auto& part : info_parts) info += part;
  info /= static_cast<double>(n);
  const Matrix design_inv = InverseChecked(design, "Monte Carlo oracle design");
  const Matrix sandwich = design_inv * info * design_inv.transpose();

  OracleResult result;
  result.theta = theta;
  result.std_error =
      (sandwich.diagonal().cwiseMax(0.0) / static_cast<double>(n)).cwiseSqrt();
  result.exact = false;
  result.draws = n;
  return result;
}

OracleResult OracleTarget(const EnvironmentSpec& env, const ScoreTarget& target,
                          int arm, std::int64_t n_oracle, std::uint64_t seed) {
  if (arm < 0 || arm >= env.num_arms) {
    throw InputError("arm " + std::to_string(arm + 1) + " out of range");
  }
  if (auto exact = ExactOracle(env, target, arm)) {
    OracleResult result;
    result.theta = *exact;
    result.std_error = Vector::Zero(exact->size());
    result.exact = true;
    return result;
  }
  return MonteCarloOracle(env, target, arm, n_oracle, seed);
}

}  // namespace ipwz
