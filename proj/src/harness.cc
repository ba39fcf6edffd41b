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
#include "ipwz/harness.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>

#include "ipwz/error.h"
#include "ipwz/estimator.h"
#include "ipwz/stats.h"

namespace ipwz {
namespace {

std::string QuantityName(int arm, int coord, int dim) {
  std::string name = "arm" + std::to_string(arm + 1);
  if (dim > 1) name += "[" + std::to_string(coord + 1) + "]";
  return name;
}

ScoreTarget TruthTarget(const ExperimentConfig& config) {
  ScoreTarget target = config.target;
  if (target.sigma_source == SigmaSource::kEstimateFromAux) {
    target.sigma_source = SigmaSource::kFromEnvironment;
  }
  return ResolveTarget(target, config.env);
}

struct QuantityEstimates {
  std::vector<double> estimate;
  std::vector<double> variance;
  double sample_size = 1.0;
  int floored = 0;
};

QuantityEstimates EstimateQuantities(const ExperimentConfig& config,
                                     const BanditLog& log,
                                     const AuxiliaryData* aux) {
  QuantityEstimates out;
  out.sample_size = log.size();
  const auto arms = config.EstimatedArms();
  if (config.target.family == TargetFamily::kNoisyContext &&
      config.target.sigma_source == SigmaSource::kEstimateFromAux) {
    std::optional<double> sample_size;
    for (int arm : arms) {
      const EstimatedSigmaFit fit = IpwzSolveEstimatedSigma(log, *aux, arm);
      const EstimatedSigmaVariance v = VarianceEstimatedSigma(
          log, *aux, arm, fit.theta, fit.sigma_e_hat, config.regime);
      for (Eigen::Index i = 0; i < fit.theta.size(); ++i) {
        out.estimate.push_back(fit.theta(i));
        out.variance.push_back(v.sigma(i, i));
      }
      sample_size = v.sample_size;
    }
    out.sample_size = *sample_size;
    return out;
  }
  const ScoreTarget target = ResolveTarget(config.target, config.env);
  double value = 0.0, value_variance = 0.0;
  for (int arm : arms) {
    const Vector theta = IpwzSolve(log, target, arm);
    const SandwichResult s =
        SandwichVariance(log, target, arm, theta, config.variance_mode);
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      out.estimate.push_back(theta(i));
      out.variance.push_back(s.sigma(i, i));
    }
    value += theta(0);
    value_variance += s.sigma(0, 0);
  }
  if (target.family == TargetFamily::kOpe) {
    out.estimate.push_back(value);
    out.variance.push_back(value_variance);
  }
  return out;
}

// Covered flags laid out as [level][quantity].
// Intervals are widened by this relative amount when checking coverage, so
// that degenerate zero-width intervals are not decided by rounding error.
constexpr double kRoundoff = 1e-12;

std::vector<std::vector<char>> Coverage(const QuantityEstimates& q,
                                        const GroundTruth& truth,
                                        const std::vector<double>& levels,
                                        int* floored) {
  const int n = static_cast<int>(q.estimate.size());
  Vector theta = Eigen::Map<const Vector>(q.estimate.data(), n);
  Matrix sigma = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) sigma(i, i) = q.variance[i];
  const auto ci = ConfidenceIntervals(theta, sigma, q.sample_size, levels, floored);
  std::vector<std::vector<char>> covered(levels.size(), std::vector<char>(n));
  for (std::size_t l = 0; l < levels.size(); ++l) {
    for (int i = 0; i < n; ++i) {
      const double slack = kRoundoff * std::max(1.0, std::abs(truth.values[i]));
      covered[l][i] = ci[l][i].lo - slack <= truth.values[i] &&
                      truth.values[i] <= ci[l][i].hi + slack;
    }
  }
  return covered;
}

double Standardize(double estimate, double truth, double variance,
                   double sample_size) {
  const double error = estimate - truth;
  if (variance <= 0.0) {
    if (error == 0.0) return 0.0;
    return std::copysign(std::numeric_limits<double>::infinity(), error);
  }
  return std::sqrt(sample_size) * error / std::sqrt(variance);
}

std::mutex oracle_mutex;
std::map<std::string, OracleResult>& OracleCache() {
  static std::map<std::string, OracleResult> cache;
  return cache;
}

}  // namespace

void ExperimentConfig::Validate() const {
  if (horizon < 1) throw ConfigError("harness.horizon", "must be at least 1");
  if (replications < 1) throw ConfigError("harness.replications", "must be at least 1");
  if (levels.empty()) throw ConfigError("harness.levels", "need at least one level");
  for (double level : levels) {
    if (!(level > 0.0 && level < 1.0)) {
      throw ConfigError("harness.levels", "levels must lie in (0, 1)");
    }
  }
  policy.Validate(env.num_arms);
  for (int arm : arms) {
    if (arm < 0 || arm >= env.num_arms) {
      throw ConfigError("harness.arms", "arm " + std::to_string(arm + 1) +
                                            " out of range");
    }
  }
  for (int t : snapshot_times) {
    if (t < 1 || t > horizon) {
      throw ConfigError("harness.snapshot_times", "times must lie in 1..horizon");
    }
  }
  const auto support = env.ObservedSupport();
  for (const auto& x : diagnostic_contexts) {
    if (x.size() != env.context_dim) {
      throw ConfigError("harness.diagnostic_contexts", "wrong context dimension");
    }
    if (support) {
      bool found = false;
      for (const auto& s : *support) found = found || (s - x).norm() == 0.0;
      if (!found) {
        throw ConfigError("harness.diagnostic_contexts",
                          "context is outside the environment's support");
      }
    }
  }
  if (target.sigma_source == SigmaSource::kEstimateFromAux &&
      target.family == TargetFamily::kNoisyContext) {
    if (aux_size < 1) {
      throw ConfigError("harness.aux_size",
                        "estimating Sigma_e needs a positive auxiliary size");
    }
    if (!env.has_latent()) {
      throw ConfigError("target.sigma_e",
                        "the environment has no latent state to pair with");
    }
  }
  if (!cadr.empty() && target.family != TargetFamily::kOpe) {
    throw ConfigError("harness.cadr", "CADR applies to the ope target only");
  }
  if (n_oracle < 2) throw ConfigError("harness.n_oracle", "must be at least 2");
  if (target.family == TargetFamily::kNoisyContext) {
    ResolveTarget(target, env);
  }
}

std::vector<int> ExperimentConfig::EstimatedArms() const {
  if (!arms.empty() && target.family != TargetFamily::kOpe) return arms;
  std::vector<int> all(env.num_arms);
  for (int a = 0; a < env.num_arms; ++a) all[a] = a;
  return all;
}

Trajectory RunTrajectory(const EnvironmentSpec& env, const Policy& policy,
                         int horizon, const RandomStream& stream,
                         const TrajectoryOptions& options) {
  RandomStream rounds = stream.Substream(StreamPurpose::kRounds);
  RandomStream actions = stream.Substream(StreamPurpose::kActions);
  Trajectory trajectory;
  trajectory.log = BanditLog(env.context_dim, env.num_arms);
  trajectory.log.Reserve(horizon);
  if (options.record_states) trajectory.states.reserve(horizon);
  PolicyState state = policy.InitialState();
  RoundDraw draw;
  for (int t = 0; t < horizon; ++t) {
    SampleRound(env, rounds, draw);
    if (options.record_states) trajectory.states.push_back(state);
    const ActionChoice choice = policy.Select(state, draw.context, actions);
    const double y = draw.potential_outcomes(choice.arm);
    trajectory.log.Append(draw.context, draw.latent, choice.arm, choice.propensity,
                          y,
                          options.record_distributions
                              ? std::span<const double>(choice.probs)
                              : std::span<const double>());
    policy.Update(state, draw.context, choice.arm, choice.propensity, y);
  }
  trajectory.final_state = std::move(state);
  return trajectory;
}

ScoreTarget WorkingTarget(const PolicyConfig& config, const ScoreTarget& target,
                          const EnvironmentSpec& env) {
  ScoreTarget working = config.working_target.value_or(target);
  if (working.sigma_source == SigmaSource::kEstimateFromAux) {
    working.sigma_source = SigmaSource::kFromEnvironment;
  }
  return ResolveTarget(working, env);
}

BanditLog RunTrajectory(const EnvironmentSpec& env, const PolicyConfig& config,
                        const ScoreTarget& target, int horizon,
                        std::uint64_t seed, bool record_distributions) {
  const Policy policy(config, env.num_arms, env.context_dim,
                      WorkingTarget(config, target, env));
  TrajectoryOptions options;
  options.record_distributions = record_distributions;
  return RunTrajectory(env, policy, horizon, RandomStream(seed), options).log;
}

AuxiliaryData SampleAuxiliary(const EnvironmentSpec& env, int n,
                              const RandomStream& stream) {
  if (!env.has_latent()) {
    throw ConfigError("env", "auxiliary pairs need an environment with a latent state");
  }
  RandomStream rng = stream;
  AuxiliaryData aux(env.context_dim);
  RoundDraw draw;
  for (int i = 0; i < n; ++i) {
    SampleRound(env, rng, draw);
    aux.Append(draw.context, *draw.latent);
  }
  return aux;
}

GroundTruth ComputeGroundTruth(const ExperimentConfig& config) {
  const ScoreTarget target = TruthTarget(config);
  const std::uint64_t seed =
      DeriveSeed(config.seed, static_cast<std::uint64_t>(StreamPurpose::kOracle));
  const int dim = target.Dimension(config.env.context_dim);
  GroundTruth truth;
  double value = 0.0, value_se2 = 0.0;
  for (int arm : config.EstimatedArms()) {
    const std::string key = EnvironmentToJson(config.env).dump() + "|" +
                            target.ToJson().dump() + "|" +
                            (target.family == TargetFamily::kNoisyContext
                                 ? MatrixToJson(target.sigma_e).dump()
                                 : std::string()) +
                            "|" + std::to_string(arm) + "|" +
                            std::to_string(config.n_oracle) + "|" +
                            std::to_string(seed);
    OracleResult result;
    {
      std::lock_guard<std::mutex> lock(oracle_mutex);
      auto it = OracleCache().find(key);
      if (it != OracleCache().end()) {
        result = it->second;
      } else {
        result = OracleTarget(config.env, target, arm, config.n_oracle, seed);
        OracleCache().emplace(key, result);
      }
    }
    truth.exact = truth.exact && result.exact;
    for (int i = 0; i < dim; ++i) {
      truth.names.push_back(QuantityName(arm, i, dim));
      truth.values.push_back(result.theta(i));
      truth.std_errors.push_back(result.std_error(i));
    }
    value += result.theta(0);
    value_se2 += result.std_error(0) * result.std_error(0);
  }
  if (target.family == TargetFamily::kOpe) {
    truth.names.push_back("V");
    truth.values.push_back(value);
    truth.std_errors.push_back(std::sqrt(value_se2));
  }
  return truth;
}

ReplicationRecord RunReplication(const ExperimentConfig& config,
                                 const GroundTruth& truth, int replication) {
  const EnvironmentSpec& env = config.env;
  const RandomStream stream = RandomStream(config.seed)
                                  .Substream(StreamPurpose::kReplication)
                                  .Substream(static_cast<std::uint64_t>(replication));
  const Policy policy(config.policy, env.num_arms, env.context_dim,
                      WorkingTarget(config.policy, config.target, env));
  TrajectoryOptions options;
  options.record_states = !config.cadr.empty();
  ReplicationRecord record;
  try {
    const Trajectory trajectory =
        RunTrajectory(env, policy, config.horizon, stream, options);
    record.sgd_clips = trajectory.final_state.sgd_clip_count;
    for (const auto& x : config.diagnostic_contexts) {
      record.last_probs.push_back(policy.Distribution(trajectory.final_state, x));
    }

    std::optional<AuxiliaryData> aux;
    if (config.target.sigma_source == SigmaSource::kEstimateFromAux &&
        config.target.family == TargetFamily::kNoisyContext) {
      aux = SampleAuxiliary(env, config.aux_size,
                            stream.Substream(StreamPurpose::kAuxiliary));
    }
    const AuxiliaryData* aux_ptr = aux ? &*aux : nullptr;

    const QuantityEstimates q = EstimateQuantities(config, trajectory.log, aux_ptr);
    record.estimate = q.estimate;
    record.variance = q.variance;
    for (std::size_t i = 0; i < q.estimate.size(); ++i) {
      record.standardized.push_back(Standardize(q.estimate[i], truth.values[i],
                                                q.variance[i], q.sample_size));
    }
    record.covered = Coverage(q, truth, config.levels, &record.floored);

    const int quantities = static_cast<int>(truth.values.size());
    for (int t : config.snapshot_times) {
      std::vector<double> estimate(quantities,
                                   std::numeric_limits<double>::quiet_NaN());
      std::vector<char> covered(config.levels.size() * quantities, -1);
      try {
        const QuantityEstimates sq =
            EstimateQuantities(config, trajectory.log.Prefix(t), aux_ptr);
        estimate = sq.estimate;
        const auto c = Coverage(sq, truth, config.levels, nullptr);
        for (std::size_t l = 0; l < c.size(); ++l) {
          for (int i = 0; i < quantities; ++i) covered[l * quantities + i] = c[l][i];
        }
      } catch (const Error&) {
        // Left as unavailable: early prefixes may not cover every arm.
      }
      record.snapshot_estimate.push_back(std::move(estimate));
      record.snapshot_covered.push_back(std::move(covered));
    }

    if (!config.cadr.empty()) {
      const LoggingPolicyFn logging = [&](int t, const Eigen::Ref<const Vector>& x,
                                          std::span<double> out) {
        const auto probs = policy.Distribution(trajectory.states[t - 1], x);
        std::copy(probs.begin(), probs.end(), out.begin());
      };
      const double v_star = truth.values.back();
      for (CadrRegression regression : config.cadr) {
        CadrOptions cadr_options = config.cadr_options;
        cadr_options.regression = regression;
        const CadrResult result =
            CadrOpe(trajectory.log, config.target.target_policy, config.levels,
                    cadr_options, logging);
        record.cadr_value.push_back(result.value);
        std::vector<char> covered;
        for (const auto& interval : result.ci) covered.push_back(interval.Contains(v_star));
        record.cadr_covered.push_back(std::move(covered));
      }
    }
    record.ok = true;
  } catch (const Error& e) {
    record.ok = false;
    record.error = e.what();
  }
  return record;
}

namespace {

ReplicationSummary Fold(const ExperimentConfig& config, GroundTruth truth,
                        std::vector<ReplicationRecord> records) {
  ReplicationSummary summary;
  summary.truth = std::move(truth);
  summary.levels = config.levels;
  summary.horizon = config.horizon;
  summary.diagnostic_contexts = config.diagnostic_contexts;
  summary.snapshot_times = config.snapshot_times;
  for (auto regression : config.cadr) {
    summary.cadr_names.push_back(CadrRegressionName(regression));
  }
  summary.records = std::move(records);
  const std::string* first_error = nullptr;
  for (const auto& r : summary.records) {
    if (!r.ok) {
      ++summary.failures;
      if (first_error == nullptr) first_error = &r.error;
    }
  }
  if (summary.failures > 0.05 * config.replications) {
    throw Error(std::to_string(summary.failures) + " of " +
                std::to_string(config.replications) +
                " replications failed (more than 5%); first failure: " +
                *first_error);
  }
  const int quantities = static_cast<int>(summary.truth.values.size());
  for (std::size_t l = 0; l < config.levels.size(); ++l) {
    CoverageRow row;
    row.level = config.levels[l];
    row.by_quantity.assign(quantities, 0.0);
    long hits = 0, total = 0;
    for (const auto& r : summary.records) {
      if (!r.ok) continue;
      for (int q = 0; q < quantities; ++q) {
        row.by_quantity[q] += r.covered[l][q];
        hits += r.covered[l][q];
        ++total;
      }
    }
    const int ok = summary.succeeded();
    for (double& c : row.by_quantity) c = ok > 0 ? c / ok : 0.0;
    row.coverage = total > 0 ? static_cast<double>(hits) / total : 0.0;
    row.mc_stderr =
        total > 0 ? std::sqrt(row.coverage * (1.0 - row.coverage) / total) : 0.0;
    summary.coverage.push_back(std::move(row));
  }
  return summary;
}

}  // namespace

ReplicationSummary Replicate(const ExperimentConfig& config, bool parallel) {
  config.Validate();
  const GroundTruth truth = ComputeGroundTruth(config);
  std::vector<ReplicationRecord> records(config.replications);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int r = 0; r < config.replications; ++r) {
    records[r] = RunReplication(config, truth, r);
  }
  return Fold(config, truth, std::move(records));
}

ReplicationSummary ReplicateSerial(const ExperimentConfig& config) {
  config.Validate();
  const GroundTruth truth = ComputeGroundTruth(config);
  std::vector<ReplicationRecord> records;
  records.reserve(config.replications);
  for (int r = 0; r < config.replications; ++r) {
    records.push_back(RunReplication(config, truth, r));
  }
  return Fold(config, truth, std::move(records));
}

std::vector<double> ReplicationSummary::Estimates(int quantity) const {
  std::vector<double> out;
  for (const auto& r : records) {
    if (r.ok) out.push_back(r.estimate[quantity]);
  }
  return out;
}

std::vector<double> ReplicationSummary::Standardized(int quantity) const {
  std::vector<double> out;
  for (const auto& r : records) {
    if (r.ok) out.push_back(r.standardized[quantity]);
  }
  return out;
}

std::vector<double> ReplicationSummary::Variances(int quantity) const {
  std::vector<double> out;
  for (const auto& r : records) {
    if (r.ok) out.push_back(r.variance[quantity]);
  }
  return out;
}

double ReplicationSummary::EmpiricalVariance(int quantity) const {
  return SampleVariance(Estimates(quantity));
}

double ReplicationSummary::CadrCoverage(int model, int level) const {
  int hits = 0, total = 0;
  for (const auto& r : records) {
    if (!r.ok) continue;
    hits += r.cadr_covered[model][level];
    ++total;
  }
  return total > 0 ? static_cast<double>(hits) / total : 0.0;
}

std::vector<double> ReplicationSummary::CadrValues(int model) const {
  std::vector<double> out;
  for (const auto& r : records) {
    if (r.ok) out.push_back(r.cadr_value[model]);
  }
  return out;
}

std::vector<std::pair<double, double>> QqPoints(std::vector<double> values) {
  if (values.size() < 2) throw InputError("a QQ plot needs at least two values");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  std::vector<std::pair<double, double>> points;
  points.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    points.emplace_back(NormalQuantile((static_cast<double>(i) + 0.5) / n), values[i]);
  }
  return points;
}

ConvergenceStats ConvergenceDiagnostic(const ReplicationSummary& summary,
                                       const Eigen::Ref<const Vector>& context,
                                       int arm) {
  int index = -1;
  for (std::size_t i = 0; i < summary.diagnostic_contexts.size(); ++i) {
    const auto& c = summary.diagnostic_contexts[i];
    if (c.size() == context.size() && (c - context).norm() == 0.0) {
      index = static_cast<int>(i);
      break;
    }
  }
  if (index < 0) {
    throw InputError("context is not a registered diagnostic point");
  }
  ConvergenceStats stats;
  stats.histogram.assign(50, 0);
  std::vector<double> values;
  for (const auto& r : summary.records) {
    if (r.last_probs.empty()) continue;
    const auto& probs = r.last_probs[index];
    if (arm < 0 || arm >= static_cast<int>(probs.size())) {
      throw InputError("arm " + std::to_string(arm + 1) + " out of range");
    }
    values.push_back(probs[arm]);
  }
  if (values.empty()) throw InputError("no replication recorded the context");
  for (double p : values) {
    const int bin = std::clamp(static_cast<int>(std::floor(p * 50.0)), 0, 49);
    ++stats.histogram[bin];
    if (p <= 0.2) stats.low_mass += 1.0;
    if (p >= 0.8) stats.high_mass += 1.0;
  }
  stats.low_mass /= values.size();
  stats.high_mass /= values.size();
  stats.mean = Mean(values);
  stats.sd = std::sqrt(SampleVariance(values));
  return stats;
}

bool MartingaleCheck::Within(double k) const {
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    if (std::abs(mean(i)) > k * std_error(i)) return false;
  }
  return true;
}

MartingaleCheck FrozenHistoryMartingale(const EnvironmentSpec& env,
                                        const Policy& policy,
                                        const PolicyState& state,
                                        const ScoreTarget& target, int arm,
                                        const Eigen::Ref<const Vector>& theta,
                                        int draws, const RandomStream& stream) {
  if (draws < 2) throw InputError("need at least two draws");
  RandomStream rng = stream;
  const int dim = target.Dimension(env.context_dim);
  Vector sum = Vector::Zero(dim);
  Vector sum_sq = Vector::Zero(dim);
  RoundDraw draw;
  for (int i = 0; i < draws; ++i) {
    SampleRound(env, rng, draw);
    const auto probs = policy.Distribution(state, draw.context);
    const int a = rng.Categorical(probs);
    if (a != arm) continue;
    const Vector v = Score(target, arm, env.num_arms, draw.context,
                           draw.potential_outcomes(arm), theta) /
                     probs[a];
    sum += v;
    sum_sq += v.cwiseProduct(v);
  }
  MartingaleCheck check;
  check.draws = draws;
  check.mean = sum / draws;
  const Vector variance =
      ((sum_sq - draws * check.mean.cwiseProduct(check.mean)) / (draws - 1))
          .cwiseMax(0.0);
  check.std_error = (variance / draws).cwiseSqrt();
  return check;
}

void WriteCoverageCsv(const ReplicationSummary& summary, std::ostream& out) {
  out << "level,empirical_coverage,mc_stderr\n";
  for (const auto& row : summary.coverage) {
    out << row.level << "," << row.coverage << "," << row.mc_stderr << "\n";
  }
}

void WriteCoverageByQuantityCsv(const ReplicationSummary& summary,
                                std::ostream& out) {
  out << "level,quantity,empirical_coverage,mc_stderr\n";
  const int ok = summary.succeeded();
  for (const auto& row : summary.coverage) {
    for (std::size_t q = 0; q < row.by_quantity.size(); ++q) {
      const double c = row.by_quantity[q];
      out << row.level << "," << summary.truth.names[q] << "," << c << ","
          << (ok > 0 ? std::sqrt(c * (1.0 - c) / ok) : 0.0) << "\n";
    }
    for (std::size_t m = 0; m < summary.cadr_names.size(); ++m) {
      const std::size_t l = &row - summary.coverage.data();
      const double c = summary.CadrCoverage(static_cast<int>(m), static_cast<int>(l));
      out << row.level << ",V_cadr_" << summary.cadr_names[m] << "," << c << ","
          << (ok > 0 ? std::sqrt(c * (1.0 - c) / ok) : 0.0) << "\n";
    }
  }
}

void WriteQqCsv(const std::vector<std::pair<double, double>>& points,
                std::ostream& out) {
  out << "theoretical,empirical\n";
  out.precision(17);
  for (const auto& [theoretical, empirical] : points) {
    out << theoretical << "," << empirical << "\n";
  }
}

void WriteHistogramCsv(const ConvergenceStats& stats, std::ostream& out) {
  out << "bin_lo,bin_hi,count\n";
  const int bins = static_cast<int>(stats.histogram.size());
  for (int b = 0; b < bins; ++b) {
    out << static_cast<double>(b) / bins << "," << static_cast<double>(b + 1) / bins
        << "," << stats.histogram[b] << "\n";
  }
}

void WriteReplicationsCsv(const ReplicationSummary& summary, std::ostream& out) {
  out.precision(17);
  out << "replication,quantity,ok,truth,estimate,variance,standardized";
  for (double level : summary.levels) out << ",covered_" << LevelKey(level);
  out << "\n";
  const int quantities = static_cast<int>(summary.truth.values.size());
  for (std::size_t r = 0; r < summary.records.size(); ++r) {
    const auto& rec = summary.records[r];
    for (int q = 0; q < quantities; ++q) {
      out << r + 1 << "," << summary.truth.names[q] << "," << (rec.ok ? 1 : 0) << ","
          << summary.truth.values[q];
      if (rec.ok) {
        out << "," << rec.estimate[q] << "," << rec.variance[q] << ","
            << rec.standardized[q];
        for (std::size_t l = 0; l < summary.levels.size(); ++l) {
          out << "," << static_cast<int>(rec.covered[l][q]);
        }
      } else {
        out << ",,,";
        for (std::size_t l = 0; l < summary.levels.size(); ++l) out << ",";
      }
      out << "\n";
    }
    for (std::size_t m = 0; m < summary.cadr_names.size(); ++m) {
      out << r + 1 << ",V_cadr_" << summary.cadr_names[m] << "," << (rec.ok ? 1 : 0)
          << "," << summary.truth.values.back();
      if (rec.ok) {
        out << "," << rec.cadr_value[m] << ",,";
        for (std::size_t l = 0; l < summary.levels.size(); ++l) {
          out << "," << static_cast<int>(rec.cadr_covered[m][l]);
        }
      } else {
        out << ",,,";
        for (std::size_t l = 0; l < summary.levels.size(); ++l) out << ",";
      }
      out << "\n";
    }
  }
}

void WriteSnapshotsCsv(const ReplicationSummary& summary, std::ostream& out) {
  out.precision(17);
  out << "t,quantity,available,mean_estimate,empirical_variance";
  for (double level : summary.levels) out << ",coverage_" << LevelKey(level);
  out << "\n";
  const int quantities = static_cast<int>(summary.truth.values.size());
  const int levels = static_cast<int>(summary.levels.size());
  for (std::size_t s = 0; s < summary.snapshot_times.size(); ++s) {
    for (int q = 0; q < quantities; ++q) {
      std::vector<double> values;
      std::vector<int> hits(levels, 0);
      int available = 0;
      for (const auto& rec : summary.records) {
        if (!rec.ok || rec.snapshot_covered[s][q] < 0) continue;
        ++available;
        values.push_back(rec.snapshot_estimate[s][q]);
        for (int l = 0; l < levels; ++l) hits[l] += rec.snapshot_covered[s][l * quantities + q];
      }
      out << summary.snapshot_times[s] << "," << summary.truth.names[q] << ","
          << available << "," << (values.empty() ? 0.0 : Mean(values)) << ","
          << SampleVariance(values);
      for (int l = 0; l < levels; ++l) {
        out << "," << (available > 0 ? static_cast<double>(hits[l]) / available : 0.0);
      }
      out << "\n";
    }
  }
}

}  // namespace ipwz
