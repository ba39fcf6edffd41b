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
#include "ipwz/cli.h"

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>

#include "ipwz/bandit_log.h"
#include "ipwz/cadr.h"
#include "ipwz/config.h"
#include "ipwz/error.h"
#include "ipwz/estimator.h"
#include "ipwz/harness.h"
#include "ipwz/inference.h"
#include "ipwz/stats.h"

namespace ipwz {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct CommandOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  int threads = 1;
  std::string log_path;
  std::string aux_path;
};

ExperimentConfig LoadConfig(const CommandOptions& options) {
  if (options.config_path.empty()) throw ConfigError("--config", "a config file is required");
  json doc = ConfigDocument(LoadJsonFile(options.config_path));
  for (const auto& assignment : options.overrides) ApplyOverride(doc, assignment);
  return ExperimentConfigFromJson(doc);
}

fs::path PrepareOutput(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError("--out", "cannot create output directory '" + dir + "'");
  }
  return fs::path(dir);
}

std::ofstream OpenOutput(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

void WriteJson(const fs::path& path, const json& j) {
  auto out = OpenOutput(path);
  out << j.dump(2) << "\n";
}

void WriteManifest(const fs::path& dir, const std::string& command,
                   const ExperimentConfig& config, const json& inputs) {
  json manifest = MakeManifest(command, {}, config);
  manifest.erase("args");
  manifest["inputs"] = inputs;
  WriteJson(dir / "manifest.json", manifest);
}

int ConfigureThreads(int requested) {
  int threads = std::max(1, requested);
  if (const char* cap = std::getenv(kMaxThreadsEnv)) {
    const int limit = std::atoi(cap);
    if (limit >= 1) threads = std::min(threads, limit);
  }
  omp_set_num_threads(threads);
  return threads;
}

RandomStream ReplicationStream(const ExperimentConfig& config, int replication) {
  return RandomStream(config.seed)
      .Substream(StreamPurpose::kReplication)
      .Substream(static_cast<std::uint64_t>(replication));
}

bool NeedsAux(const ExperimentConfig& config) {
  return config.target.family == TargetFamily::kNoisyContext &&
         config.target.sigma_source == SigmaSource::kEstimateFromAux;
}

void Simulate(const CommandOptions& options, std::ostream& out) {
  const ExperimentConfig config = LoadConfig(options);
  const fs::path dir = PrepareOutput(options.out_dir);
  const RandomStream stream = ReplicationStream(config, 0);
  const Policy policy(config.policy, config.env.num_arms, config.env.context_dim,
                      WorkingTarget(config.policy, config.target, config.env));
  TrajectoryOptions trajectory_options;
  trajectory_options.record_distributions = true;
  const Trajectory trajectory =
      RunTrajectory(config.env, policy, config.horizon, stream, trajectory_options);
  WriteLogCsv(trajectory.log, (dir / "log.csv").string());
  json inputs = json::object();
  if (NeedsAux(config)) {
    const AuxiliaryData aux = SampleAuxiliary(
        config.env, config.aux_size, stream.Substream(StreamPurpose::kAuxiliary));
    WriteAuxiliaryCsv(aux, (dir / "aux.csv").string());
  }
  WriteManifest(dir, "simulate", config, inputs);
  out << "wrote " << trajectory.log.size() << " rounds to " << (dir / "log.csv").string()
      << "\n";
}

json EstimatedSigmaReport(const ExperimentConfig& config, const BanditLog& log,
                          const AuxiliaryData& aux) {
  json report;
  report["T"] = log.size();
  report["n_aux"] = aux.size();
  report["levels"] = config.levels;
  json arms = json::array();
  for (int arm : config.EstimatedArms()) {
    const EstimatedSigmaFit fit = IpwzSolveEstimatedSigma(log, aux, arm);
    const EstimatedSigmaVariance v =
        VarianceEstimatedSigma(log, aux, arm, fit.theta, fit.sigma_e_hat, config.regime);
    const auto ci = ConfidenceIntervals(fit.theta, v.sigma, v.sample_size, config.levels);
    json entry;
    entry["arm"] = arm + 1;
    entry["theta"] = std::vector<double>(fit.theta.data(), fit.theta.data() + fit.theta.size());
    entry["sigma_e_hat"] = MatrixToJson(fit.sigma_e_hat);
    entry["sigma"] = MatrixToJson(v.sigma);
    entry["regime"] = SigmaRegimeName(v.regime);
    entry["sample_size"] = v.sample_size;
    json cis = json::object();
    for (std::size_t l = 0; l < config.levels.size(); ++l) {
      json rows = json::array();
      for (const auto& interval : ci[l]) rows.push_back({interval.lo, interval.hi});
      cis[LevelKey(config.levels[l])] = rows;
    }
    entry["ci"] = cis;
    arms.push_back(entry);
  }
  report["arms"] = arms;
  return report;
}

json CadrJson(const CadrResult& result, const std::string& model) {
  json j;
  j["model"] = model;
  j["value"] = result.value;
  j["gamma"] = result.gamma;
  j["floored"] = result.floored;
  json cis = json::object();
  for (std::size_t l = 0; l < result.levels.size(); ++l) {
    cis[LevelKey(result.levels[l])] = {result.ci[l].lo, result.ci[l].hi};
  }
  j["ci"] = cis;
  return j;
}

void Infer(const CommandOptions& options, std::ostream& out) {
  if (options.log_path.empty()) throw ConfigError("--log", "a log CSV is required");
  const ExperimentConfig config = LoadConfig(options);
  const BanditLog log = ReadLogCsv(options.log_path, config.env.num_arms);
  if (log.context_dim() != config.env.context_dim) {
    throw InputError("log context dimension does not match the environment");
  }
  const fs::path dir = PrepareOutput(options.out_dir);
  json inputs = {{"log", options.log_path}};
  if (NeedsAux(config)) {
    if (options.aux_path.empty()) {
      throw ConfigError("--aux", "this target estimates Sigma_e and needs --aux");
    }
    inputs["aux"] = options.aux_path;
    const AuxiliaryData aux = ReadAuxiliaryCsv(options.aux_path);
    WriteJson(dir / "estimate.json", EstimatedSigmaReport(config, log, aux));
  } else {
    const ScoreTarget target = ResolveTarget(config.target, config.env);
    const EstimateReport report =
        Estimate(log, target, config.levels, config.variance_mode, config.arms);
    WriteJson(dir / "estimate.json", report.ToJson());
    if (target.family == TargetFamily::kOpe) {
      WriteJson(dir / "ope.json",
                OpeValue(log, target, config.levels, config.variance_mode).ToJson());
      if (log.has_distributions() && log.size() > config.cadr_options.burn_in) {
        json cadr = json::array();
        const std::vector<CadrRegression> models =
            config.cadr.empty()
                ? std::vector<CadrRegression>{CadrRegression::kZero,
                                              CadrRegression::kOnlineLinear}
                : config.cadr;
        for (CadrRegression model : models) {
          CadrOptions cadr_options = config.cadr_options;
          cadr_options.regression = model;
          cadr.push_back(CadrJson(
              CadrOpe(log, target.target_policy, config.levels, cadr_options),
              CadrRegressionName(model)));
        }
        WriteJson(dir / "cadr.json", cadr);
      }
    }
  }
  WriteManifest(dir, "infer", config, inputs);
  out << "wrote " << (dir / "estimate.json").string() << "\n";
}

void WriteSummaryFiles(const ReplicationSummary& summary, const fs::path& dir) {
  {
    auto f = OpenOutput(dir / "coverage.csv");
    WriteCoverageCsv(summary, f);
  }
  {
    auto f = OpenOutput(dir / "coverage_by_quantity.csv");
    WriteCoverageByQuantityCsv(summary, f);
  }
  {
    auto f = OpenOutput(dir / "replications.csv");
    WriteReplicationsCsv(summary, f);
  }
  if (!summary.snapshot_times.empty()) {
    auto f = OpenOutput(dir / "snapshots.csv");
    WriteSnapshotsCsv(summary, f);
  }
  json truth;
  truth["names"] = summary.truth.names;
  truth["values"] = summary.truth.values;
  truth["std_errors"] = summary.truth.std_errors;
  truth["exact"] = summary.truth.exact;
  truth["failures"] = summary.failures;
  WriteJson(dir / "truth.json", truth);
}

void Coverage(const CommandOptions& options, std::ostream& out) {
  const ExperimentConfig config = LoadConfig(options);
  const fs::path dir = PrepareOutput(options.out_dir);
  const int threads = ConfigureThreads(options.threads);
  const ReplicationSummary summary = Replicate(config, threads > 1);
  WriteSummaryFiles(summary, dir);
  if (summary.succeeded() >= 2) {
    for (std::size_t q = 0; q < summary.truth.names.size(); ++q) {
      std::string stem = summary.truth.names[q];
      std::replace(stem.begin(), stem.end(), '[', '_');
      stem.erase(std::remove(stem.begin(), stem.end(), ']'), stem.end());
      auto f = OpenOutput(dir / ("qq_" + stem + ".csv"));
      WriteQqCsv(QqPoints(summary.Standardized(static_cast<int>(q))), f);
    }
  }
  WriteManifest(dir, "coverage", config, json::object());
  for (const auto& row : summary.coverage) {
    out << "level " << row.level << ": coverage " << row.coverage << " (+/- "
        << row.mc_stderr << ")\n";
  }
}

void Diagnose(const CommandOptions& options, std::ostream& out) {
  const ExperimentConfig config = LoadConfig(options);
  if (config.diagnostic_contexts.empty()) {
    throw ConfigError("harness.diagnostic_contexts",
                      "diagnose needs at least one diagnostic context");
  }
  const fs::path dir = PrepareOutput(options.out_dir);
  const int threads = ConfigureThreads(options.threads);
  const ReplicationSummary summary = Replicate(config, threads > 1);
  WriteSummaryFiles(summary, dir);
  auto table = OpenOutput(dir / "convergence.csv");
  table << "context,arm,mean,sd,low_mass,high_mass\n";
  for (std::size_t c = 0; c < config.diagnostic_contexts.size(); ++c) {
    const Vector& x = config.diagnostic_contexts[c];
    for (int arm = 0; arm < config.env.num_arms; ++arm) {
      const ConvergenceStats stats = ConvergenceDiagnostic(summary, x, arm);
      const std::string stem =
          "histogram_ctx" + std::to_string(c + 1) + "_arm" + std::to_string(arm + 1);
      auto f = OpenOutput(dir / (stem + ".csv"));
      WriteHistogramCsv(stats, f);
      table << c + 1 << "," << arm + 1 << "," << stats.mean << "," << stats.sd << ","
            << stats.low_mass << "," << stats.high_mass << "\n";
      out << "context " << c + 1 << " arm " << arm + 1 << ": mean " << stats.mean
          << ", mass <= 0.2: " << stats.low_mass << ", mass >= 0.8: " << stats.high_mass
          << "\n";
    }
  }
  WriteManifest(dir, "diagnose", config, json::object());
}

void CompareOpe(const CommandOptions& options, std::ostream& out) {
  ExperimentConfig config = LoadConfig(options);
  if (config.target.family != TargetFamily::kOpe) {
    throw ConfigError("target.family", "compare-ope needs the ope target");
  }
  if (config.cadr.empty()) {
    config.cadr = {CadrRegression::kZero, CadrRegression::kOnlineLinear};
  }
  const fs::path dir = PrepareOutput(options.out_dir);
  const int threads = ConfigureThreads(options.threads);
  const ReplicationSummary summary = Replicate(config, threads > 1);
  WriteSummaryFiles(summary, dir);
  const int v = static_cast<int>(summary.truth.values.size()) - 1;
  const double truth = summary.truth.values[v];
  auto table = OpenOutput(dir / "compare_ope.csv");
  table << "method,level,coverage,mc_stderr,bias,empirical_sd\n";
  const int ok = summary.succeeded();
  auto emit = [&](const std::string& method, const std::vector<double>& values,
                  const std::vector<double>& coverage) {
    const double bias = Mean(values) - truth;
    const double sd = std::sqrt(SampleVariance(values));
    for (std::size_t l = 0; l < summary.levels.size(); ++l) {
      const double c = coverage[l];
      table << method << "," << summary.levels[l] << "," << c << ","
            << std::sqrt(c * (1.0 - c) / std::max(ok, 1)) << "," << bias << "," << sd
            << "\n";
    }
    out << method << ": bias " << bias << ", sd " << sd << ", coverage@"
        << summary.levels.back() << " " << coverage.back() << "\n";
  };
  std::vector<double> ipwz_coverage;
  for (const auto& row : summary.coverage) ipwz_coverage.push_back(row.by_quantity[v]);
  emit("ipwz", summary.Estimates(v), ipwz_coverage);
  for (std::size_t m = 0; m < summary.cadr_names.size(); ++m) {
    std::vector<double> coverage;
    for (std::size_t l = 0; l < summary.levels.size(); ++l) {
      coverage.push_back(summary.CadrCoverage(static_cast<int>(m), static_cast<int>(l)));
    }
    emit("cadr_" + summary.cadr_names[m], summary.CadrValues(static_cast<int>(m)),
         coverage);
  }
  WriteManifest(dir, "compare-ope", config, json::object());
}

}  // namespace

int RunCommand(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"Inference for Z-estimators on adaptively collected bandit data", "ipwz"};
  app.require_subcommand(1);
  CommandOptions options;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", options.config_path, "experiment config or manifest JSON");
    sub->add_option("--out", options.out_dir, "output directory");
    sub->add_option("--set", options.overrides, "override, e.g. policy.pi_min=0.01");
    sub->add_option("--threads", options.threads, "worker threads for replications");
  };
  CLI::App* simulate = app.add_subcommand("simulate", "simulate one bandit log");
  CLI::App* infer = app.add_subcommand("infer", "estimate from a logged CSV");
  CLI::App* coverage = app.add_subcommand("coverage", "replicated coverage study");
  CLI::App* diagnose = app.add_subcommand("diagnose", "policy convergence diagnostic");
  CLI::App* compare = app.add_subcommand("compare-ope", "IPW-Z versus CADR");
  for (CLI::App* sub : {simulate, infer, coverage, diagnose, compare}) add_common(sub);
  infer->add_option("--log", options.log_path, "bandit log CSV");
  infer->add_option("--aux", options.aux_path, "auxiliary (x, s) CSV");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (!args.empty() && args.front().rfind("-", 0) != 0) {
      bool known = false;
      for (const auto* sub : app.get_subcommands({})) {
        known = known || sub->get_name() == args.front();
      }
      if (!known) {
        err << "ipwz: unknown subcommand '" << args.front() << "'\n";
        return kExitConfig;
      }
    }
    err << "ipwz: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (simulate->parsed()) Simulate(options, out);
    if (infer->parsed()) Infer(options, out);
    if (coverage->parsed()) Coverage(options, out);
    if (diagnose->parsed()) Diagnose(options, out);
    if (compare->parsed()) CompareOpe(options, out);
  } catch (const ConfigError& e) {
    err << "ipwz: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InputError& e) {
    err << "ipwz: input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "ipwz: runtime failure: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace ipwz
