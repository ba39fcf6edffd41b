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
#include "ipwz/config.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ipwz/error.h"

#ifndef IPWZ_VERSION
#define IPWZ_VERSION "unknown"
#endif

namespace ipwz {
namespace {

using json = nlohmann::json;

template <typename F>
auto WithSection(const std::string& section, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError& e) {
    const std::string& key = e.key();
    if (key.rfind(section, 0) == 0) throw;
    const std::string message =
        std::string(e.what()).substr(key.empty() ? 0 : key.size() + 2);
    throw ConfigError(key.empty() ? section : section + "." + key, message);
  }
}

const json& Section(const json& doc, const char* name) {
  if (!doc.contains(name)) {
    throw ConfigError(name, "missing section");
  }
  return doc.at(name);
}

int GetInt(const json& h, const char* key, int fallback) {
  if (!h.contains(key)) return fallback;
  const json& v = h.at(key);
  if (!v.is_number_integer()) {
    throw ConfigError(std::string("harness.") + key, "expected an integer");
  }
  return v.get<int>();
}

std::vector<double> GetNumbers(const json& h, const char* key) {
  const json& v = h.at(key);
  if (!v.is_array()) throw ConfigError(std::string("harness.") + key, "expected an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) {
      throw ConfigError(std::string("harness.") + key, "expected numbers");
    }
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace

const char* CodeVersion() { return IPWZ_VERSION; }

json LoadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open '" + path + "': no such readable file");
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", "'" + path + "' is not valid JSON: " + e.what());
  }
}

void ApplyOverride(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(assignment, "override must look like key.path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::stringstream parts(path);
  std::string part;
  std::vector<std::string> keys;
  while (std::getline(parts, part, '.')) {
    if (part.empty()) throw ConfigError(path, "empty path component");
    keys.push_back(part);
  }
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    json& next = (*node)[keys[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) {
      throw ConfigError(path, "'" + keys[i] + "' is not an object");
    }
    node = &next;
  }
  if (!node->is_object()) throw ConfigError(path, "cannot set inside a non-object");
  (*node)[keys.back()] = std::move(value);
}

ExperimentConfig ExperimentConfigFromJson(const json& doc) {
  if (!doc.is_object()) throw ConfigError("", "config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "env" && key != "policy" && key != "target" && key != "harness") {
      throw ConfigError(key, "unknown config section");
    }
  }
  ExperimentConfig config;
  config.env = WithSection("env", [&] { return EnvironmentFromJson(Section(doc, "env")); });
  config.policy = PolicyConfig::FromJson(Section(doc, "policy"));
  config.target =
      WithSection("target", [&] { return ScoreTarget::FromJson(Section(doc, "target")); });

  const json h = doc.contains("harness") ? doc.at("harness") : json::object();
  if (!h.is_object()) throw ConfigError("harness", "expected an object");
  static const char* kKnown[] = {
      "horizon",        "replications", "seed",     "levels",   "diagnostic_contexts",
      "snapshot_times", "variance_mode", "arms",    "aux_size", "regime",
      "n_oracle",       "cadr",          "cadr_options"};
  for (const auto& [key, value] : h.items()) {
    if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
      throw ConfigError("harness." + key, "unknown key");
    }
  }
  config.horizon = GetInt(h, "horizon", config.horizon);
  config.replications = GetInt(h, "replications", config.replications);
  if (h.contains("seed")) {
    if (!h.at("seed").is_number_unsigned() && !h.at("seed").is_number_integer()) {
      throw ConfigError("harness.seed", "expected a non-negative integer");
    }
    if (h.at("seed").is_number_integer() && h.at("seed").get<std::int64_t>() < 0) {
      throw ConfigError("harness.seed", "expected a non-negative integer");
    }
    config.seed = h.at("seed").get<std::uint64_t>();
  }
  if (h.contains("levels")) config.levels = GetNumbers(h, "levels");
  if (h.contains("diagnostic_contexts")) {
    const json& v = h.at("diagnostic_contexts");
    if (!v.is_array()) {
      throw ConfigError("harness.diagnostic_contexts", "expected an array");
    }
    for (const auto& c : v) {
      std::vector<double> values;
      if (c.is_number()) {
        values.push_back(c.get<double>());
      } else if (c.is_array()) {
        for (const auto& e : c) {
          if (!e.is_number()) {
            throw ConfigError("harness.diagnostic_contexts", "expected numbers");
          }
          values.push_back(e.get<double>());
        }
      } else {
        throw ConfigError("harness.diagnostic_contexts",
                          "each context is a number or an array");
      }
      config.diagnostic_contexts.push_back(
          Eigen::Map<const Vector>(values.data(), values.size()));
    }
  }
  if (h.contains("snapshot_times")) {
    for (double t : GetNumbers(h, "snapshot_times")) {
      config.snapshot_times.push_back(static_cast<int>(t));
    }
  }
  if (h.contains("variance_mode")) {
    config.variance_mode = ParseVarianceMode(h.at("variance_mode").get<std::string>());
  }
  if (h.contains("arms")) {
    for (double a : GetNumbers(h, "arms")) {
      config.arms.push_back(static_cast<int>(a) - 1);
    }
  }
  config.aux_size = GetInt(h, "aux_size", config.aux_size);
  if (h.contains("regime")) {
    config.regime = WithSection(
        "harness", [&] { return ParseSigmaRegime(h.at("regime").get<std::string>()); });
  }
  if (h.contains("n_oracle")) {
    if (!h.at("n_oracle").is_number()) {
      throw ConfigError("harness.n_oracle", "expected a number");
    }
    config.n_oracle = static_cast<std::int64_t>(h.at("n_oracle").get<double>());
  }
  if (h.contains("cadr")) {
    const json& v = h.at("cadr");
    if (!v.is_array()) throw ConfigError("harness.cadr", "expected an array of names");
    for (const auto& e : v) {
      if (!e.is_string()) throw ConfigError("harness.cadr", "expected model names");
      config.cadr.push_back(
          WithSection("harness", [&] { return ParseCadrRegression(e.get<std::string>()); }));
    }
  }
  if (h.contains("cadr_options")) {
    const json& o = h.at("cadr_options");
    if (!o.is_object()) throw ConfigError("harness.cadr_options", "expected an object");
    for (const auto& [key, value] : o.items()) {
      if (key != "variance_floor" && key != "burn_in" && key != "ridge_lambda") {
        throw ConfigError("harness.cadr_options." + key, "unknown key");
      }
      if (!value.is_number()) {
        throw ConfigError("harness.cadr_options." + key, "expected a number");
      }
    }
    config.cadr_options.variance_floor =
        o.value("variance_floor", config.cadr_options.variance_floor);
    config.cadr_options.burn_in = o.value("burn_in", config.cadr_options.burn_in);
    config.cadr_options.ridge_lambda =
        o.value("ridge_lambda", config.cadr_options.ridge_lambda);
  }
  config.Validate();
  return config;
}

json ExperimentConfigToJson(const ExperimentConfig& config) {
  json h;
  h["horizon"] = config.horizon;
  h["replications"] = config.replications;
  h["seed"] = config.seed;
  h["levels"] = config.levels;
  json contexts = json::array();
  for (const auto& x : config.diagnostic_contexts) {
    contexts.push_back(std::vector<double>(x.data(), x.data() + x.size()));
  }
  h["diagnostic_contexts"] = contexts;
  h["snapshot_times"] = config.snapshot_times;
  h["variance_mode"] = VarianceModeName(config.variance_mode);
  json arms = json::array();
  for (int a : config.arms) arms.push_back(a + 1);
  h["arms"] = arms;
  h["aux_size"] = config.aux_size;
  h["regime"] = SigmaRegimeName(config.regime);
  h["n_oracle"] = config.n_oracle;
  json cadr = json::array();
  for (auto r : config.cadr) cadr.push_back(CadrRegressionName(r));
  h["cadr"] = cadr;
  h["cadr_options"] = {{"variance_floor", config.cadr_options.variance_floor},
                       {"burn_in", config.cadr_options.burn_in},
                       {"ridge_lambda", config.cadr_options.ridge_lambda}};
  json doc;
  doc["env"] = EnvironmentToJson(config.env);
  doc["policy"] = config.policy.ToJson();
  doc["target"] = config.target.ToJson();
  doc["harness"] = h;
  return doc;
}

json MakeManifest(const std::string& command, const std::vector<std::string>& args,
                  const ExperimentConfig& config) {
  json m;
  m["manifest_version"] = 1;
  m["command"] = command;
  m["args"] = args;
  m["seed"] = config.seed;
  m["code_version"] = CodeVersion();
  m["config"] = ExperimentConfigToJson(config);
  return m;
}

bool IsManifest(const json& doc) {
  return doc.is_object() && doc.contains("manifest_version") && doc.contains("config");
}

json ConfigDocument(const json& doc) {
  return IsManifest(doc) ? doc.at("config") : doc;
}

}  // namespace ipwz
