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

#ifndef IPWZ_CONFIG_H_
#define IPWZ_CONFIG_H_

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ipwz/harness.h"

namespace ipwz {

// Version string baked in at build time.
const char* CodeVersion();

// Reads a JSON document; InputError when the file is missing, ConfigError when
// it does not parse.
nlohmann::json LoadJsonFile(const std::string& path);

// Applies "a.b.c=value" to the document. The value is parsed as JSON when
// possible and taken as a string otherwise.
void ApplyOverride(nlohmann::json& doc, const std::string& assignment);

// Document sections: env, policy, target, harness.
ExperimentConfig ExperimentConfigFromJson(const nlohmann::json& doc);
nlohmann::json ExperimentConfigToJson(const ExperimentConfig& config);

// A manifest stores the resolved config next to the seed and code version.
// ConfigDocument returns the config section of a manifest, or the document
// itself when it is a plain config.
nlohmann::json MakeManifest(const std::string& command,
                            const std::vector<std::string>& args,
                            const ExperimentConfig& config);
bool IsManifest(const nlohmann::json& doc);
nlohmann::json ConfigDocument(const nlohmann::json& doc);

}  // namespace ipwz

#endif  // IPWZ_CONFIG_H_
