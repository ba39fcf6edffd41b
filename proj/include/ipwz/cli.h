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

#ifndef IPWZ_CLI_H_
#define IPWZ_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace ipwz {

// Exit statuses of RunCommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

// Caps the thread count requested with --threads.
inline constexpr const char* kMaxThreadsEnv = "IPWZ_MAX_THREADS";

// Runs one subcommand (simulate, infer, coverage, diagnose, compare-ope).
// `args` excludes the program name. Every successful run writes
// <out>/manifest.json; passing that manifest back as --config reproduces the
// outputs.
int RunCommand(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err);

}  // namespace ipwz

#endif  // IPWZ_CLI_H_
