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
#ifndef IPWZ_ERROR_H_
#define IPWZ_ERROR_H_

#include <stdexcept>
#include <string>

namespace ipwz {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent configuration (unknown names, bad overrides,
// non-PSD covariances, infeasible clip levels). The CLI maps it to exit 1.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& message)
      : Error(key.empty() ? message : key + ": " + message), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

class NoDataForArm : public Error {
 public:
  explicit NoDataForArm(int arm)
      : Error("no observations for arm " + std::to_string(arm + 1)),
        arm_(arm) {}
  int arm() const { return arm_; }

 private:
  int arm_;
};

class SingularDesign : public Error {
 public:
  SingularDesign(const std::string& what, double condition)
      : Error(what + " (condition estimate " + std::to_string(condition) +
              ")"),
        condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace ipwz

#endif  // IPWZ_ERROR_H_
