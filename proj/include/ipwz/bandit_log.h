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
// The adaptively collected dataset and its CSV form.

#ifndef IPWZ_BANDIT_LOG_H_
#define IPWZ_BANDIT_LOG_H_

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ipwz/linalg.h"

namespace ipwz {

// Column store of rounds t = 1..T. Arms are 0-based in memory and 1-based
// on disk.
class BanditLog {
 public:
  BanditLog() = default;
  BanditLog(int context_dim, int num_arms)
      : context_dim_(context_dim), num_arms_(num_arms) {}

  int size() const { return static_cast<int>(arms_.size()); }
  bool empty() const { return arms_.empty(); }
  int context_dim() const { return context_dim_; }
  int num_arms() const { return num_arms_; }
  bool has_latent() const { return has_latent_; }
  bool has_distributions() const { return has_distributions_; }

  Eigen::Map<const Vector> context(int t) const {
    return Eigen::Map<const Vector>(contexts_.data() + t * context_dim_,
                                    context_dim_);
  }
  Eigen::Map<const Vector> latent(int t) const {
    return Eigen::Map<const Vector>(latents_.data() + t * context_dim_,
                                    context_dim_);
  }
  std::span<const double> distribution(int t) const {
    return {distributions_.data() + t * num_arms_,
            static_cast<std::size_t>(num_arms_)};
  }
  int arm(int t) const { return arms_[t]; }
  double propensity(int t) const { return propensities_[t]; }
  double outcome(int t) const { return outcomes_[t]; }

  void Reserve(int rows);
  // `latent` and `distribution` must be supplied for every row or none.
  void Append(const Eigen::Ref<const Vector>& context,
              const std::optional<Vector>& latent, int arm, double propensity,
              double outcome, std::span<const double> distribution = {});
  // First `rows` rounds.
  BanditLog Prefix(int rows) const;

 private:
  int context_dim_ = 1;
  int num_arms_ = 2;
  bool has_latent_ = false;
  bool has_distributions_ = false;
  std::vector<double> contexts_;
  std::vector<double> latents_;
  std::vector<int> arms_;
  std::vector<double> propensities_;
  std::vector<double> outcomes_;
  std::vector<double> distributions_;
};

// Header t,x_1..x_d,s_1..s_d,a,pi,y[,p_1..p_K]; s columns are blank when
// the latent state was not recorded. Reals use 17 significant digits.
void WriteLogCsv(const BanditLog& log, std::ostream& out);
void WriteLogCsv(const BanditLog& log, const std::string& path);
// `num_arms` of 0 infers K from the distribution columns or the largest
// arm seen. Throws InputError describing the offending line.
BanditLog ReadLogCsv(std::istream& in, int num_arms = 0);
BanditLog ReadLogCsv(const std::string& path, int num_arms = 0);

// Offline pairs (observed X~_i, latent S~_i) used to estimate Sigma_e.
class AuxiliaryData {
 public:
  AuxiliaryData() = default;
  explicit AuxiliaryData(int dim) : dim_(dim) {}

  int size() const { return static_cast<int>(observed_.size() / dim_); }
  int dim() const { return dim_; }
  Eigen::Map<const Vector> observed(int i) const {
    return Eigen::Map<const Vector>(observed_.data() + i * dim_, dim_);
  }
  Eigen::Map<const Vector> latent(int i) const {
    return Eigen::Map<const Vector>(latent_.data() + i * dim_, dim_);
  }
  void Append(const Eigen::Ref<const Vector>& observed,
              const Eigen::Ref<const Vector>& latent);

 private:
  int dim_ = 1;
  std::vector<double> observed_;
  std::vector<double> latent_;
};

// Header x_1..x_d,s_1..s_d.
void WriteAuxiliaryCsv(const AuxiliaryData& aux, std::ostream& out);
void WriteAuxiliaryCsv(const AuxiliaryData& aux, const std::string& path);
AuxiliaryData ReadAuxiliaryCsv(std::istream& in);
AuxiliaryData ReadAuxiliaryCsv(const std::string& path);

}  // namespace ipwz

#endif  // IPWZ_BANDIT_LOG_H_
