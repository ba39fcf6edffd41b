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
#include "ipwz/bandit_log.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ipwz/error.h"

namespace ipwz {
namespace {

void PutReal(std::ostream& out, double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  out << buffer;
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  for (auto& f : fields) {
    while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
    while (!f.empty() && f.front() == ' ') f.erase(f.begin());
  }
  return fields;
}

double ParseReal(const std::string& field, int line, const char* column) {
  char* end = nullptr;
  const double value = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size()) {
    throw InputError("line " + std::to_string(line) + ": column " + column +
                     " is not a number: '" + field + "'");
  }
  return value;
}

// Counts the columns named prefix1, prefix2, ... starting at `pos`.
int CountPrefixed(const std::vector<std::string>& header, std::size_t pos,
                  const std::string& prefix) {
  int count = 0;
  while (pos + count < header.size() &&
         header[pos + count] == prefix + std::to_string(count + 1)) {
    ++count;
  }
  return count;
}

std::ofstream OpenForWrite(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream OpenForRead(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "': no such readable file");
  return in;
}

}  // namespace

void BanditLog::Reserve(int rows) {
  contexts_.reserve(static_cast<std::size_t>(rows) * context_dim_);
  arms_.reserve(rows);
  propensities_.reserve(rows);
  outcomes_.reserve(rows);
}

void BanditLog::Append(const Eigen::Ref<const Vector>& context,
                       const std::optional<Vector>& latent, int arm,
                       double propensity, double outcome,
                       std::span<const double> distribution) {
  if (context.size() != context_dim_) {
    throw InputError("context dimension " + std::to_string(context.size()) +
                     " does not match log dimension " +
                     std::to_string(context_dim_));
  }
  if (arm < 0 || arm >= num_arms_) {
    throw InputError("arm " + std::to_string(arm + 1) + " out of range");
  }
  if (!(propensity > 0.0 && propensity <= 1.0)) {
    throw InputError("propensity must lie in (0, 1]");
  }
  if (empty()) {
    has_latent_ = latent.has_value();
    has_distributions_ = !distribution.empty();
  } else if (has_latent_ != latent.has_value() ||
             has_distributions_ != !distribution.empty()) {
    throw InputError("rows must all carry the same optional columns");
  }
  contexts_.insert(contexts_.end(), context.data(),
                   context.data() + context_dim_);
  if (latent) latents_.insert(latents_.end(), latent->data(),
                              latent->data() + context_dim_);
  if (!distribution.empty()) {
    if (static_cast<int>(distribution.size()) != num_arms_) {
      throw InputError("distribution length does not match the arm count");
    }
    distributions_.insert(distributions_.end(), distribution.begin(),
                          distribution.end());
  }
  arms_.push_back(arm);
  propensities_.push_back(propensity);
  outcomes_.push_back(outcome);
}

BanditLog BanditLog::Prefix(int rows) const {
  BanditLog out(context_dim_, num_arms_);
  rows = std::min(rows, size());
  out.has_latent_ = has_latent_;
  out.has_distributions_ = has_distributions_;
  out.contexts_.assign(contexts_.begin(), contexts_.begin() + rows * context_dim_);
  if (has_latent_) {
    out.latents_.assign(latents_.begin(), latents_.begin() + rows * context_dim_);
  }
  if (has_distributions_) {
    out.distributions_.assign(distributions_.begin(),
                              distributions_.begin() + rows * num_arms_);
  }
  out.arms_.assign(arms_.begin(), arms_.begin() + rows);
  out.propensities_.assign(propensities_.begin(), propensities_.begin() + rows);
  out.outcomes_.assign(outcomes_.begin(), outcomes_.begin() + rows);
  return out;
}

void WriteLogCsv(const BanditLog& log, std::ostream& out) {
  const int d = log.context_dim();
  out << "t";
  for (int i = 1; i <= d; ++i) out << ",x_" << i;
  for (int i = 1; i <= d; ++i) out << ",s_" << i;
  out << ",a,pi,y";
  if (log.has_distributions()) {
    for (int a = 1; a <= log.num_arms(); ++a) out << ",p_" << a;
  }
  out << "\n";
  for (int t = 0; t < log.size(); ++t) {
    out << t + 1;
    const auto x = log.context(t);
    for (int i = 0; i < d; ++i) {
      out << ",";
      PutReal(out, x(i));
    }
    for (int i = 0; i < d; ++i) {
      out << ",";
      if (log.has_latent()) PutReal(out, log.latent(t)(i));
    }
    out << "," << log.arm(t) + 1 << ",";
    PutReal(out, log.propensity(t));
    out << ",";
    PutReal(out, log.outcome(t));
    if (log.has_distributions()) {
      for (double p : log.distribution(t)) {
        out << ",";
        PutReal(out, p);
      }
    }
    out << "\n";
  }
}

void WriteLogCsv(const BanditLog& log, const std::string& path) {
  auto out = OpenForWrite(path);
  WriteLogCsv(log, out);
}

BanditLog ReadLogCsv(std::istream& in, int num_arms) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty log: missing header row");
  const auto header = SplitCsv(line);
  if (header.empty() || header[0] != "t") {
    throw InputError("log header must start with 't'");
  }
  const int d = CountPrefixed(header, 1, "x_");
  if (d == 0) throw InputError("log header has no x_1 column");
  if (CountPrefixed(header, 1 + d, "s_") != d) {
    throw InputError("log header needs s_1..s_" + std::to_string(d));
  }
  const std::size_t arm_col = 1 + 2 * d;
  if (header.size() < arm_col + 3 || header[arm_col] != "a" ||
      header[arm_col + 1] != "pi" || header[arm_col + 2] != "y") {
    throw InputError("log header must continue with a,pi,y after the s columns");
  }
  const int dist_cols = CountPrefixed(header, arm_col + 3, "p_");
  if (header.size() != arm_col + 3 + dist_cols) {
    throw InputError("unexpected trailing columns in log header");
  }

  struct Row {
    Vector x;
    std::optional<Vector> s;
    int arm;
    double pi, y;
    std::vector<double> dist;
  };
  std::vector<Row> rows;
  int max_arm = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = SplitCsv(line);
    if (f.size() != header.size()) {
      throw InputError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(f.size()));
    }
    const double t = ParseReal(f[0], line_no, "t");
    if (t != static_cast<double>(rows.size() + 1)) {
      throw InputError("line " + std::to_string(line_no) +
                       ": t must run 1..T without gaps");
    }
    Row row;
    row.x.resize(d);
    for (int i = 0; i < d; ++i) row.x(i) = ParseReal(f[1 + i], line_no, "x");
    bool blank = true, filled = true;
    for (int i = 0; i < d; ++i) {
      (f[1 + d + i].empty() ? filled : blank) = false;
    }
    if (!blank && !filled) {
      throw InputError("line " + std::to_string(line_no) +
                       ": latent columns partially blank");
    }
    if (filled) {
      row.s = Vector(d);
      for (int i = 0; i < d; ++i) (*row.s)(i) = ParseReal(f[1 + d + i], line_no, "s");
    }
    const double arm = ParseReal(f[arm_col], line_no, "a");
    if (arm < 1 || arm != static_cast<int>(arm)) {
      throw InputError("line " + std::to_string(line_no) +
                       ": arm must be a positive integer");
    }
    row.arm = static_cast<int>(arm) - 1;
    max_arm = std::max(max_arm, row.arm + 1);
    row.pi = ParseReal(f[arm_col + 1], line_no, "pi");
    if (!(row.pi > 0.0 && row.pi <= 1.0)) {
      throw InputError("line " + std::to_string(line_no) +
                       ": propensity must lie in (0, 1]");
    }
    row.y = ParseReal(f[arm_col + 2], line_no, "y");
    for (int a = 0; a < dist_cols; ++a) {
      row.dist.push_back(ParseReal(f[arm_col + 3 + a], line_no, "p"));
    }
    rows.push_back(std::move(row));
  }

  int k = num_arms > 0 ? num_arms : (dist_cols > 0 ? dist_cols : std::max(2, max_arm));
  if (dist_cols > 0 && dist_cols != k) {
    throw InputError("log has " + std::to_string(dist_cols) +
                     " distribution columns but " + std::to_string(k) + " arms");
  }
  if (max_arm > k) {
    throw InputError("log mentions arm " + std::to_string(max_arm) + " but K = " +
                     std::to_string(k));
  }
  BanditLog log(d, k);
  log.Reserve(static_cast<int>(rows.size()));
  for (const auto& r : rows) log.Append(r.x, r.s, r.arm, r.pi, r.y, r.dist);
  return log;
}

BanditLog ReadLogCsv(const std::string& path, int num_arms) {
  auto in = OpenForRead(path);
  return ReadLogCsv(in, num_arms);
}

void AuxiliaryData::Append(const Eigen::Ref<const Vector>& observed,
                           const Eigen::Ref<const Vector>& latent) {
  if (observed.size() != dim_ || latent.size() != dim_) {
    throw InputError("auxiliary row dimension mismatch");
  }
  observed_.insert(observed_.end(), observed.data(), observed.data() + dim_);
  latent_.insert(latent_.end(), latent.data(), latent.data() + dim_);
}

void WriteAuxiliaryCsv(const AuxiliaryData& aux, std::ostream& out) {
  const int d = aux.dim();
  for (int i = 1; i <= d; ++i) out << (i > 1 ? "," : "") << "x_" << i;
  for (int i = 1; i <= d; ++i) out << ",s_" << i;
  out << "\n";
  for (int r = 0; r < aux.size(); ++r) {
    for (int i = 0; i < d; ++i) {
      if (i > 0) out << ",";
      PutReal(out, aux.observed(r)(i));
    }
    for (int i = 0; i < d; ++i) {
      out << ",";
      PutReal(out, aux.latent(r)(i));
    }
    out << "\n";
  }
}

void WriteAuxiliaryCsv(const AuxiliaryData& aux, const std::string& path) {
  auto out = OpenForWrite(path);
  WriteAuxiliaryCsv(aux, out);
}

AuxiliaryData ReadAuxiliaryCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty auxiliary file");
  const auto header = SplitCsv(line);
  const int d = CountPrefixed(header, 0, "x_");
  if (d == 0 || CountPrefixed(header, d, "s_") != d ||
      header.size() != static_cast<std::size_t>(2 * d)) {
    throw InputError("auxiliary header must be x_1..x_d,s_1..s_d");
  }
  AuxiliaryData aux(d);
  int line_no = 1;
  Vector x(d), s(d);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = SplitCsv(line);
    if (f.size() != header.size()) {
      throw InputError("line " + std::to_string(line_no) + ": wrong field count");
    }
    for (int i = 0; i < d; ++i) {
      x(i) = ParseReal(f[i], line_no, "x");
      s(i) = ParseReal(f[d + i], line_no, "s");
    }
    aux.Append(x, s);
  }
  return aux;
}

AuxiliaryData ReadAuxiliaryCsv(const std::string& path) {
  auto in = OpenForRead(path);
  return ReadAuxiliaryCsv(in);
}

}  // namespace ipwz
