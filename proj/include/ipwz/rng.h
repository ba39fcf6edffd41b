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
// Counter-based random streams.
//
// Every random quantity in a simulation is drawn from a RandomStream whose
// key is derived from (master seed, replication, purpose). Streams never
// share state, so a replication produces the same draws no matter which
// thread runs it or in which order.

#ifndef IPWZ_RNG_H_
#define IPWZ_RNG_H_

#include <array>
#include <cstdint>
#include <limits>
#include <span>

namespace ipwz {

// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> Philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// SplitMix64 finalizer; used to derive independent keys.
std::uint64_t MixBits(std::uint64_t x);

// Derives a child seed from a parent seed and a tag.
std::uint64_t DeriveSeed(std::uint64_t parent, std::uint64_t tag);

enum class StreamPurpose : std::uint64_t {
  kEnvironmentParameters = 0x1001,
  kRounds = 0x1002,
  kActions = 0x1003,
  kOracle = 0x1004,
  kAuxiliary = 0x1005,
  kReplication = 0x1006,
  kMartingale = 0x1007,
};

class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t key) : key_(key) {}

  // Independent child stream; does not advance this one.
  RandomStream Substream(std::uint64_t tag) const {
    return RandomStream(DeriveSeed(key_, tag));
  }
  RandomStream Substream(StreamPurpose purpose) const {
    return Substream(static_cast<std::uint64_t>(purpose));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()();

  // Uniform on the open interval (0, 1), 53 bits of resolution.
  double Uniform();
  // Standard normal via Box-Muller; consumes exactly two uniforms.
  double Normal();
  // Index drawn from a probability vector by inverse CDF.
  int Categorical(std::span<const double> probs);

  std::uint64_t key() const { return key_; }

 private:
  void Refill();

  std::uint64_t key_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int available_ = 0;
};

}  // namespace ipwz

#endif  // IPWZ_RNG_H_
