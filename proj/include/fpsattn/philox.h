// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Philox4x32-10 counter-based generator. Every value is a pure function of
// (seed, counter), so generation order and thread count do not matter.

#ifndef FPSATTN_PHILOX_H_
#define FPSATTN_PHILOX_H_

#include <array>
#include <cstdint>

namespace fpsattn {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter Philox4x32(PhiloxCounter counter, PhiloxKey key);

// Maps (step, head, tag, index) streams under one 64-bit seed to values.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)} {}

  // Raw block for a 48-bit index within stream (step, head, tag < 2^16).
  PhiloxCounter Block(std::uint32_t step, std::uint32_t head,
                      std::uint32_t tag, std::uint64_t index) const;

  // Uniform in [0, 1) with 53 random bits.
  double Uniform(std::uint32_t step, std::uint32_t head, std::uint32_t tag,
                 std::uint64_t index) const;

  // Standard normal via Box-Muller; indices 2n and 2n+1 share a block.
  double Gaussian(std::uint32_t step, std::uint32_t head, std::uint32_t tag,
                  std::uint64_t index) const;

 private:
  PhiloxKey key_;
};

}  // namespace fpsattn

#endif  // FPSATTN_PHILOX_H_
