// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "fpsattn/philox.h"

#include <cmath>
#include <numbers>

namespace fpsattn {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

inline void MulHiLo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

double ToUnit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits =
      ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

}  // namespace

PhiloxCounter Philox4x32(PhiloxCounter ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    MulHiLo(kMul0, ctr[0], hi0, lo0);
    MulHiLo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

PhiloxCounter CounterRng::Block(std::uint32_t step, std::uint32_t head,
                                std::uint32_t tag, std::uint64_t index) const {
  const PhiloxCounter ctr{
      static_cast<std::uint32_t>(index),
      static_cast<std::uint32_t>((index >> 32) & 0xFFFF) | (tag << 16), step,
      head};
  return Philox4x32(ctr, key_);
}

double CounterRng::Uniform(std::uint32_t step, std::uint32_t head,
                           std::uint32_t tag, std::uint64_t index) const {
  const PhiloxCounter b = Block(step, head, tag, index);
  return ToUnit(b[0], b[1]);
}

double CounterRng::Gaussian(std::uint32_t step, std::uint32_t head,
                            std::uint32_t tag, std::uint64_t index) const {
  const PhiloxCounter b = Block(step, head, tag, index >> 1);
  const double u1 = 1.0 - ToUnit(b[0], b[1]);  // (0, 1]
  const double u2 = ToUnit(b[2], b[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  return (index & 1) ? r * std::sin(theta) : r * std::cos(theta);
}

}  // namespace fpsattn
