// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Software emulation of the 8-bit float formats E4M3 and E5M2.
//
// Encoding rounds to nearest, ties to even, over the full representable set
// including subnormals. Finite magnitudes above the format maximum saturate to
// the maximum (never to Inf or NaN). Scaling follows the convention
//   code = Encode(x / s),  x_hat = Decode(code) * s,  s = max|x| / max_value
// so a block's largest magnitude lands on the format maximum.

#ifndef FPSATTN_FP8_H_
#define FPSATTN_FP8_H_

#include <array>
#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace fpsattn {

struct Fp8Format {
  std::string_view name;
  int exponent_bits;
  int mantissa_bits;
  int exponent_bias;
  double max_value;   // largest finite magnitude
  double min_normal;  // 2^(1 - bias)
  bool has_inf;

  // Smallest positive subnormal, 2^(1 - bias - mantissa_bits).
  double min_subnormal() const;
  // Magnitude bits (sign cleared) of the largest finite code.
  std::uint8_t max_code() const;

  static constexpr Fp8Format E4M3() {
    return {"e4m3", 4, 3, 7, 448.0, 0.015625, false};
  }
  static constexpr Fp8Format E5M2() {
    return {"e5m2", 5, 2, 15, 57344.0, 6.103515625e-05, true};
  }

  bool operator==(const Fp8Format& o) const {
    return exponent_bits == o.exponent_bits && mantissa_bits == o.mantissa_bits;
  }
};

// Parses "e4m3" or "e5m2"; throws std::invalid_argument otherwise.
Fp8Format FormatFromName(std::string_view name);

struct Fp8Code {
  std::uint8_t bits = 0;
  bool operator==(const Fp8Code&) const = default;
};

// Block scale. Always > 0; an all-zero block gets the sentinel 1.
struct ScaleFactor {
  double value = 1.0;
  bool operator==(const ScaleFactor&) const = default;
};

bool IsNan(Fp8Code code, const Fp8Format& format);

// max|x| / format.max_value, or 1 for an all-zero block. Throws on an empty
// sequence or non-finite entries.
ScaleFactor ComputeScale(std::span<const float> values, const Fp8Format& format);

// Throws std::invalid_argument on NaN. Infinities map to the Inf code when
// the format has one and saturate otherwise.
Fp8Code Encode(double x, const Fp8Format& format);

// Encode with the format's constants precomputed, for hot loops.
class Fp8Encoder {
 public:
  explicit Fp8Encoder(const Fp8Format& format);
  Fp8Code operator()(double x) const;

  // Same as operator() for non-NaN x, without branches.
  Fp8Code EncodeUnchecked(double x) const {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
    const auto sign = static_cast<std::uint8_t>((bits >> 56) & 0x80);
    const int biased = static_cast<int>((bits >> 52) & 0x7FF);
    // |x| = sig * 2^(exp - 52) with the implicit bit set.
    const std::uint64_t sig = (bits & ((std::uint64_t{1} << 52) - 1)) |
                              (std::uint64_t{1} << 52);
    const int exp = biased - 1023;
    const int m = mantissa_bits_;
    // Target quantum is 2^(max(exp, emin) - m); drop `shift` low bits of sig.
    // Host zeros and subnormals (biased == 0) are far below half the smallest
    // fp8 subnormal; shift 63 leaves n = 0 with no round-up for them.
    const int wanted = (exp > emin_ ? exp : emin_) - m - (exp - 52);
    const int shift = (biased == 0 || wanted > 63) ? 63 : wanted;
    std::uint64_t n = sig >> shift;
    const std::uint64_t rem = sig & ((std::uint64_t{1} << shift) - 1);
    const std::uint64_t half = std::uint64_t{1} << (shift - 1);
    n += static_cast<std::uint64_t>((rem > half) | ((rem == half) & (n & 1)));
    // Subnormal codes equal n (n == 2^m carries into the exponent field); a
    // normal carry to 2^(m+1) likewise bumps the exponent field.
    const std::uint64_t normal =
        (static_cast<std::uint64_t>(exp + bias_) << m) + n -
        (std::uint64_t{1} << m);
    std::uint64_t code = exp >= emin_ ? normal : n;
    code = code < max_code_ ? code : max_code_;
    code = biased == 0x7FF ? inf_code_ : code;
    return {static_cast<std::uint8_t>(sign | code)};
  }

 private:
  int mantissa_bits_;
  int bias_;
  int emin_;
  std::uint8_t max_code_;
  std::uint8_t inf_code_;
};

// Exact value of a code. Throws std::invalid_argument for NaN patterns.
double Decode(Fp8Code code, const Fp8Format& format);

// Decode(Encode(x / scale)) * scale, rounded once to a 32-bit real.
float QuantizeDequantize(float x, ScaleFactor scale, const Fp8Format& format);

// Worst-case |QuantizeDequantize(x, scale) - x| for a non-saturating scale:
// 2^-(m+1)|x| in the normal range, scale * 2^(1-bias-m-1) below it.
double QuantizationErrorBound(double x, ScaleFactor scale,
                              const Fp8Format& format);

// Decoded values of all 256 codes (NaN patterns hold quiet NaN).
class DecodeTable {
 public:
  explicit DecodeTable(const Fp8Format& format);
  float operator[](Fp8Code code) const { return values_[code.bits]; }

 private:
  std::array<float, 256> values_;
};

// Human-readable dump of all 256 codes, one per line: "0xHH  <value>".
std::string FormatCodeTable(const Fp8Format& format);

}  // namespace fpsattn

#endif  // FPSATTN_FP8_H_
