// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "fpsattn/fp8.h"

#include <fmt/format.h>

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fpsattn {

double Fp8Format::min_subnormal() const {
  return std::ldexp(1.0, 1 - exponent_bias - mantissa_bits);
}

std::uint8_t Fp8Format::max_code() const {
  // E4M3 reserves only S.1111.111 for NaN; E5M2 reserves the whole top
  // exponent for Inf/NaN.
  const int top_exp = (1 << exponent_bits) - 1;
  const int mant_all = (1 << mantissa_bits) - 1;
  return has_inf ? static_cast<std::uint8_t>(((top_exp - 1) << mantissa_bits) |
                                             mant_all)
                 : static_cast<std::uint8_t>((top_exp << mantissa_bits) |
                                             (mant_all - 1));
}

Fp8Format FormatFromName(std::string_view name) {
  if (name == "e4m3") return Fp8Format::E4M3();
  if (name == "e5m2") return Fp8Format::E5M2();
  throw std::invalid_argument(
      fmt::format("unknown fp8 format '{}' (expected e4m3 or e5m2)", name));
}

bool IsNan(Fp8Code code, const Fp8Format& format) {
  const int mag = code.bits & 0x7F;
  const int top_exp = (1 << format.exponent_bits) - 1;
  const int mant_mask = (1 << format.mantissa_bits) - 1;
  const int exp = mag >> format.mantissa_bits;
  const int mant = mag & mant_mask;
  if (format.has_inf) return exp == top_exp && mant != 0;
  return exp == top_exp && mant == mant_mask;
}

ScaleFactor ComputeScale(std::span<const float> values,
                         const Fp8Format& format) {
  if (values.empty()) {
    throw std::invalid_argument("ComputeScale: empty block");
  }
  float amax = 0.0f;
  for (const float v : values) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("ComputeScale: non-finite value in block");
    }
    amax = std::max(amax, std::fabs(v));
  }
  if (amax == 0.0f) return ScaleFactor{1.0};
  return ScaleFactor{static_cast<double>(amax) / format.max_value};
}

Fp8Encoder::Fp8Encoder(const Fp8Format& format)
    : mantissa_bits_(format.mantissa_bits),
      bias_(format.exponent_bias),
      emin_(1 - format.exponent_bias),
      max_code_(format.max_code()),
      inf_code_(format.has_inf ? static_cast<std::uint8_t>(
                                     ((1 << format.exponent_bits) - 1)
                                     << format.mantissa_bits)
                               : format.max_code()) {}

Fp8Code Fp8Encoder::operator()(double x) const {
  if (std::isnan(x)) throw std::invalid_argument("Encode: NaN input");
  return EncodeUnchecked(x);
}

Fp8Code Encode(double x, const Fp8Format& format) {
  return Fp8Encoder(format)(x);
}

double Decode(Fp8Code code, const Fp8Format& format) {
  if (IsNan(code, format)) {
    throw std::invalid_argument(
        fmt::format("Decode: NaN code 0x{:02X} for {}", code.bits, format.name));
  }
  const int m = format.mantissa_bits;
  const int mag = code.bits & 0x7F;
  const int exp_field = mag >> m;
  const int mant = mag & ((1 << m) - 1);
  const double sign = (code.bits & 0x80) ? -1.0 : 1.0;
  if (format.has_inf && exp_field == (1 << format.exponent_bits) - 1) {
    return sign * std::numeric_limits<double>::infinity();
  }
  if (exp_field == 0) {
    return sign * std::ldexp(static_cast<double>(mant),
                             1 - format.exponent_bias - m);
  }
  return sign * std::ldexp(static_cast<double>(mant + (1 << m)),
                           exp_field - format.exponent_bias - m);
}

float QuantizeDequantize(float x, ScaleFactor scale, const Fp8Format& format) {
  if (!(scale.value > 0.0)) {
    throw std::invalid_argument("QuantizeDequantize: scale must be > 0");
  }
  const Fp8Code code = Encode(static_cast<double>(x) / scale.value, format);
  return static_cast<float>(Decode(code, format) * scale.value);
}

double QuantizationErrorBound(double x, ScaleFactor scale,
                              const Fp8Format& format) {
  const double scaled = std::fabs(x) / scale.value;
  if (scaled >= format.min_normal) {
    return std::ldexp(std::fabs(x), -(format.mantissa_bits + 1));
  }
  return scale.value *
         std::ldexp(1.0, -format.exponent_bias - format.mantissa_bits);
}

DecodeTable::DecodeTable(const Fp8Format& format) {
  for (int c = 0; c < 256; ++c) {
    const Fp8Code code{static_cast<std::uint8_t>(c)};
    values_[c] = IsNan(code, format)
                     ? std::numeric_limits<float>::quiet_NaN()
                     : static_cast<float>(Decode(code, format));
  }
}

std::string FormatCodeTable(const Fp8Format& format) {
  std::string out = fmt::format("# {} code table: code value\n", format.name);
  for (int c = 0; c < 256; ++c) {
    const Fp8Code code{static_cast<std::uint8_t>(c)};
    if (IsNan(code, format)) {
      out += fmt::format("0x{:02X} nan\n", c);
    } else {
      out += fmt::format("0x{:02X} {}\n", c, Decode(code, format));
    }
  }
  return out;
}

}  // namespace fpsattn
