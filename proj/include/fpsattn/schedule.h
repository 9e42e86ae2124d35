// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Denoising-step-aware schedule S(t) = [tile granularity, sparsity window].
//
//   t <= floor(a1 * D)                      early: coarse tiles, sparse window
//   floor(a1 * D) < t <= floor(a2 * D)      mid:   fine tiles, dense window
//   t > floor(a2 * D)                       late:  intermediate tiles, medium

#ifndef FPSATTN_SCHEDULE_H_
#define FPSATTN_SCHEDULE_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "fpsattn/grid.h"
#include "fpsattn/sparsity.h"

namespace fpsattn {

enum class Regime { kEarly, kMid, kLate };

std::string_view RegimeName(Regime r);

struct RegimeParams {
  TileScheme tile;
  WindowSpec window;
  bool operator==(const RegimeParams&) const = default;
};

struct ScheduleConfig {
  double alpha1 = 0.2;
  double alpha2 = 0.7;
  RegimeParams early{{24, 32, 32}, {3, 3, 1}};
  RegimeParams mid{{6, 8, 8}, {6, 6, 6}};
  RegimeParams late{{12, 16, 16}, {6, 6, 1}};
  std::size_t total_steps = 50;

  const RegimeParams& params(Regime r) const;
};

// floor(a1 * D) and floor(a2 * D).
std::size_t EarlyEnd(const ScheduleConfig& config);
std::size_t MidEnd(const ScheduleConfig& config);

// Throws std::out_of_range unless 1 <= t <= total_steps.
Regime RegimeAt(std::size_t t, const ScheduleConfig& config);
RegimeParams ParamsAt(std::size_t t, const ScheduleConfig& config);

struct Violation {
  enum class Kind {
    kAlphaRange,
    kAlphaOrdering,
    kGranularityOrdering,
    kDensityOrdering,
    kInvalidParams,
    kSteps,
  };
  Kind kind;
  std::string message;  // starts with the kind's name, e.g. "alpha ordering"
};

// All violations; empty means valid.
std::vector<Violation> Validate(const ScheduleConfig& config);

}  // namespace fpsattn

#endif  // FPSATTN_SCHEDULE_H_
