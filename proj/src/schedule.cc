// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "fpsattn/schedule.h"

#include <fmt/format.h>

#include <cmath>
#include <stdexcept>

namespace fpsattn {

std::string_view RegimeName(Regime r) {
  switch (r) {
    case Regime::kEarly:
      return "early";
    case Regime::kMid:
      return "mid";
    case Regime::kLate:
      return "late";
  }
  return "unknown";
}

const RegimeParams& ScheduleConfig::params(Regime r) const {
  switch (r) {
    case Regime::kEarly:
      return early;
    case Regime::kMid:
      return mid;
    case Regime::kLate:
      return late;
  }
  return late;
}

std::size_t EarlyEnd(const ScheduleConfig& config) {
  return static_cast<std::size_t>(
      std::floor(config.alpha1 * static_cast<double>(config.total_steps)));
}

std::size_t MidEnd(const ScheduleConfig& config) {
  return static_cast<std::size_t>(
      std::floor(config.alpha2 * static_cast<double>(config.total_steps)));
}

Regime RegimeAt(std::size_t t, const ScheduleConfig& config) {
  if (t < 1 || t > config.total_steps) {
    throw std::out_of_range(fmt::format("step {} outside [1, {}]", t,
                                        config.total_steps));
  }
  if (t <= EarlyEnd(config)) return Regime::kEarly;
  if (t <= MidEnd(config)) return Regime::kMid;
  return Regime::kLate;
}

RegimeParams ParamsAt(std::size_t t, const ScheduleConfig& config) {
  return config.params(RegimeAt(t, config));
}

std::vector<Violation> Validate(const ScheduleConfig& config) {
  std::vector<Violation> out;
  using K = Violation::Kind;
  const auto add = [&out](K kind, std::string msg) {
    out.push_back({kind, std::move(msg)});
  };

  if (config.total_steps < 1) add(K::kSteps, "steps: total_steps must be >= 1");
  const bool a1_ok = config.alpha1 > 0.0 && config.alpha1 < 1.0;
  const bool a2_ok = config.alpha2 > 0.0 && config.alpha2 < 1.0;
  if (!a1_ok || !a2_ok) {
    add(K::kAlphaRange,
        fmt::format("alpha range: need 0 < alpha1, alpha2 < 1 (got {}, {})",
                    config.alpha1, config.alpha2));
  }
  if (!(config.alpha1 < config.alpha2)) {
    add(K::kAlphaOrdering,
        fmt::format("alpha ordering: need alpha1 < alpha2 (got {} >= {})",
                    config.alpha1, config.alpha2));
  }

  for (const Regime r : {Regime::kEarly, Regime::kMid, Regime::kLate}) {
    const RegimeParams& p = config.params(r);
    if (p.tile.volume() == 0 || p.window.volume() == 0) {
      add(K::kInvalidParams,
          fmt::format("invalid params: {} regime has a zero tile or window "
                      "extent",
                      RegimeName(r)));
    }
  }

  const std::size_t g_coarse = config.early.tile.volume();
  const std::size_t g_inter = config.late.tile.volume();
  const std::size_t g_fine = config.mid.tile.volume();
  if (!(g_coarse > g_inter && g_inter > g_fine)) {
    add(K::kGranularityOrdering,
        fmt::format("granularity ordering: need tile volume early > late > "
                    "mid (got {}, {}, {})",
                    g_coarse, g_inter, g_fine));
  }
  const std::size_t w_dense = config.mid.window.volume();
  const std::size_t w_medium = config.late.window.volume();
  const std::size_t w_sparse = config.early.window.volume();
  if (!(w_dense > w_medium && w_medium > w_sparse)) {
    add(K::kDensityOrdering,
        fmt::format("density ordering: need window volume mid > late > "
                    "early (got {}, {}, {})",
                    w_dense, w_medium, w_sparse));
  }
  return out;
}

}  // namespace fpsattn
