// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment runner behind the command-line tool: synthetic inputs, the
// per-step schedule loop, ablation sweeps, and CSV output.

#ifndef FPSATTN_EXPERIMENT_H_
#define FPSATTN_EXPERIMENT_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fpsattn/attention.h"
#include "fpsattn/grid.h"
#include "fpsattn/metrics.h"
#include "fpsattn/schedule.h"
#include "fpsattn/sparsity.h"

namespace fpsattn {

struct InputDistribution {
  enum class Kind { kGaussian, kUniform };
  Kind kind = Kind::kGaussian;
  double sigma = 1.0;
  double lo = -1.0;
  double hi = 1.0;
  // Gaussian with a per-channel scale drawn log-uniform in [0.1, 10],
  // mimicking activation outlier channels.
  bool heavy_tail = false;
};

enum class TensorTag : std::uint32_t { kQuery = 1, kKey = 2, kValue = 3 };

struct ExperimentConfig {
  GridShape grid{24, 32, 32, 64};
  std::uint64_t seed = 0;
  ScheduleConfig schedule;  // schedule.total_steps is the step count D
  std::string format = "e4m3";
  std::size_t heads = 1;
  InputDistribution distribution;
  bool passthrough = false;
  std::size_t threads = 1;
};

// Every problem with the config; empty means runnable.
std::vector<std::string> ValidateExperiment(const ExperimentConfig& config);

// L x d activations in row-major token order. Element (token, c) is a pure
// function of (seed, step, head, tag, token * d + c).
Matrix GenTensor(const ExperimentConfig& config, std::size_t step,
                 std::size_t head, TensorTag tag);

// Q, K, V for one (step, head), reordered tile-contiguously for `map`.
AttentionInputs GenInputs(const ExperimentConfig& config, std::size_t step,
                          std::size_t head, const TileMap& map);

struct CsvRow {
  std::string regime;
  TileScheme tile;
  WindowSpec window;
  StepMetrics metrics;
};

std::string CsvHeader();
std::string FormatCsvRow(const CsvRow& row);
std::string ToCsv(const std::vector<CsvRow>& rows);

// Metrics of FpsForward against SparseReference for one step's parameters,
// averaged over heads.
CsvRow EvaluateStep(const ExperimentConfig& config, std::size_t step,
                    const RegimeParams& params);

// One row per schedule step. Throws std::invalid_argument listing every
// validation problem.
std::vector<CsvRow> RunExperiment(const ExperimentConfig& config);

enum class SweepAxis { kTile, kWindow };

struct SweepResult {
  std::vector<CsvRow> rows;
  std::vector<std::string> errors;  // invalid values, skipped
};

// Evaluates step 1 once per value, holding the mid regime's other parameter
// fixed. Throws std::logic_error if density decreases between nested windows.
SweepResult Sweep(const ExperimentConfig& config, SweepAxis axis,
                  const std::vector<Index3>& values);

}  // namespace fpsattn

#endif  // FPSATTN_EXPERIMENT_H_
