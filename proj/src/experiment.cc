// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "fpsattn/experiment.h"

#include <fmt/format.h>

#include <cmath>
#include <stdexcept>

#include "fpsattn/fp8.h"
#include "fpsattn/philox.h"

namespace fpsattn {
namespace {

// Tag for per-channel heavy-tail scales, disjoint from TensorTag values.
constexpr std::uint32_t kChannelScaleTagBase = 0x100;

std::string DivisibilityError(const GridShape& grid, const TileScheme& tile,
                              std::string_view what) {
  try {
    BuildTileMap(grid, tile);
  } catch (const std::invalid_argument& e) {
    return fmt::format("{}: {}", what, e.what());
  }
  return {};
}

}  // namespace

std::vector<std::string> ValidateExperiment(const ExperimentConfig& config) {
  std::vector<std::string> errors;
  try {
    config.grid.Validate();
  } catch (const std::invalid_argument& e) {
    errors.emplace_back(e.what());
    return errors;
  }
  if (config.heads < 1) errors.emplace_back("heads must be >= 1");
  if (config.threads < 1) errors.emplace_back("threads must be >= 1");
  try {
    FormatFromName(config.format);
  } catch (const std::invalid_argument& e) {
    errors.emplace_back(e.what());
  }
  const InputDistribution& dist = config.distribution;
  if (dist.kind == InputDistribution::Kind::kGaussian && !(dist.sigma > 0.0)) {
    errors.emplace_back("gaussian sigma must be > 0");
  }
  if (dist.kind == InputDistribution::Kind::kUniform && !(dist.lo < dist.hi)) {
    errors.emplace_back("uniform bounds need lo < hi");
  }
  for (const Violation& v : Validate(config.schedule)) {
    errors.push_back(v.message);
  }
  for (const Regime r : {Regime::kEarly, Regime::kMid, Regime::kLate}) {
    const RegimeParams& p = config.schedule.params(r);
    if (p.tile.volume() == 0) continue;
    std::string err = DivisibilityError(
        config.grid, p.tile, fmt::format("{} regime tile", RegimeName(r)));
    if (!err.empty()) errors.push_back(std::move(err));
  }
  return errors;
}

Matrix GenTensor(const ExperimentConfig& config, std::size_t step,
                 std::size_t head, TensorTag tag) {
  const CounterRng rng(config.seed);
  const std::size_t n = config.grid.tokens();
  const std::size_t d = config.grid.d_model;
  const auto s = static_cast<std::uint32_t>(step);
  const auto h = static_cast<std::uint32_t>(head);
  const auto t = static_cast<std::uint32_t>(tag);
  const InputDistribution& dist = config.distribution;

  std::vector<double> channel_scale(d, 1.0);
  if (dist.kind == InputDistribution::Kind::kGaussian && dist.heavy_tail) {
    // log-uniform in [0.1, 10]
    for (std::size_t c = 0; c < d; ++c) {
      const double u = rng.Uniform(s, h, kChannelScaleTagBase + t, c);
      channel_scale[c] = std::pow(10.0, 2.0 * u - 1.0);
    }
  }

  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      const std::uint64_t index = i * d + c;
      double x;
      if (dist.kind == InputDistribution::Kind::kUniform) {
        x = dist.lo + (dist.hi - dist.lo) * rng.Uniform(s, h, t, index);
      } else {
        x = dist.sigma * channel_scale[c] * rng.Gaussian(s, h, t, index);
      }
      m(i, c) = static_cast<float>(x);
    }
  }
  return m;
}

AttentionInputs GenInputs(const ExperimentConfig& config, std::size_t step,
                          std::size_t head, const TileMap& map) {
  const std::vector<std::size_t> order = TileContiguousOrder(map);
  AttentionInputs in;
  in.q = GatherRows(GenTensor(config, step, head, TensorTag::kQuery), order);
  in.k = GatherRows(GenTensor(config, step, head, TensorTag::kKey), order);
  in.v = GatherRows(GenTensor(config, step, head, TensorTag::kValue), order);
  in.map = map;
  return in;
}

std::string CsvHeader() {
  return "step,regime,tile_t,tile_h,tile_w,win_t,win_h,win_w,density,"
         "flops_dense,flops_sparse,cosine_sim,mse,snr_db";
}

std::string FormatCsvRow(const CsvRow& row) {
  const StepMetrics& m = row.metrics;
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}", m.step,
                     row.regime, row.tile.tile_t, row.tile.tile_h,
                     row.tile.tile_w, row.window.win_t, row.window.win_h,
                     row.window.win_w, m.density, m.flops_dense,
                     m.flops_sparse, m.cosine_sim, m.mse, m.snr_db);
}

std::string ToCsv(const std::vector<CsvRow>& rows) {
  std::string out = CsvHeader() + "\n";
  for (const CsvRow& r : rows) out += FormatCsvRow(r) + "\n";
  return out;
}

CsvRow EvaluateStep(const ExperimentConfig& config, std::size_t step,
                    const RegimeParams& params) {
  const TileMap map = BuildTileMap(config.grid, params.tile);
  const BlockMask mask = BuildBlockMask(params.window, map.tile_grid_dims);

  FpsConfig fps;
  fps.format = FormatFromName(config.format);
  fps.window = params.window;
  fps.passthrough = config.passthrough;
  fps.threads = config.threads;
  const float softmax_scale = DefaultSoftmaxScale(config.grid.d_model);

  CsvRow row;
  row.tile = params.tile;
  row.window = params.window;
  StepMetrics& m = row.metrics;
  m.step = step;
  m.density = Density(mask);
  m.flops_dense = FlopsDense(map.tokens(), config.grid.d_model);
  m.flops_sparse = FlopsSparse(map.tokens(), config.grid.d_model, m.density);
  m.cosine_sim = 0.0;
  m.mse = 0.0;
  m.snr_db = 0.0;

  for (std::size_t head = 0; head < config.heads; ++head) {
    const AttentionInputs in = GenInputs(config, step, head, map);
    const Matrix reference =
        SparseReference(in, mask, softmax_scale, config.threads);
    const Matrix approx = FpsForward(in, fps);
    m.cosine_sim += CosineSimilarity(approx.flat(), reference.flat());
    m.mse += Mse(approx.flat(), reference.flat());
    m.snr_db += SnrDb(reference.flat(), approx.flat());
  }
  const auto heads = static_cast<double>(config.heads);
  m.cosine_sim /= heads;
  m.mse /= heads;
  m.snr_db /= heads;
  return row;
}

std::vector<CsvRow> RunExperiment(const ExperimentConfig& config) {
  const std::vector<std::string> errors = ValidateExperiment(config);
  if (!errors.empty()) {
    std::string msg = "invalid experiment config:";
    for (const std::string& e : errors) msg += "\n  " + e;
    throw std::invalid_argument(msg);
  }
  std::vector<CsvRow> rows;
  for (std::size_t t = 1; t <= config.schedule.total_steps; ++t) {
    const Regime regime = RegimeAt(t, config.schedule);
    CsvRow row = EvaluateStep(config, t, config.schedule.params(regime));
    row.regime = std::string(RegimeName(regime));
    rows.push_back(std::move(row));
  }
  return rows;
}

SweepResult Sweep(const ExperimentConfig& config, SweepAxis axis,
                  const std::vector<Index3>& values) {
  SweepResult result;
  std::vector<std::pair<WindowSpec, double>> seen_windows;
  std::size_t index = 0;
  for (const Index3& value : values) {
    ++index;
    RegimeParams params = config.schedule.mid;
    if (axis == SweepAxis::kTile) {
      params.tile = {value.t, value.h, value.w};
    } else {
      params.window = {value.t, value.h, value.w};
    }
    CsvRow row;
    try {
      row = EvaluateStep(config, 1, params);
    } catch (const std::exception& e) {
      result.errors.push_back(
          fmt::format("value {}: {}", ToString(value), e.what()));
      continue;
    }
    row.metrics.step = index;
    row.regime = axis == SweepAxis::kTile ? "sweep-tile" : "sweep-window";
    if (axis == SweepAxis::kWindow) {
      for (const auto& [w, density] : seen_windows) {
        const bool inner = w.win_t <= params.window.win_t &&
                           w.win_h <= params.window.win_h &&
                           w.win_w <= params.window.win_w;
        const bool outer = w.win_t >= params.window.win_t &&
                           w.win_h >= params.window.win_h &&
                           w.win_w >= params.window.win_w;
        if ((inner && density > row.metrics.density) ||
            (outer && density < row.metrics.density)) {
          throw std::logic_error(fmt::format(
              "density not monotone between nested windows {} and {}",
              ToString(w.dims()), ToString(params.window.dims())));
        }
      }
      seen_windows.emplace_back(params.window, row.metrics.density);
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

}  // namespace fpsattn
