// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0
//
// fpsattn: experiment runner for joint FP8 tile quantization and
// sliding-tile sparse attention.
//
//   fpsattn run            per-step metrics over the schedule
//   fpsattn sweep          tile or window ablation at step 1
//   fpsattn mask-dump      block mask, one line per query tile
//   fpsattn quantize-check fp8 code table and round-trip check
//
// Every option can also be set in a TOML/INI file passed with --config;
// command-line flags take precedence.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fpsattn/experiment.h"
#include "fpsattn/fp8.h"
#include "fpsattn/sparsity.h"

namespace {

using fpsattn::Index3;

std::vector<std::size_t> ToVec(const Index3& i) { return {i.t, i.h, i.w}; }
Index3 ToIndex3(const std::vector<std::size_t>& v) { return {v[0], v[1], v[2]}; }

Index3 ParseTriple(const std::string& text) {
  std::vector<std::size_t> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(item, &pos);
    if (pos != item.size()) throw std::invalid_argument(item);
    parts.push_back(static_cast<std::size_t>(v));
  }
  if (parts.size() != 3) {
    throw std::invalid_argument(
        fmt::format("expected three comma-separated counts, got '{}'", text));
  }
  return ToIndex3(parts);
}

void Emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot open '{}'", path));
  out << text;
}

struct TripleOption {
  std::vector<std::size_t> values;
  CLI::Option* Add(CLI::App& app, const std::string& name,
                   const std::string& help, const Index3& def) {
    values = ToVec(def);
    return app.add_option(name, values, help)
        ->delimiter(',')
        ->expected(3)
        ->capture_default_str();
  }
  Index3 get() const { return ToIndex3(values); }
};

int Fail(const std::string& msg) {
  std::cerr << "fpsattn: " << msg << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint FP8 tile quantization + sliding-tile sparse attention "
               "experiments"};
  app.set_config("--config", "", "TOML/INI file with option values");
  app.require_subcommand(1);
  app.fallthrough();

  fpsattn::ExperimentConfig cfg;
  fpsattn::ScheduleConfig& sched = cfg.schedule;

  TripleOption grid_opt, early_tile, early_win, mid_tile, mid_win, late_tile,
      late_win;
  grid_opt.Add(app, "--grid", "Token grid T,H,W", cfg.grid.dims());
  app.add_option("--d-model", cfg.grid.d_model, "Feature dimension d")
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "Generator seed")->capture_default_str();
  app.add_option("--steps", sched.total_steps, "Denoising steps D")
      ->capture_default_str();
  app.add_option("--heads", cfg.heads, "Attention heads")->capture_default_str();
  app.add_option("--format", cfg.format, "FP8 format for Q/K/V")
      ->check(CLI::IsMember({"e4m3", "e5m2"}))
      ->capture_default_str();
  app.add_option("--threads", cfg.threads, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("--passthrough", cfg.passthrough, "Disable all quantization");
  app.add_option("--alpha1", sched.alpha1, "Early/mid threshold fraction")
      ->capture_default_str();
  app.add_option("--alpha2", sched.alpha2, "Mid/late threshold fraction")
      ->capture_default_str();
  early_tile.Add(app, "--early-tile", "Early tile T,H,W", sched.early.tile.dims());
  early_win.Add(app, "--early-window", "Early window (tiles)",
                sched.early.window.dims());
  mid_tile.Add(app, "--mid-tile", "Mid tile T,H,W", sched.mid.tile.dims());
  mid_win.Add(app, "--mid-window", "Mid window (tiles)", sched.mid.window.dims());
  late_tile.Add(app, "--late-tile", "Late tile T,H,W", sched.late.tile.dims());
  late_win.Add(app, "--late-window", "Late window (tiles)",
               sched.late.window.dims());

  std::string dist = "gaussian";
  app.add_option("--dist", dist, "Input distribution")
      ->check(CLI::IsMember({"gaussian", "uniform"}))
      ->capture_default_str();
  app.add_option("--sigma", cfg.distribution.sigma, "Gaussian sigma")
      ->capture_default_str();
  app.add_option("--lo", cfg.distribution.lo, "Uniform lower bound")
      ->capture_default_str();
  app.add_option("--hi", cfg.distribution.hi, "Uniform upper bound")
      ->capture_default_str();
  app.add_flag("--heavy-tail", cfg.distribution.heavy_tail,
               "Per-channel log-uniform scale in [0.1, 10]");
  std::string output;
  app.add_option("-o,--output", output, "Output path (default stdout)");

  CLI::App* run = app.add_subcommand("run", "Run the full schedule experiment");

  CLI::App* sweep = app.add_subcommand("sweep", "Ablation sweep at step 1");
  std::string axis;
  std::vector<std::string> values;
  sweep->add_option("--axis", axis, "Swept parameter")
      ->required()
      ->check(CLI::IsMember({"tile", "window"}));
  sweep->add_option("--values", values, "Values as t,h,w (space separated)");

  CLI::App* mask_dump = app.add_subcommand("mask-dump", "Print a block mask");
  TripleOption dump_tile, dump_win;
  dump_tile.Add(*mask_dump, "--tile", "Tile T,H,W", sched.mid.tile.dims());
  dump_win.Add(*mask_dump, "--window", "Window (tiles)",
               sched.mid.window.dims());

  CLI::App* qcheck =
      app.add_subcommand("quantize-check", "Print the fp8 code table");

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.grid.t_frames = grid_opt.get().t;
    cfg.grid.height = grid_opt.get().h;
    cfg.grid.width = grid_opt.get().w;
    sched.early = {{early_tile.values[0], early_tile.values[1],
                    early_tile.values[2]},
                   {early_win.values[0], early_win.values[1],
                    early_win.values[2]}};
    sched.mid = {{mid_tile.values[0], mid_tile.values[1], mid_tile.values[2]},
                 {mid_win.values[0], mid_win.values[1], mid_win.values[2]}};
    sched.late = {{late_tile.values[0], late_tile.values[1],
                   late_tile.values[2]},
                  {late_win.values[0], late_win.values[1], late_win.values[2]}};
    cfg.distribution.kind = dist == "uniform"
                                ? fpsattn::InputDistribution::Kind::kUniform
                                : fpsattn::InputDistribution::Kind::kGaussian;

    if (*run) {
      const auto errors = fpsattn::ValidateExperiment(cfg);
      if (!errors.empty()) {
        for (const auto& e : errors) std::cerr << "fpsattn: " << e << "\n";
        return 1;
      }
      Emit(fpsattn::ToCsv(fpsattn::RunExperiment(cfg)), output);
      return 0;
    }

    if (*sweep) {
      std::vector<Index3> parsed;
      for (const std::string& v : values) parsed.push_back(ParseTriple(v));
      const auto result = fpsattn::Sweep(
          cfg, axis == "tile" ? fpsattn::SweepAxis::kTile
                              : fpsattn::SweepAxis::kWindow,
          parsed);
      for (const auto& e : result.errors) std::cerr << "fpsattn: " << e << "\n";
      Emit(fpsattn::ToCsv(result.rows), output);
      return result.errors.empty() ? 0 : 2;
    }

    if (*mask_dump) {
      const Index3 t = dump_tile.get();
      const Index3 w = dump_win.get();
      const fpsattn::TileMap map =
          fpsattn::BuildTileMap(cfg.grid, {t.t, t.h, t.w});
      const fpsattn::BlockMask mask =
          fpsattn::BuildBlockMask({w.t, w.h, w.w}, map.tile_grid_dims);
      Emit(fpsattn::FormatMaskDump(mask), output);
      return 0;
    }

    if (*qcheck) {
      const fpsattn::Fp8Format format = fpsattn::FormatFromName(cfg.format);
      std::string text = fpsattn::FormatCodeTable(format);
      int checked = 0;
      for (int c = 0; c < 256; ++c) {
        const fpsattn::Fp8Code code{static_cast<std::uint8_t>(c)};
        if (fpsattn::IsNan(code, format)) continue;
        if (fpsattn::Encode(fpsattn::Decode(code, format), format) != code) {
          return Fail(fmt::format("round trip failed for code 0x{:02X}", c));
        }
        ++checked;
      }
      text += fmt::format("# round trip ok for {} non-NaN codes\n", checked);
      Emit(text, output);
      return 0;
    }
  } catch (const std::exception& e) {
    return Fail(e.what());
  }
  return 0;
}
