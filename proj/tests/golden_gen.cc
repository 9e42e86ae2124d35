// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0

// Writes the golden CSV files from the scalar oracle pipeline.
//   fpsattn_golden <output dir> [smoke|small|full]...

#include <fmt/format.h>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "golden_configs.h"
#include "oracle/oracle.h"

namespace {

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  fmt::print("wrote {}\n", path);
}

std::string Header() {
  return "step,regime,tile_t,tile_h,tile_w,win_t,win_h,win_w,density,"
         "flops_dense,flops_sparse,cosine_sim,mse,snr_db\n";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace fpsattn;
  if (argc < 2) {
    fmt::print(stderr, "usage: {} <output dir> [smoke|small|full]...\n",
               argv[0]);
    return 2;
  }
  const std::string dir = argv[1];
  std::vector<std::string> which(argv + 2, argv + argc);
  if (which.empty()) which = {"smoke", "small", "full"};
  for (const std::string& w : which) {
    if (w == "smoke") {
      WriteFile(dir + "/smoke.csv", oracle::ScheduleCsv(golden::SmokeConfig()));
    } else if (w == "small") {
      WriteFile(dir + "/small_fidelity.csv",
                Header() + oracle::EvaluateRow(golden::SmallFidelityConfig(), 1,
                                               "mid", golden::kSmallFidelityTile,
                                               golden::kSmallFidelityWindow) +
                    "\n");
    } else if (w == "full") {
      WriteFile(dir + "/full_fidelity.csv",
                Header() + oracle::EvaluateRow(golden::FullFidelityConfig(), 1,
                                               "mid", golden::kFullFidelityTile,
                                               golden::kFullFidelityWindow) +
                    "\n");
    } else {
      fmt::print(stderr, "unknown golden set: {}\n", w);
      return 2;
    }
  }
  return 0;
}
