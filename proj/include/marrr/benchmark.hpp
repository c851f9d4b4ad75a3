#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "marrr/design.hpp"
#include "marrr/modules_config.hpp"
#include "marrr/solver.hpp"

namespace marrr {

struct BenchmarkOptions {
  bool full_scale = false;  // 1000 x 6581, 30 cohorts, q = 50, 31 + 31 modules
  Index epochs = 5;          // timed epochs per algorithm
  Index rank_cap = 20;       // factored-update rank upper bound
  std::vector<Algorithm> algorithms{Algorithm::factored_als, Algorithm::svt_als};
  std::uint64_t seed = 1;
};

struct BenchmarkRow {
  std::string configuration;
  Algorithm algorithm = Algorithm::svt_als;
  Index p = 0, q = 0, n = 0, J = 0, K = 0, L = 0;
  Index epochs = 0;
  double seconds = 0.0;
  double seconds_per_epoch = 0.0;
};

// Times a fixed number of epochs of each requested algorithm on a prepared
// design; convergence checks are disabled so every epoch runs.
std::vector<BenchmarkRow> run_benchmark(const std::string& configuration, const Design& d,
                                        const PenaltySet& pen, const BenchmarkOptions& opts);
// Simulated global/individual data at toy (100 x 300, 5 cohorts) or full
// scale.
std::vector<BenchmarkRow> run_benchmark(const BenchmarkOptions& opts);

void write_benchmark(const std::vector<BenchmarkRow>& rows, const std::filesystem::path& path);

}  // namespace marrr
