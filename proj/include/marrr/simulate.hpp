#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "marrr/dataset.hpp"
#include "marrr/linalg.hpp"
#include "marrr/modules_config.hpp"

namespace marrr {

// Seeds for replicate `index` of a run started from `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);
Matrix standard_normal(Index rows, Index cols, std::mt19937_64& rng);
// Sample standard deviation of all entries.
double entry_sd(const Matrix& m);

enum class Scenario {
  aRRR_single,          // one cohort, B Y + S + E
  mRRR_two_cohort,      // shared plus cohort-specific coefficients, no S
  global_individual,    // global and per-cohort B and S modules
  orthogonality_study,  // aRRR (J = 1) or global/individual maRRR (J > 1)
};

std::string_view scenario_name(Scenario s);
Scenario parse_scenario(std::string_view name);

// signal_sds by scenario:
//   aRRR_single, orthogonality_study: {sd(B Y), sd(S)} per module term
//   mRRR_two_cohort: {a, b} multiplying the shared and specific coefficients
//   global_individual: {a, b, c, d} for global B Y, global S, individual
//     B Y and individual S; each term is first scaled to overall sd
//     sqrt(n_module / n) across the full matrix
struct SimulationSpec {
  Scenario scenario = Scenario::aRRR_single;
  Index p = 100;
  Index q = 10;
  std::vector<Index> n{100};
  Index rank_b = 1;
  Index rank_s = 5;
  std::vector<double> signal_sds{1.0, 1.0};
  bool orthogonalize_y_in_generation = false;
  std::uint64_t seed = 0;

  void validate() const;
};

// Named variants used by the reproduction studies:
//   aRRR_single, mRRR_two_cohort: "<ratio>_r<R>" with ratio 10, 1 or 0.1
//   global_individual: large_B, large_S, large_Bi, large_Si
//   orthogonality_study: "<ratio>_r<R>" with optional "_j2" and "_orthgen"
SimulationSpec preset(Scenario scenario, std::string_view which, std::uint64_t seed);

struct SimulatedTruth {
  MultiCohortDataset dataset;
  std::vector<Matrix> true_B;  // p x q, acting on the raw covariates
  std::vector<Matrix> true_S;  // p x n
  Matrix true_E;
  IndicatorConfig cfg;
  Matrix signal;  // X - E
};

SimulatedTruth generate(const SimulationSpec& spec);

// round(fraction * cells) random entries, whole columns, or whole rows within
// cohorts. Every cohort keeps observed data; ConfigError when it cannot.
MissingMask make_missing(const MultiCohortDataset& ds, double fraction, MaskKind kind,
                         std::uint64_t seed);

// ||truth - estimate||_F^2 / ||truth||_F^2
double relative_mse(const Matrix& truth, const Matrix& estimate);
// Sum of singular values true_rank+1..upper over the sum of the first
// true_rank.
double rank_sum_ratio(const Matrix& estimate, Index true_rank, Index upper);
// Limit of a spiked singular value: sqrt(1 + s^2 + c + c / s^2) above the
// detection threshold c^(1/4), 1 + sqrt(c) at or below it.
double expected_inflated_singular_value(double sigma_B, double c);

}  // namespace marrr
