#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "marrr/linalg.hpp"
#include "marrr/simulate.hpp"

namespace marrr {

// One tidy metric value from one replicate.
struct MetricRow {
  std::string scenario;  // "<scenario>/<variant>"
  std::uint64_t seed = 0;
  std::string method;
  std::string metric;
  double value = 0.0;
};

enum class Study {
  table1a,        // aRRR against two-stage baselines
  table1b,        // mRRR against two-stage baselines
  table2,         // imputation error by method and missingness kind
  orthogonality,  // standardized versus orthogonalized covariates
};

std::string_view study_name(Study s);
Study parse_study(std::string_view name);
// Scenario generated by each study.
Scenario study_scenario(Study s);
Study study_for_scenario(Scenario s);
// Variant names accepted by preset() for the study, in reporting order.
std::vector<std::string> study_variants(Study s);

struct StudyOptions {
  Index replicates = 25;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::vector<std::string> variants;  // empty runs every variant
  bool full_scale = false;           // table2: 1000 x 6581, 30 cohorts, q = 50
  double missing_fraction = 0.05;     // table2
  Index rank_upper = 10;
  Index max_epochs = 200;
  Index impute_epochs = 30;
};

// Seed of replicate r is derive_seed(opts.seed, r); every variant of one
// replicate shares it.
std::vector<MetricRow> run_replicate(Study study, const std::string& variant, std::uint64_t seed,
                                     const StudyOptions& opts);
// Every requested variant for every replicate, run on `opts.jobs` threads.
// Rows come back in (replicate, variant) order regardless of thread count.
std::vector<MetricRow> run_study(Study study, const StudyOptions& opts);

// Simulation settings with the study's scale applied (full scale for table2 if asked).
SimulationSpec study_spec(Study study, const std::string& variant, std::uint64_t seed,
                          const StudyOptions& opts);

struct MetricSummary {
  std::string scenario;
  std::string method;
  std::string metric;
  double mean = 0.0;
  double sd = 0.0;
  Index count = 0;  // finite values only
};

// Means over replicates, in order of first appearance.
std::vector<MetricSummary> summarize(const std::vector<MetricRow>& rows);
// Throws IndexError when the combination is absent.
const MetricSummary& find_summary(const std::vector<MetricSummary>& s, std::string_view scenario,
                                  std::string_view method, std::string_view metric);

void write_metrics(const std::vector<MetricRow>& rows, const std::filesystem::path& path);
std::vector<MetricRow> read_metrics(const std::filesystem::path& path);
void write_summary(const std::vector<MetricSummary>& rows, const std::filesystem::path& path);

// Baselines used by the comparison tables. All return coefficients acting on
// the raw covariates.
// Least squares X Y^T (Y Y^T)^-1.
Matrix least_squares_coefficients(const Matrix& X, const Matrix& Y);
// Best rank-r approximation.
Matrix truncated_svd(const Matrix& M, Index rank);

}  // namespace marrr
