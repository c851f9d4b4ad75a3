#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "marrr/dataset.hpp"
#include "marrr/linalg.hpp"

namespace marrr {

using IndicatorMatrix = Eigen::MatrixXi;

// Module membership. C_Y is J x K (covariate modules), C_S is J x L
// (auxiliary modules); entry (j, m) is 1 when cohort j belongs to module m.
struct IndicatorConfig {
  IndicatorMatrix C_Y;
  IndicatorMatrix C_S;

  Index J() const { return std::max(C_Y.rows(), C_S.rows()); }
  Index K() const { return C_Y.cols(); }
  Index L() const { return C_S.cols(); }

  // Throws ConfigError unless entries are 0/1, no column is empty, neither
  // matrix repeats a column, and both have J rows.
  void validate(Index J) const;
};

IndicatorConfig make_config(const IndicatorMatrix& C_Y, const IndicatorMatrix& C_S);

// Cohorts listed in column `col` of an indicator matrix.
std::vector<Index> module_cohorts(const IndicatorMatrix& C, Index col);
// Column ranges of the concatenated matrix covered by column `col`.
std::vector<ColumnRange> module_ranges(const IndicatorMatrix& C, Index col,
                                       const std::vector<ColumnRange>& cohorts);

struct PenaltySet {
  std::vector<double> lambda_B;
  std::vector<double> lambda_S;

  // Throws ConfigError on count mismatch or a non-positive weight.
  void validate(Index K, Index L) const;
};

// lambda_B = sqrt(p) + sqrt(q); lambda_S = sqrt(p) + sqrt(samples in module).
// Assumes unit noise variance, as arranged by preprocessing.
PenaltySet rmt_penalties(Index p, Index q, const std::vector<Index>& cohort_sizes,
                         const IndicatorConfig& cfg);
PenaltySet rmt_penalties(const MultiCohortDataset& ds, const IndicatorConfig& cfg);

struct Prop1Violation {
  int condition = 0;          // 1..4
  Index module = 0;           // covariate module for 1-2, auxiliary module for 3-4
  std::vector<Index> others;  // covering or containing modules
  double lhs = 0.0;           // penalty of `module`
  double rhs = 0.0;           // bound it must stay strictly below
  std::string message;
};

// Penalty conditions that keep every module estimable. `y_nuclear_norms[k]`
// is the nuclear norm of the covariate block of module k. Covers are searched
// exhaustively when at most 16 modules fit inside the target, otherwise among
// covers of up to three modules.
std::vector<Prop1Violation> check_prop1(const IndicatorConfig& cfg, const PenaltySet& pen,
                                        const std::vector<double>& y_nuclear_norms);
// Uses the raw covariates of `ds` restricted to each module's cohorts.
std::vector<Prop1Violation> check_prop1(const IndicatorConfig& cfg, const PenaltySet& pen,
                                        const MultiCohortDataset& ds);

// Every non-empty cohort subset, largest first, ties in lexicographic order of
// member indices; C_Y = C_S. Throws ConfigError for J > 10.
IndicatorConfig enumerate_modules(Index J, Index max_modules);

// Greedy auxiliary-module search on preprocessed X. Each module starts empty
// and takes the cohort that most increases the one-pass soft-threshold gain
// on the current residual, until no cohort increases it. The residual is then
// reduced by the module's thresholded fit. Empty and repeated modules are
// dropped; the returned config has C_Y = C_S.
IndicatorConfig forward_select(const Matrix& X, const std::vector<ColumnRange>& cohorts,
                               Index L_max);

// CSV with a cohort_id column then one column per module named Y<k> or S<l>.
// When `cohort_ids` is non-empty rows are matched to it by id.
IndicatorConfig load_config(const std::filesystem::path& path,
                            const std::vector<std::string>& cohort_ids = {});
void save_config(const IndicatorConfig& cfg, const std::filesystem::path& path,
                 const std::vector<std::string>& cohort_ids = {});

// CSV with columns kind,module,lambda; kind is B or S, module is 1-based.
PenaltySet load_penalties(const std::filesystem::path& path);
void save_penalties(const PenaltySet& pen, const std::filesystem::path& path);

}  // namespace marrr
