#pragma once

#include <vector>

#include "marrr/dataset.hpp"
#include "marrr/linalg.hpp"
#include "marrr/modules_config.hpp"
#include "marrr/preprocess.hpp"

namespace marrr {

struct CovariateModule {
  std::vector<ColumnRange> ranges;  // columns of the concatenated matrix
  Matrix Y;                         // q x (module samples), as used in fitting
  bool orthonormal_rows = false;    // Y Y^T = I to within 1e-8
};

struct AuxiliaryModule {
  std::vector<ColumnRange> ranges;
};

// Everything the solvers read: the outcome matrix on the fitting scale, the
// cohort layout, and each module's columns and covariate block.
struct Design {
  Matrix X;
  std::vector<ColumnRange> cohorts;
  IndicatorConfig cfg;
  std::vector<CovariateModule> covariates;
  std::vector<AuxiliaryModule> auxiliaries;

  Index p() const { return X.rows(); }
  Index n() const { return X.cols(); }
  Index q() const { return covariates.empty() ? 0 : covariates.front().Y.rows(); }
  Index K() const { return static_cast<Index>(covariates.size()); }
  Index L() const { return static_cast<Index>(auxiliaries.size()); }
  std::vector<Index> cohort_sizes() const;
};

// Builds a design from matrices already on the fitting scale. Covariate
// blocks are the columns of Y in each module, untransformed.
Design make_design(Matrix X, std::vector<ColumnRange> cohorts, const Matrix& Y,
                   const IndicatorConfig& cfg);

// Recomputes the orthonormal-row flags after covariate blocks change.
void refresh_covariate_flags(Design& d);

struct PrepareOptions {
  YTreatment y_treatment = YTreatment::orthogonalize;
  bool scale_x = true;  // center rows and divide by the noise sd estimate
  // Remove each cohort's covariate means before the per-module transforms, so
  // no module can absorb another cohort's offset.
  bool center_y_per_cohort = true;
};

struct PreparedProblem {
  Design design;
  PreprocessInfo info;
  Matrix original_X;  // NaN at missing cells
  MissingMask mask;   // NaN cells of the dataset plus the extra mask
};

// Missing cells (NaN in ds plus `extra_mask`) enter the design as 0 after
// centering. Covariates are centered within each cohort (when asked), then
// each covariate module's block is transformed on its own.
PreparedProblem prepare_problem(const MultiCohortDataset& ds, const IndicatorConfig& cfg,
                                const PrepareOptions& opts = {},
                                const MissingMask& extra_mask = {});

}  // namespace marrr
