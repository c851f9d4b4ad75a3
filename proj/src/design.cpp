#include "marrr/design.hpp"

#include <cmath>

#include "marrr/errors.hpp"

namespace marrr {

std::vector<Index> Design::cohort_sizes() const {
  std::vector<Index> out;
  for (const auto& r : cohorts) out.push_back(r.size());
  return out;
}

Design make_design(Matrix X, std::vector<ColumnRange> cohorts, const Matrix& Y,
                   const IndicatorConfig& cfg) {
  if (total_columns(cohorts) != X.cols())
    throw DimensionError("cohort ranges cover " + std::to_string(total_columns(cohorts)) +
                         " columns but X has " + std::to_string(X.cols()));
  if (cfg.K() > 0 && Y.cols() != X.cols())
    throw DimensionError("Y has " + std::to_string(Y.cols()) + " samples but X has " +
                         std::to_string(X.cols()));
  cfg.validate(static_cast<Index>(cohorts.size()));
  Design d;
  d.X = std::move(X);
  d.cohorts = std::move(cohorts);
  d.cfg = cfg;
  for (Index k = 0; k < cfg.K(); ++k) {
    CovariateModule m;
    m.ranges = module_ranges(cfg.C_Y, k, d.cohorts);
    m.Y = gather_columns(Y, m.ranges);
    d.covariates.push_back(std::move(m));
  }
  for (Index l = 0; l < cfg.L(); ++l)
    d.auxiliaries.push_back({module_ranges(cfg.C_S, l, d.cohorts)});
  refresh_covariate_flags(d);
  return d;
}

void refresh_covariate_flags(Design& d) {
  for (auto& m : d.covariates) m.orthonormal_rows = row_orthonormality_error(m.Y) < 1e-8;
}

PreparedProblem prepare_problem(const MultiCohortDataset& ds, const IndicatorConfig& cfg,
                                const PrepareOptions& opts, const MissingMask& extra_mask) {
  cfg.validate(ds.J());
  PreparedProblem out;
  out.mask = mask_from_dataset(ds).merged(extra_mask);
  out.original_X = ds.X();
  out.mask.dense(ds.p(), ds.n());  // bounds check
  for (const auto& c : out.mask.cells()) out.original_X(c.row, c.col) = NAN;

  Matrix X;
  if (opts.scale_x) {
    ScaledX sx = center_and_scale_x(out.original_X);
    X = std::move(sx.X);
    out.info.row_means = std::move(sx.row_means);
    out.info.sigma_hat = sx.sigma_hat;
  } else {
    X = out.original_X.unaryExpr([](double v) { return std::isnan(v) ? 0.0 : v; });
    out.info.row_means = Vector::Zero(ds.p());
    out.info.sigma_hat = 1.0;
  }

  Matrix Y = ds.Y();
  if (opts.center_y_per_cohort && cfg.K() > 0) {
    out.info.y_cohort_means.resize(ds.q(), ds.J());
    for (Index j = 0; j < ds.J(); ++j) {
      auto block = Y.middleCols(ds.boundaries()[j].begin, ds.cohort_size(j));
      out.info.y_cohort_means.col(j) = block.rowwise().mean();
      block.colwise() -= out.info.y_cohort_means.col(j);
    }
  }
  out.design = make_design(std::move(X), ds.boundaries(), Y, cfg);
  for (Index k = 0; k < cfg.K(); ++k) {
    auto& m = out.design.covariates[k];
    try {
      TransformedY t = transform_y(m.Y, opts.y_treatment);
      m.Y = std::move(t.Y);
      out.info.y_transforms.push_back(std::move(t.transform));
    } catch (const Error& e) {
      // Name the module so the user can find the offending configuration.
      const std::string msg = "covariate module " + std::to_string(k + 1) + ": " + e.what();
      switch (e.code()) {
        case ErrorCode::degeneracy: throw DegeneracyError(msg);
        case ErrorCode::rank_deficiency: throw RankDeficiencyError(msg);
        case ErrorCode::degenerate_covariate: throw DegenerateCovariateError(msg);
        default: throw;
      }
    }
  }
  refresh_covariate_flags(out.design);
  return out;
}

}  // namespace marrr
