#include "marrr/impute.hpp"

#include <cmath>

#include "marrr/errors.hpp"

namespace marrr {

SolverOptions default_impute_solver_options() {
  SolverOptions opts;
  opts.max_epochs = 30;
  return opts;
}

ImputationResult impute(const PreparedProblem& problem, const PenaltySet& pen,
                        const SolverOptions& solver, const ImputeOptions& opts) {
  if (opts.outer_max < 0) throw ConfigError("outer_max must be non-negative");
  const Design& design = problem.design;
  const auto& cells = problem.mask.cells();
  ImputationResult out;
  out.X_completed = design.X;
  out.X_completed_original = problem.original_X;
  if (cells.empty()) return out;

  const auto missing = problem.mask.dense(design.p(), design.n());
  for (std::size_t j = 0; j < design.cohorts.size(); ++j) {
    const auto& r = design.cohorts[j];
    if (missing.middleCols(r.begin, r.size()).all())
      throw InsufficientDataError("cohort " + std::to_string(j + 1) + " has no observed outcome");
  }

  double observed_norm = 0.0;
  for (Index c = 0; c < design.n(); ++c)
    for (Index i = 0; i < design.p(); ++i)
      if (!missing(i, c)) observed_norm += design.X(i, c) * design.X(i, c);
  out.tolerance = opts.tolerance > 0.0 ? opts.tolerance : 1e-4 * std::sqrt(observed_norm);

  Design work = design;
  for (const auto& c : cells) work.X(c.row, c.col) = 0.0;
  for (Index pass = 1; pass <= opts.outer_max; ++pass) {
    FitResult current = fit(work, pen, solver, pass > 1 ? &out.fit : nullptr);
    double change = 0.0;
    for (const auto& c : cells) {
      const double value = current.signal(c.row, c.col);
      const double delta = value - work.X(c.row, c.col);
      change += delta * delta;
      work.X(c.row, c.col) = value;
    }
    out.fit = std::move(current);
    out.outer_iterations = pass;
    out.changes.push_back(std::sqrt(change));
    if (out.changes.back() < out.tolerance) {
      out.converged = true;
      break;
    }
  }

  out.X_completed = work.X;
  const PreprocessInfo& info = problem.info;
  for (const auto& c : cells) {
    const double mean = info.row_means.size() ? info.row_means(c.row) : 0.0;
    out.X_completed_original(c.row, c.col) = info.sigma_hat * work.X(c.row, c.col) + mean;
  }
  return out;
}

ImputationResult impute(const MultiCohortDataset& ds, const MissingMask& mask,
                        const IndicatorConfig& cfg, const PenaltySet& pen,
                        const SolverOptions& solver, const ImputeOptions& opts,
                        const PrepareOptions& prepare) {
  return impute(prepare_problem(ds, cfg, prepare, mask), pen, solver, opts);
}

double rse(const Matrix& truth, const Matrix& completed, const MissingMask& mask) {
  if (truth.rows() != completed.rows() || truth.cols() != completed.cols())
    throw DimensionError("truth and completed matrices differ in shape");
  if (mask.empty()) throw PreconditionError("relative squared error needs a non-empty mask");
  mask.dense(truth.rows(), truth.cols());  // bounds check
  double num = 0.0, den = 0.0;
  for (const auto& c : mask.cells()) {
    const double t = truth(c.row, c.col);
    const double e = t - completed(c.row, c.col);
    num += e * e;
    den += t * t;
  }
  if (!(den > 0.0)) throw DegenerateMetricError("all masked truth entries are zero");
  return num / den;
}

}  // namespace marrr
