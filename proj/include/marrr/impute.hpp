#pragma once

#include <optional>
#include <vector>

#include "marrr/dataset.hpp"
#include "marrr/design.hpp"
#include "marrr/modules_config.hpp"
#include "marrr/solver.hpp"

namespace marrr {

struct ImputeOptions {
  Index outer_max = 20;
  double tolerance = 0.0;  // non-positive selects 1e-4 * ||observed X||_F
};

// Inner solver default for imputation passes.
SolverOptions default_impute_solver_options();

struct ImputationResult {
  Matrix X_completed;           // fitting scale
  Matrix X_completed_original;  // raw scale, observed cells copied from the input
  Index outer_iterations = 0;
  bool converged = false;
  double tolerance = 0.0;
  std::vector<double> changes;  // ||imputed_t - imputed_{t-1}||_F per pass
  FitResult fit;                // final pass
  std::optional<double> rse;
};

// Fill missing cells with 0, fit, replace them with the fitted signal, and
// repeat until the imputed values settle. Each pass starts from the previous
// fit. Throws InsufficientDataError when a cohort has no observed cell.
ImputationResult impute(const PreparedProblem& problem, const PenaltySet& pen,
                        const SolverOptions& solver, const ImputeOptions& opts = {});
ImputationResult impute(const MultiCohortDataset& ds, const MissingMask& mask,
                        const IndicatorConfig& cfg, const PenaltySet& pen,
                        const SolverOptions& solver, const ImputeOptions& opts = {},
                        const PrepareOptions& prepare = {});

// sum over masked cells of (truth - completed)^2 divided by sum of truth^2.
double rse(const Matrix& truth, const Matrix& completed, const MissingMask& mask);

}  // namespace marrr
