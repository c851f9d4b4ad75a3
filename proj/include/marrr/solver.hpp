#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "marrr/design.hpp"
#include "marrr/linalg.hpp"
#include "marrr/modules_config.hpp"
#include "marrr/preprocess.hpp"

namespace marrr {

enum class Algorithm {
  factored_als,  // alternating ridge updates of U, V factors
  svt_als,       // block updates by singular value soft-thresholding
};

std::string_view algorithm_name(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

struct SolverOptions {
  Algorithm algorithm = Algorithm::svt_als;
  double epsilon = 0.0;  // non-positive selects 1e-6 * p * n
  Index max_epochs = 200;
  Index r_B_upper = 20;
  Index r_S_upper = 20;
  std::uint64_t seed = 0;
  double init_scale = 0.01;

  double resolved_epsilon(Index p, Index n) const;
  void validate() const;
};

// Low-rank term U V^T.
struct Factor {
  Matrix U;
  Matrix V;
  Matrix product() const { return U * V.transpose(); }
};

struct FitResult {
  Algorithm algorithm = Algorithm::svt_als;
  std::vector<Matrix> B;          // p x q per covariate module, fitting scale
  std::vector<Factor> b_factors;  // B_k = U V^T, U: p x r, V: q x r
  std::vector<Factor> s_factors;  // S_l = U V^T, V: n x r, zero rows outside module l
  std::vector<double> objective_trace;  // one value per epoch
  Index epochs = 0;
  bool converged = false;
  double epsilon = 0.0;
  Matrix signal;    // sum of all fitted terms, p x n
  Matrix residual;  // X - signal
  PenaltySet penalties;
  SolverOptions options;

  Index K() const { return static_cast<Index>(B.size()); }
  Index L() const { return static_cast<Index>(s_factors.size()); }
  Matrix S(Index l) const { return s_factors.at(l).product(); }
};

// 0.5 ||X - sum B_k Y_k - sum S_l||_F^2 + sum lambda_B ||B_k||_* + sum lambda_S ||S_l||_*
// with each S_l given as a full p x n matrix.
double eval_objective(const Design& d, const PenaltySet& pen, const std::vector<Matrix>& B,
                      const std::vector<Matrix>& S);
double eval_objective(const Design& d, const PenaltySet& pen, const FitResult& fit);

// 0.5 {||residual||_F^2 + sum lambda (||U||_F^2 + ||V||_F^2)} over all factors.
double eval_objective_factored(const Design& d, const PenaltySet& pen,
                               const std::vector<Factor>& b_factors,
                               const std::vector<Factor>& s_factors);

// Factored alternating least squares. Factors start i.i.d. normal with sd
// init_scale unless `warm` is given.
FitResult fit_factored_als(const Design& d, const PenaltySet& pen, const SolverOptions& opts,
                           const FitResult* warm = nullptr);
// Soft-threshold block coordinate descent from zero (or `warm`). Needs every
// covariate block to have orthonormal rows; throws PreconditionError
// otherwise and NumericalError if the objective ever increases.
FitResult fit_svt_als(const Design& d, const PenaltySet& pen, const SolverOptions& opts,
                      const FitResult* warm = nullptr);
FitResult fit(const Design& d, const PenaltySet& pen, const SolverOptions& opts,
              const FitResult* warm = nullptr);

// B_k Y_k placed in its module's columns of a p x n matrix.
Matrix covariate_signal(const Design& d, const FitResult& fit, Index k);

struct VarianceRow {
  Index module = 0;  // 1-based position among distinct indicator columns
  Index samples = 0;
  double var_BY = 0.0;
  double var_S = 0.0;
  double var_signal = 0.0;  // ||B Y + S||_F^2 over the module's columns
  std::vector<Index> cohorts;
  Index covariate_module = -1;  // index into B, -1 if none
  Index auxiliary_module = -1;  // index into S, -1 if none
};

// Covariate and auxiliary modules sharing an indicator column are reported
// together. Sorted by var_signal, largest first.
std::vector<VarianceRow> variance_explained(const Design& d, const FitResult& fit);

struct ModuleRanks {
  std::vector<Index> B;
  std::vector<Index> S;
};

// Number of singular values above `threshold` for every B_k and S_l.
ModuleRanks estimated_ranks(const FitResult& fit, double threshold = 0.1);
Vector factor_singular_values(const Factor& f);

// Coefficients for the raw covariates on the raw outcome scale.
std::vector<Matrix> coefficients_original(const FitResult& fit, const PreprocessInfo& info);
Matrix auxiliary_original(const FitResult& fit, const PreprocessInfo& info, Index l);

}  // namespace marrr
