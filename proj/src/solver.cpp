#include "marrr/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "marrr/errors.hpp"

namespace marrr {

std::string_view algorithm_name(Algorithm a) {
  return a == Algorithm::factored_als ? "factored_als" : "svt_als";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "factored_als" || name == "als" || name == "1") return Algorithm::factored_als;
  if (name == "svt_als" || name == "svt" || name == "2") return Algorithm::svt_als;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

double SolverOptions::resolved_epsilon(Index p, Index n) const {
  return epsilon > 0.0 ? epsilon : 1e-6 * static_cast<double>(p) * static_cast<double>(n);
}

void SolverOptions::validate() const {
  if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  if (r_B_upper < 1 || r_S_upper < 1) throw ConfigError("rank upper bounds must be at least 1");
  if (!(init_scale > 0.0)) throw ConfigError("init_scale must be positive");
  if (std::isnan(epsilon)) throw ConfigError("epsilon must be a number");
}

namespace {

Matrix gather_rows(const Matrix& V, const std::vector<ColumnRange>& ranges) {
  Matrix out(total_columns(ranges), V.cols());
  Index at = 0;
  for (const auto& r : ranges) {
    out.middleRows(at, r.size()) = V.middleRows(r.begin, r.size());
    at += r.size();
  }
  return out;
}

Matrix scatter_rows(const Matrix& compact, const std::vector<ColumnRange>& ranges, Index n) {
  Matrix out = Matrix::Zero(n, compact.cols());
  Index at = 0;
  for (const auto& r : ranges) {
    out.middleRows(r.begin, r.size()) = compact.middleRows(at, r.size());
    at += r.size();
  }
  return out;
}

// Current module residual: X - signal + own contribution, on module columns.
Matrix module_residual(const Design& d, const Matrix& signal,
                       const std::vector<ColumnRange>& ranges, const Matrix& own) {
  Matrix R = gather_columns(d.X, ranges);
  R -= gather_columns(signal, ranges);
  R += own;
  return R;
}

void check_shapes(const Design& d, const PenaltySet& pen) {
  pen.validate(d.K(), d.L());
  for (const auto& m : d.covariates)
    if (m.Y.cols() != total_columns(m.ranges) || m.Y.rows() != d.q())
      throw DimensionError("covariate block does not match its module columns");
}

Factor balanced(const ThresholdedSvd& t) {
  const Vector root = t.d.cwiseSqrt();
  return {t.U * root.asDiagonal(), t.V * root.asDiagonal()};
}

// Solves G V H + lambda V = C for symmetric PSD G (q x q) and H (r x r).
Matrix solve_sylvester(const Eigen::SelfAdjointEigenSolver<Matrix>& g, const Matrix& H,
                       const Matrix& C, double lambda) {
  Eigen::SelfAdjointEigenSolver<Matrix> h(H);
  if (g.info() != Eigen::Success || h.info() != Eigen::Success)
    throw NumericalError("eigendecomposition failed in covariate factor update");
  const Matrix& Qg = g.eigenvectors();
  const Matrix& Qh = h.eigenvectors();
  Matrix Ct = Qg.transpose() * C * Qh;
  for (Index j = 0; j < Ct.cols(); ++j)
    for (Index i = 0; i < Ct.rows(); ++i) {
      const double denom = std::max(g.eigenvalues()(i), 0.0) * std::max(h.eigenvalues()(j), 0.0) + lambda;
      if (!(denom > 0.0)) throw NumericalError("covariate factor system is singular");
      Ct(i, j) /= denom;
    }
  return Qg * Ct * Qh.transpose();
}

// X (A + lambda I)^-1 for symmetric A.
Matrix ridge_right(const Matrix& X, const Matrix& A, double lambda) {
  Matrix M = A;
  M.diagonal().array() += lambda;
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success) throw NumericalError("ridge system is not positive definite");
  return llt.solve(X.transpose()).transpose();
}

Matrix random_matrix(Index rows, Index cols, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, sd);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

// Resizes a warm factor to `r` columns, filling new columns with small noise.
Matrix fit_columns(const Matrix& warm, Index rows, Index r, double sd, std::mt19937_64& rng) {
  Matrix out = random_matrix(rows, r, sd, rng);
  const Index keep = std::min(r, warm.cols());
  if (warm.rows() == rows && keep > 0) out.leftCols(keep) = warm.leftCols(keep);
  return out;
}

void finish(const Design& d, FitResult& fit, const Matrix& signal) {
  fit.signal = signal;
  fit.residual = d.X - signal;
}

}  // namespace

double eval_objective(const Design& d, const PenaltySet& pen, const std::vector<Matrix>& B,
                      const std::vector<Matrix>& S) {
  check_shapes(d, pen);
  if (static_cast<Index>(B.size()) != d.K() || static_cast<Index>(S.size()) != d.L())
    throw DimensionError("number of fitted terms does not match the modules");
  Matrix R = d.X;
  double penalty = 0.0;
  for (Index k = 0; k < d.K(); ++k) {
    if (B[k].rows() != d.p() || B[k].cols() != d.q())
      throw DimensionError("coefficient matrix " + std::to_string(k + 1) + " has wrong shape");
    scatter_add_columns(R, d.covariates[k].ranges, B[k] * d.covariates[k].Y, -1.0);
    penalty += pen.lambda_B[k] * nuclear_norm(B[k]);
  }
  for (Index l = 0; l < d.L(); ++l) {
    if (S[l].rows() != d.p() || S[l].cols() != d.n())
      throw DimensionError("auxiliary matrix " + std::to_string(l + 1) + " has wrong shape");
    R -= S[l];
    penalty += pen.lambda_S[l] * nuclear_norm(S[l]);
  }
  return 0.5 * R.squaredNorm() + penalty;
}

double eval_objective(const Design& d, const PenaltySet& pen, const FitResult& fit) {
  std::vector<Matrix> S;
  for (Index l = 0; l < fit.L(); ++l) S.push_back(fit.S(l));
  return eval_objective(d, pen, fit.B, S);
}

double eval_objective_factored(const Design& d, const PenaltySet& pen,
                               const std::vector<Factor>& b_factors,
                               const std::vector<Factor>& s_factors) {
  check_shapes(d, pen);
  if (static_cast<Index>(b_factors.size()) != d.K() || static_cast<Index>(s_factors.size()) != d.L())
    throw DimensionError("number of factors does not match the modules");
  Matrix R = d.X;
  double penalty = 0.0;
  for (Index k = 0; k < d.K(); ++k) {
    const Factor& f = b_factors[k];
    if (f.U.rows() != d.p() || f.V.rows() != d.q() || f.U.cols() != f.V.cols())
      throw DimensionError("covariate factor " + std::to_string(k + 1) + " has wrong shape");
    scatter_add_columns(R, d.covariates[k].ranges, f.U * (f.V.transpose() * d.covariates[k].Y), -1.0);
    penalty += pen.lambda_B[k] * (f.U.squaredNorm() + f.V.squaredNorm());
  }
  for (Index l = 0; l < d.L(); ++l) {
    const Factor& f = s_factors[l];
    if (f.U.rows() != d.p() || f.V.rows() != d.n() || f.U.cols() != f.V.cols())
      throw DimensionError("auxiliary factor " + std::to_string(l + 1) + " has wrong shape");
    R -= f.product();
    penalty += pen.lambda_S[l] * (f.U.squaredNorm() + f.V.squaredNorm());
  }
  return 0.5 * (R.squaredNorm() + penalty);
}

FitResult fit_svt_als(const Design& d, const PenaltySet& pen, const SolverOptions& opts,
                      const FitResult* warm) {
  opts.validate();
  check_shapes(d, pen);
  for (Index k = 0; k < d.K(); ++k)
    if (!d.covariates[k].orthonormal_rows)
      throw PreconditionError("soft-threshold updates need orthonormal covariate rows; module " +
                              std::to_string(k + 1) + " is not orthogonalized");
  const Index K = d.K(), L = d.L();
  FitResult fit;
  fit.algorithm = Algorithm::svt_als;
  fit.penalties = pen;
  fit.options = opts;
  fit.epsilon = opts.resolved_epsilon(d.p(), d.n());

  fit.B.assign(K, Matrix::Zero(d.p(), d.q()));
  fit.b_factors.assign(K, Factor{Matrix(d.p(), 0), Matrix(d.q(), 0)});
  std::vector<Factor> s_compact(L);  // V restricted to module rows
  std::vector<double> nuc_B(K, 0.0), nuc_S(L, 0.0);
  Matrix signal = Matrix::Zero(d.p(), d.n());
  for (Index l = 0; l < L; ++l)
    s_compact[l] = {Matrix(d.p(), 0), Matrix(total_columns(d.auxiliaries[l].ranges), 0)};

  if (warm) {
    if (warm->K() != K || warm->L() != L) throw DimensionError("warm start has a different module layout");
    for (Index k = 0; k < K; ++k) {
      fit.B[k] = warm->B[k];
      nuc_B[k] = nuclear_norm(fit.B[k]);
      scatter_add_columns(signal, d.covariates[k].ranges, fit.B[k] * d.covariates[k].Y);
    }
    for (Index l = 0; l < L; ++l) {
      const auto& ranges = d.auxiliaries[l].ranges;
      s_compact[l] = {warm->s_factors[l].U, gather_rows(warm->s_factors[l].V, ranges)};
      nuc_S[l] = factor_singular_values(s_compact[l]).sum();
      scatter_add_columns(signal, ranges, s_compact[l].product());
    }
  }

  auto objective = [&] {
    double value = 0.5 * (d.X - signal).squaredNorm();
    for (Index k = 0; k < K; ++k) value += pen.lambda_B[k] * nuc_B[k];
    for (Index l = 0; l < L; ++l) value += pen.lambda_S[l] * nuc_S[l];
    return value;
  };
  double previous = objective();

  for (Index epoch = 1; epoch <= opts.max_epochs; ++epoch) {
    double change = 0.0;
    for (Index k = 0; k < K; ++k) {
      const auto& m = d.covariates[k];
      const Matrix R = module_residual(d, signal, m.ranges, fit.B[k] * m.Y);
      const ThresholdedSvd t = threshold_svd(R * m.Y.transpose(), pen.lambda_B[k]);
      Matrix updated = t.product();
      const Matrix delta = updated - fit.B[k];
      change += delta.squaredNorm();
      scatter_add_columns(signal, m.ranges, delta * m.Y);
      fit.B[k] = std::move(updated);
      fit.b_factors[k] = balanced(t);
      nuc_B[k] = t.shrunk_sum;
    }
    for (Index l = 0; l < L; ++l) {
      const auto& ranges = d.auxiliaries[l].ranges;
      const Matrix old = s_compact[l].product();
      const ThresholdedSvd t = threshold_svd(module_residual(d, signal, ranges, old), pen.lambda_S[l]);
      s_compact[l] = balanced(t);
      const Matrix delta = t.product() - old;
      change += delta.squaredNorm();
      scatter_add_columns(signal, ranges, delta);
      nuc_S[l] = t.shrunk_sum;
    }
    const double value = objective();
    fit.objective_trace.push_back(value);
    fit.epochs = epoch;
    if (value > previous + 1e-9 * std::max(1.0, std::abs(previous)))
      throw NumericalError("objective increased from " + std::to_string(previous) + " to " +
                           std::to_string(value) + " in epoch " + std::to_string(epoch));
    previous = value;
    if (change < fit.epsilon) {
      fit.converged = true;
      break;
    }
  }

  for (Index l = 0; l < L; ++l)
    fit.s_factors.push_back({s_compact[l].U, scatter_rows(s_compact[l].V, d.auxiliaries[l].ranges, d.n())});
  finish(d, fit, signal);
  return fit;
}

FitResult fit_factored_als(const Design& d, const PenaltySet& pen, const SolverOptions& opts,
                           const FitResult* warm) {
  opts.validate();
  check_shapes(d, pen);
  const Index K = d.K(), L = d.L(), p = d.p(), q = d.q();
  FitResult fit;
  fit.algorithm = Algorithm::factored_als;
  fit.penalties = pen;
  fit.options = opts;
  fit.epsilon = opts.resolved_epsilon(p, d.n());
  std::mt19937_64 rng(opts.seed);

  if (warm && (warm->K() != K || warm->L() != L))
    throw DimensionError("warm start has a different module layout");

  std::vector<Factor> fb(K), fs(L);
  std::vector<Eigen::SelfAdjointEigenSolver<Matrix>> gram_eig(K);
  std::vector<Matrix> gram(K);
  Matrix signal = Matrix::Zero(p, d.n());
  for (Index k = 0; k < K; ++k) {
    const Index r = std::min({opts.r_B_upper, p, q});
    const Factor* w = warm ? &warm->b_factors[k] : nullptr;
    fb[k].U = fit_columns(w ? w->U : Matrix(), p, r, opts.init_scale, rng);
    fb[k].V = fit_columns(w ? w->V : Matrix(), q, r, opts.init_scale, rng);
    const auto& m = d.covariates[k];
    gram[k] = m.Y * m.Y.transpose();
    if (!m.orthonormal_rows) gram_eig[k].compute(gram[k]);
    scatter_add_columns(signal, m.ranges, fb[k].product() * m.Y);
  }
  for (Index l = 0; l < L; ++l) {
    const auto& ranges = d.auxiliaries[l].ranges;
    const Index nl = total_columns(ranges);
    const Index r = std::min({opts.r_S_upper, p, nl});
    const Factor* w = warm ? &warm->s_factors[l] : nullptr;
    fs[l].U = fit_columns(w ? w->U : Matrix(), p, r, opts.init_scale, rng);
    fs[l].V = fit_columns(w ? gather_rows(w->V, ranges) : Matrix(), nl, r, opts.init_scale, rng);
    scatter_add_columns(signal, ranges, fs[l].product());
  }

  auto objective = [&] {
    double value = (d.X - signal).squaredNorm();
    for (Index k = 0; k < K; ++k) value += pen.lambda_B[k] * (fb[k].U.squaredNorm() + fb[k].V.squaredNorm());
    for (Index l = 0; l < L; ++l) value += pen.lambda_S[l] * (fs[l].U.squaredNorm() + fs[l].V.squaredNorm());
    return 0.5 * value;
  };

  for (Index epoch = 1; epoch <= opts.max_epochs; ++epoch) {
    double change = 0.0;
    for (Index k = 0; k < K; ++k) {
      const auto& m = d.covariates[k];
      const double lambda = pen.lambda_B[k];
      Factor& f = fb[k];
      const Matrix old = f.product();
      const Matrix RYt = module_residual(d, signal, m.ranges, old * m.Y) * m.Y.transpose();
      // U = R Y^T V (V^T Y Y^T V + lambda I)^-1
      f.U = ridge_right(RYt * f.V, f.V.transpose() * gram[k] * f.V, lambda);
      // (U^T U) kron (Y Y^T) vec(V) + lambda vec(V) = vec(Y R^T U)
      const Matrix C = RYt.transpose() * f.U;
      const Matrix H = f.U.transpose() * f.U;
      f.V = m.orthonormal_rows ? ridge_right(C, H, lambda) : solve_sylvester(gram_eig[k], H, C, lambda);
      const Matrix delta = f.product() - old;
      change += delta.squaredNorm();
      scatter_add_columns(signal, m.ranges, delta * m.Y);
    }
    for (Index l = 0; l < L; ++l) {
      const auto& ranges = d.auxiliaries[l].ranges;
      const double lambda = pen.lambda_S[l];
      Factor& f = fs[l];
      const Matrix old = f.product();
      const Matrix R = module_residual(d, signal, ranges, old);
      f.U = ridge_right(R * f.V, f.V.transpose() * f.V, lambda);
      f.V = ridge_right(R.transpose() * f.U, f.U.transpose() * f.U, lambda);
      const Matrix delta = f.product() - old;
      change += delta.squaredNorm();
      scatter_add_columns(signal, ranges, delta);
    }
    fit.objective_trace.push_back(objective());
    fit.epochs = epoch;
    if (!std::isfinite(fit.objective_trace.back())) throw NumericalError("objective is not finite");
    if (change < fit.epsilon) {
      fit.converged = true;
      break;
    }
  }

  for (Index k = 0; k < K; ++k) fit.B.push_back(fb[k].product());
  fit.b_factors = std::move(fb);
  for (Index l = 0; l < L; ++l)
    fit.s_factors.push_back({fs[l].U, scatter_rows(fs[l].V, d.auxiliaries[l].ranges, d.n())});
  finish(d, fit, signal);
  return fit;
}

FitResult fit(const Design& d, const PenaltySet& pen, const SolverOptions& opts,
              const FitResult* warm) {
  return opts.algorithm == Algorithm::factored_als ? fit_factored_als(d, pen, opts, warm)
                                                   : fit_svt_als(d, pen, opts, warm);
}

Matrix covariate_signal(const Design& d, const FitResult& fit, Index k) {
  Matrix out = Matrix::Zero(d.p(), d.n());
  scatter_add_columns(out, d.covariates.at(k).ranges, fit.B.at(k) * d.covariates[k].Y);
  return out;
}

std::vector<VarianceRow> variance_explained(const Design& d, const FitResult& fit) {
  std::vector<Eigen::VectorXi> columns;
  std::vector<VarianceRow> rows;
  auto row_for = [&](const Eigen::VectorXi& c) -> VarianceRow& {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == c) return rows[i];
    columns.push_back(c);
    VarianceRow row;
    row.module = static_cast<Index>(rows.size()) + 1;
    for (Index j = 0; j < c.size(); ++j)
      if (c(j)) {
        row.cohorts.push_back(j);
        row.samples += d.cohorts[j].size();
      }
    rows.push_back(row);
    return rows.back();
  };
  for (Index k = 0; k < d.K(); ++k) row_for(d.cfg.C_Y.col(k)).covariate_module = k;
  for (Index l = 0; l < d.L(); ++l) row_for(d.cfg.C_S.col(l)).auxiliary_module = l;

  for (std::size_t i = 0; i < rows.size(); ++i) {
    VarianceRow& row = rows[i];
    const auto ranges = module_ranges(columns[i], 0, d.cohorts);
    Matrix total = Matrix::Zero(d.p(), total_columns(ranges));
    if (row.covariate_module >= 0) {
      const Matrix by = fit.B[row.covariate_module] * d.covariates[row.covariate_module].Y;
      row.var_BY = by.squaredNorm();
      total += by;
    }
    if (row.auxiliary_module >= 0) {
      const Matrix s = gather_columns(fit.S(row.auxiliary_module), ranges);
      row.var_S = s.squaredNorm();
      total += s;
    }
    row.var_signal = total.squaredNorm();
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const VarianceRow& a, const VarianceRow& b) { return a.var_signal > b.var_signal; });
  return rows;
}

Vector factor_singular_values(const Factor& f) {
  if (f.U.cols() == 0) return Vector(0);
  Eigen::HouseholderQR<Matrix> qu(f.U), qv(f.V);
  const Index r = f.U.cols();
  const Index ru = std::min(r, f.U.rows()), rv = std::min(r, f.V.rows());
  const Matrix Ru = qu.matrixQR().topRows(ru).triangularView<Eigen::Upper>();
  const Matrix Rv = qv.matrixQR().topRows(rv).triangularView<Eigen::Upper>();
  return singular_values(Ru * Rv.transpose());
}

ModuleRanks estimated_ranks(const FitResult& fit, double threshold) {
  ModuleRanks out;
  auto count = [&](const Vector& d) {
    return static_cast<Index>((d.array() > threshold).count());
  };
  for (const auto& B : fit.B) out.B.push_back(count(singular_values(B)));
  for (const auto& f : fit.s_factors) out.S.push_back(count(factor_singular_values(f)));
  return out;
}

std::vector<Matrix> coefficients_original(const FitResult& fit, const PreprocessInfo& info) {
  std::vector<Matrix> out;
  for (Index k = 0; k < fit.K(); ++k) {
    const bool has = static_cast<std::size_t>(k) < info.y_transforms.size();
    out.push_back(info.sigma_hat * (has ? backmap_b(fit.B[k], info.y_transforms[k]) : fit.B[k]));
  }
  return out;
}

Matrix auxiliary_original(const FitResult& fit, const PreprocessInfo& info, Index l) {
  return info.sigma_hat * fit.S(l);
}

}  // namespace marrr
