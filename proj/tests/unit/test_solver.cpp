#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "helpers.hpp"
#include "marrr/design.hpp"
#include "marrr/errors.hpp"
#include "marrr/fit_io.hpp"
#include "marrr/solver.hpp"

using namespace marrr;
using marrr::test::gaussian;
using marrr::test::max_abs;
using marrr::test::orthonormal_rows;

namespace {

IndicatorMatrix global_and_individual(Index J) {
  IndicatorMatrix C(J, J + 1);
  C.setZero();
  C.col(0).setOnes();
  for (Index j = 0; j < J; ++j) C(j, j + 1) = 1;
  return C;
}

// Every cohort's covariate block has orthonormal rows.
Matrix per_cohort_orthonormal(Index q, const std::vector<Index>& sizes, std::uint64_t seed) {
  Index n = 0;
  for (Index s : sizes) n += s;
  Matrix Y(q, n);
  Index at = 0;
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    Y.middleCols(at, sizes[j]) = orthonormal_rows(q, sizes[j], seed + j);
    at += sizes[j];
  }
  return Y;
}

std::vector<ColumnRange> ranges_of(const std::vector<Index>& sizes) {
  std::vector<ColumnRange> out;
  Index at = 0;
  for (Index s : sizes) {
    out.push_back({at, at + s});
    at += s;
  }
  return out;
}

// Design whose covariate blocks are each orthogonalized, as preprocessing does.
Design orthogonal_design(Matrix X, const std::vector<Index>& sizes, const Matrix& Y, const IndicatorConfig& cfg) {
  Design d = make_design(std::move(X), ranges_of(sizes), Y, cfg);
  for (auto& c : d.covariates) c.Y = orthogonalize_y(c.Y).Y;
  refresh_covariate_flags(d);
  return d;
}

SolverOptions tight(Algorithm a) {
  SolverOptions o;
  o.algorithm = a;
  o.epsilon = 1e-14;
  o.max_epochs = 5000;
  return o;
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("objective of the zero fit is half the squared norm") {
    const Matrix X = gaussian(6, 10, 1);
    const auto cfg = make_config(IndicatorMatrix::Ones(1, 1), IndicatorMatrix::Ones(1, 1));
    const Design d = make_design(X, {{0, 10}}, gaussian(3, 10, 2), cfg);
    const PenaltySet pen{{1.0}, {1.0}};
    const double half = 0.5 * X.squaredNorm();
    CHECK(eval_objective(d, pen, {Matrix::Zero(6, 3)}, {Matrix::Zero(6, 10)}) == doctest::Approx(half));
    const std::vector<Factor> zb{{Matrix::Zero(6, 2), Matrix::Zero(3, 2)}};
    const std::vector<Factor> zs{{Matrix::Zero(6, 2), Matrix::Zero(10, 2)}};
    CHECK(eval_objective_factored(d, pen, zb, zs) == doctest::Approx(half));
  }

  TEST_CASE("exact fit leaves only the penalty") {
    const Matrix Y = gaussian(3, 10, 3);
    const Matrix B = gaussian(6, 3, 4);
    const auto cfg = make_config(IndicatorMatrix::Ones(1, 1), IndicatorMatrix(1, 0));
    const Design d = make_design(B * Y, {{0, 10}}, Y, cfg);
    const double nuc = Eigen::JacobiSVD<Matrix>(B).singularValues().sum();
    CHECK(eval_objective(d, PenaltySet{{0.7}, {}}, {B}, {}) == doctest::Approx(0.7 * nuc).epsilon(1e-12));
  }

  TEST_CASE("shape mismatch is a dimension error") {
    const auto cfg = make_config(IndicatorMatrix::Ones(1, 1), IndicatorMatrix(1, 0));
    const Design d = make_design(gaussian(4, 8, 1), {{0, 8}}, gaussian(2, 8, 2), cfg);
    CHECK_THROWS_AS(eval_objective(d, PenaltySet{{1.0}, {}}, {Matrix::Zero(4, 3)}, {}), DimensionError);
  }

  TEST_CASE("balanced factorization reaches the nuclear-norm objective") {
    const std::vector<Index> sizes{7, 9};
    const Matrix Y = gaussian(3, 16, 5);
    const auto cfg = make_config(IndicatorMatrix::Ones(2, 1), global_and_individual(2).rightCols(2));
    const Design d = make_design(gaussian(8, 16, 6), ranges_of(sizes), Y, cfg);
    const PenaltySet pen{{1.3}, {0.7, 2.1}};

    const Matrix B = gaussian(8, 2, 7) * gaussian(2, 3, 8);
    std::vector<Matrix> S;
    std::vector<Factor> sf;
    for (Index l = 0; l < 2; ++l) {
      const ColumnRange r = d.cohorts[static_cast<std::size_t>(l)];
      Matrix full = Matrix::Zero(8, 16);
      full.middleCols(r.begin, r.size()) = gaussian(8, 2, 20 + l) * gaussian(2, r.size(), 30 + l);
      S.push_back(full);
      const Svd s = thin_svd(full);
      const Vector root = s.d.cwiseSqrt();
      sf.push_back({s.U * root.asDiagonal(), s.V * root.asDiagonal()});
    }
    const Svd sb = thin_svd(B);
    const Vector rb = sb.d.cwiseSqrt();
    const std::vector<Factor> bf{{sb.U * rb.asDiagonal(), sb.V * rb.asDiagonal()}};

    const double direct = eval_objective(d, pen, {B}, S);
    CHECK(eval_objective_factored(d, pen, bf, sf) == doctest::Approx(direct).epsilon(1e-10));

    // Unbalanced factors leave the residual but raise the penalty.
    std::vector<Factor> skew = bf;
    skew[0].U *= 2.0;
    skew[0].V /= 2.0;
    CHECK(max_abs(skew[0].product() - B) < 1e-12);
    CHECK(eval_objective_factored(d, pen, skew, sf) > direct);
  }

  TEST_CASE("factored updates recover the auxiliary soft-threshold solution") {
    const Matrix X = 6.0 * gaussian(12, 1, 1) * gaussian(1, 15, 2);
    const auto cfg = make_config(IndicatorMatrix(1, 0), IndicatorMatrix::Ones(1, 1));
    const Design d = make_design(X, {{0, 15}}, Matrix(0, 15), cfg);
    const PenaltySet pen{{}, {2.0}};
    SolverOptions o = tight(Algorithm::factored_als);
    o.r_S_upper = 3;
    const FitResult f = fit(d, pen, o);
    const Matrix want = svt(X, 2.0);
    CHECK((f.S(0) - want).norm() / want.norm() < 1e-5);
  }

  TEST_CASE("factored updates with orthonormal covariates match soft-thresholding") {
    const Matrix Y = orthonormal_rows(4, 30, 3);
    const Matrix X = gaussian(10, 4, 4) * Y * 3.0 + gaussian(10, 30, 5);
    const auto cfg = make_config(IndicatorMatrix::Ones(1, 1), IndicatorMatrix(1, 0));
    const Design d = make_design(X, {{0, 30}}, Y, cfg);
    const PenaltySet pen{{1.5}, {}};
    const FitResult f = fit(d, pen, tight(Algorithm::factored_als));
    CHECK(max_abs(f.B[0] - svt(X * Y.transpose(), 1.5)) < 1e-6);
  }

  TEST_CASE("huge tolerance stops after one epoch") {
    const auto cfg = make_config(IndicatorMatrix::Ones(1, 1), IndicatorMatrix::Ones(1, 1));
    const Design d = make_design(gaussian(6, 20, 1), {{0, 20}}, orthonormal_rows(2, 20, 2), cfg);
    for (Algorithm a : {Algorithm::factored_als, Algorithm::svt_als}) {
      SolverOptions o;
      o.algorithm = a;
      o.epsilon = 1e300;
      const FitResult f = fit(d, PenaltySet{{1.0}, {1.0}}, o);
      CHECK(f.epochs == 1);
      CHECK(f.converged);
    }
  }

  TEST_CASE("soft-threshold updates converge in one step for a single global module") {
    const Matrix X = gaussian(9, 14, 6) + 4.0 * gaussian(9, 1, 7) * gaussian(1, 14, 8);
    const auto cfg = make_config(IndicatorMatrix(1, 0), IndicatorMatrix::Ones(1, 1));
    const Design d = make_design(X, {{0, 14}}, Matrix(0, 14), cfg);
    const FitResult f = fit(d, PenaltySet{{}, {3.0}}, tight(Algorithm::svt_als));
    CHECK(max_abs(f.S(0) - svt(X, 3.0)) < 1e-10);
    CHECK(f.epochs <= 2);
    CHECK(f.converged);
  }

  TEST_CASE("soft-threshold updates need orthonormal covariates") {
    const auto cfg = make_config(IndicatorMatrix::Ones(1, 1), IndicatorMatrix(1, 0));
    const Design d = make_design(gaussian(5, 20, 1), {{0, 20}}, gaussian(2, 20, 2), cfg);
    CHECK_THROWS_AS(fit(d, PenaltySet{{1.0}, {}}, SolverOptions{}), PreconditionError);
  }

  TEST_CASE("soft-threshold objective never increases and auxiliary blocks stay zero") {
    const std::vector<Index> sizes{20, 25, 15};
    const Matrix Y = per_cohort_orthonormal(3, sizes, 40);
    const IndicatorMatrix C = global_and_individual(3);
    const auto cfg = make_config(C, C);
    const Design d = orthogonal_design(gaussian(12, 60, 9) * 1.5, sizes, Y, cfg);
    const PenaltySet pen = rmt_penalties(12, 3, sizes, cfg);
    // Weaker penalties keep several modules active.
    PenaltySet half = pen;
    for (auto& v : half.lambda_B) v *= 0.3;
    for (auto& v : half.lambda_S) v *= 0.3;
    const FitResult f = fit(d, half, tight(Algorithm::svt_als));
    for (std::size_t t = 1; t < f.objective_trace.size(); ++t)
      CHECK(f.objective_trace[t] <= f.objective_trace[t - 1] * (1.0 + 1e-12));
    for (Index l = 0; l < f.L(); ++l) {
      const Matrix S = f.S(l);
      for (Index j = 0; j < 3; ++j)
        if (C(j, l) == 0) {
          const ColumnRange r = d.cohorts[static_cast<std::size_t>(j)];
          CHECK(S.middleCols(r.begin, r.size()).cwiseAbs().maxCoeff() == 0.0);
        }
    }
  }

  TEST_CASE("both algorithms reach the same optimum") {
    const std::vector<Index> sizes{18, 22};
    const Matrix Y = per_cohort_orthonormal(3, sizes, 70);
    const IndicatorMatrix C = global_and_individual(2);
    const auto cfg = make_config(C, C);
    const Matrix X = gaussian(15, 40, 71) + 3.0 * gaussian(15, 1, 72) * gaussian(1, 40, 73);
    const Design d = orthogonal_design(X, sizes, Y, cfg);
    const PenaltySet pen = rmt_penalties(15, 3, sizes, cfg);
    const FitResult a = fit(d, pen, tight(Algorithm::factored_als));
    const FitResult b = fit(d, pen, tight(Algorithm::svt_als));
    const double oa = eval_objective(d, pen, a);
    const double ob = eval_objective(d, pen, b);
    CHECK(std::abs(oa - ob) / ob < 1e-4);
    CHECK((a.signal - b.signal).norm() / std::max(b.signal.norm(), 1e-12) < 1e-2);
  }

  TEST_CASE("square orthogonal covariates make regression and factorization coincide") {
    const Index n = 12;
    const Matrix Y = orthonormal_rows(n, n, 5);
    const Matrix X = gaussian(8, n, 6) + 3.0 * gaussian(8, 1, 7) * gaussian(1, n, 8);
    const Design reg = make_design(X, {{0, n}}, Y, make_config(IndicatorMatrix::Ones(1, 1), IndicatorMatrix(1, 0)));
    const Design fac = make_design(X, {{0, n}}, Matrix(0, n), make_config(IndicatorMatrix(1, 0), IndicatorMatrix::Ones(1, 1)));
    const FitResult a = fit(reg, PenaltySet{{2.5}, {}}, tight(Algorithm::svt_als));
    const FitResult b = fit(fac, PenaltySet{{}, {2.5}}, tight(Algorithm::svt_als));
    CHECK(max_abs(a.B[0] * Y - b.S(0)) < 1e-8);
  }

  TEST_CASE("nuclear norm is unchanged by orthonormal covariates") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Matrix B = gaussian(7, 4, seed);
      const Matrix Y = orthonormal_rows(4, 25, seed + 10);
      CHECK(std::abs(nuclear_norm(B) - nuclear_norm(B * Y)) < 1e-10);
    }
  }

  TEST_CASE("estimated ranks count singular values above the threshold") {
    FitResult f;
    const Matrix D = Vector{{4.0, 1.0, 0.0}}.asDiagonal();
    f.B.push_back(D);
    f.b_factors.push_back({D, Matrix::Identity(3, 3)});
    f.s_factors.push_back({Matrix::Zero(3, 2), Matrix::Zero(5, 2)});
    const ModuleRanks r = estimated_ranks(f, 0.1);
    CHECK(r.B[0] == 2);
    CHECK(r.S[0] == 0);
  }

  TEST_CASE("variance explained") {
    const std::vector<Index> sizes{10, 10};
    const Matrix Y = per_cohort_orthonormal(2, sizes, 3);
    const IndicatorMatrix C = global_and_individual(2);
    const auto cfg = make_config(C, C);
    SUBCASE("zero fit") {
      const Design d = orthogonal_design(gaussian(5, 20, 1), sizes, Y, cfg);
      SolverOptions o;
      o.max_epochs = 3;
      const PenaltySet huge{{1e6, 1e6, 1e6}, {1e6, 1e6, 1e6}};
      const FitResult f = fit(d, huge, o);
      for (const auto& row : variance_explained(d, f)) CHECK(row.var_signal == 0.0);
    }
    SUBCASE("single strong global module leads the table") {
      const Matrix X = 8.0 * gaussian(6, 1, 4) * gaussian(1, 20, 5) + 0.1 * gaussian(6, 20, 6);
      const Design d = orthogonal_design(X, sizes, Y, cfg);
      const FitResult f = fit(d, rmt_penalties(6, 2, sizes, cfg), tight(Algorithm::svt_als));
      const auto rows = variance_explained(d, f);
      REQUIRE(!rows.empty());
      CHECK(rows.front().samples == 20);
      for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i - 1].var_signal >= rows[i].var_signal);
      const Matrix total = f.signal;
      CHECK(rows.front().var_signal == doctest::Approx(total.squaredNorm()).epsilon(0.05));
    }
  }

  TEST_CASE("fit directories round trip") {
    marrr::test::TempDir dir("fit");
    const std::vector<Index> sizes{12, 12};
    const Matrix Y = per_cohort_orthonormal(2, sizes, 8);
    const IndicatorMatrix C = global_and_individual(2);
    const auto cfg = make_config(C, C);
    const Design d = orthogonal_design(gaussian(6, 24, 9) * 2.0, sizes, Y, cfg);
    PenaltySet pen = rmt_penalties(6, 2, sizes, cfg);
    for (auto& v : pen.lambda_S) v *= 0.5;
    const FitResult f = fit(d, pen, SolverOptions{});
    save_fit(f, dir.path());
    FitResult back = load_fit(dir.path());
    CHECK(back.epochs == f.epochs);
    CHECK(back.converged == f.converged);
    CHECK(back.objective_trace == f.objective_trace);
    REQUIRE(back.K() == f.K());
    for (Index k = 0; k < f.K(); ++k) CHECK(max_abs(back.B[static_cast<std::size_t>(k)] - f.B[static_cast<std::size_t>(k)]) == 0.0);
    restore_signal(d, back);
    CHECK(max_abs(back.signal - f.signal) < 1e-12);
  }

  TEST_CASE("solver options validation") {
    SolverOptions o;
    o.r_B_upper = 0;
    CHECK_THROWS_AS(o.validate(), ConfigError);
    CHECK(SolverOptions{}.resolved_epsilon(10, 20) == doctest::Approx(1e-6 * 200));
    CHECK(parse_algorithm(algorithm_name(Algorithm::factored_als)) == Algorithm::factored_als);
  }
}
