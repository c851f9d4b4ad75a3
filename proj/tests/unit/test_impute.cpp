#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "marrr/errors.hpp"
#include "marrr/impute.hpp"
#include "marrr/simulate.hpp"

using namespace marrr;
using marrr::test::gaussian;

namespace {

IndicatorConfig global_s(Index J) { return make_config(IndicatorMatrix(J, 0), IndicatorMatrix::Ones(J, 1)); }

}  // namespace

TEST_SUITE("impute") {
  TEST_CASE("relative squared error") {
    const Matrix T = gaussian(4, 5, 1);
    const MissingMask m({{0, 0}, {2, 3}, {3, 4}});
    CHECK(rse(T, T, m) == 0.0);
    CHECK(rse(T, Matrix::Zero(4, 5), m) == doctest::Approx(1.0));
    Matrix C = T;
    C(2, 3) += 0.5;
    CHECK(rse(T, C, MissingMask({{2, 3}})) == doctest::Approx(0.25 / (T(2, 3) * T(2, 3))));
    CHECK_THROWS_AS(rse(Matrix::Zero(4, 5), T, m), DegenerateMetricError);
  }

  TEST_CASE("empty mask leaves the data untouched") {
    const Matrix X = gaussian(6, 20, 2);
    const MultiCohortDataset ds(X, gaussian(2, 20, 3), {20});
    const auto r = impute(ds, MissingMask{}, global_s(1), rmt_penalties(ds, global_s(1)),
                          default_impute_solver_options());
    CHECK(r.outer_iterations == 0);
    CHECK(r.X_completed_original == X);
  }

  TEST_CASE("a fully missing column without covariates is filled with zero") {
    const MultiCohortDataset ds(gaussian(10, 40, 4) + 3.0 * gaussian(10, 1, 5) * gaussian(1, 40, 6),
                                gaussian(2, 40, 7), {40});
    std::vector<Cell> col;
    for (Index i = 0; i < 10; ++i) col.push_back({i, 7});
    const MissingMask m(col);
    PrepareOptions raw;
    raw.scale_x = false;
    const auto r = impute(ds, m, global_s(1), rmt_penalties(ds, global_s(1)), default_impute_solver_options(),
                          {}, raw);
    CHECK(r.X_completed_original.col(7).isZero());
    CHECK(rse(ds.X(), r.X_completed_original, m) == doctest::Approx(1.0));
  }

  TEST_CASE("low-noise rank-one data is recovered at random missing entries") {
    const Matrix signal = 10.0 * gaussian(50, 1, 8) * gaussian(1, 50, 9) / std::sqrt(1.0);
    const Matrix X = signal + gaussian(50, 50, 10);
    const MultiCohortDataset ds(X, gaussian(2, 50, 11), {50});
    const MissingMask m = make_missing(ds, 0.05, MaskKind::entry, 12);
    CHECK(m.size() == 125);
    const auto r = impute(ds, m, global_s(1), rmt_penalties(ds, global_s(1)), default_impute_solver_options());
    CHECK(rse(X, r.X_completed_original, m) < 0.15);
  }

  TEST_CASE("observed cells are copied exactly and passes settle") {
    SimulationSpec spec = preset(Scenario::global_individual, "large_S", 21);
    spec.p = 30;
    spec.n = {25, 25, 25};
    const SimulatedTruth t = generate(spec);
    const MissingMask m = make_missing(t.dataset, 0.05, MaskKind::entry, 3);
    const auto r = impute(t.dataset, m, t.cfg, rmt_penalties(t.dataset, t.cfg), default_impute_solver_options());
    const auto dense = m.dense(t.dataset.p(), t.dataset.n());
    for (Index j = 0; j < t.dataset.n(); ++j)
      for (Index i = 0; i < t.dataset.p(); ++i)
        if (!dense(i, j)) CHECK(r.X_completed_original(i, j) == t.dataset.X()(i, j));
    CHECK(r.converged);
    CHECK(r.changes.back() < r.tolerance);
    CHECK(r.outer_iterations <= 20);
  }

  TEST_CASE("a cohort with nothing observed cannot be imputed") {
    const MultiCohortDataset ds(gaussian(3, 8, 1), gaussian(1, 8, 2), {4, 4});
    std::vector<Cell> all;
    for (Index j = 4; j < 8; ++j)
      for (Index i = 0; i < 3; ++i) all.push_back({i, j});
    const auto cfg = global_s(2);
    CHECK_THROWS_AS(impute(ds, MissingMask(all), cfg, rmt_penalties(ds, cfg), default_impute_solver_options()),
                    InsufficientDataError);
  }

  TEST_CASE("default imputation settings") {
    const SolverOptions o = default_impute_solver_options();
    CHECK(o.max_epochs == 30);
    CHECK(ImputeOptions{}.outer_max == 20);
  }
}
