#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "marrr/errors.hpp"
#include "marrr/preprocess.hpp"

using namespace marrr;
using marrr::test::gaussian;
using marrr::test::max_abs;
using marrr::test::orthonormal_rows;

namespace {

Matrix centered_rows(const Matrix& M) { return M.colwise() - M.rowwise().mean(); }

double median(Vector v) {
  std::sort(v.begin(), v.end());
  const Index m = v.size() / 2;
  return v.size() % 2 ? v(m) : 0.5 * (v(m - 1) + v(m));
}

}  // namespace

TEST_SUITE("preprocess") {
  TEST_CASE("Marchenko-Pastur median matches sampled eigenvalues") {
    // Median eigenvalue of W W^T / n for a 300 x 600 standard Gaussian W.
    for (auto [p, n] : std::vector<std::pair<Index, Index>>{{300, 600}, {400, 400}}) {
      const Matrix W = gaussian(p, n, static_cast<std::uint64_t>(p + n));
      Eigen::SelfAdjointEigenSolver<Matrix> es(W * W.transpose() / static_cast<double>(n));
      const double sampled = median(es.eigenvalues());
      const double beta = static_cast<double>(p) / static_cast<double>(n);
      CHECK(marchenko_pastur_median(beta) == doctest::Approx(sampled).epsilon(0.03));
    }
  }

  TEST_CASE("noise estimate on standard Gaussian data") {
    // Both orientations: the estimate must not depend on which side is longer.
    for (auto [p, n] : std::vector<std::pair<Index, Index>>{{200, 300}, {300, 200}}) {
      int inside = 0;
      for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const ScaledX s = center_and_scale_x(centered_rows(gaussian(p, n, seed)));
        if (s.sigma_hat >= 0.9 && s.sigma_hat <= 1.1) ++inside;
      }
      CHECK(inside == 50);
    }
  }

  TEST_CASE("refitting the noise estimate on scaled output gives about one") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      Matrix X = 3.0 * gaussian(200, 300, seed);
      X += 20.0 * gaussian(200, 1, seed + 100) * gaussian(1, 300, seed + 200);
      const ScaledX s = center_and_scale_x(X);
      const double again = center_and_scale_x(s.X).sigma_hat;
      CHECK(again >= 0.95);
      CHECK(again <= 1.05);
    }
  }

  TEST_CASE("noise estimate is scale equivariant") {
    const Matrix X = gaussian(40, 60, 9);
    const ScaledX a = center_and_scale_x(X);
    const ScaledX b = center_and_scale_x(2.0 * X);
    CHECK(b.sigma_hat == doctest::Approx(2.0 * a.sigma_hat).epsilon(1e-12));
    CHECK(max_abs(a.X - b.X) < 1e-10);
  }

  TEST_CASE("constant rows center to zero") {
    Matrix X = gaussian(10, 30, 4);
    X.row(3).setConstant(7.0);
    const ScaledX s = center_and_scale_x(X);
    CHECK(s.row_means(3) == doctest::Approx(7.0));
    CHECK(max_abs(s.X.row(3)) < 1e-12);
    CHECK(max_abs(s.X.rowwise().mean()) < 1e-12);
  }

  TEST_CASE("constant matrix has no noise to estimate") {
    CHECK_THROWS_AS(center_and_scale_x(Matrix::Constant(5, 8, 2.0)), DegenerateInputError);
  }

  TEST_CASE("missing cells are skipped by the row means and come out as zero") {
    Matrix X = gaussian(6, 12, 8);
    X(2, 5) = NAN;
    const ScaledX s = center_and_scale_x(X);
    double sum = 0.0;
    for (Index j = 0; j < 12; ++j)
      if (j != 5) sum += X(2, j);
    CHECK(s.row_means(2) == doctest::Approx(sum / 11.0));
    CHECK(s.X(2, 5) == 0.0);
  }

  TEST_CASE("standardize") {
    SUBCASE("two-sample arithmetic") {
      Matrix Y(1, 2);
      Y << 3.0, 4.0;
      const TransformedY t = standardize_y(Y);
      CHECK(t.transform.scale(0) == doctest::Approx(std::sqrt(0.5)));
      CHECK(t.Y(0, 0) == doctest::Approx(-1.0 / std::sqrt(2.0)));
      CHECK(t.Y(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)));
    }
    SUBCASE("idempotent") {
      const TransformedY once = standardize_y(gaussian(3, 20, 2));
      const TransformedY twice = standardize_y(once.Y);
      CHECK(max_abs(twice.transform.scale - Vector::Ones(3)) < 1e-12);
      CHECK(max_abs(twice.Y - once.Y) < 1e-12);
    }
    SUBCASE("all-zero covariate") {
      Matrix Y = gaussian(2, 10, 3);
      Y.row(1).setZero();
      CHECK_THROWS_AS(standardize_y(Y), DegenerateCovariateError);
    }
  }

  TEST_CASE("orthogonalize") {
    SUBCASE("orthonormal input is kept up to sign") {
      const Matrix Y = orthonormal_rows(3, 40, 5);
      // Centered rows of an orthonormal block are no longer orthonormal, so
      // start from a block whose rows already have zero mean.
      const Matrix Yc = centered_rows(Y);
      const TransformedY first = orthogonalize_y(Yc);
      const TransformedY t = orthogonalize_y(first.Y);
      CHECK(max_abs(t.transform.d - Vector::Ones(3)) < 1e-10);
      // Equal singular values leave the basis free up to a rotation, so
      // compare row spaces: the rotation between the two must be orthogonal.
      const Matrix R = t.Y * first.Y.transpose();
      CHECK(max_abs(R * R.transpose() - Matrix::Identity(3, 3)) < 1e-10);
      CHECK(max_abs(R * first.Y - t.Y) < 1e-10);
    }
    SUBCASE("random block has orthonormal rows") {
      const TransformedY t = orthogonalize_y(gaussian(2, 100, 6));
      CHECK(row_orthonormality_error(t.Y) < 1e-10);
    }
    SUBCASE("factorization reproduces the centered block") {
      const Matrix Y = gaussian(4, 30, 7);
      const TransformedY t = orthogonalize_y(Y);
      const Matrix back = t.transform.U * t.transform.d.asDiagonal() * t.Y;
      CHECK(max_abs(back - centered_rows(Y)) < 1e-10);
      CHECK(max_abs(t.transform.apply(Y) - t.Y) < 1e-10);
    }
    SUBCASE("as many covariates as samples") {
      CHECK_THROWS_AS(orthogonalize_y(gaussian(10, 10, 8)), DegeneracyError);
    }
    SUBCASE("rank deficient block") {
      Matrix Y = gaussian(3, 20, 9);
      Y.row(2) = Y.row(0) + Y.row(1);
      CHECK_THROWS_AS(orthogonalize_y(Y), RankDeficiencyError);
    }
  }

  TEST_CASE("coefficient back-maps") {
    SUBCASE("identity standardization") {
      YTransform t;
      t.kind = YTreatment::standardize;
      t.center = Vector::Zero(3);
      t.scale = Vector::Ones(3);
      const Matrix B = gaussian(4, 3, 1);
      CHECK(max_abs(backmap_b(B, t) - B) < 1e-15);
    }
    SUBCASE("uniform scale two halves the coefficients") {
      YTransform t;
      t.kind = YTreatment::standardize;
      t.center = Vector::Zero(3);
      t.scale = Vector::Constant(3, 2.0);
      const Matrix B = gaussian(4, 3, 2);
      CHECK(max_abs(backmap_b(B, t) - B / 2.0) < 1e-15);
    }
    SUBCASE("orthogonalized predictor is reproduced on raw covariates") {
      const Matrix Y = gaussian(3, 25, 3);
      const TransformedY t = orthogonalize_y(Y);
      const Matrix B_fit = gaussian(5, 3, 4);
      const Matrix diff = backmap_b(B_fit, t.transform) * centered_rows(Y) - B_fit * t.Y;
      CHECK(max_abs(diff) < 1e-10);
    }
    SUBCASE("standardized predictor is reproduced on raw covariates") {
      const Matrix Y = gaussian(3, 25, 5);
      const TransformedY t = standardize_y(Y);
      const Matrix B_fit = gaussian(5, 3, 6);
      const Matrix diff = backmap_b(B_fit, t.transform) * centered_rows(Y) - B_fit * t.Y;
      CHECK(max_abs(diff) < 1e-10);
    }
  }

  TEST_CASE("outcome back-map") {
    SUBCASE("round trip") {
      const Matrix X = gaussian(8, 30, 10);
      const ScaledX s = center_and_scale_x(X);
      PreprocessInfo info;
      info.row_means = s.row_means;
      info.sigma_hat = s.sigma_hat;
      CHECK(max_abs(backmap_x(s.X, info) - X) < 1e-10);
    }
    SUBCASE("zero input gives the row means") {
      PreprocessInfo info;
      info.row_means = Vector{{1.0, -2.0}};
      info.sigma_hat = 3.0;
      const Matrix out = backmap_x(Matrix::Zero(2, 4), info);
      CHECK(out.row(0).isConstant(1.0));
      CHECK(out.row(1).isConstant(-2.0));
    }
    SUBCASE("scale only") {
      PreprocessInfo info;
      info.row_means = Vector::Zero(3);
      info.sigma_hat = 2.0;
      CHECK(backmap_x(Matrix::Ones(3, 3), info).isConstant(2.0));
    }
  }

  TEST_CASE("preprocess sidecar round trip") {
    marrr::test::TempDir dir("prep");
    PreprocessInfo info;
    info.row_means = gaussian(4, 1, 1).col(0);
    info.sigma_hat = 1.2345678901234567;
    info.y_transforms.push_back(orthogonalize_y(gaussian(2, 20, 2)).transform);
    info.y_transforms.push_back(standardize_y(gaussian(2, 20, 3)).transform);
    save_preprocess_info(info, dir / "prep.txt");
    const PreprocessInfo back = load_preprocess_info(dir / "prep.txt");
    CHECK(back.sigma_hat == info.sigma_hat);
    CHECK(back.row_means == info.row_means);
    REQUIRE(back.y_transforms.size() == 2);
    CHECK(back.y_transforms[0].kind == YTreatment::orthogonalize);
    CHECK(back.y_transforms[0].U == info.y_transforms[0].U);
    CHECK(back.y_transforms[0].d == info.y_transforms[0].d);
    CHECK(back.y_transforms[1].scale == info.y_transforms[1].scale);
  }

  TEST_CASE("treatment names") {
    CHECK(parse_y_treatment(y_treatment_name(YTreatment::orthogonalize)) == YTreatment::orthogonalize);
    CHECK_THROWS_AS(parse_y_treatment("rotate"), ConfigError);
  }
}
