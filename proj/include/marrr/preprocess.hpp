#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "marrr/linalg.hpp"

namespace marrr {

enum class YTreatment { none, standardize, orthogonalize };

std::string_view y_treatment_name(YTreatment t);
YTreatment parse_y_treatment(std::string_view name);

// Map from a raw covariate block to the block used in fitting.
//   standardize:   Y' = diag(scale)^-1 (Y - center)
//   orthogonalize: Y - center = U diag(d) Y'
struct YTransform {
  YTreatment kind = YTreatment::none;
  Vector center;
  Vector scale;
  Matrix U;
  Vector d;

  Matrix apply(const Matrix& Y) const;
};

struct PreprocessInfo {
  Vector row_means;        // length p, zero when X was not centered
  double sigma_hat = 1.0;  // noise sd estimate, 1 when X was not scaled
  std::vector<YTransform> y_transforms;  // one per covariate module
  // q x J covariate means removed from each cohort before the module
  // transforms; empty when covariates were not centered per cohort.
  Matrix y_cohort_means;
};

// Median of the Marchenko-Pastur law with aspect ratio beta in (0, 1] and
// unit variance.
double marchenko_pastur_median(double beta);

// Noise sd of a centered matrix from its median singular value:
// s_med / sqrt(max(p, n) * mp_median(min/max)). Throws DegenerateInputError
// when the median singular value is zero.
double estimate_noise_sd(const Matrix& X);

struct ScaledX {
  Matrix X;
  Vector row_means;
  double sigma_hat = 1.0;
};

// Centers each row and divides by the noise sd estimate. NaN cells count as
// missing: means use observed cells and missing cells come out as 0.
ScaledX center_and_scale_x(const Matrix& X);

struct TransformedY {
  Matrix Y;
  YTransform transform;
};

// Throws DegenerateCovariateError for a covariate with no variation.
TransformedY standardize_y(const Matrix& Y);
// Throws DegeneracyError when q >= n_k and RankDeficiencyError when the
// centered block has rank below q.
TransformedY orthogonalize_y(const Matrix& Y);
TransformedY transform_y(const Matrix& Y, YTreatment kind);

// Coefficients acting on the centered raw covariates, B_orig (Y - center) =
// B_fit Y'. Noise scaling is not undone here.
Matrix backmap_b(const Matrix& B_fit, const YTransform& t);

// sigma_hat * X + row_means.
Matrix backmap_x(const Matrix& X_scaled, const PreprocessInfo& info);

// Text sidecar: "key,value" lines and [section] headers each followed by a
// CSV block.
void save_preprocess_info(const PreprocessInfo& info, const std::filesystem::path& path);
PreprocessInfo load_preprocess_info(const std::filesystem::path& path);

}  // namespace marrr
