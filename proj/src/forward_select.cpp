#include <cmath>

#include "marrr/errors.hpp"
#include "marrr/modules_config.hpp"

namespace marrr {

namespace {

std::vector<ColumnRange> ranges_for(const std::vector<bool>& members,
                                    const std::vector<ColumnRange>& cohorts) {
  std::vector<ColumnRange> out;
  for (std::size_t j = 0; j < members.size(); ++j)
    if (members[j]) out.push_back(cohorts[j]);
  return out;
}

// Decrease of 0.5*||R - S||^2 + lambda*||S||_* from S = 0 to its minimizer.
double threshold_gain(const Matrix& R, const std::vector<ColumnRange>& ranges) {
  const Matrix block = gather_columns(R, ranges);
  const double lambda = std::sqrt(static_cast<double>(R.rows())) +
                        std::sqrt(static_cast<double>(block.cols()));
  const Vector d = singular_values(block);
  double gain = 0.0;
  for (Index i = 0; i < d.size(); ++i)
    if (d(i) > lambda) gain += 0.5 * (d(i) - lambda) * (d(i) - lambda);
  return gain;
}

}  // namespace

IndicatorConfig forward_select(const Matrix& X, const std::vector<ColumnRange>& cohorts,
                               Index L_max) {
  if (X.hasNaN()) throw PreconditionError("forward selection needs a completed outcome matrix");
  if (total_columns(cohorts) != X.cols())
    throw DimensionError("cohort ranges do not cover the outcome matrix");
  const std::size_t J = cohorts.size();
  Matrix R = X;
  std::vector<std::vector<bool>> chosen;

  for (Index l = 0; l < L_max; ++l) {
    std::vector<bool> members(J, false);
    double score = 0.0;
    while (true) {
      std::ptrdiff_t best_j = -1;
      double best = score;
      for (std::size_t j = 0; j < J; ++j) {
        if (members[j]) continue;
        members[j] = true;
        const double s = threshold_gain(R, ranges_for(members, cohorts));
        members[j] = false;
        if (s > best) {  // strict, so the lowest index keeps ties
          best = s;
          best_j = static_cast<std::ptrdiff_t>(j);
        }
      }
      if (best_j < 0) break;
      members[best_j] = true;
      score = best;
    }
    if (score <= 0.0) break;  // residual unchanged, later modules would be empty too

    const auto ranges = ranges_for(members, cohorts);
    const Matrix block = gather_columns(R, ranges);
    const double lambda = std::sqrt(static_cast<double>(R.rows())) +
                          std::sqrt(static_cast<double>(block.cols()));
    scatter_add_columns(R, ranges, threshold_svd(block, lambda).product(), -1.0);

    bool repeated = false;
    for (const auto& c : chosen) repeated = repeated || c == members;
    if (!repeated) chosen.push_back(members);
  }

  IndicatorMatrix C = IndicatorMatrix::Zero(static_cast<Index>(J), static_cast<Index>(chosen.size()));
  for (std::size_t m = 0; m < chosen.size(); ++m)
    for (std::size_t j = 0; j < J; ++j) C(static_cast<Index>(j), static_cast<Index>(m)) = chosen[m][j];
  return IndicatorConfig{C, C};
}

}  // namespace marrr
