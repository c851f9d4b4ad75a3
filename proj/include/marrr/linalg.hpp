#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace marrr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Half-open column interval [begin, end) into a concatenated matrix.
struct ColumnRange {
  Index begin = 0;
  Index end = 0;

  Index size() const { return end - begin; }
  bool contains(Index col) const { return col >= begin && col < end; }
  friend bool operator==(const ColumnRange&, const ColumnRange&) = default;
};

Index total_columns(std::span<const ColumnRange> ranges);

// Copies the listed column ranges of `m` side by side.
Matrix gather_columns(const Matrix& m, std::span<const ColumnRange> ranges);

// m[:, ranges] += alpha * compact
void scatter_add_columns(Matrix& m, std::span<const ColumnRange> ranges,
                         const Matrix& compact, double alpha = 1.0);

// m[:, ranges] = compact
void scatter_columns(Matrix& m, std::span<const ColumnRange> ranges, const Matrix& compact);

// Thin SVD, singular values descending. Each left singular vector has its
// largest-magnitude entry positive (lowest index wins ties); the matching
// right vector is flipped with it.
struct Svd {
  Matrix U;
  Vector d;
  Matrix V;
};

Svd thin_svd(const Matrix& m);
void canonicalize_signs(Svd& svd);

Vector singular_values(const Matrix& m);
double nuclear_norm(const Matrix& m);

// Soft-thresholds the singular values of m by lambda.
Matrix svt(const Matrix& m, double lambda);

// Components of svt(m, lambda) with strictly positive thresholded value, in
// factored form m' = U diag(d) V^T. `shrunk_sum` is sum(d) = ||m'||_*.
//
// Uses an eigendecomposition of the smaller Gram matrix when that is cheaper;
// every singular value is still computed, only the reconstruction of values
// at or below lambda is skipped.
struct ThresholdedSvd {
  Matrix U;
  Vector d;
  Matrix V;
  double shrunk_sum = 0.0;

  Index rank() const { return d.size(); }
  Matrix product() const;
};

ThresholdedSvd threshold_svd(const Matrix& m, double lambda);

// Largest absolute deviation of m m^T from the identity.
double row_orthonormality_error(const Matrix& m);

}  // namespace marrr
