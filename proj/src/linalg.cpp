#include "marrr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace marrr {

Index total_columns(std::span<const ColumnRange> ranges) {
  Index total = 0;
  for (const auto& r : ranges) total += r.size();
  return total;
}

Matrix gather_columns(const Matrix& m, std::span<const ColumnRange> ranges) {
  Matrix out(m.rows(), total_columns(ranges));
  Index at = 0;
  for (const auto& r : ranges) {
    out.middleCols(at, r.size()) = m.middleCols(r.begin, r.size());
    at += r.size();
  }
  return out;
}

void scatter_add_columns(Matrix& m, std::span<const ColumnRange> ranges,
                         const Matrix& compact, double alpha) {
  Index at = 0;
  for (const auto& r : ranges) {
    m.middleCols(r.begin, r.size()) += alpha * compact.middleCols(at, r.size());
    at += r.size();
  }
}

void scatter_columns(Matrix& m, std::span<const ColumnRange> ranges, const Matrix& compact) {
  Index at = 0;
  for (const auto& r : ranges) {
    m.middleCols(r.begin, r.size()) = compact.middleCols(at, r.size());
    at += r.size();
  }
}

namespace {

void canonicalize_columns(Matrix& U, Matrix& V) {
  for (Index j = 0; j < U.cols(); ++j) {
    Index best = 0;
    double best_abs = -1.0;
    for (Index i = 0; i < U.rows(); ++i) {
      const double a = std::abs(U(i, j));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (U.rows() > 0 && U(best, j) < 0.0) {
      U.col(j) = -U.col(j);
      V.col(j) = -V.col(j);
    }
  }
}

bool prefer_gram(const Matrix& m) {
  const Index lo = std::min(m.rows(), m.cols());
  const Index hi = std::max(m.rows(), m.cols());
  return lo <= 64 || hi >= 2 * lo;
}

// Eigenpairs of the smaller Gram matrix, largest first.
struct GramSpectrum {
  Vector sigma;
  Matrix vectors;  // eigenvectors of the Gram matrix, same order as sigma
  bool left = true;  // true when vectors are left singular vectors
};

GramSpectrum gram_spectrum(const Matrix& m) {
  GramSpectrum out;
  out.left = m.rows() <= m.cols();
  Matrix gram = out.left ? Matrix(m * m.transpose()) : Matrix(m.transpose() * m);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const Index k = gram.rows();
  out.sigma.resize(k);
  out.vectors.resize(k, k);
  for (Index i = 0; i < k; ++i) {
    const Index src = k - 1 - i;
    out.sigma(i) = std::sqrt(std::max(eig.eigenvalues()(src), 0.0));
    out.vectors.col(i) = eig.eigenvectors().col(src);
  }
  return out;
}

}  // namespace

void canonicalize_signs(Svd& svd) { canonicalize_columns(svd.U, svd.V); }

Svd thin_svd(const Matrix& m) {
  Svd out;
  if (m.size() == 0) {
    const Index k = std::min(m.rows(), m.cols());
    out.U = Matrix::Zero(m.rows(), k);
    out.V = Matrix::Zero(m.cols(), k);
    out.d = Vector::Zero(k);
    return out;
  }
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.U = svd.matrixU();
  out.V = svd.matrixV();
  out.d = svd.singularValues();
  canonicalize_signs(out);
  return out;
}

Vector singular_values(const Matrix& m) {
  if (m.size() == 0) return Vector::Zero(0);
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues();
}

double nuclear_norm(const Matrix& m) { return singular_values(m).sum(); }

Matrix svt(const Matrix& m, double lambda) {
  Svd s = thin_svd(m);
  Vector shrunk = (s.d.array() - lambda).max(0.0).matrix();
  return s.U * shrunk.asDiagonal() * s.V.transpose();
}

Matrix ThresholdedSvd::product() const {
  if (d.size() == 0) return Matrix::Zero(U.rows(), V.rows());
  return U * d.asDiagonal() * V.transpose();
}

ThresholdedSvd threshold_svd(const Matrix& m, double lambda) {
  ThresholdedSvd out;
  if (m.size() == 0 || !prefer_gram(m)) {
    Svd s = thin_svd(m);
    Index keep = 0;
    while (keep < s.d.size() && s.d(keep) > lambda) ++keep;
    out.U = s.U.leftCols(keep);
    out.V = s.V.leftCols(keep);
    out.d = (s.d.head(keep).array() - lambda).matrix();
    out.shrunk_sum = out.d.sum();
    return out;
  }

  GramSpectrum g = gram_spectrum(m);
  Index keep = 0;
  while (keep < g.sigma.size() && g.sigma(keep) > lambda) ++keep;
  const Vector sigma = g.sigma.head(keep);
  if (g.left) {
    out.U = g.vectors.leftCols(keep);
    out.V = m.transpose() * out.U;
    for (Index j = 0; j < keep; ++j) out.V.col(j) /= sigma(j);
  } else {
    out.V = g.vectors.leftCols(keep);
    out.U = m * out.V;
    for (Index j = 0; j < keep; ++j) out.U.col(j) /= sigma(j);
  }
  canonicalize_columns(out.U, out.V);
  out.d = (sigma.array() - lambda).matrix();
  out.shrunk_sum = out.d.sum();
  return out;
}

double row_orthonormality_error(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  Matrix g = m * m.transpose();
  g.diagonal().array() -= 1.0;
  return g.cwiseAbs().maxCoeff();
}

}  // namespace marrr
