#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "marrr/linalg.hpp"

namespace marrr {

struct CohortBlock {
  std::string cohort_id;
  Matrix X;  // p x n_j
  Matrix Y;  // q x n_j
  std::vector<std::string> sample_ids;
  std::vector<std::string> feature_ids;
  std::vector<std::string> covariate_ids;
};

// Outcomes and covariates for J cohorts stored side by side. Columns of each
// cohort are contiguous and cohorts appear in a fixed order. Missing outcome
// cells hold NaN.
class MultiCohortDataset {
 public:
  MultiCohortDataset() = default;
  MultiCohortDataset(Matrix X, Matrix Y, const std::vector<Index>& cohort_sizes,
                     std::vector<std::string> cohort_ids = {},
                     std::vector<std::string> sample_ids = {},
                     std::vector<std::string> feature_ids = {},
                     std::vector<std::string> covariate_ids = {});
  explicit MultiCohortDataset(const std::vector<CohortBlock>& blocks);

  Index p() const { return X_.rows(); }
  Index q() const { return Y_.rows(); }
  Index n() const { return X_.cols(); }
  Index J() const { return static_cast<Index>(ranges_.size()); }

  const Matrix& X() const { return X_; }
  const Matrix& Y() const { return Y_; }
  const std::vector<ColumnRange>& boundaries() const { return ranges_; }
  Index cohort_size(Index j) const { return ranges_.at(j).size(); }
  // Cohort index owning a concatenated column.
  Index cohort_of(Index col) const;

  const std::vector<std::string>& cohort_ids() const { return cohort_ids_; }
  const std::vector<std::string>& sample_ids() const { return sample_ids_; }
  const std::vector<std::string>& feature_ids() const { return feature_ids_; }
  const std::vector<std::string>& covariate_ids() const { return covariate_ids_; }

  CohortBlock block(Index j) const;
  bool has_missing() const;

 private:
  Matrix X_;
  Matrix Y_;
  std::vector<ColumnRange> ranges_;
  std::vector<std::string> cohort_ids_, sample_ids_, feature_ids_, covariate_ids_;
};

struct ConcatenatedView {
  const Matrix& X;
  const Matrix& Y;
  const std::vector<ColumnRange>& boundaries;
};

ConcatenatedView concatenated_view(const MultiCohortDataset& ds);

struct Cell {
  Index row = 0;
  Index col = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

enum class MaskKind { entry, column, row_within_cohort, mixed };

std::string_view mask_kind_name(MaskKind kind);
MaskKind parse_mask_kind(std::string_view name);

// Missing cells of the concatenated outcome matrix, sorted and unique.
class MissingMask {
 public:
  MissingMask() = default;
  explicit MissingMask(std::vector<Cell> cells);

  const std::vector<Cell>& cells() const { return cells_; }
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }
  bool contains(Index row, Index col) const;

  MissingMask merged(const MissingMask& other) const;
  // Dense p x n indicator, true where missing.
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> dense(Index p, Index n) const;

 private:
  std::vector<Cell> cells_;
};

// Cells of ds.X() that are NaN.
MissingMask mask_from_dataset(const MultiCohortDataset& ds);

// Throws IndexError for cells outside the p x n outcome matrix.
MaskKind classify_mask(const MissingMask& mask, const MultiCohortDataset& ds);

struct MaskParts {
  MissingMask entry;   // cells in neither a full column nor a full cohort row
  MissingMask column;  // cells in fully masked columns
  MissingMask row;     // remaining cells in rows masked across a whole cohort
};

// Splits a mask by missingness kind; the parts are disjoint.
MaskParts split_mask(const MissingMask& mask, const MultiCohortDataset& ds);

// X, Y: first column holds the feature or covariate id, header holds sample
// ids. Cohort map: columns sample_id,cohort_id. "NA" marks a missing X cell.
MultiCohortDataset load_dataset(const std::filesystem::path& x_path,
                                const std::filesystem::path& y_path,
                                const std::filesystem::path& cohort_map_path);
void save_dataset(const MultiCohortDataset& ds, const std::filesystem::path& x_path,
                  const std::filesystem::path& y_path,
                  const std::filesystem::path& cohort_map_path);

// row_index,col_index pairs, 0-based into the concatenated matrix.
MissingMask load_mask(const std::filesystem::path& path);
void save_mask(const MissingMask& mask, const std::filesystem::path& path);

// Copy of ds with the masked outcome cells set to NaN.
MultiCohortDataset with_missing(const MultiCohortDataset& ds, const MissingMask& mask);

}  // namespace marrr
