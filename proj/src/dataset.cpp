#include "marrr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "csv.hpp"
#include "marrr/errors.hpp"

namespace marrr {

namespace {

std::vector<std::string> default_ids(std::string_view prefix, Index count) {
  std::vector<std::string> ids;
  ids.reserve(count);
  for (Index i = 0; i < count; ++i) ids.push_back(std::string(prefix) + std::to_string(i + 1));
  return ids;
}

}  // namespace

MultiCohortDataset::MultiCohortDataset(Matrix X, Matrix Y, const std::vector<Index>& cohort_sizes,
                                       std::vector<std::string> cohort_ids,
                                       std::vector<std::string> sample_ids,
                                       std::vector<std::string> feature_ids,
                                       std::vector<std::string> covariate_ids)
    : X_(std::move(X)),
      Y_(std::move(Y)),
      cohort_ids_(std::move(cohort_ids)),
      sample_ids_(std::move(sample_ids)),
      feature_ids_(std::move(feature_ids)),
      covariate_ids_(std::move(covariate_ids)) {
  if (cohort_sizes.empty()) throw DimensionError("dataset needs at least one cohort");
  if (X_.cols() != Y_.cols())
    throw DimensionError("X has " + std::to_string(X_.cols()) + " samples but Y has " +
                         std::to_string(Y_.cols()));
  Index at = 0;
  for (Index size : cohort_sizes) {
    if (size < 1) throw DimensionError("every cohort needs at least one sample");
    ranges_.push_back({at, at + size});
    at += size;
  }
  if (at != X_.cols())
    throw DimensionError("cohort sizes sum to " + std::to_string(at) + " but X has " +
                         std::to_string(X_.cols()) + " samples");
  if (cohort_ids_.empty()) cohort_ids_ = default_ids("cohort", J());
  if (sample_ids_.empty()) sample_ids_ = default_ids("s", n());
  if (feature_ids_.empty()) feature_ids_ = default_ids("f", p());
  if (covariate_ids_.empty()) covariate_ids_ = default_ids("y", q());
  if (static_cast<Index>(cohort_ids_.size()) != J() ||
      static_cast<Index>(sample_ids_.size()) != n() ||
      static_cast<Index>(feature_ids_.size()) != p() ||
      static_cast<Index>(covariate_ids_.size()) != q())
    throw DimensionError("id list length does not match matrix shape");
  std::unordered_set<std::string> seen;
  for (const auto& s : sample_ids_)
    if (!seen.insert(s).second) throw SchemaError("duplicate sample id '" + s + "'");
  for (Index i = 0; i < Y_.size(); ++i)
    if (!std::isfinite(Y_.data()[i])) throw SchemaError("covariates must be fully observed");
}

MultiCohortDataset::MultiCohortDataset(const std::vector<CohortBlock>& blocks) {
  if (blocks.empty()) throw DimensionError("dataset needs at least one cohort");
  const auto& first = blocks.front();
  Index n = 0;
  for (const auto& b : blocks) {
    if (b.X.rows() != first.X.rows() || b.Y.rows() != first.Y.rows())
      throw DimensionError("cohort '" + b.cohort_id + "' has mismatched feature or covariate count");
    if (b.X.cols() != b.Y.cols())
      throw DimensionError("cohort '" + b.cohort_id + "' has mismatched sample counts");
    if (b.feature_ids != first.feature_ids || b.covariate_ids != first.covariate_ids)
      throw SchemaError("cohort '" + b.cohort_id + "' has different feature or covariate ids");
    n += b.X.cols();
  }
  Matrix X(first.X.rows(), n), Y(first.Y.rows(), n);
  std::vector<Index> sizes;
  std::vector<std::string> cohort_ids, sample_ids;
  Index at = 0;
  for (const auto& b : blocks) {
    X.middleCols(at, b.X.cols()) = b.X;
    Y.middleCols(at, b.Y.cols()) = b.Y;
    sizes.push_back(b.X.cols());
    cohort_ids.push_back(b.cohort_id);
    if (static_cast<Index>(b.sample_ids.size()) == b.X.cols()) {
      sample_ids.insert(sample_ids.end(), b.sample_ids.begin(), b.sample_ids.end());
    } else {
      for (Index i = 0; i < b.X.cols(); ++i)
        sample_ids.push_back(b.cohort_id + "_s" + std::to_string(i + 1));
    }
    at += b.X.cols();
  }
  *this = MultiCohortDataset(std::move(X), std::move(Y), sizes, std::move(cohort_ids),
                             std::move(sample_ids), first.feature_ids, first.covariate_ids);
}

Index MultiCohortDataset::cohort_of(Index col) const {
  if (col < 0 || col >= n()) throw IndexError("column " + std::to_string(col) + " out of range");
  auto it = std::upper_bound(ranges_.begin(), ranges_.end(), col,
                             [](Index c, const ColumnRange& r) { return c < r.end; });
  return static_cast<Index>(it - ranges_.begin());
}

CohortBlock MultiCohortDataset::block(Index j) const {
  const ColumnRange& r = ranges_.at(j);
  CohortBlock b;
  b.cohort_id = cohort_ids_[j];
  b.X = X_.middleCols(r.begin, r.size());
  b.Y = Y_.middleCols(r.begin, r.size());
  b.sample_ids.assign(sample_ids_.begin() + r.begin, sample_ids_.begin() + r.end);
  b.feature_ids = feature_ids_;
  b.covariate_ids = covariate_ids_;
  return b;
}

bool MultiCohortDataset::has_missing() const { return X_.hasNaN(); }

ConcatenatedView concatenated_view(const MultiCohortDataset& ds) {
  return {ds.X(), ds.Y(), ds.boundaries()};
}

std::string_view mask_kind_name(MaskKind kind) {
  switch (kind) {
    case MaskKind::entry: return "entry";
    case MaskKind::column: return "column";
    case MaskKind::row_within_cohort: return "row";
    case MaskKind::mixed: return "mixed";
  }
  return "entry";
}

MaskKind parse_mask_kind(std::string_view name) {
  if (name == "entry" || name == "entries") return MaskKind::entry;
  if (name == "column" || name == "columns") return MaskKind::column;
  if (name == "row" || name == "rows" || name == "row-within-cohort") return MaskKind::row_within_cohort;
  if (name == "mixed") return MaskKind::mixed;
  throw ConfigError("unknown missingness kind '" + std::string(name) + "'");
}

MissingMask::MissingMask(std::vector<Cell> cells) : cells_(std::move(cells)) {
  std::sort(cells_.begin(), cells_.end());
  cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
}

bool MissingMask::contains(Index row, Index col) const {
  return std::binary_search(cells_.begin(), cells_.end(), Cell{row, col});
}

MissingMask MissingMask::merged(const MissingMask& other) const {
  std::vector<Cell> all = cells_;
  all.insert(all.end(), other.cells_.begin(), other.cells_.end());
  return MissingMask(std::move(all));
}

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> MissingMask::dense(Index p, Index n) const {
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> out =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(p, n, false);
  for (const auto& c : cells_) {
    if (c.row < 0 || c.row >= p || c.col < 0 || c.col >= n)
      throw IndexError("mask cell (" + std::to_string(c.row) + "," + std::to_string(c.col) +
                       ") outside " + std::to_string(p) + "x" + std::to_string(n));
    out(c.row, c.col) = true;
  }
  return out;
}

MissingMask mask_from_dataset(const MultiCohortDataset& ds) {
  std::vector<Cell> cells;
  const Matrix& X = ds.X();
  for (Index j = 0; j < X.cols(); ++j)
    for (Index i = 0; i < X.rows(); ++i)
      if (std::isnan(X(i, j))) cells.push_back({i, j});
  return MissingMask(std::move(cells));
}

namespace {

struct MaskLayout {
  std::vector<bool> full_col;
  // full_row(i, j): row i masked across every column of cohort j
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> full_row;
};

MaskLayout mask_layout(const MissingMask& mask, const MultiCohortDataset& ds) {
  const auto dense = mask.dense(ds.p(), ds.n());
  const auto& ranges = ds.boundaries();
  MaskLayout out;
  out.full_col.resize(ds.n());
  for (Index c = 0; c < ds.n(); ++c) out.full_col[c] = dense.col(c).all();
  out.full_row.resize(ds.p(), ds.J());
  for (Index j = 0; j < ds.J(); ++j)
    for (Index i = 0; i < ds.p(); ++i)
      out.full_row(i, j) = dense.row(i).segment(ranges[j].begin, ranges[j].size()).all();
  return out;
}

}  // namespace

MaskKind classify_mask(const MissingMask& mask, const MultiCohortDataset& ds) {
  const MaskLayout layout = mask_layout(mask, ds);
  if (mask.empty()) return MaskKind::entry;

  std::size_t in_col = 0, in_row = 0, row_only = 0, rest = 0;
  for (const auto& c : mask.cells()) {
    const bool col = layout.full_col[c.col];
    const bool row = layout.full_row(c.row, ds.cohort_of(c.col));
    in_col += col;
    in_row += row;
    if (row && !col) ++row_only;
    if (!row && !col) ++rest;
  }
  if (in_col == mask.size()) return MaskKind::column;
  if (in_row == mask.size()) return MaskKind::row_within_cohort;
  const int parts = (in_col > 0) + (row_only > 0) + (rest > 0);
  return parts > 1 ? MaskKind::mixed : MaskKind::entry;
}

MaskParts split_mask(const MissingMask& mask, const MultiCohortDataset& ds) {
  const MaskLayout layout = mask_layout(mask, ds);
  std::vector<Cell> col, row, entry;
  for (const auto& c : mask.cells()) {
    if (layout.full_col[c.col]) col.push_back(c);
    else if (layout.full_row(c.row, ds.cohort_of(c.col))) row.push_back(c);
    else entry.push_back(c);
  }
  return {MissingMask(std::move(entry)), MissingMask(std::move(col)), MissingMask(std::move(row))};
}

MultiCohortDataset load_dataset(const std::filesystem::path& x_path,
                                const std::filesystem::path& y_path,
                                const std::filesystem::path& cohort_map_path) {
  const csv::Table xt = csv::read(x_path);
  const csv::Table yt = csv::read(y_path);
  const csv::Table mt = csv::read(cohort_map_path);

  if (xt.header.size() < 2) throw SchemaError(x_path.string() + ": no sample columns");
  if (yt.header.size() != xt.header.size())
    throw DimensionError("X file has " + std::to_string(xt.header.size() - 1) +
                         " samples but Y file has " + std::to_string(yt.header.size() - 1));
  const std::size_t n = xt.header.size() - 1;

  std::unordered_map<std::string, std::size_t> x_pos;
  for (std::size_t c = 0; c < n; ++c)
    if (!x_pos.emplace(xt.header[c + 1], c).second)
      throw SchemaError("duplicate sample id '" + xt.header[c + 1] + "' in " + x_path.string());
  std::vector<std::size_t> y_pos(n);  // X column -> Y column
  {
    std::vector<bool> hit(n, false);
    for (std::size_t c = 0; c < n; ++c) {
      auto it = x_pos.find(yt.header[c + 1]);
      if (it == x_pos.end())
        throw SchemaError("unknown sample id '" + yt.header[c + 1] + "' in " + y_path.string());
      if (hit[it->second])
        throw SchemaError("duplicate sample id '" + yt.header[c + 1] + "' in " + y_path.string());
      hit[it->second] = true;
      y_pos[it->second] = c;
    }
  }

  auto find_col = [&](const std::string& name) {
    auto it = std::find(mt.header.begin(), mt.header.end(), name);
    if (it == mt.header.end())
      throw SchemaError(cohort_map_path.string() + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - mt.header.begin());
  };
  const std::size_t sid_col = find_col("sample_id");
  const std::size_t cid_col = find_col("cohort_id");

  std::vector<std::string> cohort_order;
  std::unordered_map<std::string, std::size_t> cohort_index;
  std::vector<std::ptrdiff_t> cohort_of_sample(n, -1);
  for (const auto& row : mt.rows) {
    if (row.size() != mt.header.size())
      throw DimensionError(cohort_map_path.string() + ": ragged row");
    const std::string& sid = row[sid_col];
    const std::string& cid = row[cid_col];
    auto it = x_pos.find(sid);
    if (it == x_pos.end()) throw SchemaError("unknown sample id '" + sid + "' in cohort map");
    if (cohort_of_sample[it->second] >= 0)
      throw SchemaError("sample id '" + sid + "' assigned twice in cohort map");
    auto [cit, inserted] = cohort_index.emplace(cid, cohort_order.size());
    if (inserted) cohort_order.push_back(cid);
    cohort_of_sample[it->second] = static_cast<std::ptrdiff_t>(cit->second);
  }
  for (std::size_t c = 0; c < n; ++c)
    if (cohort_of_sample[c] < 0)
      throw SchemaError("sample id '" + xt.header[c + 1] + "' missing from cohort map");

  // Regroup columns so each cohort is contiguous, keeping file order inside.
  std::vector<std::size_t> order;
  std::vector<Index> sizes(cohort_order.size(), 0);
  for (std::size_t j = 0; j < cohort_order.size(); ++j)
    for (std::size_t c = 0; c < n; ++c)
      if (cohort_of_sample[c] == static_cast<std::ptrdiff_t>(j)) {
        order.push_back(c);
        ++sizes[j];
      }

  auto parse_matrix = [&](const csv::Table& t, const std::filesystem::path& path, bool allow_na,
                          std::vector<std::string>& ids, bool y_file) {
    Matrix m(static_cast<Index>(t.rows.size()), static_cast<Index>(n));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const auto& row = t.rows[i];
      if (row.size() != t.header.size())
        throw DimensionError(path.string() + ": row " + std::to_string(i + 1) + " has " +
                             std::to_string(row.size()) + " fields, expected " +
                             std::to_string(t.header.size()));
      ids.push_back(row[0]);
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = y_file ? y_pos[order[k]] : order[k];
        const std::string& cell = row[src + 1];
        if (cell == "NA") {
          if (!allow_na) throw SchemaError(path.string() + ": covariates may not be missing");
          m(static_cast<Index>(i), static_cast<Index>(k)) = NAN;
        } else {
          m(static_cast<Index>(i), static_cast<Index>(k)) = csv::parse_double(cell, path.string());
        }
      }
    }
    return m;
  };

  std::vector<std::string> feature_ids, covariate_ids, sample_ids;
  Matrix X = parse_matrix(xt, x_path, true, feature_ids, false);
  Matrix Y = parse_matrix(yt, y_path, false, covariate_ids, true);
  for (std::size_t c : order) sample_ids.push_back(xt.header[c + 1]);
  return MultiCohortDataset(std::move(X), std::move(Y), sizes, cohort_order, std::move(sample_ids),
                            std::move(feature_ids), std::move(covariate_ids));
}

void save_dataset(const MultiCohortDataset& ds, const std::filesystem::path& x_path,
                  const std::filesystem::path& y_path,
                  const std::filesystem::path& cohort_map_path) {
  auto labeled = [&](const Matrix& m, const std::string& corner,
                     const std::vector<std::string>& ids) {
    csv::Table t;
    t.header.push_back(corner);
    t.header.insert(t.header.end(), ds.sample_ids().begin(), ds.sample_ids().end());
    for (Index i = 0; i < m.rows(); ++i) {
      std::vector<std::string> row{ids[i]};
      for (Index j = 0; j < m.cols(); ++j) row.push_back(csv::format_double(m(i, j)));
      t.rows.push_back(std::move(row));
    }
    return t;
  };
  csv::write(x_path, labeled(ds.X(), "feature_id", ds.feature_ids()));
  csv::write(y_path, labeled(ds.Y(), "covariate_id", ds.covariate_ids()));
  csv::Table map;
  map.header = {"sample_id", "cohort_id"};
  for (Index c = 0; c < ds.n(); ++c)
    map.rows.push_back({ds.sample_ids()[c], ds.cohort_ids()[ds.cohort_of(c)]});
  csv::write(cohort_map_path, map);
}

MissingMask load_mask(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  if (t.header.size() != 2 || t.header[0] != "row_index" || t.header[1] != "col_index")
    throw SchemaError(path.string() + ": expected header row_index,col_index");
  std::vector<Cell> cells;
  for (const auto& row : t.rows) {
    if (row.size() != 2) throw DimensionError(path.string() + ": ragged row");
    cells.push_back({static_cast<Index>(csv::parse_integer(row[0], path.string())),
                     static_cast<Index>(csv::parse_integer(row[1], path.string()))});
  }
  return MissingMask(std::move(cells));
}

void save_mask(const MissingMask& mask, const std::filesystem::path& path) {
  csv::Table t;
  t.header = {"row_index", "col_index"};
  for (const auto& c : mask.cells()) t.rows.push_back({std::to_string(c.row), std::to_string(c.col)});
  csv::write(path, t);
}

MultiCohortDataset with_missing(const MultiCohortDataset& ds, const MissingMask& mask) {
  Matrix X = ds.X();
  mask.dense(ds.p(), ds.n());  // bounds check
  for (const auto& c : mask.cells()) X(c.row, c.col) = NAN;
  std::vector<Index> sizes;
  for (const auto& r : ds.boundaries()) sizes.push_back(r.size());
  return MultiCohortDataset(std::move(X), ds.Y(), sizes, ds.cohort_ids(), ds.sample_ids(),
                            ds.feature_ids(), ds.covariate_ids());
}

}  // namespace marrr
