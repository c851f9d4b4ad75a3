#include "marrr/modules_config.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "csv.hpp"
#include "marrr/errors.hpp"

namespace marrr {

namespace {

void validate_matrix(const IndicatorMatrix& C, Index J, char name) {
  const std::string label = std::string("C_") + name;
  if (C.cols() > 0 && C.rows() != J)
    throw ConfigError(label + " has " + std::to_string(C.rows()) + " rows, expected " +
                      std::to_string(J) + " cohorts");
  for (Index m = 0; m < C.cols(); ++m) {
    for (Index j = 0; j < C.rows(); ++j)
      if (C(j, m) != 0 && C(j, m) != 1)
        throw ConfigError(label + " entries must be 0 or 1");
    if (C.col(m).sum() == 0)
      throw ConfigError(label + " module " + std::to_string(m + 1) + " has no cohorts");
    for (Index o = 0; o < m; ++o)
      if (C.col(o) == C.col(m))
        throw ConfigError(label + " modules " + std::to_string(o + 1) + " and " +
                          std::to_string(m + 1) + " are identical");
  }
}

std::string join_indices(const std::vector<Index>& idx) {
  std::string out;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) out += "+";
    out += std::to_string(idx[i] + 1);
  }
  return out;
}

// Smallest bound (1/c) * sum(weight[i]) over subsets of `pool` whose columns
// sum to c times `target`. Returns false when no subset covers it.
struct Cover {
  double bound = std::numeric_limits<double>::infinity();
  std::vector<Index> members;
};

bool best_cover(const Eigen::VectorXi& target, const IndicatorMatrix& C,
                const std::vector<Index>& pool, const std::vector<double>& weight,
                Cover& best) {
  // Columns outside the target's support can never be part of an exact cover.
  std::vector<Index> inside;
  for (Index i : pool) {
    bool ok = true;
    for (Index j = 0; j < target.size(); ++j)
      if (C(j, i) > target(j)) ok = false;
    if (ok) inside.push_back(i);
  }
  const Index first = [&] {
    for (Index j = 0; j < target.size(); ++j)
      if (target(j)) return j;
    return Index{-1};
  }();
  if (inside.empty() || first < 0) return false;

  bool found = false;
  std::vector<Index> chosen;
  Eigen::VectorXi sum = Eigen::VectorXi::Zero(target.size());
  auto consider = [&] {
    const int c = sum(first);
    if (c <= 0 || sum != c * target) return;
    double total = 0.0;
    for (Index i : chosen) total += weight[i];
    const double bound = total / c;
    if (bound < best.bound) {
      best.bound = bound;
      best.members = chosen;
    }
    found = true;
  };
  const std::size_t max_size = inside.size() <= 16 ? inside.size() : 3;
  // Depth-first over subsets in increasing index order.
  auto recurse = [&](auto&& self, std::size_t start) -> void {
    if (!chosen.empty()) consider();
    if (chosen.size() == max_size) return;
    for (std::size_t t = start; t < inside.size(); ++t) {
      chosen.push_back(inside[t]);
      sum += C.col(inside[t]);
      self(self, t + 1);
      sum -= C.col(inside[t]);
      chosen.pop_back();
    }
  };
  recurse(recurse, 0);
  return found;
}

}  // namespace

void IndicatorConfig::validate(Index J) const {
  if (J < 1) throw ConfigError("need at least one cohort");
  validate_matrix(C_Y, J, 'Y');
  validate_matrix(C_S, J, 'S');
}

IndicatorConfig make_config(const IndicatorMatrix& C_Y, const IndicatorMatrix& C_S) {
  IndicatorConfig cfg{C_Y, C_S};
  const Index J = cfg.J();
  if (cfg.C_Y.cols() == 0) cfg.C_Y.resize(J, 0);
  if (cfg.C_S.cols() == 0) cfg.C_S.resize(J, 0);
  cfg.validate(J);
  return cfg;
}

std::vector<Index> module_cohorts(const IndicatorMatrix& C, Index col) {
  std::vector<Index> out;
  for (Index j = 0; j < C.rows(); ++j)
    if (C(j, col)) out.push_back(j);
  return out;
}

std::vector<ColumnRange> module_ranges(const IndicatorMatrix& C, Index col,
                                       const std::vector<ColumnRange>& cohorts) {
  std::vector<ColumnRange> out;
  for (Index j : module_cohorts(C, col)) {
    const ColumnRange& r = cohorts.at(j);
    if (!out.empty() && out.back().end == r.begin) {
      out.back().end = r.end;
    } else {
      out.push_back(r);
    }
  }
  return out;
}

void PenaltySet::validate(Index K, Index L) const {
  if (static_cast<Index>(lambda_B.size()) != K || static_cast<Index>(lambda_S.size()) != L)
    throw ConfigError("penalty counts (" + std::to_string(lambda_B.size()) + ", " +
                      std::to_string(lambda_S.size()) + ") do not match modules (" +
                      std::to_string(K) + ", " + std::to_string(L) + ")");
  for (double v : lambda_B)
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("penalties must be positive");
  for (double v : lambda_S)
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("penalties must be positive");
}

PenaltySet rmt_penalties(Index p, Index q, const std::vector<Index>& cohort_sizes,
                         const IndicatorConfig& cfg) {
  const Index J = static_cast<Index>(cohort_sizes.size());
  cfg.validate(J);
  PenaltySet pen;
  const double sp = std::sqrt(static_cast<double>(p));
  for (Index k = 0; k < cfg.K(); ++k) pen.lambda_B.push_back(sp + std::sqrt(static_cast<double>(q)));
  for (Index l = 0; l < cfg.L(); ++l) {
    Index samples = 0;
    for (Index j : module_cohorts(cfg.C_S, l)) samples += cohort_sizes[j];
    pen.lambda_S.push_back(sp + std::sqrt(static_cast<double>(samples)));
  }
  return pen;
}

PenaltySet rmt_penalties(const MultiCohortDataset& ds, const IndicatorConfig& cfg) {
  std::vector<Index> sizes;
  for (const auto& r : ds.boundaries()) sizes.push_back(r.size());
  return rmt_penalties(ds.p(), ds.q(), sizes, cfg);
}

std::vector<Prop1Violation> check_prop1(const IndicatorConfig& cfg, const PenaltySet& pen,
                                        const std::vector<double>& y_nuclear_norms) {
  pen.validate(cfg.K(), cfg.L());
  if (static_cast<Index>(y_nuclear_norms.size()) != cfg.K())
    throw DimensionError("need one covariate nuclear norm per covariate module");
  std::vector<Prop1Violation> out;

  auto report = [&](int condition, Index module, std::vector<Index> others, double lhs,
                    double rhs, const std::string& what) {
    std::ostringstream msg;
    msg << "condition " << condition << ": " << what << " " << module + 1 << " penalty " << lhs
        << " is not below " << rhs << " implied by modules " << join_indices(others);
    out.push_back({condition, module, std::move(others), lhs, rhs, msg.str()});
  };

  std::vector<Index> all_y(cfg.K()), all_s(cfg.L());
  std::iota(all_y.begin(), all_y.end(), 0);
  std::iota(all_s.begin(), all_s.end(), 0);

  for (Index k = 0; k < cfg.K(); ++k) {
    const Eigen::VectorXi target = cfg.C_Y.col(k);
    std::vector<Index> pool;
    for (Index i : all_y)
      if (i != k) pool.push_back(i);
    Cover c1;
    if (best_cover(target, cfg.C_Y, pool, pen.lambda_B, c1) && !(pen.lambda_B[k] < c1.bound))
      report(1, k, c1.members, pen.lambda_B[k], c1.bound, "covariate module");

    std::vector<double> scaled(cfg.L());
    for (Index l = 0; l < cfg.L(); ++l) scaled[l] = pen.lambda_S[l] * y_nuclear_norms[k];
    Cover c2;
    if (best_cover(target, cfg.C_S, all_s, scaled, c2) && !(pen.lambda_B[k] < c2.bound))
      report(2, k, c2.members, pen.lambda_B[k], c2.bound, "covariate module");
  }

  for (Index l = 0; l < cfg.L(); ++l) {
    for (Index outer = 0; outer < cfg.L(); ++outer) {
      if (outer == l) continue;
      if ((cfg.C_S.col(outer).array() >= cfg.C_S.col(l).array()).all() &&
          !(pen.lambda_S[l] < pen.lambda_S[outer]))
        report(3, l, {outer}, pen.lambda_S[l], pen.lambda_S[outer], "nested auxiliary module");
    }
    std::vector<Index> pool;
    for (Index i : all_s)
      if (i != l) pool.push_back(i);
    Cover c4;
    if (best_cover(cfg.C_S.col(l), cfg.C_S, pool, pen.lambda_S, c4) &&
        !(pen.lambda_S[l] < c4.bound))
      report(4, l, c4.members, pen.lambda_S[l], c4.bound, "auxiliary module");
  }
  return out;
}

std::vector<Prop1Violation> check_prop1(const IndicatorConfig& cfg, const PenaltySet& pen,
                                        const MultiCohortDataset& ds) {
  cfg.validate(ds.J());
  std::vector<double> norms;
  for (Index k = 0; k < cfg.K(); ++k) {
    auto ranges = module_ranges(cfg.C_Y, k, ds.boundaries());
    norms.push_back(nuclear_norm(gather_columns(ds.Y(), ranges)));
  }
  return check_prop1(cfg, pen, norms);
}

IndicatorConfig enumerate_modules(Index J, Index max_modules) {
  if (J < 1) throw ConfigError("need at least one cohort");
  if (J > 10)
    throw ConfigError("enumerating modules for " + std::to_string(J) +
                      " cohorts is too large; use forward selection instead");
  std::vector<std::vector<Index>> subsets;
  for (Index size = J; size >= 1; --size) {
    // Lexicographic combinations of `size` members.
    std::vector<Index> comb(size);
    std::iota(comb.begin(), comb.end(), 0);
    while (true) {
      subsets.push_back(comb);
      Index i = size - 1;
      while (i >= 0 && comb[i] == J - size + i) --i;
      if (i < 0) break;
      ++comb[i];
      for (Index t = i + 1; t < size; ++t) comb[t] = comb[t - 1] + 1;
    }
  }
  const std::size_t count = max_modules < 0 ? subsets.size()
                                            : std::min<std::size_t>(subsets.size(), max_modules);
  IndicatorMatrix C = IndicatorMatrix::Zero(J, static_cast<Index>(count));
  for (std::size_t m = 0; m < count; ++m)
    for (Index j : subsets[m]) C(j, static_cast<Index>(m)) = 1;
  return IndicatorConfig{C, C};
}

IndicatorConfig load_config(const std::filesystem::path& path,
                            const std::vector<std::string>& cohort_ids) {
  if (!std::filesystem::exists(path))
    throw ConfigError("module indicator file " + path.string() + " does not exist");
  const csv::Table t = csv::read(path);
  if (t.header.empty() || t.header[0] != "cohort_id")
    throw SchemaError(path.string() + ": first column must be cohort_id");
  std::vector<std::size_t> y_cols, s_cols;
  for (std::size_t c = 1; c < t.header.size(); ++c) {
    const std::string& h = t.header[c];
    if (!h.empty() && (h[0] == 'Y' || h[0] == 'y')) {
      y_cols.push_back(c);
    } else if (!h.empty() && (h[0] == 'S' || h[0] == 's')) {
      s_cols.push_back(c);
    } else {
      throw SchemaError(path.string() + ": module column '" + h + "' must start with Y or S");
    }
  }
  const Index J = static_cast<Index>(t.rows.size());
  std::vector<Index> row_of(J);
  std::iota(row_of.begin(), row_of.end(), 0);
  if (!cohort_ids.empty()) {
    if (static_cast<Index>(cohort_ids.size()) != J)
      throw DimensionError(path.string() + ": has " + std::to_string(J) +
                           " cohorts but the dataset has " + std::to_string(cohort_ids.size()));
    std::vector<bool> used(J, false);
    for (Index r = 0; r < J; ++r) {
      auto it = std::find(cohort_ids.begin(), cohort_ids.end(), t.rows[r].at(0));
      if (it == cohort_ids.end())
        throw SchemaError(path.string() + ": unknown cohort '" + t.rows[r][0] + "'");
      const Index j = static_cast<Index>(it - cohort_ids.begin());
      if (used[j]) throw SchemaError(path.string() + ": cohort '" + t.rows[r][0] + "' repeated");
      used[j] = true;
      row_of[r] = j;
    }
  }
  IndicatorConfig cfg{IndicatorMatrix::Zero(J, static_cast<Index>(y_cols.size())),
                      IndicatorMatrix::Zero(J, static_cast<Index>(s_cols.size()))};
  for (Index r = 0; r < J; ++r) {
    const auto& row = t.rows[r];
    if (row.size() != t.header.size()) throw DimensionError(path.string() + ": ragged row");
    for (std::size_t k = 0; k < y_cols.size(); ++k)
      cfg.C_Y(row_of[r], static_cast<Index>(k)) =
          static_cast<int>(csv::parse_integer(row[y_cols[k]], path.string()));
    for (std::size_t l = 0; l < s_cols.size(); ++l)
      cfg.C_S(row_of[r], static_cast<Index>(l)) =
          static_cast<int>(csv::parse_integer(row[s_cols[l]], path.string()));
  }
  cfg.validate(J);
  return cfg;
}

void save_config(const IndicatorConfig& cfg, const std::filesystem::path& path,
                 const std::vector<std::string>& cohort_ids) {
  csv::Table t;
  t.header.push_back("cohort_id");
  for (Index k = 0; k < cfg.K(); ++k) t.header.push_back("Y" + std::to_string(k + 1));
  for (Index l = 0; l < cfg.L(); ++l) t.header.push_back("S" + std::to_string(l + 1));
  for (Index j = 0; j < cfg.J(); ++j) {
    std::vector<std::string> row{cohort_ids.empty() ? "cohort" + std::to_string(j + 1)
                                                    : cohort_ids.at(j)};
    for (Index k = 0; k < cfg.K(); ++k) row.push_back(std::to_string(cfg.C_Y(j, k)));
    for (Index l = 0; l < cfg.L(); ++l) row.push_back(std::to_string(cfg.C_S(j, l)));
    t.rows.push_back(std::move(row));
  }
  csv::write(path, t);
}

PenaltySet load_penalties(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("penalty file " + path.string() + " does not exist");
  const csv::Table t = csv::read(path);
  if (t.header != std::vector<std::string>{"kind", "module", "lambda"})
    throw SchemaError(path.string() + ": expected header kind,module,lambda");
  std::vector<std::pair<Index, double>> b, s;
  for (const auto& row : t.rows) {
    if (row.size() != 3) throw DimensionError(path.string() + ": ragged row");
    const Index m = static_cast<Index>(csv::parse_integer(row[1], path.string()));
    const double v = csv::parse_double(row[2], path.string());
    if (row[0] == "B") {
      b.emplace_back(m, v);
    } else if (row[0] == "S") {
      s.emplace_back(m, v);
    } else {
      throw SchemaError(path.string() + ": kind must be B or S");
    }
  }
  auto place = [&](std::vector<std::pair<Index, double>>& entries) {
    std::vector<double> out(entries.size(), NAN);
    for (auto [m, v] : entries) {
      if (m < 1 || m > static_cast<Index>(entries.size()) || !std::isnan(out[m - 1]))
        throw SchemaError(path.string() + ": module numbers must be 1..count without gaps");
      out[m - 1] = v;
    }
    return out;
  };
  PenaltySet pen{place(b), place(s)};
  pen.validate(static_cast<Index>(pen.lambda_B.size()), static_cast<Index>(pen.lambda_S.size()));
  return pen;
}

void save_penalties(const PenaltySet& pen, const std::filesystem::path& path) {
  csv::Table t;
  t.header = {"kind", "module", "lambda"};
  for (std::size_t k = 0; k < pen.lambda_B.size(); ++k)
    t.rows.push_back({"B", std::to_string(k + 1), csv::format_double(pen.lambda_B[k])});
  for (std::size_t l = 0; l < pen.lambda_S.size(); ++l)
    t.rows.push_back({"S", std::to_string(l + 1), csv::format_double(pen.lambda_S[l])});
  csv::write(path, t);
}

}  // namespace marrr
