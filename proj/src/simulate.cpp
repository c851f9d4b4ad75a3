#include "marrr/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "marrr/errors.hpp"

namespace marrr {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 applied to a state advanced by the replicate index
  std::uint64_t z = master + (index + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Matrix standard_normal(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

double entry_sd(const Matrix& m) {
  const double count = static_cast<double>(m.size());
  if (count < 2) return 0.0;
  const double mean = m.mean();
  return std::sqrt((m.array() - mean).square().sum() / (count - 1.0));
}

std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::aRRR_single: return "aRRR_single";
    case Scenario::mRRR_two_cohort: return "mRRR_two_cohort";
    case Scenario::global_individual: return "global_individual";
    case Scenario::orthogonality_study: return "orthogonality_study";
  }
  return "aRRR_single";
}

Scenario parse_scenario(std::string_view name) {
  for (Scenario s : {Scenario::aRRR_single, Scenario::mRRR_two_cohort, Scenario::global_individual,
                     Scenario::orthogonality_study})
    if (scenario_name(s) == name) return s;
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

void SimulationSpec::validate() const {
  if (p < 1 || q < 1 || n.empty()) throw ConfigError("simulation dimensions must be positive");
  for (Index nj : n)
    if (nj < 1) throw ConfigError("cohort sizes must be positive");
  if (rank_b < 1 || rank_s < 1) throw ConfigError("ranks must be positive");
  for (double s : signal_sds)
    if (!(s >= 0.0)) throw ConfigError("signal sd targets must be non-negative");
  const std::size_t needed = scenario == Scenario::global_individual ? 4 : 2;
  if (signal_sds.size() != needed)
    throw ConfigError(std::string(scenario_name(scenario)) + " needs " + std::to_string(needed) +
                      " signal sd values");
  if (scenario == Scenario::aRRR_single && n.size() != 1)
    throw ConfigError("aRRR_single has exactly one cohort");
  if (scenario == Scenario::mRRR_two_cohort && n.size() < 2)
    throw ConfigError("mRRR_two_cohort needs at least two cohorts");
}

namespace {

struct RatioRank {
  std::string ratio;
  Index rank = 1;
  bool two_cohorts = false;
  bool orth_gen = false;
};

RatioRank parse_ratio_rank(std::string_view which) {
  RatioRank out;
  std::string w(which);
  auto strip = [&](const std::string& suffix) {
    if (w.size() > suffix.size() && w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0) {
      w.erase(w.size() - suffix.size());
      return true;
    }
    return false;
  };
  out.orth_gen = strip("_orthgen");
  out.two_cohorts = strip("_j2");
  const auto cut = w.find("_r");
  if (cut == std::string::npos) throw ConfigError("variant '" + std::string(which) + "' must look like <ratio>_r<rank>");
  out.ratio = w.substr(0, cut);
  const std::string rank = w.substr(cut + 2);
  if (rank != "1" && rank != "5") throw ConfigError("variant rank must be 1 or 5");
  out.rank = rank == "1" ? 1 : 5;
  if (out.ratio != "10" && out.ratio != "1" && out.ratio != "0.1")
    throw ConfigError("variant ratio must be 10, 1 or 0.1");
  return out;
}

}  // namespace

SimulationSpec preset(Scenario scenario, std::string_view which, std::uint64_t seed) {
  SimulationSpec spec;
  spec.scenario = scenario;
  spec.seed = seed;
  spec.p = 100;
  spec.q = 10;
  spec.rank_s = 5;
  switch (scenario) {
    case Scenario::aRRR_single: {
      const RatioRank rr = parse_ratio_rank(which);
      spec.n = {100};
      spec.rank_b = rr.rank;
      spec.signal_sds = rr.ratio == "10" ? std::vector<double>{5.0, 0.5}
                        : rr.ratio == "1" ? std::vector<double>{1.0, 1.0}
                                          : std::vector<double>{0.5, 5.0};
      break;
    }
    case Scenario::mRRR_two_cohort: {
      const RatioRank rr = parse_ratio_rank(which);
      spec.n = {100, 100};
      spec.rank_b = rr.rank;
      spec.signal_sds = rr.ratio == "10" ? std::vector<double>{2.0, 0.2}
                        : rr.ratio == "1" ? std::vector<double>{1.0, 1.0}
                                          : std::vector<double>{0.2, 2.0};
      break;
    }
    case Scenario::global_individual: {
      spec.n = std::vector<Index>(5, 60);
      spec.rank_b = 5;
      spec.rank_s = 5;
      spec.signal_sds = {1.0, 1.0, 1.0, 1.0};
      const double big = std::sqrt(10.0);
      if (which == "large_B") spec.signal_sds[0] = big;
      else if (which == "large_S") spec.signal_sds[1] = big;
      else if (which == "large_Bi") spec.signal_sds[2] = big;
      else if (which == "large_Si") spec.signal_sds[3] = big;
      else throw ConfigError("variant must be one of large_B, large_S, large_Bi, large_Si");
      break;
    }
    case Scenario::orthogonality_study: {
      const RatioRank rr = parse_ratio_rank(which);
      spec.rank_b = rr.rank;
      spec.orthogonalize_y_in_generation = rr.orth_gen;
      if (rr.two_cohorts) {
        spec.n = {100, 100};
        spec.signal_sds = rr.ratio == "10" ? std::vector<double>{2.0, 0.2}
                          : rr.ratio == "1" ? std::vector<double>{1.0, 1.0}
                                            : std::vector<double>{0.2, 2.0};
      } else {
        spec.n = {100};
        spec.signal_sds = rr.ratio == "10" ? std::vector<double>{5.0, 0.5}
                          : rr.ratio == "1" ? std::vector<double>{1.0, 1.0}
                                            : std::vector<double>{0.5, 5.0};
      }
      break;
    }
  }
  spec.validate();
  return spec;
}

namespace {

std::vector<ColumnRange> cohort_ranges(const std::vector<Index>& n) {
  std::vector<ColumnRange> out;
  Index at = 0;
  for (Index nj : n) {
    out.push_back({at, at + nj});
    at += nj;
  }
  return out;
}

// One global column followed by one column per cohort.
IndicatorMatrix global_and_individual(Index J) {
  IndicatorMatrix C = IndicatorMatrix::Zero(J, J + 1);
  C.col(0).setOnes();
  for (Index j = 0; j < J; ++j) C(j, j + 1) = 1;
  return C;
}

double safe_scale(double target, double current) {
  if (target == 0.0) return 0.0;
  if (!(current > 0.0)) throw DegenerateInputError("generated term has zero spread");
  return target / current;
}

Matrix place(const Matrix& compact, const std::vector<ColumnRange>& ranges, Index p, Index n) {
  Matrix out = Matrix::Zero(p, n);
  scatter_columns(out, ranges, compact);
  return out;
}

}  // namespace

SimulatedTruth generate(const SimulationSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const Index p = spec.p, q = spec.q, J = static_cast<Index>(spec.n.size());
  const auto cohorts = cohort_ranges(spec.n);
  const Index n = total_columns(cohorts);

  Matrix Y(q, n);
  for (Index j = 0; j < J; ++j) {
    Matrix Yj = standard_normal(q, spec.n[j], rng);
    if (spec.orthogonalize_y_in_generation) {
      if (q >= spec.n[j]) throw DegeneracyError("cannot orthogonalize covariates with q >= n_j");
      const double sd = entry_sd(Yj);
      Matrix Vt = thin_svd(Yj).V.transpose();
      Yj = Vt * (sd / entry_sd(Vt));
    }
    Y.middleCols(cohorts[j].begin, spec.n[j]) = Yj;
  }

  SimulatedTruth truth;
  truth.signal = Matrix::Zero(p, n);
  auto add_covariate_term = [&](const Matrix& B, const std::vector<ColumnRange>& ranges) {
    truth.true_B.push_back(B);
    scatter_add_columns(truth.signal, ranges, B * gather_columns(Y, ranges));
  };
  auto add_auxiliary_term = [&](const Matrix& S_full) {
    truth.true_S.push_back(S_full);
    truth.signal += S_full;
  };
  const std::vector<ColumnRange> everything{{0, n}};

  switch (spec.scenario) {
    case Scenario::aRRR_single: {
      const Matrix B0 = standard_normal(p, spec.rank_b, rng) * standard_normal(q, spec.rank_b, rng).transpose();
      const Matrix S0 = standard_normal(p, spec.rank_s, rng) * standard_normal(spec.rank_s, n, rng);
      add_covariate_term(B0 * safe_scale(spec.signal_sds[0], entry_sd(B0 * Y)), everything);
      add_auxiliary_term(S0 * safe_scale(spec.signal_sds[1], entry_sd(S0)));
      truth.cfg = make_config(IndicatorMatrix::Ones(1, 1), IndicatorMatrix::Ones(1, 1));
      break;
    }
    case Scenario::mRRR_two_cohort: {
      const IndicatorMatrix C = global_and_individual(J);
      for (Index k = 0; k < C.cols(); ++k) {
        const Matrix B0 = standard_normal(p, spec.rank_b, rng) * standard_normal(q, spec.rank_b, rng).transpose();
        add_covariate_term(B0 * spec.signal_sds[k == 0 ? 0 : 1], module_ranges(C, k, cohorts));
      }
      truth.cfg = make_config(C, IndicatorMatrix(J, 0));
      break;
    }
    case Scenario::global_individual: {
      const IndicatorMatrix C = global_and_individual(J);
      for (Index k = 0; k < C.cols(); ++k) {
        const auto ranges = module_ranges(C, k, cohorts);
        const Matrix B0 = standard_normal(p, spec.rank_b, rng) * standard_normal(q, spec.rank_b, rng).transpose();
        const Matrix term = place(B0 * gather_columns(Y, ranges), ranges, p, n);
        const double share = std::sqrt(static_cast<double>(total_columns(ranges)) / static_cast<double>(n));
        const double mult = spec.signal_sds[k == 0 ? 0 : 2];
        add_covariate_term(B0 * (mult * safe_scale(share, entry_sd(term))), ranges);
      }
      for (Index l = 0; l < C.cols(); ++l) {
        const auto ranges = module_ranges(C, l, cohorts);
        const Index nl = total_columns(ranges);
        const Matrix V = standard_normal(nl, spec.rank_s, rng);
        const Matrix U = standard_normal(p, spec.rank_s, rng);
        const Matrix term = place(U * V.transpose(), ranges, p, n);
        const double share = std::sqrt(static_cast<double>(nl) / static_cast<double>(n));
        const double mult = spec.signal_sds[l == 0 ? 1 : 3];
        add_auxiliary_term(term * (mult * safe_scale(share, entry_sd(term))));
      }
      truth.cfg = make_config(C, C);
      break;
    }
    case Scenario::orthogonality_study: {
      const IndicatorMatrix C = J == 1 ? IndicatorMatrix::Ones(1, 1) : global_and_individual(J);
      for (Index k = 0; k < C.cols(); ++k) {
        const auto ranges = module_ranges(C, k, cohorts);
        const Matrix B0 = standard_normal(p, spec.rank_b, rng) * standard_normal(q, spec.rank_b, rng).transpose();
        add_covariate_term(B0 * safe_scale(spec.signal_sds[0], entry_sd(B0 * gather_columns(Y, ranges))), ranges);
      }
      for (Index l = 0; l < C.cols(); ++l) {
        const auto ranges = module_ranges(C, l, cohorts);
        const Matrix S0 = standard_normal(p, spec.rank_s, rng) *
                          standard_normal(total_columns(ranges), spec.rank_s, rng).transpose();
        add_auxiliary_term(place(S0 * safe_scale(spec.signal_sds[1], entry_sd(S0)), ranges, p, n));
      }
      truth.cfg = make_config(C, C);
      break;
    }
  }

  truth.true_E = standard_normal(p, n, rng);
  Matrix X = truth.signal + truth.true_E;
  truth.dataset = MultiCohortDataset(std::move(X), std::move(Y), spec.n);
  return truth;
}

MissingMask make_missing(const MultiCohortDataset& ds, double fraction, MaskKind kind,
                         std::uint64_t seed) {
  if (!(fraction > 0.0) || !(fraction < 1.0)) throw ConfigError("missing fraction must lie in (0, 1)");
  std::mt19937_64 rng(seed);
  const Index p = ds.p(), n = ds.n(), J = ds.J();
  std::vector<Cell> cells;
  switch (kind) {
    case MaskKind::entry: {
      const Index count = std::max<Index>(1, std::llround(fraction * static_cast<double>(p * n)));
      std::vector<Index> idx(p * n);
      std::iota(idx.begin(), idx.end(), 0);
      std::vector<Index> pick;
      std::vector<Index> left(J);
      for (Index j = 0; j < J; ++j) left[j] = p * ds.cohort_size(j);
      // Partial Fisher-Yates; skip a cell that would empty its cohort.
      Index filled = 0;
      for (Index t = 0; t < static_cast<Index>(idx.size()) && filled < count; ++t) {
        std::uniform_int_distribution<Index> u(t, static_cast<Index>(idx.size()) - 1);
        std::swap(idx[t], idx[u(rng)]);
        const Index col = idx[t] / p;
        const Index j = ds.cohort_of(col);
        if (left[j] <= 1) continue;
        --left[j];
        cells.push_back({idx[t] % p, col});
        ++filled;
      }
      if (filled < count) throw ConfigError("missing fraction leaves a cohort without observed data");
      break;
    }
    case MaskKind::column: {
      const Index count = std::max<Index>(1, std::llround(fraction * static_cast<double>(n)));
      if (count > n - J) throw ConfigError("missing fraction leaves a cohort without observed columns");
      std::vector<Index> cols(n);
      std::iota(cols.begin(), cols.end(), 0);
      std::shuffle(cols.begin(), cols.end(), rng);
      std::vector<Index> left(J);
      for (Index j = 0; j < J; ++j) left[j] = ds.cohort_size(j);
      Index taken = 0;
      for (Index c : cols) {
        if (taken == count) break;
        const Index j = ds.cohort_of(c);
        if (left[j] <= 1) continue;
        --left[j];
        ++taken;
        for (Index i = 0; i < p; ++i) cells.push_back({i, c});
      }
      if (taken < count) throw ConfigError("missing fraction leaves a cohort without observed columns");
      break;
    }
    case MaskKind::row_within_cohort: {
      const Index per_cohort = std::max<Index>(1, std::llround(fraction * static_cast<double>(p)));
      if (per_cohort >= p) throw ConfigError("missing fraction leaves a cohort without observed rows");
      std::vector<Index> unused(p);
      std::iota(unused.begin(), unused.end(), 0);
      std::shuffle(unused.begin(), unused.end(), rng);
      for (Index j = 0; j < J; ++j) {
        std::vector<Index> rows;
        while (static_cast<Index>(rows.size()) < per_cohort && !unused.empty()) {
          rows.push_back(unused.back());
          unused.pop_back();
        }
        if (static_cast<Index>(rows.size()) < per_cohort) {
          std::vector<Index> rest;
          for (Index i = 0; i < p; ++i)
            if (std::find(rows.begin(), rows.end(), i) == rows.end()) rest.push_back(i);
          std::shuffle(rest.begin(), rest.end(), rng);
          rows.insert(rows.end(), rest.begin(), rest.begin() + (per_cohort - static_cast<Index>(rows.size())));
        }
        const ColumnRange& r = ds.boundaries()[j];
        for (Index i : rows)
          for (Index c = r.begin; c < r.end; ++c) cells.push_back({i, c});
      }
      break;
    }
    case MaskKind::mixed:
      throw ConfigError("generate each missingness kind separately");
  }
  return MissingMask(std::move(cells));
}

double relative_mse(const Matrix& truth, const Matrix& estimate) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols())
    throw DimensionError("truth and estimate differ in shape");
  const double den = truth.squaredNorm();
  if (!(den > 0.0)) throw DegenerateMetricError("relative error against a zero matrix");
  return (truth - estimate).squaredNorm() / den;
}

double rank_sum_ratio(const Matrix& estimate, Index true_rank, Index upper) {
  if (true_rank < 1 || upper <= true_rank) throw PreconditionError("need 1 <= true_rank < upper");
  const Vector d = singular_values(estimate);
  double head = 0.0, tail = 0.0;
  for (Index i = 0; i < d.size() && i < upper; ++i) (i < true_rank ? head : tail) += d(i);
  if (!(head > 0.0)) throw DegenerateMetricError("leading singular values are all zero");
  return tail / head;
}

double expected_inflated_singular_value(double sigma_B, double c) {
  if (sigma_B < 0.0 || !(c > 0.0)) throw PreconditionError("need sigma_B >= 0 and c > 0");
  if (sigma_B <= std::pow(c, 0.25)) return 1.0 + std::sqrt(c);
  const double s2 = sigma_B * sigma_B;
  return std::sqrt(1.0 + s2 + c + c / s2);
}

}  // namespace marrr
