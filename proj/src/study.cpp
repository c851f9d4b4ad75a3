#include "marrr/study.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "csv.hpp"
#include "marrr/design.hpp"
#include "marrr/errors.hpp"
#include "marrr/impute.hpp"
#include "marrr/solver.hpp"

namespace marrr {

std::string_view study_name(Study s) {
  switch (s) {
    case Study::table1a: return "table1a";
    case Study::table1b: return "table1b";
    case Study::table2: return "table2";
    case Study::orthogonality: return "orthogonality";
  }
  return "table1a";
}

Study parse_study(std::string_view name) {
  for (Study s : {Study::table1a, Study::table1b, Study::table2, Study::orthogonality})
    if (study_name(s) == name) return s;
  throw ConfigError("unknown study '" + std::string(name) +
                    "'; expected table1a, table1b, table2 or orthogonality");
}

Scenario study_scenario(Study s) {
  switch (s) {
    case Study::table1a: return Scenario::aRRR_single;
    case Study::table1b: return Scenario::mRRR_two_cohort;
    case Study::table2: return Scenario::global_individual;
    case Study::orthogonality: return Scenario::orthogonality_study;
  }
  return Scenario::aRRR_single;
}

Study study_for_scenario(Scenario s) {
  switch (s) {
    case Scenario::aRRR_single: return Study::table1a;
    case Scenario::mRRR_two_cohort: return Study::table1b;
    case Scenario::global_individual: return Study::table2;
    case Scenario::orthogonality_study: return Study::orthogonality;
  }
  return Study::table1a;
}

std::vector<std::string> study_variants(Study s) {
  const std::vector<std::string> ratio_rank{"10_r1", "1_r1", "0.1_r1", "10_r5", "1_r5", "0.1_r5"};
  switch (s) {
    case Study::table1a:
    case Study::table1b: return ratio_rank;
    case Study::table2: return {"large_B", "large_S", "large_Bi", "large_Si"};
    case Study::orthogonality: {
      std::vector<std::string> out = ratio_rank;
      for (const auto& v : ratio_rank) out.push_back(v + "_j2");
      return out;
    }
  }
  return {};
}

SimulationSpec study_spec(Study study, const std::string& variant, std::uint64_t seed,
                          const StudyOptions& opts) {
  SimulationSpec spec = preset(study_scenario(study), variant, seed);
  if (study == Study::table2 && opts.full_scale) {
    // 1000 features, 50 covariates and 6581 samples in 30 cohorts.
    spec.p = 1000;
    spec.q = 50;
    spec.n.assign(30, 219);
    for (Index j = 0; j < 11; ++j) spec.n[j] = 220;
  }
  return spec;
}

Matrix least_squares_coefficients(const Matrix& X, const Matrix& Y) {
  if (X.cols() != Y.cols()) throw DimensionError("X and Y differ in sample count");
  const Matrix G = Y * Y.transpose();
  Eigen::LDLT<Matrix> ldlt(G);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw RankDeficiencyError("covariate Gram matrix is singular");
  return ldlt.solve(Y * X.transpose()).transpose();
}

Matrix truncated_svd(const Matrix& M, Index rank) {
  const Svd s = thin_svd(M);
  const Index r = std::min<Index>(rank, s.d.size());
  return s.U.leftCols(r) * s.d.head(r).asDiagonal() * s.V.leftCols(r).transpose();
}

namespace {

struct RowSink {
  std::string scenario;
  std::uint64_t seed;
  std::vector<MetricRow> rows;

  void add(const std::string& method, const std::string& metric, double value) {
    rows.push_back({scenario, seed, method, metric, value});
  }
};

SolverOptions solver_options(Algorithm a, const StudyOptions& opts, std::uint64_t seed) {
  SolverOptions so;
  so.algorithm = a;
  so.max_epochs = opts.max_epochs;
  so.r_B_upper = opts.rank_upper;
  so.r_S_upper = opts.rank_upper;
  so.seed = seed;
  return so;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
}

double rank_sum_ratio_or_nan(const Matrix& B, Index rank, Index upper) {
  try {
    return rank_sum_ratio(B, rank, upper);
  } catch (const DegenerateMetricError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

void table1a_replicate(const SimulationSpec& spec, const StudyOptions& opts, RowSink& out) {
  const SimulatedTruth t = generate(spec);
  const MultiCohortDataset& ds = t.dataset;
  const PreparedProblem pp = prepare_problem(ds, t.cfg);
  const PenaltySet pen = rmt_penalties(ds, t.cfg);

  const FitResult f = fit(pp.design, pen, solver_options(Algorithm::svt_als, opts, spec.seed));
  out.add("aRRR", "mse_B", relative_mse(t.true_B[0], coefficients_original(f, pp.info)[0]));
  out.add("aRRR", "mse_S", relative_mse(t.true_S[0], auxiliary_original(f, pp.info, 0)));
  out.add("aRRR", "epochs", static_cast<double>(f.epochs));

  const Matrix B_ls = least_squares_coefficients(ds.X(), ds.Y());
  out.add("two_stage_LS", "mse_B", relative_mse(t.true_B[0], B_ls));
  out.add("two_stage_LS", "mse_S",
          relative_mse(t.true_S[0], truncated_svd(ds.X() - B_ls * ds.Y(), spec.rank_s)));

  const Matrix& Yf = pp.design.covariates[0].Y;
  const double sigma = pp.info.sigma_hat;
  const Matrix B_fit = svt(pp.design.X * Yf.transpose(), pen.lambda_B[0]);
  out.add("two_stage_NN", "mse_B",
          relative_mse(t.true_B[0], sigma * backmap_b(B_fit, pp.info.y_transforms[0])));
  out.add("two_stage_NN", "mse_S",
          relative_mse(t.true_S[0], sigma * svt(pp.design.X - B_fit * Yf, pen.lambda_S[0])));
}

void table1b_replicate(const SimulationSpec& spec, const StudyOptions& opts, RowSink& out) {
  const SimulatedTruth t = generate(spec);
  const MultiCohortDataset& ds = t.dataset;
  const PreparedProblem pp = prepare_problem(ds, t.cfg);
  const PenaltySet pen = rmt_penalties(ds, t.cfg);
  const Design& d = pp.design;
  const Index K = d.K();

  auto report = [&](const std::string& method, const std::vector<Matrix>& B) {
    out.add(method, "mse_B", relative_mse(t.true_B[0], B[0]));
    std::vector<double> individual;
    for (Index k = 1; k < K; ++k) individual.push_back(relative_mse(t.true_B[k], B[k]));
    out.add(method, "mse_Bi", mean(individual));
  };

  const FitResult f = fit(d, pen, solver_options(Algorithm::svt_als, opts, spec.seed));
  report("mRRR", coefficients_original(f, pp.info));
  out.add("mRRR", "epochs", static_cast<double>(f.epochs));

  // Shared effect from all samples, then each cohort's effect from the residual.
  std::vector<Matrix> ls(K);
  ls[0] = least_squares_coefficients(ds.X(), ds.Y());
  const Matrix R_ls = ds.X() - ls[0] * ds.Y();
  for (Index k = 1; k < K; ++k) {
    const auto& r = d.covariates[k].ranges;
    ls[k] = least_squares_coefficients(gather_columns(R_ls, r), gather_columns(ds.Y(), r));
  }
  report("two_stage_LS", ls);

  std::vector<Matrix> nn(K);
  const double sigma = pp.info.sigma_hat;
  const Matrix B0 = svt(d.X * d.covariates[0].Y.transpose(), pen.lambda_B[0]);
  nn[0] = sigma * backmap_b(B0, pp.info.y_transforms[0]);
  Matrix R_nn = d.X;
  scatter_add_columns(R_nn, d.covariates[0].ranges, B0 * d.covariates[0].Y, -1.0);
  for (Index k = 1; k < K; ++k) {
    const auto& m = d.covariates[k];
    const Matrix Bk = svt(gather_columns(R_nn, m.ranges) * m.Y.transpose(), pen.lambda_B[k]);
    nn[k] = sigma * backmap_b(Bk, pp.info.y_transforms[k]);
  }
  report("two_stage_NN", nn);
}

void table2_replicate(const SimulationSpec& spec, const StudyOptions& opts, RowSink& out) {
  const SimulatedTruth t = generate(spec);
  const MultiCohortDataset& ds = t.dataset;
  const Index J = ds.J();
  const IndicatorMatrix& C = t.cfg.C_Y;
  struct Method {
    std::string name;
    IndicatorConfig cfg;
  };
  const std::vector<Method> methods{
      {"maRRR", make_config(C, C)},
      {"BIDIFAC+", make_config(IndicatorMatrix(J, 0), C)},
      {"mRRR", make_config(C, IndicatorMatrix(J, 0))},
      {"NN_approx", make_config(IndicatorMatrix(J, 0), IndicatorMatrix::Ones(J, 1))},
  };
  const std::vector<std::pair<MaskKind, std::string>> kinds{
      {MaskKind::entry, "rse_entry"}, {MaskKind::column, "rse_column"}, {MaskKind::row_within_cohort, "rse_row"}};

  SolverOptions so = solver_options(Algorithm::svt_als, opts, spec.seed);
  so.max_epochs = opts.impute_epochs;
  std::vector<std::vector<double>> scores(methods.size());
  for (std::size_t kind = 0; kind < kinds.size(); ++kind) {
    const MissingMask mask =
        make_missing(ds, opts.missing_fraction, kinds[kind].first, derive_seed(spec.seed, 1000 + kind));
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const ImputationResult r =
          impute(ds, mask, methods[m].cfg, rmt_penalties(ds, methods[m].cfg), so);
      const double value = rse(ds.X(), r.X_completed_original, mask);
      scores[m].push_back(value);
      out.add(methods[m].name, kinds[kind].second, value);
    }
  }
  for (std::size_t m = 0; m < methods.size(); ++m) out.add(methods[m].name, "rse_mean", mean(scores[m]));
}

void orthogonality_method(const std::string& method, const SimulatedTruth& t, YTreatment treatment,
                          Algorithm algorithm, Index true_rank, const StudyOptions& opts,
                          std::uint64_t seed, RowSink& out) {
  const MultiCohortDataset& ds = t.dataset;
  PrepareOptions po;
  po.y_treatment = treatment;
  const PreparedProblem pp = prepare_problem(ds, t.cfg, po);
  const FitResult f = fit(pp.design, rmt_penalties(ds, t.cfg), solver_options(algorithm, opts, seed));
  const std::vector<Matrix> B = coefficients_original(f, pp.info);
  std::vector<double> mse_B, mse_S, ranks, ratios;
  for (std::size_t k = 0; k < B.size(); ++k) {
    mse_B.push_back(relative_mse(t.true_B[k], B[k]));
    const Vector sv = singular_values(B[k]);
    ranks.push_back(static_cast<double>((sv.array() > 0.1).count()));
    ratios.push_back(rank_sum_ratio_or_nan(B[k], true_rank, opts.rank_upper));
  }
  for (Index l = 0; l < f.L(); ++l)
    mse_S.push_back(relative_mse(t.true_S[l], auxiliary_original(f, pp.info, l)));
  out.add(method, "mse_B", mean(mse_B));
  out.add(method, "mse_S", mean(mse_S));
  out.add(method, "epochs", static_cast<double>(f.epochs));
  out.add(method, "est_rank_B", mean(ranks));
  out.add(method, "ratio_B", mean(ratios));
}

void orthogonality_replicate(const SimulationSpec& spec, const StudyOptions& opts, RowSink& out) {
  const SimulatedTruth t = generate(spec);
  orthogonality_method("no_orth", t, YTreatment::standardize, Algorithm::factored_als, spec.rank_b, opts,
                       spec.seed, out);
  orthogonality_method("orth_opt", t, YTreatment::orthogonalize, Algorithm::svt_als, spec.rank_b, opts,
                       spec.seed, out);
  SimulationSpec gen = spec;
  gen.orthogonalize_y_in_generation = true;
  orthogonality_method("orth_gen", generate(gen), YTreatment::orthogonalize, Algorithm::svt_als,
                       spec.rank_b, opts, spec.seed, out);
}

}  // namespace

std::vector<MetricRow> run_replicate(Study study, const std::string& variant, std::uint64_t seed,
                                     const StudyOptions& opts) {
  const SimulationSpec spec = study_spec(study, variant, seed, opts);
  RowSink out{std::string(scenario_name(spec.scenario)) + "/" + variant, seed, {}};
  switch (study) {
    case Study::table1a: table1a_replicate(spec, opts, out); break;
    case Study::table1b: table1b_replicate(spec, opts, out); break;
    case Study::table2: table2_replicate(spec, opts, out); break;
    case Study::orthogonality: orthogonality_replicate(spec, opts, out); break;
  }
  return std::move(out.rows);
}

std::vector<MetricRow> run_study(Study study, const StudyOptions& opts) {
  if (opts.replicates < 1) throw ConfigError("replicates must be at least 1");
  if (opts.jobs < 1) throw ConfigError("jobs must be at least 1");
  const std::vector<std::string> all = study_variants(study);
  std::vector<std::string> variants = opts.variants.empty() ? all : opts.variants;
  for (const auto& v : variants)
    if (std::find(all.begin(), all.end(), v) == all.end())
      throw ConfigError("study " + std::string(study_name(study)) + " has no variant '" + v + "'");

  const std::size_t tasks = static_cast<std::size_t>(opts.replicates) * variants.size();
  std::vector<std::vector<MetricRow>> results(tasks);
  std::vector<std::exception_ptr> errors(tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks; i = next++) {
      const std::size_t rep = i / variants.size();
      try {
        results[i] = run_replicate(study, variants[i % variants.size()], derive_seed(opts.seed, rep), opts);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(opts.jobs), tasks));
  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<MetricRow> rows;
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  return rows;
}

std::vector<MetricSummary> summarize(const std::vector<MetricRow>& rows) {
  std::vector<MetricSummary> out;
  std::vector<std::vector<double>> values;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const MetricSummary& s) {
      return s.scenario == r.scenario && s.method == r.method && s.metric == r.metric;
    });
    std::size_t at;
    if (it == out.end()) {
      out.push_back({r.scenario, r.method, r.metric, 0.0, 0.0, 0});
      values.emplace_back();
      at = out.size() - 1;
    } else {
      at = static_cast<std::size_t>(it - out.begin());
    }
    if (std::isfinite(r.value)) values[at].push_back(r.value);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& v = values[i];
    out[i].count = static_cast<Index>(v.size());
    if (v.empty()) {
      out[i].mean = out[i].sd = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    out[i].mean = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - out[i].mean) * (x - out[i].mean);
    out[i].sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  }
  return out;
}

const MetricSummary& find_summary(const std::vector<MetricSummary>& s, std::string_view scenario,
                                  std::string_view method, std::string_view metric) {
  for (const auto& row : s)
    if (row.scenario == scenario && row.method == method && row.metric == metric) return row;
  throw IndexError("no summary for " + std::string(scenario) + " " + std::string(method) + " " +
                   std::string(metric));
}

void write_metrics(const std::vector<MetricRow>& rows, const std::filesystem::path& path) {
  csv::Table t;
  t.header = {"scenario", "seed", "method", "metric", "value"};
  for (const auto& r : rows)
    t.rows.push_back({r.scenario, std::to_string(r.seed), r.method, r.metric, csv::format_double(r.value)});
  csv::write(path, t);
}

std::vector<MetricRow> read_metrics(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  if (t.header != std::vector<std::string>{"scenario", "seed", "method", "metric", "value"})
    throw SchemaError(path.string() + ": expected header scenario,seed,method,metric,value");
  std::vector<MetricRow> out;
  for (const auto& r : t.rows) {
    if (r.size() != 5) throw SchemaError(path.string() + ": metric rows need five fields");
    std::uint64_t seed = 0;
    const auto res = std::from_chars(r[1].data(), r[1].data() + r[1].size(), seed);
    if (r[1].empty() || res.ec != std::errc() || res.ptr != r[1].data() + r[1].size())
      throw ParseError(path.string() + ": seed is not an unsigned integer: '" + r[1] + "'");
    out.push_back({r[0], seed, r[2], r[3], csv::parse_double(r[4], "value")});
  }
  return out;
}

void write_summary(const std::vector<MetricSummary>& rows, const std::filesystem::path& path) {
  csv::Table t;
  t.header = {"scenario", "method", "metric", "mean", "sd", "count"};
  for (const auto& r : rows)
    t.rows.push_back({r.scenario, r.method, r.metric, csv::format_double(r.mean), csv::format_double(r.sd),
                      std::to_string(r.count)});
  csv::write(path, t);
}

}  // namespace marrr
