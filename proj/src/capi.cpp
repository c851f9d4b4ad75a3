#include "marrr/marrr.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include <json.hpp>

#include "csv.hpp"
#include "marrr/benchmark.hpp"
#include "marrr/dataset.hpp"
#include "marrr/design.hpp"
#include "marrr/errors.hpp"
#include "marrr/fit_io.hpp"
#include "marrr/impute.hpp"
#include "marrr/modules_config.hpp"
#include "marrr/preprocess.hpp"
#include "marrr/simulate.hpp"
#include "marrr/solver.hpp"
#include "marrr/study.hpp"

struct marrr_dataset {
  marrr::MultiCohortDataset ds;
};
struct marrr_mask {
  marrr::MissingMask mask;
};
struct marrr_config {
  marrr::IndicatorConfig cfg;
};
struct marrr_penalties {
  marrr::PenaltySet pen;
};
struct marrr_fit {
  marrr::PreparedProblem problem;
  marrr::FitResult fit;
  std::vector<std::string> cohort_ids;
};
struct marrr_imputation {
  marrr::MultiCohortDataset source;
  marrr::MissingMask mask;
  marrr::ImputationResult result;
};
struct marrr_simulation {
  marrr::SimulationSpec spec;
  marrr::SimulatedTruth truth;
};

namespace {

using namespace marrr;

std::string& last_error() {
  thread_local std::string message;
  return message;
}

struct InvalidArgument : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class F>
marrr_status guard(F&& f) {
  try {
    f();
    last_error().clear();
    return MARRR_OK;
  } catch (const Error& e) {
    last_error() = e.what();
    return static_cast<marrr_status>(e.code());
  } catch (const InvalidArgument& e) {
    last_error() = e.what();
    return MARRR_ERR_INVALID_ARGUMENT;
  } catch (const std::filesystem::filesystem_error& e) {
    last_error() = e.what();
    return MARRR_ERR_IO;
  } catch (const std::bad_alloc&) {
    last_error() = "out of memory";
    return MARRR_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error() = e.what();
    return MARRR_ERR_INTERNAL;
  } catch (...) {
    last_error() = "unknown failure";
    return MARRR_ERR_INTERNAL;
  }
}

template <class T>
const T& need(const T* p, const char* what) {
  if (!p) throw InvalidArgument(std::string(what) + " is null");
  return *p;
}

template <class T>
void need_out(T* p, const char* what) {
  if (!p) throw InvalidArgument(std::string(what) + " is null");
}

std::filesystem::path need_path(const char* p, const char* what) {
  if (!p || !*p) throw InvalidArgument(std::string(what) + " is empty");
  return std::filesystem::path(p);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void copy_matrix(const Matrix& m, double* out) {
  if (!out) throw InvalidArgument("output buffer is null");
  std::memcpy(out, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
}

SolverOptions to_solver(const marrr_solver_options* o) {
  SolverOptions so;
  if (!o) return so;
  if (o->algorithm == MARRR_ALGORITHM_FACTORED_ALS) so.algorithm = Algorithm::factored_als;
  else if (o->algorithm == MARRR_ALGORITHM_SVT_ALS) so.algorithm = Algorithm::svt_als;
  else throw ConfigError("unknown algorithm code " + std::to_string(o->algorithm));
  so.epsilon = o->epsilon;
  so.max_epochs = o->max_epochs;
  so.r_B_upper = o->r_B_upper;
  so.r_S_upper = o->r_S_upper;
  so.seed = o->seed;
  so.init_scale = o->init_scale;
  so.validate();
  return so;
}

PrepareOptions to_prepare(const marrr_solver_options* o) {
  PrepareOptions po;
  if (!o) return po;
  switch (o->y_treatment) {
    case MARRR_Y_NONE: po.y_treatment = YTreatment::none; break;
    case MARRR_Y_STANDARDIZE: po.y_treatment = YTreatment::standardize; break;
    case MARRR_Y_ORTHOGONALIZE: po.y_treatment = YTreatment::orthogonalize; break;
    default: throw ConfigError("unknown covariate treatment code " + std::to_string(o->y_treatment));
  }
  po.scale_x = o->scale_x != 0;
  po.center_y_per_cohort = o->center_y_per_cohort != 0;
  return po;
}

void fill_solver_defaults(marrr_solver_options* o, const SolverOptions& so) {
  o->algorithm = so.algorithm == Algorithm::factored_als ? MARRR_ALGORITHM_FACTORED_ALS : MARRR_ALGORITHM_SVT_ALS;
  o->epsilon = so.epsilon;
  o->max_epochs = so.max_epochs;
  o->r_B_upper = so.r_B_upper;
  o->r_S_upper = so.r_S_upper;
  o->seed = so.seed;
  o->init_scale = so.init_scale;
  o->y_treatment = MARRR_Y_ORTHOGONALIZE;
  o->scale_x = 1;
  o->center_y_per_cohort = 1;
}

std::string join_ids(const std::vector<Index>& cohorts, const std::vector<std::string>& ids) {
  std::string out;
  for (Index j : cohorts) {
    if (!out.empty()) out += ';';
    out += j < static_cast<Index>(ids.size()) ? ids[j] : std::to_string(j + 1);
  }
  return out;
}

void write_variance_table(const Design& d, const FitResult& f, const std::vector<std::string>& ids,
                          const std::filesystem::path& path) {
  csv::Table t;
  t.header = {"module", "samples", "var_BY", "var_S", "var_signal", "cohorts"};
  for (const auto& r : variance_explained(d, f))
    t.rows.push_back({std::to_string(r.module), std::to_string(r.samples), csv::format_double(r.var_BY),
                      csv::format_double(r.var_S), csv::format_double(r.var_signal), join_ids(r.cohorts, ids)});
  csv::write(path, t);
}

std::vector<std::string> split_commas(const char* s) {
  std::vector<std::string> out;
  if (!s) return out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

extern "C" {

const char* marrr_last_error(void) { return last_error().c_str(); }

const char* marrr_status_name(marrr_status status) {
  switch (status) {
    case MARRR_OK: return "OK";
    case MARRR_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case MARRR_ERR_INTERNAL: return "InternalError";
    default:
      if (status >= MARRR_ERR_DIMENSION && status <= MARRR_ERR_IO)
        return error_name(static_cast<ErrorCode>(status)).data();
      return "UnknownStatus";
  }
}

int marrr_exit_code(marrr_status status) {
  switch (status) {
    case MARRR_OK: return 0;
    case MARRR_ERR_DIMENSION:
    case MARRR_ERR_SCHEMA:
    case MARRR_ERR_PARSE:
    case MARRR_ERR_INDEX:
    case MARRR_ERR_CONFIG:
    case MARRR_ERR_PRECONDITION:
    case MARRR_ERR_IO:
    case MARRR_ERR_INVALID_ARGUMENT: return 2;
    default: return 1;
  }
}

const char* marrr_version(void) { return "0.1.0"; }

void marrr_string_free(char* s) { std::free(s); }

/* dataset */

marrr_status marrr_dataset_load(const char* x_path, const char* y_path, const char* cohort_map_path,
                                marrr_dataset** out) {
  return guard([&] {
    need_out(out, "out");
    auto ds = load_dataset(need_path(x_path, "X path"), need_path(y_path, "Y path"),
                           need_path(cohort_map_path, "cohort map path"));
    *out = new marrr_dataset{std::move(ds)};
  });
}

marrr_status marrr_dataset_from_arrays(const double* X, const double* Y, size_t p, size_t q, size_t n,
                                       const size_t* cohort_sizes, size_t J, marrr_dataset** out) {
  return guard([&] {
    need_out(out, "out");
    if (!X || !Y || !cohort_sizes) throw InvalidArgument("input arrays must not be null");
    const auto P = static_cast<Index>(p), Q = static_cast<Index>(q), N = static_cast<Index>(n);
    std::vector<Index> sizes(cohort_sizes, cohort_sizes + J);
    *out = new marrr_dataset{MultiCohortDataset(Eigen::Map<const Matrix>(X, P, N),
                                                Eigen::Map<const Matrix>(Y, Q, N), sizes)};
  });
}

marrr_status marrr_dataset_save(const marrr_dataset* ds, const char* x_path, const char* y_path,
                                const char* cohort_map_path) {
  return guard([&] {
    save_dataset(need(ds, "dataset").ds, need_path(x_path, "X path"), need_path(y_path, "Y path"),
                 need_path(cohort_map_path, "cohort map path"));
  });
}

marrr_status marrr_dataset_dims(const marrr_dataset* ds, size_t* p, size_t* q, size_t* n, size_t* J) {
  return guard([&] {
    const auto& d = need(ds, "dataset").ds;
    if (p) *p = static_cast<size_t>(d.p());
    if (q) *q = static_cast<size_t>(d.q());
    if (n) *n = static_cast<size_t>(d.n());
    if (J) *J = static_cast<size_t>(d.J());
  });
}

marrr_status marrr_dataset_cohort_size(const marrr_dataset* ds, size_t j, size_t* out) {
  return guard([&] {
    const auto& d = need(ds, "dataset").ds;
    need_out(out, "out");
    if (j >= static_cast<size_t>(d.J())) throw IndexError("cohort index out of range");
    *out = static_cast<size_t>(d.cohort_size(static_cast<Index>(j)));
  });
}

marrr_status marrr_dataset_copy_x(const marrr_dataset* ds, double* out) {
  return guard([&] { copy_matrix(need(ds, "dataset").ds.X(), out); });
}

void marrr_dataset_free(marrr_dataset* ds) { delete ds; }

/* masks */

marrr_status marrr_mask_load(const char* path, marrr_mask** out) {
  return guard([&] {
    need_out(out, "out");
    *out = new marrr_mask{load_mask(need_path(path, "mask path"))};
  });
}

marrr_status marrr_mask_save(const marrr_mask* mask, const char* path) {
  return guard([&] { save_mask(need(mask, "mask").mask, need_path(path, "mask path")); });
}

marrr_status marrr_mask_from_dataset(const marrr_dataset* ds, marrr_mask** out) {
  return guard([&] {
    need_out(out, "out");
    *out = new marrr_mask{mask_from_dataset(need(ds, "dataset").ds)};
  });
}

marrr_status marrr_mask_make(const marrr_dataset* ds, double fraction, const char* kind, uint64_t seed,
                             marrr_mask** out) {
  return guard([&] {
    need_out(out, "out");
    if (!kind) throw InvalidArgument("mask kind is null");
    *out = new marrr_mask{make_missing(need(ds, "dataset").ds, fraction, parse_mask_kind(kind), seed)};
  });
}

marrr_status marrr_mask_merge(const marrr_mask* a, const marrr_mask* b, marrr_mask** out) {
  return guard([&] {
    need_out(out, "out");
    *out = new marrr_mask{need(a, "mask").mask.merged(need(b, "mask").mask)};
  });
}

marrr_status marrr_mask_size(const marrr_mask* mask, size_t* out) {
  return guard([&] {
    need_out(out, "out");
    *out = need(mask, "mask").mask.size();
  });
}

marrr_status marrr_mask_classify(const marrr_mask* mask, const marrr_dataset* ds, const char** kind) {
  return guard([&] {
    need_out(kind, "kind");
    *kind = mask_kind_name(classify_mask(need(mask, "mask").mask, need(ds, "dataset").ds)).data();
  });
}

marrr_status marrr_mask_part(const marrr_mask* mask, const marrr_dataset* ds, const char* kind,
                             marrr_mask** out) {
  return guard([&] {
    need_out(out, "out");
    if (!kind) throw InvalidArgument("mask kind is null");
    MaskParts parts = split_mask(need(mask, "mask").mask, need(ds, "dataset").ds);
    switch (parse_mask_kind(kind)) {
      case MaskKind::entry: *out = new marrr_mask{std::move(parts.entry)}; break;
      case MaskKind::column: *out = new marrr_mask{std::move(parts.column)}; break;
      case MaskKind::row_within_cohort: *out = new marrr_mask{std::move(parts.row)}; break;
      case MaskKind::mixed: throw ConfigError("a mask part must be entry, column or row");
    }
  });
}

void marrr_mask_free(marrr_mask* mask) { delete mask; }

/* configuration */

marrr_status marrr_config_load(const char* path, const marrr_dataset* ds, marrr_config** out) {
  return guard([&] {
    need_out(out, "out");
    const std::vector<std::string> ids = ds ? ds->ds.cohort_ids() : std::vector<std::string>{};
    IndicatorConfig cfg = load_config(need_path(path, "config path"), ids);
    if (ds) cfg.validate(ds->ds.J());
    *out = new marrr_config{std::move(cfg)};
  });
}

marrr_status marrr_config_save(const marrr_config* cfg, const char* path, const marrr_dataset* ds) {
  return guard([&] {
    const std::vector<std::string> ids = ds ? ds->ds.cohort_ids() : std::vector<std::string>{};
    save_config(need(cfg, "config").cfg, need_path(path, "config path"), ids);
  });
}

marrr_status marrr_config_from_arrays(const int* C_Y, const int* C_S, size_t J, size_t K, size_t L,
                                      marrr_config** out) {
  return guard([&] {
    need_out(out, "out");
    const auto j = static_cast<Index>(J);
    if ((K && !C_Y) || (L && !C_S)) throw InvalidArgument("indicator array is null");
    IndicatorMatrix cy = K ? IndicatorMatrix(Eigen::Map<const IndicatorMatrix>(C_Y, j, static_cast<Index>(K)))
                           : IndicatorMatrix(j, 0);
    IndicatorMatrix cs = L ? IndicatorMatrix(Eigen::Map<const IndicatorMatrix>(C_S, j, static_cast<Index>(L)))
                           : IndicatorMatrix(j, 0);
    IndicatorConfig cfg = make_config(cy, cs);
    cfg.validate(j);
    *out = new marrr_config{std::move(cfg)};
  });
}

marrr_status marrr_config_dims(const marrr_config* cfg, size_t* J, size_t* K, size_t* L) {
  return guard([&] {
    const auto& c = need(cfg, "config").cfg;
    if (J) *J = static_cast<size_t>(c.J());
    if (K) *K = static_cast<size_t>(c.K());
    if (L) *L = static_cast<size_t>(c.L());
  });
}

marrr_status marrr_config_enumerate(size_t J, long max_modules, marrr_config** out) {
  return guard([&] {
    need_out(out, "out");
    *out = new marrr_config{enumerate_modules(static_cast<Index>(J), max_modules)};
  });
}

marrr_status marrr_config_forward_select(const marrr_dataset* ds, size_t max_modules, marrr_config** out) {
  return guard([&] {
    need_out(out, "out");
    const auto& d = need(ds, "dataset").ds;
    if (d.has_missing()) throw PreconditionError("module selection needs complete outcomes");
    const ScaledX sx = center_and_scale_x(d.X());
    *out = new marrr_config{forward_select(sx.X, d.boundaries(), static_cast<Index>(max_modules))};
  });
}

void marrr_config_free(marrr_config* cfg) { delete cfg; }

/* penalties */

marrr_status marrr_penalties_rmt(const marrr_dataset* ds, const marrr_config* cfg, marrr_penalties** out) {
  return guard([&] {
    need_out(out, "out");
    *out = new marrr_penalties{rmt_penalties(need(ds, "dataset").ds, need(cfg, "config").cfg)};
  });
}

marrr_status marrr_penalties_load(const char* path, marrr_penalties** out) {
  return guard([&] {
    need_out(out, "out");
    *out = new marrr_penalties{load_penalties(need_path(path, "penalty path"))};
  });
}

marrr_status marrr_penalties_save(const marrr_penalties* pen, const char* path) {
  return guard([&] { save_penalties(need(pen, "penalties").pen, need_path(path, "penalty path")); });
}

marrr_status marrr_penalties_get(const marrr_penalties* pen, char kind, size_t index, double* out) {
  return guard([&] {
    need_out(out, "out");
    const auto& p = need(pen, "penalties").pen;
    const auto& v = kind == 'B' ? p.lambda_B : kind == 'S' ? p.lambda_S
                                                           : throw ConfigError("penalty kind must be B or S");
    if (index >= v.size()) throw IndexError("penalty index out of range");
    *out = v[index];
  });
}

void marrr_penalties_free(marrr_penalties* pen) { delete pen; }

marrr_status marrr_check_penalties(const marrr_config* cfg, const marrr_penalties* pen, const marrr_dataset* ds,
                                   size_t* count, char** report) {
  return guard([&] {
    const auto violations = check_prop1(need(cfg, "config").cfg, need(pen, "penalties").pen, need(ds, "dataset").ds);
    if (count) *count = violations.size();
    if (report) {
      std::string text;
      for (const auto& v : violations) text += v.message + "\n";
      *report = dup_string(text);
    }
  });
}

/* fitting */

void marrr_solver_options_default(marrr_solver_options* opts) {
  if (opts) fill_solver_defaults(opts, SolverOptions{});
}

marrr_status marrr_fit_run(const marrr_dataset* ds, const marrr_config* cfg, const marrr_penalties* pen,
                           const marrr_solver_options* opts, marrr_fit** out) {
  return guard([&] {
    need_out(out, "out");
    const auto& d = need(ds, "dataset").ds;
    const SolverOptions so = to_solver(opts);
    PreparedProblem problem = prepare_problem(d, need(cfg, "config").cfg, to_prepare(opts));
    if (!problem.mask.empty())
      throw PreconditionError("outcomes have " + std::to_string(problem.mask.size()) +
                              " missing cells; use imputation instead");
    FitResult f = fit(problem.design, need(pen, "penalties").pen, so);
    *out = new marrr_fit{std::move(problem), std::move(f), d.cohort_ids()};
  });
}

marrr_status marrr_fit_save(const marrr_fit* fit, const char* dir) {
  return guard([&] {
    const auto& f = need(fit, "fit");
    const auto path = need_path(dir, "output directory");
    save_fit(f.fit, path, &f.problem.info);
    save_preprocess_info(f.problem.info, path / "preprocess.txt");
    write_variance_table(f.problem.design, f.fit, f.cohort_ids, path / "variance_explained.csv");
  });
}

marrr_status marrr_fit_summary(const marrr_fit* fit, int64_t* epochs, int* converged, double* objective) {
  return guard([&] {
    const auto& f = need(fit, "fit").fit;
    if (epochs) *epochs = f.epochs;
    if (converged) *converged = f.converged ? 1 : 0;
    if (objective) *objective = f.objective_trace.empty() ? 0.0 : f.objective_trace.back();
  });
}

marrr_status marrr_fit_sigma_hat(const marrr_fit* fit, double* out) {
  return guard([&] {
    need_out(out, "out");
    *out = need(fit, "fit").problem.info.sigma_hat;
  });
}

marrr_status marrr_fit_coefficients(const marrr_fit* fit, size_t k, double* out) {
  return guard([&] {
    const auto& f = need(fit, "fit");
    if (k >= static_cast<size_t>(f.fit.K())) throw IndexError("covariate module index out of range");
    copy_matrix(coefficients_original(f.fit, f.problem.info)[k], out);
  });
}

marrr_status marrr_fit_signal(const marrr_fit* fit, double* out) {
  return guard([&] { copy_matrix(need(fit, "fit").fit.signal, out); });
}

void marrr_fit_free(marrr_fit* fit) { delete fit; }

/* imputation */

void marrr_impute_options_default(marrr_impute_options* opts) {
  if (!opts) return;
  const ImputeOptions io;
  opts->outer_max = io.outer_max;
  opts->tolerance = io.tolerance;
}

void marrr_impute_solver_options_default(marrr_solver_options* opts) {
  if (opts) fill_solver_defaults(opts, default_impute_solver_options());
}

marrr_status marrr_impute_run(const marrr_dataset* ds, const marrr_mask* mask, const marrr_config* cfg,
                              const marrr_penalties* pen, const marrr_solver_options* solver,
                              const marrr_impute_options* opts, marrr_imputation** out) {
  return guard([&] {
    need_out(out, "out");
    const auto& d = need(ds, "dataset").ds;
    SolverOptions so = solver ? to_solver(solver) : default_impute_solver_options();
    ImputeOptions io;
    if (opts) {
      io.outer_max = opts->outer_max;
      io.tolerance = opts->tolerance;
    }
    const MissingMask extra = mask ? mask->mask : MissingMask{};
    PreparedProblem problem = prepare_problem(d, need(cfg, "config").cfg, to_prepare(solver), extra);
    MissingMask all = problem.mask;
    ImputationResult r = impute(problem, need(pen, "penalties").pen, so, io);
    *out = new marrr_imputation{d, std::move(all), std::move(r)};
  });
}

marrr_status marrr_imputation_summary(const marrr_imputation* imp, int64_t* outer_iterations, int* converged,
                                      double* tolerance) {
  return guard([&] {
    const auto& r = need(imp, "imputation").result;
    if (outer_iterations) *outer_iterations = r.outer_iterations;
    if (converged) *converged = r.converged ? 1 : 0;
    if (tolerance) *tolerance = r.tolerance;
  });
}

marrr_status marrr_imputation_copy(const marrr_imputation* imp, double* out) {
  return guard([&] { copy_matrix(need(imp, "imputation").result.X_completed_original, out); });
}

marrr_status marrr_imputation_dataset(const marrr_imputation* imp, marrr_dataset** out) {
  return guard([&] {
    need_out(out, "out");
    const auto& i = need(imp, "imputation");
    const auto& s = i.source;
    std::vector<Index> sizes;
    for (Index j = 0; j < s.J(); ++j) sizes.push_back(s.cohort_size(j));
    *out = new marrr_dataset{MultiCohortDataset(i.result.X_completed_original, s.Y(), sizes, s.cohort_ids(),
                                                s.sample_ids(), s.feature_ids(), s.covariate_ids())};
  });
}

marrr_status marrr_imputation_rse(const marrr_imputation* imp, const marrr_dataset* truth, const marrr_mask* mask,
                                  double* out) {
  return guard([&] {
    need_out(out, "out");
    const auto& i = need(imp, "imputation");
    const auto& t = need(truth, "truth").ds;
    if (t.p() != i.source.p() || t.n() != i.source.n())
      throw DimensionError("truth has a different shape from the imputed outcomes");
    *out = rse(t.X(), i.result.X_completed_original, mask ? mask->mask : i.mask);
  });
}

marrr_status marrr_imputation_save_trace(const marrr_imputation* imp, const char* path) {
  return guard([&] {
    const auto& r = need(imp, "imputation").result;
    csv::Table t;
    t.header = {"pass", "change"};
    for (std::size_t k = 0; k < r.changes.size(); ++k)
      t.rows.push_back({std::to_string(k + 1), csv::format_double(r.changes[k])});
    csv::write(need_path(path, "trace path"), t);
  });
}

void marrr_imputation_free(marrr_imputation* imp) { delete imp; }

/* simulation */

marrr_status marrr_simulation_generate(const char* scenario, const char* which, uint64_t seed,
                                       marrr_simulation** out) {
  return guard([&] {
    need_out(out, "out");
    if (!scenario || !which) throw InvalidArgument("scenario and variant must not be null");
    SimulationSpec spec = preset(parse_scenario(scenario), which, seed);
    SimulatedTruth truth = generate(spec);
    *out = new marrr_simulation{std::move(spec), std::move(truth)};
  });
}

marrr_status marrr_simulation_dataset(const marrr_simulation* sim, marrr_dataset** out) {
  return guard([&] {
    need_out(out, "out");
    *out = new marrr_dataset{need(sim, "simulation").truth.dataset};
  });
}

marrr_status marrr_simulation_config(const marrr_simulation* sim, marrr_config** out) {
  return guard([&] {
    need_out(out, "out");
    *out = new marrr_config{need(sim, "simulation").truth.cfg};
  });
}

marrr_status marrr_simulation_save(const marrr_simulation* sim, const char* dir) {
  return guard([&] {
    const auto& s = need(sim, "simulation");
    const auto path = need_path(dir, "output directory");
    std::filesystem::create_directories(path);
    const auto& t = s.truth;
    save_dataset(t.dataset, path / "X.csv", path / "Y.csv", path / "cohorts.csv");
    save_config(t.cfg, path / "modules.csv", t.dataset.cohort_ids());
    for (std::size_t k = 0; k < t.true_B.size(); ++k)
      csv::write_matrix(path / ("true_B_" + std::to_string(k + 1) + ".csv"), t.true_B[k]);
    for (std::size_t l = 0; l < t.true_S.size(); ++l)
      csv::write_matrix(path / ("true_S_" + std::to_string(l + 1) + ".csv"), t.true_S[l]);
    csv::write_matrix(path / "true_E.csv", t.true_E);
    nlohmann::json j;
    j["scenario"] = std::string(scenario_name(s.spec.scenario));
    j["p"] = s.spec.p;
    j["q"] = s.spec.q;
    j["n"] = s.spec.n;
    j["rank_b"] = s.spec.rank_b;
    j["rank_s"] = s.spec.rank_s;
    j["signal_sds"] = s.spec.signal_sds;
    j["orthogonalize_y_in_generation"] = s.spec.orthogonalize_y_in_generation;
    j["seed"] = s.spec.seed;
    std::ofstream f(path / "simulation.json");
    if (!f) throw IoError("cannot write " + (path / "simulation.json").string());
    f << j.dump(2) << "\n";
  });
}

void marrr_simulation_free(marrr_simulation* sim) { delete sim; }

uint64_t marrr_derive_seed(uint64_t master, uint64_t index) { return derive_seed(master, index); }

void marrr_study_options_default(marrr_study_options* opts) {
  if (!opts) return;
  const StudyOptions so;
  opts->replicates = so.replicates;
  opts->seed = so.seed;
  opts->jobs = so.jobs;
  opts->variants = nullptr;
  opts->full_scale = so.full_scale ? 1 : 0;
  opts->missing_fraction = so.missing_fraction;
  opts->rank_upper = so.rank_upper;
  opts->max_epochs = so.max_epochs;
  opts->impute_epochs = so.impute_epochs;
}

marrr_status marrr_study_run(const char* study, const marrr_study_options* opts, const char* metrics_path,
                             const char* summary_path) {
  return guard([&] {
    if (!study) throw InvalidArgument("study name is null");
    const auto& o = need(opts, "study options");
    StudyOptions so;
    so.replicates = o.replicates;
    so.seed = o.seed;
    so.jobs = o.jobs;
    so.variants = split_commas(o.variants);
    so.full_scale = o.full_scale != 0;
    so.missing_fraction = o.missing_fraction;
    so.rank_upper = o.rank_upper;
    so.max_epochs = o.max_epochs;
    so.impute_epochs = o.impute_epochs;
    const auto metrics = need_path(metrics_path, "metrics path");
    const auto rows = run_study(parse_study(study), so);
    write_metrics(rows, metrics);
    if (summary_path && *summary_path) write_summary(summarize(rows), summary_path);
  });
}

marrr_status marrr_study_for_scenario(const char* scenario, const char** study) {
  return guard([&] {
    need_out(study, "study");
    if (!scenario) throw InvalidArgument("scenario is null");
    *study = study_name(study_for_scenario(parse_scenario(scenario))).data();
  });
}

marrr_status marrr_study_variants(const char* study, char** out) {
  return guard([&] {
    need_out(out, "out");
    if (!study) throw InvalidArgument("study name is null");
    std::string text;
    for (const auto& v : study_variants(parse_study(study))) text += (text.empty() ? "" : ",") + v;
    *out = dup_string(text);
  });
}

/* benchmark */

void marrr_benchmark_options_default(marrr_benchmark_options* opts) {
  if (!opts) return;
  const BenchmarkOptions bo;
  opts->full_scale = bo.full_scale ? 1 : 0;
  opts->epochs = bo.epochs;
  opts->rank_cap = bo.rank_cap;
  opts->factored_als = 1;
  opts->svt_als = 1;
  opts->seed = bo.seed;
}

namespace {

BenchmarkOptions to_benchmark(const marrr_benchmark_options& o) {
  BenchmarkOptions bo;
  bo.full_scale = o.full_scale != 0;
  bo.epochs = o.epochs;
  bo.rank_cap = o.rank_cap;
  bo.seed = o.seed;
  bo.algorithms.clear();
  if (o.factored_als) bo.algorithms.push_back(Algorithm::factored_als);
  if (o.svt_als) bo.algorithms.push_back(Algorithm::svt_als);
  if (bo.algorithms.empty()) throw ConfigError("select at least one algorithm to benchmark");
  return bo;
}

}  // namespace

marrr_status marrr_benchmark_run(const marrr_benchmark_options* opts, const char* path) {
  return guard([&] {
    const auto out = need_path(path, "output path");
    write_benchmark(run_benchmark(to_benchmark(need(opts, "benchmark options"))), out);
  });
}

marrr_status marrr_benchmark_run_dataset(const marrr_dataset* ds, const marrr_config* cfg,
                                         const marrr_penalties* pen, const marrr_benchmark_options* opts,
                                         const marrr_solver_options* prepare, const char* path) {
  return guard([&] {
    const auto out = need_path(path, "output path");
    const BenchmarkOptions bo = to_benchmark(need(opts, "benchmark options"));
    const PreparedProblem pp = prepare_problem(need(ds, "dataset").ds, need(cfg, "config").cfg, to_prepare(prepare));
    write_benchmark(run_benchmark("dataset", pp.design, need(pen, "penalties").pen, bo), out);
  });
}

}  // extern "C"
