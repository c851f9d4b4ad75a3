// marrr command-line tool: fit, impute, simulate, select-modules, penalties,
// benchmark. Talks to the library only through the C interface.
#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "marrr/marrr.h"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Carries a library status out of a command handler.
struct Failure {
  marrr_status status;
  std::string message;
};

void check(marrr_status s) {
  if (s != MARRR_OK) throw Failure{s, marrr_last_error()};
}

[[noreturn]] void usage_error(const std::string& message) { throw Failure{MARRR_ERR_CONFIG, message}; }

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Dataset = std::unique_ptr<marrr_dataset, Deleter<marrr_dataset, marrr_dataset_free>>;
using Mask = std::unique_ptr<marrr_mask, Deleter<marrr_mask, marrr_mask_free>>;
using Config = std::unique_ptr<marrr_config, Deleter<marrr_config, marrr_config_free>>;
using Penalties = std::unique_ptr<marrr_penalties, Deleter<marrr_penalties, marrr_penalties_free>>;
using Fit = std::unique_ptr<marrr_fit, Deleter<marrr_fit, marrr_fit_free>>;
using Imputation = std::unique_ptr<marrr_imputation, Deleter<marrr_imputation, marrr_imputation_free>>;
using Simulation = std::unique_ptr<marrr_simulation, Deleter<marrr_simulation, marrr_simulation_free>>;

struct DataArgs {
  std::string x, y, cohorts;

  void add(CLI::App* cmd, bool required = true) {
    auto* a = cmd->add_option("--x", x, "Outcome CSV (features x samples, NA for missing)");
    auto* b = cmd->add_option("--y", y, "Covariate CSV (covariates x samples)");
    auto* c = cmd->add_option("--cohorts", cohorts, "Cohort map CSV with sample_id,cohort_id");
    if (required) {
      a->required();
      b->required();
      c->required();
    }
  }
  bool given() const { return !x.empty() || !y.empty() || !cohorts.empty(); }
  Dataset load() const {
    if (x.empty() || y.empty() || cohorts.empty()) usage_error("--x, --y and --cohorts go together");
    marrr_dataset* ds = nullptr;
    check(marrr_dataset_load(x.c_str(), y.c_str(), cohorts.c_str(), &ds));
    return Dataset(ds);
  }
  json to_json() const { return {{"x", x}, {"y", y}, {"cohorts", cohorts}}; }
};

struct SolverArgs {
  std::string algorithm = "svt";
  std::string y_transform = "orthogonalize";
  double epsilon = 0.0;
  int64_t max_epochs = -1;  // -1: command default
  int64_t rank_b = 20;
  int64_t rank_s = 20;
  uint64_t seed = 1;
  bool no_scale_x = false;
  bool no_center_y = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--algorithm", algorithm, "als (factored updates) or svt (soft-threshold updates)")
        ->check(CLI::IsMember({"als", "svt"}))
        ->capture_default_str();
    cmd->add_option("--y-transform", y_transform, "none, standardize or orthogonalize")
        ->check(CLI::IsMember({"none", "standardize", "orthogonalize"}))
        ->capture_default_str();
    cmd->add_option("--epsilon", epsilon, "Convergence threshold; 0 selects 1e-6 * p * n");
    cmd->add_option("--max-epochs", max_epochs, "Epoch limit per fit");
    cmd->add_option("--rank-b", rank_b, "Rank upper bound of each coefficient module")->capture_default_str();
    cmd->add_option("--rank-s", rank_s, "Rank upper bound of each auxiliary module")->capture_default_str();
    cmd->add_option("--seed", seed, "Seed of the factor initialization")->capture_default_str();
    cmd->add_flag("--no-scale-x", no_scale_x, "Fit the outcomes as given, without centering or noise scaling");
    cmd->add_flag("--no-center-y", no_center_y, "Keep covariate means instead of removing them per cohort");
  }

  marrr_solver_options resolve(bool imputation) {
    marrr_solver_options o;
    if (imputation) marrr_impute_solver_options_default(&o);
    else marrr_solver_options_default(&o);
    o.algorithm = algorithm == "als" ? MARRR_ALGORITHM_FACTORED_ALS : MARRR_ALGORITHM_SVT_ALS;
    o.y_treatment = y_transform == "none"          ? MARRR_Y_NONE
                    : y_transform == "standardize" ? MARRR_Y_STANDARDIZE
                                                   : MARRR_Y_ORTHOGONALIZE;
    o.epsilon = epsilon;
    if (max_epochs >= 0) o.max_epochs = max_epochs;
    max_epochs = o.max_epochs;
    o.r_B_upper = rank_b;
    o.r_S_upper = rank_s;
    o.seed = seed;
    o.scale_x = no_scale_x ? 0 : 1;
    o.center_y_per_cohort = no_center_y ? 0 : 1;
    return o;
  }

  json to_json() const {
    return {{"algorithm", algorithm}, {"y_transform", y_transform}, {"epsilon", epsilon},
            {"max_epochs", max_epochs}, {"rank_b", rank_b}, {"rank_s", rank_s},
            {"seed", seed}, {"scale_x", !no_scale_x}, {"center_y_per_cohort", !no_center_y}};
  }
};

void write_metadata(const fs::path& dir, const std::string& command, json options) {
  json meta;
  meta["command"] = command;
  meta["version"] = marrr_version();
  meta["options"] = std::move(options);
  std::ofstream f(dir / "run.json");
  if (!f) throw Failure{MARRR_ERR_IO, "cannot write " + (dir / "run.json").string()};
  f << meta.dump(2) << "\n";
}

fs::path make_out_dir(const std::string& out) {
  const fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure{MARRR_ERR_IO, "cannot create " + dir.string() + ": " + ec.message()};
  return dir;
}

Config load_config(const std::string& path, const marrr_dataset* ds) {
  marrr_config* cfg = nullptr;
  check(marrr_config_load(path.c_str(), ds, &cfg));
  return Config(cfg);
}

Penalties resolve_penalties(const std::string& path, const marrr_dataset* ds, const marrr_config* cfg) {
  marrr_penalties* pen = nullptr;
  if (path.empty()) check(marrr_penalties_rmt(ds, cfg, &pen));
  else check(marrr_penalties_load(path.c_str(), &pen));
  return Penalties(pen);
}

// Prints penalty-condition violations; with `strict` they abort the command.
void report_violations(const marrr_config* cfg, const marrr_penalties* pen, const marrr_dataset* ds, bool strict) {
  size_t count = 0;
  char* report = nullptr;
  check(marrr_check_penalties(cfg, pen, ds, &count, &report));
  std::string text = report ? report : "";
  marrr_string_free(report);
  if (count == 0) return;
  std::cerr << (strict ? "error" : "warning") << ": " << count << " penalty condition violation(s)\n" << text;
  if (strict) throw Failure{MARRR_ERR_CONFIG, "penalties leave some module unidentifiable (--strict)"};
}

int job_count(int requested) {
  int jobs = requested > 0 ? requested : 1;
  if (const char* env = std::getenv("MARRR_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) jobs = std::min(jobs, cap);
  }
  return jobs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"marrr: multi-cohort reduced rank regression with auxiliary low-rank structure"};
  app.set_config("--config", "", "TOML or INI file of options; command-line flags take precedence");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(marrr_version()));

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model and write estimates");
  DataArgs fit_data;
  SolverArgs fit_solver;
  std::string fit_modules, fit_penalties, fit_out;
  bool fit_strict = false;
  fit_data.add(fit_cmd);
  fit_solver.add(fit_cmd);
  fit_cmd->add_option("--modules", fit_modules, "Module indicator CSV")->required();
  fit_cmd->add_option("--penalties", fit_penalties, "Penalty CSV (default: random-matrix penalties)");
  fit_cmd->add_option("--out", fit_out, "Output directory")->required();
  fit_cmd->add_flag("--strict", fit_strict, "Fail when penalties violate the identifiability conditions");

  // impute
  auto* imp_cmd = app.add_subcommand("impute", "Impute missing outcome cells");
  DataArgs imp_data;
  SolverArgs imp_solver;
  std::string imp_modules, imp_penalties, imp_out, imp_mask, imp_truth;
  int64_t imp_outer = 20;
  double imp_tol = 0.0;
  bool imp_strict = false;
  imp_data.add(imp_cmd);
  imp_solver.add(imp_cmd);
  imp_cmd->add_option("--modules", imp_modules, "Module indicator CSV")->required();
  imp_cmd->add_option("--penalties", imp_penalties, "Penalty CSV (default: random-matrix penalties)");
  imp_cmd->add_option("--mask", imp_mask, "Extra cells to hide, CSV of row_index,col_index");
  imp_cmd->add_option("--truth", imp_truth, "Complete outcome CSV; reports relative squared error");
  imp_cmd->add_option("--outer-max", imp_outer, "Maximum imputation passes")->capture_default_str();
  imp_cmd->add_option("--tolerance", imp_tol, "Change threshold; 0 selects 1e-4 * ||observed X||_F");
  imp_cmd->add_option("--out", imp_out, "Output directory")->required();
  imp_cmd->add_flag("--strict", imp_strict, "Fail when penalties violate the identifiability conditions");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Generate data and run reproduction studies");
  std::string sim_scenario, sim_which, sim_reproduce, sim_out, sim_variants;
  int64_t sim_replicates = 0;
  uint64_t sim_seed = 1;
  int sim_jobs = 1;
  bool sim_full_scale = false, sim_data_only = false;
  sim_cmd->add_option("--scenario", sim_scenario,
                      "aRRR_single, mRRR_two_cohort, global_individual or orthogonality_study");
  sim_cmd->add_option("--which", sim_which, "Scenario variant, e.g. 1_r1 or large_B");
  sim_cmd->add_option("--reproduce", sim_reproduce, "Run a study: table1a, table1b, table2 or orthogonality");
  sim_cmd->add_option("--variants", sim_variants, "Comma-separated subset of study variants");
  sim_cmd->add_option("--replicates", sim_replicates, "Replicates (default 1 per scenario, 25 or 10 per study)");
  sim_cmd->add_option("--seed", sim_seed, "Master seed")->capture_default_str();
  sim_cmd->add_option("--jobs", sim_jobs, "Replicates run in parallel")->capture_default_str();
  sim_cmd->add_flag("--full-scale", sim_full_scale, "table2 at 1000 x 6581 with 30 cohorts");
  sim_cmd->add_flag("--data-only", sim_data_only, "Write the simulated data without running methods");
  sim_cmd->add_option("--out", sim_out, "Output directory")->required();

  // select-modules
  auto* sel_cmd = app.add_subcommand("select-modules", "Propose a module indicator configuration");
  DataArgs sel_data;
  std::string sel_method = "forward", sel_out;
  long sel_max = -1;
  sel_data.add(sel_cmd);
  sel_cmd->add_option("--method", sel_method, "forward (greedy search) or enumerate (all cohort subsets)")
      ->check(CLI::IsMember({"forward", "enumerate"}))
      ->capture_default_str();
  sel_cmd->add_option("--max-modules", sel_max, "Module limit; negative keeps all enumerated subsets");
  sel_cmd->add_option("--out", sel_out, "Output module CSV")->required();

  // penalties
  auto* pen_cmd = app.add_subcommand("penalties", "Write random-matrix penalties and check them");
  DataArgs pen_data;
  std::string pen_modules, pen_out, pen_check;
  bool pen_strict = false;
  pen_data.add(pen_cmd);
  pen_cmd->add_option("--modules", pen_modules, "Module indicator CSV")->required();
  pen_cmd->add_option("--check", pen_check, "Check this penalty CSV instead of writing new penalties");
  pen_cmd->add_option("--out", pen_out, "Output penalty CSV");
  pen_cmd->add_flag("--strict", pen_strict, "Fail when penalties violate the identifiability conditions");

  // benchmark
  auto* bench_cmd = app.add_subcommand("benchmark", "Time solver epochs");
  DataArgs bench_data;
  std::string bench_modules, bench_penalties, bench_out, bench_algorithm = "both";
  marrr_benchmark_options bench;
  marrr_benchmark_options_default(&bench);
  bool bench_full = false;
  bench_data.add(bench_cmd, false);
  bench_cmd->add_option("--modules", bench_modules, "Module indicator CSV for a dataset benchmark");
  bench_cmd->add_option("--penalties", bench_penalties, "Penalty CSV for a dataset benchmark");
  bench_cmd->add_option("--algorithm", bench_algorithm, "als, svt or both")
      ->check(CLI::IsMember({"als", "svt", "both"}))
      ->capture_default_str();
  bench_cmd->add_option("--epochs", bench.epochs, "Timed epochs per algorithm")->capture_default_str();
  bench_cmd->add_option("--rank-cap", bench.rank_cap, "Rank upper bound for factored updates")->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "Seed")->capture_default_str();
  bench_cmd->add_flag("--full-scale", bench_full, "Simulated 1000 x 6581 data with 31 + 31 modules");
  bench_cmd->add_option("--out", bench_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*fit_cmd) {
      const marrr_solver_options so = fit_solver.resolve(false);
      Dataset ds = fit_data.load();
      Config cfg = load_config(fit_modules, ds.get());
      Penalties pen = resolve_penalties(fit_penalties, ds.get(), cfg.get());
      report_violations(cfg.get(), pen.get(), ds.get(), fit_strict);
      marrr_fit* raw = nullptr;
      check(marrr_fit_run(ds.get(), cfg.get(), pen.get(), &so, &raw));
      Fit f(raw);
      const fs::path dir = make_out_dir(fit_out);
      check(marrr_fit_save(f.get(), dir.string().c_str()));
      check(marrr_penalties_save(pen.get(), (dir / "penalties.csv").string().c_str()));
      int64_t epochs = 0;
      int converged = 0;
      double objective = 0.0;
      check(marrr_fit_summary(f.get(), &epochs, &converged, &objective));
      write_metadata(dir, "fit",
                     {{"data", fit_data.to_json()}, {"modules", fit_modules}, {"penalties", fit_penalties},
                      {"solver", fit_solver.to_json()}, {"strict", fit_strict}});
      std::cout << "fit: " << epochs << " epochs, " << (converged ? "converged" : "not converged")
                << ", objective " << objective << "\n";
    } else if (*imp_cmd) {
      const marrr_solver_options so = imp_solver.resolve(true);
      Dataset ds = imp_data.load();
      Config cfg = load_config(imp_modules, ds.get());
      Penalties pen = resolve_penalties(imp_penalties, ds.get(), cfg.get());
      report_violations(cfg.get(), pen.get(), ds.get(), imp_strict);
      Mask extra;
      if (!imp_mask.empty()) {
        marrr_mask* m = nullptr;
        check(marrr_mask_load(imp_mask.c_str(), &m));
        extra.reset(m);
      }
      marrr_impute_options io;
      marrr_impute_options_default(&io);
      io.outer_max = imp_outer;
      io.tolerance = imp_tol;
      marrr_imputation* raw = nullptr;
      check(marrr_impute_run(ds.get(), extra.get(), cfg.get(), pen.get(), &so, &io, &raw));
      Imputation imp(raw);
      const fs::path dir = make_out_dir(imp_out);
      marrr_dataset* done_raw = nullptr;
      check(marrr_imputation_dataset(imp.get(), &done_raw));
      Dataset done(done_raw);
      check(marrr_dataset_save(done.get(), (dir / "X_completed.csv").string().c_str(),
                               (dir / "Y.csv").string().c_str(), (dir / "cohorts.csv").string().c_str()));
      check(marrr_imputation_save_trace(imp.get(), (dir / "imputation_trace.csv").string().c_str()));
      int64_t passes = 0;
      int converged = 0;
      double tolerance = 0.0;
      check(marrr_imputation_summary(imp.get(), &passes, &converged, &tolerance));

      if (!imp_truth.empty()) {
        marrr_dataset* truth_raw = nullptr;
        check(marrr_dataset_load(imp_truth.c_str(), imp_data.y.c_str(), imp_data.cohorts.c_str(), &truth_raw));
        Dataset truth(truth_raw);
        marrr_mask* all_raw = nullptr;
        check(marrr_mask_from_dataset(ds.get(), &all_raw));
        Mask all(all_raw);
        if (extra) {
          marrr_mask* merged = nullptr;
          check(marrr_mask_merge(all.get(), extra.get(), &merged));
          all.reset(merged);
        }
        const char* kind = nullptr;
        check(marrr_mask_classify(all.get(), ds.get(), &kind));
        std::ofstream f(dir / "rse.csv");
        f << "kind,cells,rse\n";
        double total = 0.0;
        check(marrr_imputation_rse(imp.get(), truth.get(), all.get(), &total));
        size_t cells = 0;
        check(marrr_mask_size(all.get(), &cells));
        f << "all," << cells << "," << total << "\n";
        double sum = 0.0;
        int parts = 0;
        for (const char* part : {"entry", "column", "row"}) {
          marrr_mask* pm = nullptr;
          check(marrr_mask_part(all.get(), ds.get(), part, &pm));
          Mask piece(pm);
          size_t n = 0;
          check(marrr_mask_size(piece.get(), &n));
          if (n == 0) continue;
          double value = 0.0;
          check(marrr_imputation_rse(imp.get(), truth.get(), piece.get(), &value));
          f << part << "," << n << "," << value << "\n";
          sum += value;
          ++parts;
        }
        if (std::string(kind) == "mixed" && parts > 0) f << "mixed_mean," << cells << "," << sum / parts << "\n";
        std::cout << "impute: rse " << total << " over " << cells << " cells (" << kind << ")\n";
      }
      write_metadata(dir, "impute",
                     {{"data", imp_data.to_json()}, {"modules", imp_modules}, {"penalties", imp_penalties},
                      {"mask", imp_mask}, {"truth", imp_truth}, {"solver", imp_solver.to_json()},
                      {"outer_max", imp_outer}, {"tolerance", tolerance}, {"strict", imp_strict}});
      std::cout << "impute: " << passes << " passes, " << (converged ? "converged" : "not converged") << "\n";
    } else if (*sim_cmd) {
      const fs::path dir = make_out_dir(sim_out);
      const int jobs = job_count(sim_jobs);
      std::string study = sim_reproduce;
      json meta{{"seed", sim_seed}, {"jobs", jobs}, {"full_scale", sim_full_scale}};
      if (!sim_scenario.empty()) {
        if (!sim_reproduce.empty()) usage_error("use either --scenario or --reproduce");
        if (sim_which.empty()) usage_error("--scenario needs --which");
        const char* s = nullptr;
        check(marrr_study_for_scenario(sim_scenario.c_str(), &s));
        study = s;
        marrr_simulation* raw = nullptr;
        check(marrr_simulation_generate(sim_scenario.c_str(), sim_which.c_str(), marrr_derive_seed(sim_seed, 0),
                                        &raw));
        Simulation sim(raw);
        check(marrr_simulation_save(sim.get(), (dir / "data").string().c_str()));
        sim_variants = sim_which;
        meta["scenario"] = sim_scenario;
        meta["which"] = sim_which;
      } else if (sim_reproduce.empty()) {
        usage_error("simulate needs --scenario with --which, or --reproduce");
      }
      if (!sim_data_only) {
        marrr_study_options so;
        marrr_study_options_default(&so);
        if (sim_replicates > 0) so.replicates = sim_replicates;
        else if (!sim_scenario.empty()) so.replicates = 1;
        else if (study == "table2") so.replicates = 10;
        so.seed = sim_seed;
        so.jobs = jobs;
        so.variants = sim_variants.empty() ? nullptr : sim_variants.c_str();
        so.full_scale = sim_full_scale ? 1 : 0;
        check(marrr_study_run(study.c_str(), &so, (dir / "metrics.csv").string().c_str(),
                              (dir / "summary.csv").string().c_str()));
        meta["study"] = study;
        meta["replicates"] = so.replicates;
        meta["variants"] = sim_variants;
        meta["missing_fraction"] = so.missing_fraction;
        meta["rank_upper"] = so.rank_upper;
        meta["max_epochs"] = so.max_epochs;
        meta["impute_epochs"] = so.impute_epochs;
        std::cout << "simulate: wrote " << (dir / "metrics.csv").string() << "\n";
      }
      write_metadata(dir, "simulate", meta);
    } else if (*sel_cmd) {
      Dataset ds = sel_data.load();
      size_t J = 0;
      check(marrr_dataset_dims(ds.get(), nullptr, nullptr, nullptr, &J));
      marrr_config* raw = nullptr;
      if (sel_method == "enumerate") {
        check(marrr_config_enumerate(J, sel_max, &raw));
      } else {
        const size_t limit = sel_max > 0 ? static_cast<size_t>(sel_max) : (size_t{1} << std::min<size_t>(J, 10)) - 1;
        check(marrr_config_forward_select(ds.get(), limit, &raw));
      }
      Config cfg(raw);
      check(marrr_config_save(cfg.get(), sel_out.c_str(), ds.get()));
      size_t L = 0;
      check(marrr_config_dims(cfg.get(), nullptr, nullptr, &L));
      const fs::path parent = fs::absolute(fs::path(sel_out)).parent_path();
      write_metadata(parent, "select-modules",
                     {{"data", sel_data.to_json()}, {"method", sel_method}, {"max_modules", sel_max},
                      {"out", sel_out}});
      std::cout << "select-modules: " << L << " modules\n";
    } else if (*pen_cmd) {
      Dataset ds = pen_data.load();
      Config cfg = load_config(pen_modules, ds.get());
      Penalties pen = resolve_penalties(pen_check, ds.get(), cfg.get());
      report_violations(cfg.get(), pen.get(), ds.get(), pen_strict);
      if (!pen_out.empty()) {
        check(marrr_penalties_save(pen.get(), pen_out.c_str()));
        write_metadata(fs::absolute(fs::path(pen_out)).parent_path(), "penalties",
                       {{"data", pen_data.to_json()}, {"modules", pen_modules}, {"check", pen_check},
                        {"out", pen_out}, {"strict", pen_strict}});
      }
      std::cout << "penalties: ok\n";
    } else if (*bench_cmd) {
      bench.full_scale = bench_full ? 1 : 0;
      bench.factored_als = bench_algorithm != "svt";
      bench.svt_als = bench_algorithm != "als";
      if (bench_data.given()) {
        if (bench_modules.empty()) usage_error("a dataset benchmark needs --modules");
        Dataset ds = bench_data.load();
        Config cfg = load_config(bench_modules, ds.get());
        Penalties pen = resolve_penalties(bench_penalties, ds.get(), cfg.get());
        marrr_solver_options prep;
        marrr_solver_options_default(&prep);
        check(marrr_benchmark_run_dataset(ds.get(), cfg.get(), pen.get(), &bench, &prep, bench_out.c_str()));
      } else {
        check(marrr_benchmark_run(&bench, bench_out.c_str()));
      }
      write_metadata(fs::absolute(fs::path(bench_out)).parent_path(), "benchmark",
                     {{"data", bench_data.to_json()}, {"modules", bench_modules}, {"algorithm", bench_algorithm},
                      {"epochs", bench.epochs}, {"rank_cap", bench.rank_cap}, {"seed", bench.seed},
                      {"full_scale", bench_full}, {"out", bench_out}});
      std::cout << "benchmark: wrote " << bench_out << "\n";
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << marrr_status_name(f.status) << ": " << f.message << "\n";
    return marrr_exit_code(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
