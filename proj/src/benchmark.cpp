#include "marrr/benchmark.hpp"

#include <chrono>
#include <limits>

#include "csv.hpp"
#include "marrr/errors.hpp"
#include "marrr/simulate.hpp"
#include "marrr/study.hpp"

namespace marrr {

std::vector<BenchmarkRow> run_benchmark(const std::string& configuration, const Design& d,
                                        const PenaltySet& pen, const BenchmarkOptions& opts) {
  if (opts.epochs < 1) throw ConfigError("benchmark epochs must be at least 1");
  std::vector<BenchmarkRow> rows;
  for (Algorithm a : opts.algorithms) {
    SolverOptions so;
    so.algorithm = a;
    so.max_epochs = opts.epochs;
    so.epsilon = std::numeric_limits<double>::min();
    so.r_B_upper = opts.rank_cap;
    so.r_S_upper = opts.rank_cap;
    so.seed = opts.seed;
    const auto start = std::chrono::steady_clock::now();
    const FitResult f = fit(d, pen, so);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    BenchmarkRow row;
    row.configuration = configuration;
    row.algorithm = a;
    row.p = d.p();
    row.q = d.q();
    row.n = d.n();
    row.J = static_cast<Index>(d.cohorts.size());
    row.K = d.K();
    row.L = d.L();
    row.epochs = f.epochs;
    row.seconds = seconds;
    row.seconds_per_epoch = f.epochs > 0 ? seconds / static_cast<double>(f.epochs) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

std::vector<BenchmarkRow> run_benchmark(const BenchmarkOptions& opts) {
  StudyOptions so;
  so.full_scale = opts.full_scale;
  const SimulationSpec spec = study_spec(Study::table2, "large_B", opts.seed, so);
  const SimulatedTruth t = generate(spec);
  const PreparedProblem pp = prepare_problem(t.dataset, t.cfg);
  return run_benchmark(opts.full_scale ? "full" : "toy", pp.design, rmt_penalties(t.dataset, t.cfg), opts);
}

void write_benchmark(const std::vector<BenchmarkRow>& rows, const std::filesystem::path& path) {
  csv::Table t;
  t.header = {"configuration", "algorithm", "p", "q", "n", "J", "K", "L", "epochs", "seconds",
              "seconds_per_epoch"};
  for (const auto& r : rows)
    t.rows.push_back({r.configuration, std::string(algorithm_name(r.algorithm)), std::to_string(r.p),
                      std::to_string(r.q), std::to_string(r.n), std::to_string(r.J), std::to_string(r.K),
                      std::to_string(r.L), std::to_string(r.epochs), csv::format_double(r.seconds),
                      csv::format_double(r.seconds_per_epoch)});
  csv::write(path, t);
}

}  // namespace marrr
