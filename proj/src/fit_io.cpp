#include "marrr/fit_io.hpp"

#include <fstream>

#include <json.hpp>

#include "csv.hpp"
#include "marrr/errors.hpp"

namespace marrr {

namespace fs = std::filesystem;

namespace {

std::string numbered(const std::string& stem, Index i) { return stem + "_" + std::to_string(i + 1) + ".csv"; }

Matrix read_shaped(const fs::path& path, Index rows) {
  Matrix m = csv::read_matrix(path);
  if (m.size() == 0) return Matrix(rows, 0);
  if (m.rows() != rows) throw DimensionError(path.string() + ": expected " + std::to_string(rows) + " rows");
  return m;
}

}  // namespace

void save_fit(const FitResult& fit, const fs::path& dir, const PreprocessInfo* info) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  const Index p = fit.B.empty() ? (fit.s_factors.empty() ? 0 : fit.s_factors[0].U.rows()) : fit.B[0].rows();
  const Index q = fit.B.empty() ? 0 : fit.B[0].cols();
  const Index n = fit.s_factors.empty() ? fit.signal.cols() : fit.s_factors[0].V.rows();

  for (Index k = 0; k < fit.K(); ++k) {
    csv::write_matrix(dir / numbered("B", k), fit.B[k]);
    csv::write_matrix(dir / numbered("U_B", k), fit.b_factors[k].U);
    csv::write_matrix(dir / numbered("V_B", k), fit.b_factors[k].V);
  }
  if (info) {
    const auto original = coefficients_original(fit, *info);
    for (Index k = 0; k < fit.K(); ++k)
      csv::write_matrix(dir / ("B_" + std::to_string(k + 1) + "_original.csv"), original[k]);
  }
  for (Index l = 0; l < fit.L(); ++l) {
    csv::write_matrix(dir / numbered("U_S", l), fit.s_factors[l].U);
    csv::write_matrix(dir / numbered("V_S", l), fit.s_factors[l].V);
  }
  csv::Table trace;
  trace.header = {"epoch", "objective"};
  for (std::size_t e = 0; e < fit.objective_trace.size(); ++e)
    trace.rows.push_back({std::to_string(e + 1), csv::format_double(fit.objective_trace[e])});
  csv::write(dir / "objective_trace.csv", trace);

  nlohmann::json meta;
  meta["algorithm"] = algorithm_name(fit.algorithm);
  meta["epochs"] = fit.epochs;
  meta["converged"] = fit.converged;
  meta["epsilon"] = fit.epsilon;
  meta["p"] = p;
  meta["q"] = q;
  meta["n"] = n;
  meta["K"] = fit.K();
  meta["L"] = fit.L();
  meta["lambda_B"] = fit.penalties.lambda_B;
  meta["lambda_S"] = fit.penalties.lambda_S;
  meta["options"] = {{"algorithm", algorithm_name(fit.options.algorithm)},
                     {"epsilon", fit.options.epsilon},
                     {"max_epochs", fit.options.max_epochs},
                     {"r_B_upper", fit.options.r_B_upper},
                     {"r_S_upper", fit.options.r_S_upper},
                     {"seed", fit.options.seed},
                     {"init_scale", fit.options.init_scale}};
  if (info) meta["sigma_hat"] = info->sigma_hat;
  std::ofstream out(dir / "metadata.json");
  out << meta.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + (dir / "metadata.json").string());
}

FitResult load_fit(const fs::path& dir) {
  std::ifstream in(dir / "metadata.json");
  if (!in) throw IoError("cannot open " + (dir / "metadata.json").string());
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError((dir / "metadata.json").string() + ": " + e.what());
  }
  FitResult fit;
  try {
    fit.algorithm = parse_algorithm(meta.at("algorithm").get<std::string>());
    fit.epochs = meta.at("epochs").get<Index>();
    fit.converged = meta.at("converged").get<bool>();
    fit.epsilon = meta.at("epsilon").get<double>();
    fit.penalties.lambda_B = meta.at("lambda_B").get<std::vector<double>>();
    fit.penalties.lambda_S = meta.at("lambda_S").get<std::vector<double>>();
    const auto& o = meta.at("options");
    fit.options.algorithm = parse_algorithm(o.at("algorithm").get<std::string>());
    fit.options.epsilon = o.at("epsilon").get<double>();
    fit.options.max_epochs = o.at("max_epochs").get<Index>();
    fit.options.r_B_upper = o.at("r_B_upper").get<Index>();
    fit.options.r_S_upper = o.at("r_S_upper").get<Index>();
    fit.options.seed = o.at("seed").get<std::uint64_t>();
    fit.options.init_scale = o.at("init_scale").get<double>();
    const Index p = meta.at("p").get<Index>(), q = meta.at("q").get<Index>(), n = meta.at("n").get<Index>();
    const Index K = meta.at("K").get<Index>(), L = meta.at("L").get<Index>();
    for (Index k = 0; k < K; ++k) {
      fit.B.push_back(read_shaped(dir / numbered("B", k), p));
      fit.b_factors.push_back({read_shaped(dir / numbered("U_B", k), p), read_shaped(dir / numbered("V_B", k), q)});
    }
    for (Index l = 0; l < L; ++l)
      fit.s_factors.push_back({read_shaped(dir / numbered("U_S", l), p), read_shaped(dir / numbered("V_S", l), n)});
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError((dir / "metadata.json").string() + ": " + e.what());
  }
  const csv::Table trace = csv::read(dir / "objective_trace.csv");
  for (const auto& row : trace.rows) fit.objective_trace.push_back(csv::parse_double(row.at(1), "objective_trace.csv"));
  return fit;
}

void restore_signal(const Design& d, FitResult& fit) {
  if (fit.K() != d.K() || fit.L() != d.L()) throw DimensionError("fit does not match the design's modules");
  Matrix signal = Matrix::Zero(d.p(), d.n());
  for (Index k = 0; k < d.K(); ++k) signal += covariate_signal(d, fit, k);
  for (Index l = 0; l < d.L(); ++l) signal += fit.S(l);
  fit.residual = d.X - signal;
  fit.signal = std::move(signal);
}

}  // namespace marrr
