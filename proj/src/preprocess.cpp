#include "marrr/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include "csv.hpp"
#include "marrr/errors.hpp"

namespace marrr {

std::string_view y_treatment_name(YTreatment t) {
  switch (t) {
    case YTreatment::none: return "none";
    case YTreatment::standardize: return "standardize";
    case YTreatment::orthogonalize: return "orthogonalize";
  }
  return "none";
}

YTreatment parse_y_treatment(std::string_view name) {
  if (name == "none") return YTreatment::none;
  if (name == "standardize") return YTreatment::standardize;
  if (name == "orthogonalize") return YTreatment::orthogonalize;
  throw ConfigError("unknown covariate transform '" + std::string(name) + "'");
}

Matrix YTransform::apply(const Matrix& Y) const {
  switch (kind) {
    case YTreatment::none: return Y;
    case YTreatment::standardize:
      return scale.cwiseInverse().asDiagonal() * (Y.colwise() - center);
    case YTreatment::orthogonalize:
      return d.cwiseInverse().asDiagonal() * U.transpose() * (Y.colwise() - center);
  }
  return Y;
}

double marchenko_pastur_median(double beta) {
  if (!(beta > 0.0) || beta > 1.0) throw PreconditionError("aspect ratio must lie in (0, 1]");
  const double lo = (1.0 - std::sqrt(beta)) * (1.0 - std::sqrt(beta));
  const double hi = (1.0 + std::sqrt(beta)) * (1.0 + std::sqrt(beta));
  auto density = [&](double x) {
    const double v = (hi - x) * (x - lo);
    return v > 0.0 ? std::sqrt(v) / (2.0 * M_PI * beta * x) : 0.0;
  };
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto mass_below = [&](double m) {
    if (m <= lo) return -0.5;
    return integrator.integrate(density, lo, m) - 0.5;
  };
  boost::math::tools::eps_tolerance<double> tol(40);
  std::uintmax_t iterations = 100;
  auto [a, b] = boost::math::tools::toms748_solve(mass_below, lo, hi, -0.5, 0.5, tol, iterations);
  return 0.5 * (a + b);
}

double estimate_noise_sd(const Matrix& X) {
  const Index lo = std::min(X.rows(), X.cols());
  const Index hi = std::max(X.rows(), X.cols());
  if (lo < 1) throw DegenerateInputError("empty outcome matrix");
  Vector d = singular_values(X);
  std::sort(d.data(), d.data() + d.size());
  const Index m = d.size();
  const double median = m % 2 ? d(m / 2) : 0.5 * (d(m / 2 - 1) + d(m / 2));
  if (!(median > 0.0))
    throw DegenerateInputError("outcome matrix has no spread after centering; cannot estimate noise");
  const double beta = static_cast<double>(lo) / static_cast<double>(hi);
  return median / std::sqrt(static_cast<double>(hi) * marchenko_pastur_median(beta));
}

ScaledX center_and_scale_x(const Matrix& X) {
  if (X.rows() < 2 || X.cols() < 2) throw DimensionError("outcome matrix needs at least 2x2 entries");
  ScaledX out;
  out.row_means.resize(X.rows());
  out.X.resize(X.rows(), X.cols());
  for (Index i = 0; i < X.rows(); ++i) {
    double sum = 0.0;
    Index count = 0;
    for (Index j = 0; j < X.cols(); ++j)
      if (!std::isnan(X(i, j))) {
        sum += X(i, j);
        ++count;
      }
    out.row_means(i) = count ? sum / static_cast<double>(count) : 0.0;
    for (Index j = 0; j < X.cols(); ++j)
      out.X(i, j) = std::isnan(X(i, j)) ? 0.0 : X(i, j) - out.row_means(i);
  }
  out.sigma_hat = estimate_noise_sd(out.X);
  out.X /= out.sigma_hat;
  return out;
}

TransformedY standardize_y(const Matrix& Y) {
  TransformedY out;
  out.transform.kind = YTreatment::standardize;
  out.transform.center = Y.rowwise().mean();
  Matrix centered = Y.colwise() - out.transform.center;
  out.transform.scale = centered.rowwise().norm();
  for (Index i = 0; i < Y.rows(); ++i) {
    const double size = std::max(1.0, Y.row(i).cwiseAbs().maxCoeff());
    if (!(out.transform.scale(i) > 1e-12 * size))
      throw DegenerateCovariateError("covariate " + std::to_string(i + 1) +
                                     " does not vary within the module");
  }
  out.Y = out.transform.scale.cwiseInverse().asDiagonal() * centered;
  return out;
}

TransformedY orthogonalize_y(const Matrix& Y) {
  const Index q = Y.rows(), n = Y.cols();
  if (q >= n)
    throw DegeneracyError("orthogonalizing " + std::to_string(q) + " covariates over " +
                          std::to_string(n) +
                          " samples makes the covariate term indistinguishable from an "
                          "unsupervised one; need fewer covariates than samples");
  TransformedY out;
  out.transform.kind = YTreatment::orthogonalize;
  out.transform.center = Y.rowwise().mean();
  Svd s = thin_svd(Y.colwise() - out.transform.center);
  if (!(s.d(0) > 0.0) || !(s.d(q - 1) > 1e-10 * s.d(0)))
    throw RankDeficiencyError("centered covariate block has rank below " + std::to_string(q));
  out.transform.U = s.U;
  out.transform.d = s.d;
  out.Y = s.V.transpose();
  return out;
}

TransformedY transform_y(const Matrix& Y, YTreatment kind) {
  switch (kind) {
    case YTreatment::standardize: return standardize_y(Y);
    case YTreatment::orthogonalize: return orthogonalize_y(Y);
    case YTreatment::none: break;
  }
  return {Y, YTransform{}};
}

Matrix backmap_b(const Matrix& B_fit, const YTransform& t) {
  switch (t.kind) {
    case YTreatment::none: return B_fit;
    case YTreatment::standardize: return B_fit * t.scale.cwiseInverse().asDiagonal();
    case YTreatment::orthogonalize:
      return B_fit * t.d.cwiseInverse().asDiagonal() * t.U.transpose();
  }
  return B_fit;
}

Matrix backmap_x(const Matrix& X_scaled, const PreprocessInfo& info) {
  Matrix out = info.sigma_hat * X_scaled;
  if (info.row_means.size() == out.rows()) out.colwise() += info.row_means;
  return out;
}

namespace {

void write_section(std::ostream& out, const std::string& name, const Matrix& m) {
  out << '[' << name << "]\n" << csv::matrix_to_text(m);
}

}  // namespace

void save_preprocess_info(const PreprocessInfo& info, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "format,marrr-preprocess-1\n";
  out << "sigma_hat," << csv::format_double(info.sigma_hat) << '\n';
  out << "y_count," << info.y_transforms.size() << '\n';
  for (std::size_t k = 0; k < info.y_transforms.size(); ++k)
    out << 'y' << k + 1 << ".kind," << y_treatment_name(info.y_transforms[k].kind) << '\n';
  write_section(out, "row_means", info.row_means);
  if (info.y_cohort_means.size() > 0) write_section(out, "y_cohort_means", info.y_cohort_means);
  for (std::size_t k = 0; k < info.y_transforms.size(); ++k) {
    const auto& t = info.y_transforms[k];
    const std::string prefix = "y" + std::to_string(k + 1) + ".";
    if (t.kind == YTreatment::none) continue;
    write_section(out, prefix + "center", t.center);
    if (t.kind == YTreatment::standardize) {
      write_section(out, prefix + "scale", t.scale);
    } else {
      write_section(out, prefix + "U", t.U);
      write_section(out, prefix + "d", t.d);
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

PreprocessInfo load_preprocess_info(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::map<std::string, std::string> keys;
  std::map<std::string, std::vector<std::string>> sections;
  std::string line, current;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(path.string() + ": bad section header " + line);
      current = line.substr(1, line.size() - 2);
      sections[current];
    } else if (current.empty()) {
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw ParseError(path.string() + ": bad line " + line);
      keys[line.substr(0, comma)] = line.substr(comma + 1);
    } else {
      sections[current].push_back(line);
    }
  }
  if (keys["format"] != "marrr-preprocess-1")
    throw SchemaError(path.string() + ": not a preprocessing sidecar");
  auto section = [&](const std::string& name) -> Matrix {
    auto it = sections.find(name);
    if (it == sections.end()) throw SchemaError(path.string() + ": missing section " + name);
    return csv::matrix_from_lines(it->second, path.string());
  };
  auto vec = [&](const std::string& name) -> Vector {
    Matrix m = section(name);
    if (m.size() == 0) return Vector(0);
    if (m.cols() != 1) throw DimensionError(path.string() + ": section " + name + " is not a column");
    return m.col(0);
  };

  PreprocessInfo info;
  info.sigma_hat = csv::parse_double(keys["sigma_hat"], path.string());
  info.row_means = vec("row_means");
  if (sections.count("y_cohort_means")) info.y_cohort_means = section("y_cohort_means");
  const long long count = csv::parse_integer(keys["y_count"], path.string());
  for (long long k = 0; k < count; ++k) {
    const std::string prefix = "y" + std::to_string(k + 1) + ".";
    YTransform t;
    t.kind = parse_y_treatment(keys[prefix + "kind"]);
    if (t.kind != YTreatment::none) t.center = vec(prefix + "center");
    if (t.kind == YTreatment::standardize) t.scale = vec(prefix + "scale");
    if (t.kind == YTreatment::orthogonalize) {
      t.U = section(prefix + "U");
      t.d = vec(prefix + "d");
    }
    info.y_transforms.push_back(std::move(t));
  }
  return info;
}

}  // namespace marrr
