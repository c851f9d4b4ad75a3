#include "marrr/errors.hpp"

namespace marrr {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::dimension: return "DimensionError";
    case ErrorCode::schema: return "SchemaError";
    case ErrorCode::parse: return "ParseError";
    case ErrorCode::index: return "IndexError";
    case ErrorCode::config: return "ConfigError";
    case ErrorCode::degenerate_input: return "DegenerateInputError";
    case ErrorCode::degenerate_covariate: return "DegenerateCovariateError";
    case ErrorCode::degeneracy: return "DegeneracyError";
    case ErrorCode::rank_deficiency: return "RankDeficiencyError";
    case ErrorCode::precondition: return "PreconditionError";
    case ErrorCode::insufficient_data: return "InsufficientDataError";
    case ErrorCode::degenerate_metric: return "DegenerateMetricError";
    case ErrorCode::numerical: return "NumericalError";
    case ErrorCode::io: return "IoError";
  }
  return "Error";
}

}  // namespace marrr
