#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace marrr {

enum class ErrorCode {
  dimension = 1,
  schema,
  parse,
  index,
  config,
  degenerate_input,
  degenerate_covariate,
  degeneracy,
  rank_deficiency,
  precondition,
  insufficient_data,
  degenerate_metric,
  numerical,
  io,
};

std::string_view error_name(ErrorCode code);

// Base of every exception raised by the library. The code survives the trip
// through the C interface.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define MARRR_DEFINE_ERROR(Name, Code)                                      \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& message) : Error(ErrorCode::Code, message) {} \
  };

MARRR_DEFINE_ERROR(DimensionError, dimension)
MARRR_DEFINE_ERROR(SchemaError, schema)
MARRR_DEFINE_ERROR(ParseError, parse)
MARRR_DEFINE_ERROR(IndexError, index)
MARRR_DEFINE_ERROR(ConfigError, config)
MARRR_DEFINE_ERROR(DegenerateInputError, degenerate_input)
MARRR_DEFINE_ERROR(DegenerateCovariateError, degenerate_covariate)
MARRR_DEFINE_ERROR(DegeneracyError, degeneracy)
MARRR_DEFINE_ERROR(RankDeficiencyError, rank_deficiency)
MARRR_DEFINE_ERROR(PreconditionError, precondition)
MARRR_DEFINE_ERROR(InsufficientDataError, insufficient_data)
MARRR_DEFINE_ERROR(DegenerateMetricError, degenerate_metric)
MARRR_DEFINE_ERROR(NumericalError, numerical)
MARRR_DEFINE_ERROR(IoError, io)

#undef MARRR_DEFINE_ERROR

}  // namespace marrr
