#pragma once

#include <filesystem>

#include "marrr/design.hpp"
#include "marrr/preprocess.hpp"
#include "marrr/solver.hpp"

namespace marrr {

// Writes a fit directory: B_<k>.csv on the fitting scale, B_<k>_original.csv
// when `info` is given, factor CSVs U_B_<k>, V_B_<k>, U_S_<l>, V_S_<l>,
// objective_trace.csv and metadata.json with options, penalties and
// convergence state.
void save_fit(const FitResult& fit, const std::filesystem::path& dir,
              const PreprocessInfo* info = nullptr);

// Reads a directory written by save_fit. The fitted signal and residual are
// left empty; restore_signal fills them for a matching design.
FitResult load_fit(const std::filesystem::path& dir);
void restore_signal(const Design& d, FitResult& fit);

}  // namespace marrr
