#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emgsens/types.hpp"

namespace emgsens {

struct ImputationReport {
  struct Cell {
    std::string subject_id;
    std::string column;
    double value = 0.0;                 // final imputed value
    std::vector<double> iteration_trace;
  };
  std::vector<Cell> cells;  // only originally missing cells
  std::uint64_t seed = 0;
  int n_iterations = 0;

  std::string to_json_text() const;
};

struct MiceOptions {
  int n_iter = 10;
  std::uint64_t seed = 0;
  bool noise = true;  // Gaussian noise scaled by the residual sd
};

// Chained-equations imputation: initialize missing cells at column means,
// then repeatedly regress each incomplete column on all others over the rows
// observed for that column and refresh its missing cells. Observed cells are
// never modified. Throws DataError when a column is entirely missing or a
// row has no observed cells.
std::pair<DemographicTable, ImputationReport> mice_impute(
    const DemographicTable& table, const MiceOptions& options);

}  // namespace emgsens
