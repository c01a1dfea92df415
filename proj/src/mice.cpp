#include "emgsens/mice.hpp"

#include <Eigen/Dense>
#include <cmath>

#include <nlohmann/json.hpp>

#include "emgsens/errors.hpp"
#include "emgsens/util.hpp"

using nlohmann::json;

namespace emgsens {

std::string ImputationReport::to_json_text() const {
  json cells_json = json::array();
  for (const auto& c : cells) {
    cells_json.push_back({{"subject", c.subject_id},
                          {"column", c.column},
                          {"value", c.value},
                          {"iteration_trace", c.iteration_trace}});
  }
  json j;
  j["seed"] = seed;
  j["n_iterations"] = n_iterations;
  j["n_imputed_cells"] = cells.size();
  j["cells"] = cells_json;
  return j.dump(2) + "\n";
}

std::pair<DemographicTable, ImputationReport> mice_impute(
    const DemographicTable& table, const MiceOptions& options) {
  const int n = table.n_rows();
  const int p = kNumDemographics;
  const auto& cols = demographic_columns();

  for (int r = 0; r < n; ++r) {
    bool any = false;
    for (int c = 0; c < p; ++c) {
      if (!table.is_missing(r, c)) {
        any = true;
        break;
      }
    }
    if (!any) {
      throw DataError("mice: subject " +
                      table.subject_ids[static_cast<std::size_t>(r)] +
                      " has no observed cells (exclusion rule not applied?)");
    }
  }

  // Columns with missing cells, and the rows missing in each.
  std::vector<std::vector<int>> missing_rows(static_cast<std::size_t>(p));
  for (int c = 0; c < p; ++c) {
    for (int r = 0; r < n; ++r) {
      if (table.is_missing(r, c)) {
        missing_rows[static_cast<std::size_t>(c)].push_back(r);
      }
    }
    if (static_cast<int>(missing_rows[static_cast<std::size_t>(c)].size()) == n) {
      throw DataError("mice: column " + cols[static_cast<std::size_t>(c)] +
                      " is entirely missing, cannot regress");
    }
  }

  ImputationReport report;
  report.seed = options.seed;
  report.n_iterations = options.n_iter;

  DemographicTable out = table;
  bool any_missing = false;
  for (int c = 0; c < p; ++c) {
    if (!missing_rows[static_cast<std::size_t>(c)].empty()) any_missing = true;
  }
  if (!any_missing) return {out, report};

  Eigen::MatrixXd work = table.values;

  // Initialize missing cells at the observed column means.
  for (int c = 0; c < p; ++c) {
    if (missing_rows[static_cast<std::size_t>(c)].empty()) continue;
    double sum = 0.0;
    int cnt = 0;
    for (int r = 0; r < n; ++r) {
      if (!table.is_missing(r, c)) {
        sum += work(r, c);
        ++cnt;
      }
    }
    const double mean = sum / cnt;
    for (int r : missing_rows[static_cast<std::size_t>(c)]) work(r, c) = mean;
  }

  // Trace bookkeeping: cell -> report index.
  std::vector<std::pair<int, int>> cell_list;
  for (int c = 0; c < p; ++c) {
    for (int r : missing_rows[static_cast<std::size_t>(c)]) cell_list.push_back({r, c});
  }
  for (auto& [r, c] : cell_list) {
    ImputationReport::Cell cell;
    cell.subject_id = table.subject_ids[static_cast<std::size_t>(r)];
    cell.column = cols[static_cast<std::size_t>(c)];
    report.cells.push_back(std::move(cell));
  }

  Rng rng(options.seed);

  for (int iter = 0; iter < options.n_iter; ++iter) {
    for (int c = 0; c < p; ++c) {
      const auto& miss = missing_rows[static_cast<std::size_t>(c)];
      if (miss.empty()) continue;

      // Regress column c on the other 11 columns plus an intercept over the
      // rows observed for c. Tables too small to support the full regression
      // fall back to intercept-only (mean) imputation.
      const int n_obs = n - static_cast<int>(miss.size());
      const bool full_model = n_obs >= p + 2;
      const int n_pred = full_model ? p : 1;
      Eigen::MatrixXd X(n_obs, n_pred);
      Eigen::VectorXd y(n_obs);
      int row = 0;
      for (int r = 0; r < n; ++r) {
        if (table.is_missing(r, c)) continue;
        X(row, 0) = 1.0;
        if (full_model) {
          int k = 1;
          for (int c2 = 0; c2 < p; ++c2) {
            if (c2 == c) continue;
            X(row, k++) = work(r, c2);
          }
        }
        y[row] = work(r, c);
        ++row;
      }
      const Eigen::VectorXd beta =
          X.colPivHouseholderQr().solve(y);  // least squares, rank-safe
      const Eigen::VectorXd resid = y - X * beta;
      const int dof = std::max(1, n_obs - n_pred);
      const double resid_sd = std::sqrt(resid.squaredNorm() / dof);

      for (int r : miss) {
        Eigen::VectorXd xr(n_pred);
        xr[0] = 1.0;
        if (full_model) {
          int k = 1;
          for (int c2 = 0; c2 < p; ++c2) {
            if (c2 == c) continue;
            xr[k++] = work(r, c2);
          }
        }
        double value = xr.dot(beta);
        if (options.noise) value += rng.normal(0.0, resid_sd);
        work(r, c) = value;
      }
    }
    for (std::size_t i = 0; i < cell_list.size(); ++i) {
      const auto& [r, c] = cell_list[i];
      report.cells[i].iteration_trace.push_back(work(r, c));
    }
  }

  for (std::size_t i = 0; i < cell_list.size(); ++i) {
    const auto& [r, c] = cell_list[i];
    const double v = work(r, c);
    if (!std::isfinite(v)) {
      throw NumericError("mice: non-finite imputed value for subject " +
                         table.subject_ids[static_cast<std::size_t>(r)] +
                         ", column " + cols[static_cast<std::size_t>(c)]);
    }
    report.cells[i].value = v;
    out.values(r, c) = v;
    out.set_missing(r, c, false);
  }
  return {out, report};
}

}  // namespace emgsens
