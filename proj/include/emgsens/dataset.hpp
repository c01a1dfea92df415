#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "emgsens/types.hpp"

namespace emgsens {

// Portable on-disk container: a top-level manifest.json listing subjects and
// shapes, one directory per subject holding emg.bin (little-endian float32,
// row-major trials x channels x samples) and labels.csv, plus a shared
// demographics.csv with empty cells marking missing values.

struct LoadedDataset {
  std::vector<TrialTensor> tensors;
  DemographicTable demographics;
  std::map<std::string, std::string> sex_encoding;
  std::vector<std::string> warnings;
};

LoadedDataset load_dataset(const std::string& manifest_path);

// Demographics without touching the signal files.
DemographicTable load_demographics_csv(const std::string& path,
                                       bool validate_ranges = true);
std::string manifest_demographics_path(const std::string& manifest_path);
void write_demographics_csv(const std::string& path,
                            const DemographicTable& table,
                            const std::vector<std::string>& comments);

// Writes the same layout load_dataset reads. demographics rows are written
// in table order; missing cells become empty fields.
void write_dataset(const std::string& dir, const std::vector<TrialTensor>& tensors,
                   const DemographicTable& demographics,
                   const std::map<std::string, std::string>& sex_encoding = {
                       {"0", "female"}, {"1", "male"}});

struct ExclusionResult {
  DemographicTable table;
  int n_removed = 0;
  std::vector<std::string> removed_ids;
  bool empty_result = false;  // flagged as a warning, not an error
};

// Removes rows missing all four of Height, Weight, Skin_Elasticity and
// Skin_Hydration.
ExclusionResult apply_exclusion(const DemographicTable& table);

// Contiguous centered slice of one trial. Throws when the window exceeds the
// trial bounds or the trial is shorter than 10 samples.
Eigen::ArrayXd extract_window(const Eigen::ArrayXd& trial,
                              const AnalysisWindow& window);

}  // namespace emgsens
