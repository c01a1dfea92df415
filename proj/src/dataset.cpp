#include "emgsens/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "emgsens/csv.hpp"
#include "emgsens/errors.hpp"
#include "emgsens/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace emgsens {

namespace {

double parse_cell(const std::string& cell, const std::string& context) {
  try {
    std::size_t pos = 0;
    double v = std::stod(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw DataError("demographics: cannot parse value '" + cell + "' (" +
                    context + ")");
  }
}

}  // namespace

DemographicTable load_demographics_csv(const std::string& path,
                                       bool validate_ranges) {
  CsvTable csv = read_csv(path);
  const auto& cols = demographic_columns();
  if (csv.header.size() != 1 + kNumDemographics || csv.header[0] != "subject_id") {
    throw DataError("demographics.csv: header must be subject_id followed by "
                    "the 12 demographic columns");
  }
  for (int c = 0; c < kNumDemographics; ++c) {
    if (csv.header[static_cast<std::size_t>(c + 1)] != cols[static_cast<std::size_t>(c)]) {
      throw DataError("demographics.csv: column " + std::to_string(c + 1) +
                      " must be named " + cols[static_cast<std::size_t>(c)] +
                      ", got " + csv.header[static_cast<std::size_t>(c + 1)]);
    }
  }
  DemographicTable table;
  const int n = static_cast<int>(csv.rows.size());
  table.values = Eigen::MatrixXd::Zero(n, kNumDemographics);
  table.missing.assign(static_cast<std::size_t>(n) * kNumDemographics, 0);
  for (int r = 0; r < n; ++r) {
    const auto& row = csv.rows[static_cast<std::size_t>(r)];
    table.subject_ids.push_back(row[0]);
    for (int c = 0; c < kNumDemographics; ++c) {
      const std::string& cell = row[static_cast<std::size_t>(c + 1)];
      if (cell.empty()) {
        table.set_missing(r, c, true);
      } else {
        table.values(r, c) = parse_cell(
            cell, "subject " + row[0] + ", column " + cols[static_cast<std::size_t>(c)]);
      }
    }
  }
  if (validate_ranges) {
    table.validate();
  } else {
    for (int r = 0; r < table.n_rows(); ++r) {
      for (int c = 0; c < kNumDemographics; ++c) {
        if (!table.is_missing(r, c) && !std::isfinite(table.values(r, c))) {
          throw DataError("demographics: non-finite value for subject " +
                          table.subject_ids[static_cast<std::size_t>(r)]);
        }
      }
    }
  }
  return table;
}

namespace {

std::vector<int> load_labels(const std::string& path, const std::string& subject,
                             int n_trials) {
  CsvTable csv = read_csv(path);
  if (csv.header.size() != 2 || csv.header[0] != "trial_index" ||
      csv.header[1] != "gesture_id") {
    throw DataError("labels.csv for subject " + subject +
                    ": header must be trial_index,gesture_id");
  }
  if (static_cast<int>(csv.rows.size()) != n_trials) {
    throw DataError("labels.csv for subject " + subject + ": " +
                    std::to_string(csv.rows.size()) + " rows, expected " +
                    std::to_string(n_trials));
  }
  std::vector<int> labels(static_cast<std::size_t>(n_trials), -1);
  for (const auto& row : csv.rows) {
    int idx = 0;
    int gid = 0;
    try {
      idx = std::stoi(row[0]);
      gid = std::stoi(row[1]);
    } catch (const std::exception&) {
      throw DataError("labels.csv for subject " + subject +
                      ": non-integer row '" + row[0] + "," + row[1] + "'");
    }
    if (idx < 0 || idx >= n_trials) {
      throw DataError("labels.csv for subject " + subject +
                      ": trial_index out of range: " + row[0]);
    }
    labels[static_cast<std::size_t>(idx)] = gid;
  }
  for (int i = 0; i < n_trials; ++i) {
    if (labels[static_cast<std::size_t>(i)] < 0) {
      throw DataError("labels.csv for subject " + subject +
                      ": missing trial_index " + std::to_string(i));
    }
  }
  return labels;
}

void read_emg_bin(const std::string& path, TrialTensor& tensor) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open emg.bin for subject " + tensor.subject_id +
                    ": " + path);
  }
  in.seekg(0, std::ios::end);
  const std::size_t bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  const std::size_t expected = tensor.expected_size() * sizeof(float);
  if (bytes != expected) {
    throw DataError("emg.bin for subject " + tensor.subject_id + " is " +
                    std::to_string(bytes) + " bytes, expected " +
                    std::to_string(expected) +
                    " (n_trials*n_channels*n_samples*4)");
  }
  tensor.data.resize(tensor.expected_size());
  in.read(reinterpret_cast<char*>(tensor.data.data()),
          static_cast<std::streamsize>(expected));
  if (!in) {
    throw DataError("short read on emg.bin for subject " + tensor.subject_id);
  }
  for (float v : tensor.data) {
    if (!std::isfinite(v)) {
      throw DataError("non-finite sample in emg.bin for subject " +
                      tensor.subject_id);
    }
  }
}

template <typename T>
T require_field(const json& obj, const char* field, const std::string& context) {
  if (!obj.contains(field)) {
    throw DataError("manifest: missing field '" + std::string(field) + "' (" +
                    context + ")");
  }
  try {
    return obj.at(field).get<T>();
  } catch (const json::exception&) {
    throw DataError("manifest: field '" + std::string(field) +
                    "' has wrong type (" + context + ")");
  }
}

}  // namespace

LoadedDataset load_dataset(const std::string& manifest_path) {
  json manifest;
  try {
    manifest = json::parse(read_text_file(manifest_path));
  } catch (const json::exception& e) {
    throw DataError("cannot parse manifest " + manifest_path + ": " + e.what());
  }

  const int version = require_field<int>(manifest, "format_version", "top level");
  if (version != 1) {
    throw DataError("manifest: unsupported format_version " +
                    std::to_string(version));
  }

  const fs::path root = fs::path(manifest_path).parent_path();
  LoadedDataset out;

  std::set<int> gesture_set;
  if (manifest.contains("gesture_set")) {
    for (const auto& g : manifest.at("gesture_set")) {
      gesture_set.insert(g.get<int>());
    }
  } else {
    for (int g = 0; g < 10; ++g) gesture_set.insert(g);
  }

  if (manifest.contains("sex_encoding")) {
    for (auto& [k, v] : manifest.at("sex_encoding").items()) {
      out.sex_encoding[k] = v.get<std::string>();
    }
  }

  const std::string demo_rel =
      require_field<std::string>(manifest, "demographics", "top level");
  out.demographics = load_demographics_csv((root / demo_rel).string());

  if (!manifest.contains("subjects") || !manifest.at("subjects").is_array() ||
      manifest.at("subjects").empty()) {
    throw DataError("manifest: 'subjects' must be a non-empty array");
  }

  for (const auto& subj : manifest.at("subjects")) {
    TrialTensor t;
    t.subject_id = require_field<std::string>(subj, "id", "subjects entry");
    const std::string ctx = "subject " + t.subject_id;
    t.n_trials = require_field<int>(subj, "n_trials", ctx);
    t.n_channels = require_field<int>(subj, "n_channels", ctx);
    t.n_samples = require_field<int>(subj, "n_samples", ctx);
    t.sampling_rate_hz = require_field<double>(subj, "sampling_rate_hz", ctx);
    if (t.n_trials <= 0) throw DataError("manifest: n_trials must be positive (" + ctx + ")");
    if (t.n_channels <= 0) throw DataError("manifest: n_channels must be positive (" + ctx + ")");
    if (t.n_samples <= 0) throw DataError("manifest: n_samples must be positive (" + ctx + ")");
    if (t.sampling_rate_hz <= 0.0) {
      throw DataError("manifest: sampling_rate_hz must be positive (" + ctx + ")");
    }
    if (t.sampling_rate_hz != 2000.0 && t.sampling_rate_hz != 2148.0) {
      out.warnings.push_back("subject " + t.subject_id +
                             ": unexpected sampling rate " +
                             format_double(t.sampling_rate_hz) + " Hz");
    }
    const std::string dir = require_field<std::string>(subj, "dir", ctx);
    const fs::path sdir = root / dir;
    t.labels = load_labels((sdir / "labels.csv").string(), t.subject_id, t.n_trials);
    for (int g : t.labels) {
      if (!gesture_set.count(g)) {
        throw DataError("subject " + t.subject_id + ": gesture id " +
                        std::to_string(g) + " outside the declared gesture set");
      }
    }
    read_emg_bin((sdir / "emg.bin").string(), t);

    if (out.demographics.row_of(t.subject_id) < 0) {
      throw DataError("manifest: subject " + t.subject_id +
                      " has no row in demographics.csv");
    }
    out.tensors.push_back(std::move(t));
  }
  return out;
}

void write_dataset(const std::string& dir, const std::vector<TrialTensor>& tensors,
                   const DemographicTable& demographics,
                   const std::map<std::string, std::string>& sex_encoding) {
  fs::create_directories(dir);
  const fs::path root(dir);

  json manifest;
  manifest["format_version"] = 1;
  manifest["demographics"] = "demographics.csv";
  manifest["sex_encoding"] = sex_encoding;
  json subjects = json::array();
  for (const auto& t : tensors) {
    fs::create_directories(root / t.subject_id);
    {
      std::ofstream bin(root / t.subject_id / "emg.bin",
                        std::ios::binary | std::ios::trunc);
      bin.write(reinterpret_cast<const char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(float)));
      if (!bin) throw DataError("cannot write emg.bin for " + t.subject_id);
    }
    CsvTable labels;
    labels.header = {"trial_index", "gesture_id"};
    for (int i = 0; i < t.n_trials; ++i) {
      labels.rows.push_back(
          {std::to_string(i), std::to_string(t.labels[static_cast<std::size_t>(i)])});
    }
    write_csv((root / t.subject_id / "labels.csv").string(), labels);

    json s;
    s["id"] = t.subject_id;
    s["dir"] = t.subject_id;
    s["n_trials"] = t.n_trials;
    s["n_channels"] = t.n_channels;
    s["n_samples"] = t.n_samples;
    s["sampling_rate_hz"] = t.sampling_rate_hz;
    subjects.push_back(s);
  }
  manifest["subjects"] = subjects;

  std::set<int> gset;
  for (const auto& t : tensors) gset.insert(t.labels.begin(), t.labels.end());
  manifest["gesture_set"] = std::vector<int>(gset.begin(), gset.end());

  write_text_file((root / "manifest.json").string(), manifest.dump(2) + "\n");

  write_demographics_csv((root / "demographics.csv").string(), demographics, {});
}

std::string manifest_demographics_path(const std::string& manifest_path) {
  json manifest;
  try {
    manifest = json::parse(read_text_file(manifest_path));
  } catch (const json::exception& e) {
    throw DataError("cannot parse manifest " + manifest_path + ": " + e.what());
  }
  const std::string rel =
      require_field<std::string>(manifest, "demographics", "top level");
  return (fs::path(manifest_path).parent_path() / rel).string();
}

void write_demographics_csv(const std::string& path,
                            const DemographicTable& table,
                            const std::vector<std::string>& comments) {
  CsvTable csv;
  csv.comments = comments;
  csv.header.push_back("subject_id");
  for (const auto& c : demographic_columns()) csv.header.push_back(c);
  for (int r = 0; r < table.n_rows(); ++r) {
    std::vector<std::string> row;
    row.push_back(table.subject_ids[static_cast<std::size_t>(r)]);
    for (int c = 0; c < kNumDemographics; ++c) {
      row.push_back(table.is_missing(r, c) ? std::string()
                                           : format_double(table.values(r, c)));
    }
    csv.rows.push_back(std::move(row));
  }
  write_csv(path, csv);
}

ExclusionResult apply_exclusion(const DemographicTable& table) {
  static const char* kRequired[] = {"Height", "Weight", "Skin_Elasticity",
                                    "Skin_Hydration"};
  int req_idx[4];
  for (int i = 0; i < 4; ++i) req_idx[i] = demographic_index(kRequired[i]);

  ExclusionResult out;
  std::vector<int> keep;
  for (int r = 0; r < table.n_rows(); ++r) {
    bool all_missing = true;
    for (int idx : req_idx) {
      if (!table.is_missing(r, idx)) {
        all_missing = false;
        break;
      }
    }
    if (all_missing) {
      out.removed_ids.push_back(table.subject_ids[static_cast<std::size_t>(r)]);
    } else {
      keep.push_back(r);
    }
  }
  out.n_removed = static_cast<int>(out.removed_ids.size());

  DemographicTable kept;
  kept.values = Eigen::MatrixXd(static_cast<int>(keep.size()), kNumDemographics);
  kept.missing.assign(keep.size() * kNumDemographics, 0);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const int r = keep[i];
    kept.subject_ids.push_back(table.subject_ids[static_cast<std::size_t>(r)]);
    kept.values.row(static_cast<int>(i)) = table.values.row(r);
    for (int c = 0; c < kNumDemographics; ++c) {
      kept.set_missing(static_cast<int>(i), c, table.is_missing(r, c));
    }
  }
  out.table = std::move(kept);
  out.empty_result = out.table.n_rows() == 0;
  return out;
}

Eigen::ArrayXd extract_window(const Eigen::ArrayXd& trial,
                              const AnalysisWindow& window) {
  const int n = static_cast<int>(trial.size());
  if (n < 10) throw DataError("trial too short for windowing (< 10 samples)");
  if (window.start < 0 || window.end > n || window.start >= window.end) {
    throw DataError("analysis window [" + std::to_string(window.start) + ", " +
                    std::to_string(window.end) + ") exceeds trial bounds (n=" +
                    std::to_string(n) + ")");
  }
  return trial.segment(window.start, window.end - window.start);
}

}  // namespace emgsens
