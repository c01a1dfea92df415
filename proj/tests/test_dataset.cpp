#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "emgsens/dataset.hpp"
#include "emgsens/errors.hpp"
#include "emgsens/types.hpp"
#include "emgsens/util.hpp"
#include "test_helpers.hpp"

using namespace emgsens;

namespace {

TrialTensor make_tensor(const std::string& id, int trials, int channels,
                        int samples, double fs, std::uint64_t seed) {
  TrialTensor t;
  t.subject_id = id;
  t.n_trials = trials;
  t.n_channels = channels;
  t.n_samples = samples;
  t.sampling_rate_hz = fs;
  t.labels.resize(static_cast<std::size_t>(trials));
  for (int i = 0; i < trials; ++i) t.labels[static_cast<std::size_t>(i)] = i % 10;
  t.data.resize(t.expected_size());
  Rng rng(seed);
  for (auto& v : t.data) v = static_cast<float>(rng.normal());
  return t;
}

DemographicTable make_demo(const std::vector<std::string>& ids,
                           std::uint64_t seed) {
  DemographicTable d;
  d.subject_ids = ids;
  const int n = static_cast<int>(ids.size());
  d.values = Eigen::MatrixXd::Zero(n, kNumDemographics);
  d.missing.assign(static_cast<std::size_t>(n) * kNumDemographics, 0);
  Rng rng(seed);
  for (int r = 0; r < n; ++r) {
    d.values(r, 0) = 20.0 + 60.0 * rng.uniform();  // Age
    d.values(r, 1) = r % 2;                        // Sex
    for (int c = 2; c < kNumDemographics; ++c) {
      d.values(r, c) = 10.0 + 50.0 * rng.uniform();
    }
  }
  return d;
}

}  // namespace

TEST_CASE("centered window reproduces the reference indices") {
  const AnalysisWindow w = AnalysisWindow::centered(4000, 0.70);
  CHECK(w.start == 600);
  CHECK(w.end == 3400);
  CHECK(w.length() == 2800);

  const AnalysisWindow w2 = AnalysisWindow::centered(4296, 0.70);
  CHECK(w2.start == 644);
  CHECK(w2.end == 3652);
  CHECK(w2.length() == 3008);
}

TEST_CASE("extract_window basics") {
  Eigen::ArrayXd trial(4000);
  for (int i = 0; i < 4000; ++i) trial[i] = i;
  const auto w = extract_window(trial, AnalysisWindow::centered(4000, 0.70));
  REQUIRE(w.size() == 2800);
  CHECK(w[0] == 600.0);
  CHECK(w[2799] == 3399.0);

  SUBCASE("fraction 1.0 is the identity") {
    Eigen::ArrayXd ten(10);
    for (int i = 0; i < 10; ++i) ten[i] = i * 1.5;
    const auto full = extract_window(ten, AnalysisWindow::centered(10, 1.0));
    REQUIRE(full.size() == 10);
    for (int i = 0; i < 10; ++i) CHECK(full[i] == ten[i]);
  }
  SUBCASE("window exceeding bounds is an error") {
    AnalysisWindow bad{3900, 4100, 0.05};
    CHECK_THROWS_AS(extract_window(trial, bad), DataError);
    Eigen::ArrayXd tiny(5);
    tiny.setZero();
    CHECK_THROWS_AS(extract_window(tiny, AnalysisWindow::centered(5, 1.0)),
                    DataError);
  }
  SUBCASE("fraction < 1 strictly shrinks, fraction 1.0 keeps everything") {
    for (int n : {10, 100, 4000, 4296}) {
      for (double f : {0.3, 0.5, 0.7, 0.9}) {
        const auto win = AnalysisWindow::centered(n, f);
        CHECK(win.length() < n);
        CHECK(win.length() >= 1);
        CHECK(std::abs(win.length() - f * n) <= 1.0);
      }
      CHECK(AnalysisWindow::centered(n, 1.0).length() == n);
    }
  }
}

TEST_CASE("round trip through the portable container is bit identical") {
  TempDir dir;
  std::vector<TrialTensor> tensors;
  tensors.push_back(make_tensor("S001", 6, 3, 128, 2000.0, 1));
  tensors.push_back(make_tensor("S002", 6, 3, 128, 2148.0, 2));
  DemographicTable demo = make_demo({"S001", "S002"}, 3);
  demo.set_missing(0, 4, true);
  demo.set_missing(1, 10, true);

  write_dataset(dir.str(), tensors, demo);
  const LoadedDataset loaded = load_dataset(dir.file("manifest.json"));

  REQUIRE(loaded.tensors.size() == 2);
  for (std::size_t s = 0; s < 2; ++s) {
    const auto& a = tensors[s];
    const auto& b = loaded.tensors[s];
    CHECK(a.subject_id == b.subject_id);
    CHECK(a.n_trials == b.n_trials);
    CHECK(a.n_channels == b.n_channels);
    CHECK(a.n_samples == b.n_samples);
    CHECK(a.sampling_rate_hz == b.sampling_rate_hz);
    CHECK(a.labels == b.labels);
    REQUIRE(a.data.size() == b.data.size());
    CHECK(std::memcmp(a.data.data(), b.data.data(),
                      a.data.size() * sizeof(float)) == 0);
  }
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < kNumDemographics; ++c) {
      CHECK(demo.is_missing(r, c) == loaded.demographics.is_missing(r, c));
      if (!demo.is_missing(r, c)) {
        CHECK(demo.values(r, c) == loaded.demographics.values(r, c));
      }
    }
  }
  CHECK(loaded.warnings.empty());
}

TEST_CASE("81-subject manifest yields 81 tensors of the declared shape") {
  TempDir dir;
  std::vector<TrialTensor> tensors;
  std::vector<std::string> ids;
  for (int s = 0; s < 81; ++s) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "S%03d", s + 1);
    ids.push_back(buf);
    TrialTensor t;
    t.subject_id = buf;
    t.n_trials = 360;
    t.n_channels = 12;
    t.n_samples = 16;  // shape contract only; full-length data is impractical here
    t.sampling_rate_hz = 2000.0;
    t.labels.resize(360);
    for (int i = 0; i < 360; ++i) t.labels[static_cast<std::size_t>(i)] = i % 10;
    t.data.assign(t.expected_size(), 0.0f);
    tensors.push_back(std::move(t));
  }
  write_dataset(dir.str(), tensors, make_demo(ids, 9));

  const LoadedDataset loaded = load_dataset(dir.file("manifest.json"));
  REQUIRE(loaded.tensors.size() == 81);
  for (const auto& t : loaded.tensors) {
    CHECK(t.n_trials == 360);
    CHECK(t.n_channels == 12);
    CHECK(t.n_samples == 16);
  }
}

TEST_CASE("single all-zero trial loads without error") {
  TempDir dir;
  TrialTensor t;
  t.subject_id = "S001";
  t.n_trials = 1;
  t.n_channels = 12;
  t.n_samples = 64;
  t.sampling_rate_hz = 2000.0;
  t.labels = {0};
  t.data.assign(t.expected_size(), 0.0f);
  write_dataset(dir.str(), {t}, make_demo({"S001"}, 4));
  const LoadedDataset loaded = load_dataset(dir.file("manifest.json"));
  REQUIRE(loaded.tensors.size() == 1);
  for (float v : loaded.tensors[0].data) CHECK(v == 0.0f);
}

TEST_CASE("emg.bin with the wrong byte count is a shape-mismatch error") {
  TempDir dir;
  write_dataset(dir.str(), {make_tensor("S001", 2, 2, 32, 2000.0, 5)},
                make_demo({"S001"}, 6));
  std::filesystem::resize_file(dir.file("S001/emg.bin"), 100);
  try {
    load_dataset(dir.file("manifest.json"));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("S001") != std::string::npos);
    CHECK(msg.find("expected") != std::string::npos);
  }
}

TEST_CASE("manifest schema violations name the field and subject") {
  TempDir dir;
  write_dataset(dir.str(), {make_tensor("S001", 2, 2, 32, 2000.0, 5)},
                make_demo({"S001"}, 6));
  const std::string manifest = dir.file("manifest.json");
  std::string text = read_text_file(manifest);

  SUBCASE("missing n_trials") {
    const auto pos = text.find("\"n_trials\"");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 10, "\"nope\"");
    write_text_file(manifest, text);
    try {
      load_dataset(manifest);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("n_trials") != std::string::npos);
      CHECK(msg.find("S001") != std::string::npos);
    }
  }
  SUBCASE("unsupported format version") {
    const auto pos = text.find("\"format_version\": 1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 19, "\"format_version\": 9");
    write_text_file(manifest, text);
    CHECK_THROWS_AS(load_dataset(manifest), DataError);
  }
}

TEST_CASE("unknown sampling rate is a warning, not an error") {
  TempDir dir;
  write_dataset(dir.str(), {make_tensor("S001", 2, 2, 32, 1234.0, 7)},
                make_demo({"S001"}, 8));
  const LoadedDataset loaded = load_dataset(dir.file("manifest.json"));
  REQUIRE(loaded.warnings.size() == 1);
  CHECK(loaded.warnings[0].find("1234") != std::string::npos);
}

TEST_CASE("non-finite samples are rejected at ingestion") {
  TempDir dir;
  TrialTensor t = make_tensor("S001", 2, 2, 32, 2000.0, 9);
  t.data[17] = std::numeric_limits<float>::quiet_NaN();
  write_dataset(dir.str(), {t}, make_demo({"S001"}, 10));
  CHECK_THROWS_AS(load_dataset(dir.file("manifest.json")), DataError);
}

TEST_CASE("labels outside the declared gesture set are rejected") {
  TempDir dir;
  TrialTensor t = make_tensor("S001", 2, 2, 32, 2000.0, 11);
  write_dataset(dir.str(), {t}, make_demo({"S001"}, 12));
  write_text_file(dir.file("S001/labels.csv"),
                  "trial_index,gesture_id\n0,0\n1,42\n");
  CHECK_THROWS_AS(load_dataset(dir.file("manifest.json")), DataError);
}

TEST_CASE("subject without a demographics row is rejected") {
  TempDir dir;
  write_dataset(dir.str(), {make_tensor("S001", 2, 2, 32, 2000.0, 13)},
                make_demo({"SOMEONE_ELSE"}, 14));
  CHECK_THROWS_AS(load_dataset(dir.file("manifest.json")), DataError);
}

TEST_CASE("demographic invariants are enforced") {
  DemographicTable d = make_demo({"A", "B"}, 15);
  SUBCASE("negative age") {
    d.values(0, demographic_index("Age")) = -3.0;
    CHECK_THROWS_AS(d.validate(), DataError);
  }
  SUBCASE("sex coded outside 0/1") {
    d.values(1, demographic_index("Sex")) = 2.0;
    CHECK_THROWS_AS(d.validate(), DataError);
  }
  SUBCASE("negative physical measurement") {
    d.values(0, demographic_index("Subcutaneous_Fat_2")) = -1.0;
    CHECK_THROWS_AS(d.validate(), DataError);
  }
}

TEST_CASE("exclusion removes a row iff all four named cells are missing") {
  // Exhaustive over the 16 missingness patterns of the four columns.
  const int cols[4] = {demographic_index("Height"), demographic_index("Weight"),
                       demographic_index("Skin_Elasticity"),
                       demographic_index("Skin_Hydration")};
  std::vector<std::string> ids;
  for (int m = 0; m < 16; ++m) ids.push_back("P" + std::to_string(m));
  DemographicTable d = make_demo(ids, 16);
  for (int m = 0; m < 16; ++m) {
    for (int b = 0; b < 4; ++b) {
      if (m & (1 << b)) d.set_missing(m, cols[b], true);
    }
  }
  const ExclusionResult res = apply_exclusion(d);
  CHECK(res.n_removed == 1);
  REQUIRE(res.removed_ids.size() == 1);
  CHECK(res.removed_ids[0] == "P15");  // the all-missing pattern
  CHECK(res.table.n_rows() == 15);

  SUBCASE("row missing only Height is retained") {
    CHECK(res.table.row_of("P1") >= 0);
  }
  SUBCASE("table with no missingness is returned unchanged") {
    DemographicTable clean = make_demo({"X", "Y"}, 17);
    const ExclusionResult r2 = apply_exclusion(clean);
    CHECK(r2.n_removed == 0);
    CHECK(r2.table.n_rows() == 2);
    CHECK(r2.table.values == clean.values);
  }
  SUBCASE("empty result is flagged, not an error") {
    DemographicTable all_gone = make_demo({"Z"}, 18);
    for (int b = 0; b < 4; ++b) all_gone.set_missing(0, cols[b], true);
    const ExclusionResult r3 = apply_exclusion(all_gone);
    CHECK(r3.empty_result);
    CHECK(r3.table.n_rows() == 0);
  }
}
