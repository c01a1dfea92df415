#include "emgsens/types.hpp"

#include <algorithm>
#include <cmath>

#include "emgsens/errors.hpp"

namespace emgsens {

const std::array<std::string, kNumDemographics>& demographic_columns() {
  static const std::array<std::string, kNumDemographics> cols = {
      "Age",
      "Sex",
      "Height",
      "Weight",
      "Skin_Hydration",
      "Skin_Elasticity",
      "Subcutaneous_Fat_1",
      "Subcutaneous_Fat_2",
      "Subcutaneous_Fat_3",
      "Subcutaneous_Fat_4",
      "Hair_Density_1",
      "Hair_Density_2",
  };
  return cols;
}

int demographic_index(const std::string& name) {
  const auto& cols = demographic_columns();
  for (int i = 0; i < kNumDemographics; ++i) {
    if (cols[static_cast<std::size_t>(i)] == name) return i;
  }
  return -1;
}

Eigen::ArrayXd TrialTensor::channel_window(int trial, int channel, int start,
                                           int end) const {
  Eigen::ArrayXd out(end - start);
  const float* base =
      data.data() +
      (static_cast<std::size_t>(trial) * n_channels + channel) * n_samples;
  for (int i = start; i < end; ++i) {
    out[i - start] = static_cast<double>(base[i]);
  }
  return out;
}

int DemographicTable::row_of(const std::string& subject_id) const {
  for (std::size_t i = 0; i < subject_ids.size(); ++i) {
    if (subject_ids[i] == subject_id) return static_cast<int>(i);
  }
  return -1;
}

void DemographicTable::validate() const {
  const auto& cols = demographic_columns();
  const int age = demographic_index("Age");
  const int sex = demographic_index("Sex");
  for (int r = 0; r < n_rows(); ++r) {
    for (int c = 0; c < kNumDemographics; ++c) {
      if (is_missing(r, c)) continue;
      const double v = values(r, c);
      if (!std::isfinite(v)) {
        throw DataError("demographics: non-finite value for subject " +
                        subject_ids[static_cast<std::size_t>(r)] +
                        ", column " + cols[static_cast<std::size_t>(c)]);
      }
      if (c == age && v <= 0.0) {
        throw DataError("demographics: Age must be positive for subject " +
                        subject_ids[static_cast<std::size_t>(r)]);
      }
      if (c == sex && v != 0.0 && v != 1.0) {
        throw DataError("demographics: Sex must be 0 or 1 for subject " +
                        subject_ids[static_cast<std::size_t>(r)]);
      }
      if (c != age && c != sex && v < 0.0) {
        throw DataError("demographics: column " +
                        cols[static_cast<std::size_t>(c)] +
                        " must be nonnegative for subject " +
                        subject_ids[static_cast<std::size_t>(r)]);
      }
    }
  }
}

AnalysisWindow AnalysisWindow::centered(int n_samples, double fraction) {
  if (fraction <= 0.0 || fraction > 1.0) {
    throw ConfigError("window fraction must be in (0, 1]");
  }
  AnalysisWindow w;
  w.fraction = fraction;
  w.start = static_cast<int>(std::floor((1.0 - fraction) / 2.0 * n_samples));
  w.end = std::min(
      n_samples,
      w.start + static_cast<int>(std::ceil(fraction * n_samples)));
  return w;
}

}  // namespace emgsens
