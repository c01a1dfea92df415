#include "emgsens/feature_catalog.hpp"

#include <map>

namespace emgsens {

namespace {

std::vector<FeatureDescriptor> build_catalog() {
  std::vector<FeatureDescriptor> cat;
  cat.reserve(kNumFeatures);
  auto add = [&cat](const std::string& name, FeatureDomain d,
                    const std::string& params = "") {
    cat.push_back({name, d, params});
  };

  // Time domain: 24 scalars + 10 histogram bins.
  add("MAV", FeatureDomain::TD);
  add("STD", FeatureDomain::TD);
  add("Var", FeatureDomain::TD);
  add("WL", FeatureDomain::TD);
  add("ZC", FeatureDomain::TD, "threshold=0");
  add("RMS", FeatureDomain::TD);
  add("NP", FeatureDomain::TD);
  add("MPV", FeatureDomain::TD);
  add("MFV", FeatureDomain::TD);
  add("SSC", FeatureDomain::TD, "threshold=0");
  add("DAMV", FeatureDomain::TD);
  add("FDim", FeatureDomain::TD, "dyadic box counting");
  add("MFL", FeatureDomain::TD);
  add("HFD", FeatureDomain::TD, "kmax=8");
  add("Skew", FeatureDomain::TD);
  add("IAV", FeatureDomain::TD);
  add("HMob", FeatureDomain::TD);
  add("HCom", FeatureDomain::TD);
  add("ER", FeatureDomain::TD);
  add("DASDV", FeatureDomain::TD);
  add("WAM", FeatureDomain::TD, "threshold=0.05mV");
  add("MAVS", FeatureDomain::TD, "segments=3");
  add("Kurt", FeatureDomain::TD);
  add("Perc", FeatureDomain::TD, "q=0.75");
  for (int b = 0; b < 10; ++b) {
    add("Hist" + std::to_string(b), FeatureDomain::TD,
        "bin " + std::to_string(b) + " of 10 over [min,max]");
  }

  // Frequency domain: 7 scalars + 49 band energies.
  add("FD_WL", FeatureDomain::FD);
  add("MNF", FeatureDomain::FD);
  add("MDF", FeatureDomain::FD);
  add("MPK", FeatureDomain::FD);
  add("STDPK", FeatureDomain::FD);
  add("FR", FeatureDomain::FD, "low=[10,100)Hz high=[100,500)Hz");
  add("PKF", FeatureDomain::FD);
  for (int b = 0; b < 49; ++b) {
    const int lo = 10 * (b + 1);
    add("FE_" + std::to_string(lo) + "Hz", FeatureDomain::FD,
        "band [" + std::to_string(lo) + "," + std::to_string(lo + 10) + ")Hz");
  }

  // Time-frequency: 8 DWT scalars + 16 nodes x 3 WPT metrics.
  add("WT_STD", FeatureDomain::TF, "sym5 level-4 DWT");
  add("WT_Var", FeatureDomain::TF, "sym5 level-4 DWT");
  add("WT_WL", FeatureDomain::TF, "sym5 level-4 DWT");
  add("WT_Energy", FeatureDomain::TF, "sym5 level-4 DWT");
  add("WT_MaxAV", FeatureDomain::TF, "sym5 level-4 DWT");
  add("WT_ZC", FeatureDomain::TF, "sym5 level-4 DWT");
  add("WT_Mean", FeatureDomain::TF, "sym5 level-4 DWT");
  add("WT_MAV", FeatureDomain::TF, "sym5 level-4 DWT");
  for (int n = 0; n < 16; ++n) {
    add("WPT_LogRMS_" + std::to_string(n), FeatureDomain::TF,
        "sym5 depth-4 WPT node " + std::to_string(n) + " (frequency order)");
  }
  for (int n = 0; n < 16; ++n) {
    add("WPT_RE_" + std::to_string(n), FeatureDomain::TF,
        "sym5 depth-4 WPT node " + std::to_string(n) + " (frequency order)");
  }
  for (int n = 0; n < 16; ++n) {
    add("WPT_NLE_" + std::to_string(n), FeatureDomain::TF,
        "sym5 depth-4 WPT node " + std::to_string(n) + " (frequency order)");
  }

  // Inter-channel: mean Pearson correlation with the other channels.
  add("Ch_MeanCor", FeatureDomain::XCH, "mean pairwise Pearson r");

  return cat;
}

}  // namespace

const std::vector<FeatureDescriptor>& feature_catalog() {
  static const std::vector<FeatureDescriptor> cat = build_catalog();
  return cat;
}

int feature_index(const std::string& name) {
  static const std::map<std::string, int> index = [] {
    std::map<std::string, int> m;
    const auto& cat = feature_catalog();
    for (int i = 0; i < static_cast<int>(cat.size()); ++i) {
      m[cat[static_cast<std::size_t>(i)].name] = i;
    }
    return m;
  }();
  auto it = index.find(name);
  return it == index.end() ? -1 : it->second;
}

const char* domain_tag(FeatureDomain d) {
  switch (d) {
    case FeatureDomain::TD: return "TD";
    case FeatureDomain::FD: return "FD";
    case FeatureDomain::TF: return "TF";
    case FeatureDomain::XCH: return "XCH";
  }
  return "?";
}

}  // namespace emgsens
