#pragma once

#include <string>
#include <vector>

namespace emgsens {

inline constexpr int kNumFeatures = 147;

// Catalog layout: 34 time-domain, 56 frequency-domain, 56 time-frequency,
// 1 inter-channel feature, in that order.
inline constexpr int kTdOffset = 0;
inline constexpr int kTdCount = 34;
inline constexpr int kFdOffset = 34;
inline constexpr int kFdCount = 56;
inline constexpr int kTfOffset = 90;
inline constexpr int kTfCount = 56;
inline constexpr int kXchOffset = 146;

enum class FeatureDomain { TD, FD, TF, XCH };

struct FeatureDescriptor {
  std::string name;
  FeatureDomain domain;
  std::string params;  // human-readable parameterization (band edges, node index, ...)
};

const std::vector<FeatureDescriptor>& feature_catalog();

// Index into the catalog, -1 when the name is unknown.
int feature_index(const std::string& name);

const char* domain_tag(FeatureDomain d);

}  // namespace emgsens
