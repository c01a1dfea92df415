#pragma once

namespace emgsens {

inline constexpr const char* kToolName = "emgsens";
inline constexpr const char* kVersion = "0.1.0";

}  // namespace emgsens
