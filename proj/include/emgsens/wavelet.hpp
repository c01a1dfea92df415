#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

namespace emgsens {
namespace wavelet {

inline constexpr int kSym5Len = 10;

// Symlet-5 analysis filters. These constants are the contract shared with
// the test oracle; the transforms themselves are implemented independently.
const std::array<double, kSym5Len>& sym5_dec_lo();
const std::array<double, kSym5Len>& sym5_dec_hi();

// One analysis step with half-point symmetric boundary extension:
// out[i] = sum_k f[k] * ext(2i + 1 - k), i in [0, floor((n + L - 1)/2)).
void analysis_step(const Eigen::ArrayXd& x, Eigen::ArrayXd& lo,
                   Eigen::ArrayXd& hi);

struct Dwt {
  Eigen::ArrayXd approx;                 // cA_levels
  std::vector<Eigen::ArrayXd> details;   // details[0] = cD_1 (finest)
};

Dwt dwt(const Eigen::ArrayXd& x, int levels);

// [cA_L, cD_L, ..., cD_1] in one vector.
Eigen::ArrayXd dwt_concat(const Dwt& d);

// Terminal nodes of a depth-`levels` wavelet packet tree, reordered to
// natural frequency order: node k covers [k*fs/2^(levels+1), (k+1)*fs/2^(levels+1)).
std::vector<Eigen::ArrayXd> wpt_nodes(const Eigen::ArrayXd& x, int levels);

}  // namespace wavelet
}  // namespace emgsens
