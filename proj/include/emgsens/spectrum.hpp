#pragma once

#include <Eigen/Dense>

namespace emgsens {

// One-sided power spectrum on the bin grid f_k = k * fs / n_fft.
struct PowerSpectrum {
  Eigen::ArrayXd freq;
  Eigen::ArrayXd power;
  double df = 0.0;

  // Sum of bin powers with lo <= f < hi.
  double band_power(double lo, double hi) const;
};

// Periodogram of the mean-removed signal with a rectangular window,
// PSD-scaled (|X_k|^2 / (fs*n), doubled for interior bins).
PowerSpectrum periodogram(const Eigen::ArrayXd& x, double fs);

// Welch estimate: mean-removed, Hann-windowed segments with 50% overlap.
PowerSpectrum welch(const Eigen::ArrayXd& x, double fs, int n_segments);

}  // namespace emgsens
