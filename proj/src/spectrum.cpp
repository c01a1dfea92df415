#include "emgsens/spectrum.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "emgsens/errors.hpp"

namespace emgsens {

namespace {

// Full complex spectrum of a real signal.
std::vector<std::complex<double>> fft_forward(const Eigen::ArrayXd& x) {
  const int n = static_cast<int>(x.size());
  std::vector<std::complex<double>> in(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) in[static_cast<std::size_t>(i)] = {x[i], 0.0};
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n));
  Eigen::FFT<double> fft;
  fft.fwd(out, in);
  return out;
}

PowerSpectrum one_sided(const std::vector<std::complex<double>>& spec, int n,
                        double fs) {
  const int half = n / 2;  // highest one-sided bin index
  PowerSpectrum ps;
  ps.df = fs / n;
  ps.freq = Eigen::ArrayXd(half + 1);
  ps.power = Eigen::ArrayXd(half + 1);
  for (int k = 0; k <= half; ++k) {
    ps.freq[k] = k * ps.df;
    double p = std::norm(spec[static_cast<std::size_t>(k)]) / (fs * n);
    const bool interior = k != 0 && !(n % 2 == 0 && k == half);
    if (interior) p *= 2.0;
    ps.power[k] = p;
  }
  return ps;
}

}  // namespace

double PowerSpectrum::band_power(double lo, double hi) const {
  double sum = 0.0;
  for (int k = 0; k < freq.size(); ++k) {
    if (freq[k] >= lo && freq[k] < hi) sum += power[k];
  }
  return sum;
}

PowerSpectrum periodogram(const Eigen::ArrayXd& x, double fs) {
  if (fs <= 0.0) throw NumericError("periodogram: fs must be positive");
  const int n = static_cast<int>(x.size());
  if (n < 2) throw NumericError("periodogram: signal too short");
  Eigen::ArrayXd centered = x - x.mean();
  return one_sided(fft_forward(centered), n, fs);
}

PowerSpectrum welch(const Eigen::ArrayXd& x, double fs, int n_segments) {
  if (n_segments < 1) throw NumericError("welch: need at least one segment");
  const int n = static_cast<int>(x.size());
  // 50% overlap: K segments of length L need (K+1)*L/2 <= n.
  const int seg = std::max(8, 2 * n / (n_segments + 1));
  const int step = seg / 2;
  Eigen::ArrayXd centered = x - x.mean();

  Eigen::ArrayXd window(seg);
  for (int i = 0; i < seg; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (seg - 1));
  }
  const double win_power = window.square().sum();

  PowerSpectrum acc;
  int count = 0;
  for (int start = 0; start + seg <= n; start += step) {
    Eigen::ArrayXd piece = centered.segment(start, seg) * window;
    auto spec = fft_forward(piece);
    const int half = seg / 2;
    if (count == 0) {
      acc.df = fs / seg;
      acc.freq = Eigen::ArrayXd(half + 1);
      acc.power = Eigen::ArrayXd::Zero(half + 1);
      for (int k = 0; k <= half; ++k) acc.freq[k] = k * acc.df;
    }
    for (int k = 0; k <= half; ++k) {
      double p = std::norm(spec[static_cast<std::size_t>(k)]) / (fs * win_power);
      const bool interior = k != 0 && !(seg % 2 == 0 && k == half);
      if (interior) p *= 2.0;
      acc.power[k] += p;
    }
    ++count;
  }
  if (count == 0) throw NumericError("welch: signal shorter than one segment");
  acc.power /= count;
  return acc;
}

}  // namespace emgsens
