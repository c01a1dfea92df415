// Reference implementations used only by tests: every feature as a
// straightforward loop, with its own DFT and its own wavelet convolution,
// sharing nothing with the main engine beyond the filter constants and the
// catalog layout.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "emgsens/errors.hpp"
#include "emgsens/synth.hpp"
#include "emgsens/wavelet.hpp"

namespace emgsens {

namespace {

using Vec = std::vector<double>;

double o_mean(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double o_pop_var(const Vec& v) {
  const double m = o_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

Vec o_diff(const Vec& v) {
  Vec d(v.size() - 1);
  for (std::size_t i = 0; i + 1 < v.size(); ++i) d[i] = v[i + 1] - v[i];
  return d;
}

double o_slope(const Vec& xs, const Vec& ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double den = n * sxx - sx * sx;
  return den == 0.0 ? 0.0 : (n * sxy - sx * sy) / den;
}

// ----- time domain -----

void o_td(const Vec& w, const FeatureConfig& cfg, double* out) {
  const int n = static_cast<int>(w.size());
  Vec absw(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) absw[i] = std::fabs(w[i]);
  const Vec d = o_diff(w);
  const double var = o_pop_var(w);
  const double var_d = o_pop_var(d);

  double mav = 0.0;
  for (double a : absw) mav += a;
  const double iav = mav;
  mav /= n;
  out[0] = mav;
  out[1] = std::sqrt(var);
  out[2] = var;
  double wl = 0.0;
  for (double x : d) wl += std::fabs(x);
  out[3] = wl;
  int zc = 0;
  for (int i = 0; i + 1 < n; ++i) {
    if (w[i] * w[i + 1] < 0.0 && std::fabs(w[i] - w[i + 1]) > cfg.zc_threshold) ++zc;
  }
  out[4] = zc;
  double ssq = 0.0;
  for (double x : w) ssq += x * x;
  out[5] = std::sqrt(ssq / n);

  std::vector<int> peaks;
  for (int i = 1; i + 1 < n; ++i) {
    if (absw[i] > absw[i - 1] && absw[i] > absw[i + 1]) peaks.push_back(i);
  }
  out[6] = static_cast<double>(peaks.size());
  out[7] = 0.0;
  out[8] = 0.0;
  if (!peaks.empty()) {
    double s = 0.0;
    for (int p : peaks) s += absw[static_cast<std::size_t>(p)];
    out[7] = s / static_cast<double>(peaks.size());
  }
  if (peaks.size() >= 2) {
    double s = 0.0;
    for (std::size_t i = 1; i < peaks.size(); ++i) s += peaks[i] - peaks[i - 1];
    out[8] = s / static_cast<double>(peaks.size() - 1);
  }

  int ssc = 0;
  for (int i = 1; i + 1 < n; ++i) {
    if ((w[i] - w[i - 1]) * (w[i] - w[i + 1]) > cfg.ssc_threshold) ++ssc;
  }
  out[9] = ssc;
  out[10] = wl / (n - 1);

  // FDim, dyadic box counting.
  {
    double lo = w[0], hi = w[0];
    for (double x : w) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    const double range = hi - lo;
    Vec lns, lnn;
    for (int s = 1; s <= n / 8 && s <= 128; s *= 2) {
      const double h = range * s / static_cast<double>(n - 1);
      double count = 0.0;
      for (int start = 0; start < n - 1; start += s) {
        const int stop = std::min(n - 1, start + s);
        double slo = w[static_cast<std::size_t>(start)];
        double shi = slo;
        for (int i = start + 1; i <= stop; ++i) {
          slo = std::min(slo, w[static_cast<std::size_t>(i)]);
          shi = std::max(shi, w[static_cast<std::size_t>(i)]);
        }
        count += h > 0.0 ? std::max(1.0, std::ceil((shi - slo) / h)) : 1.0;
      }
      lns.push_back(std::log(1.0 / s));
      lnn.push_back(std::log(count));
    }
    out[11] = lns.size() >= 2 ? o_slope(lns, lnn) : 0.0;
  }

  double dsq = 0.0;
  for (double x : d) dsq += x * x;
  out[12] = dsq > 0.0 ? std::log10(std::sqrt(dsq)) : 0.0;

  // HFD, Higuchi curve length.
  {
    const int kmax = cfg.hfd_kmax;
    out[13] = 0.0;
    if (n >= kmax + 1) {
      Vec lnik, lnl;
      bool degenerate = false;
      for (int k = 1; k <= kmax && !degenerate; ++k) {
        double lk = 0.0;
        int streams = 0;
        for (int m = 0; m < k; ++m) {
          const int steps = (n - 1 - m) / k;
          if (steps < 1) continue;
          double length = 0.0;
          for (int i = 1; i <= steps; ++i) {
            length += std::fabs(w[static_cast<std::size_t>(m + i * k)] -
                                w[static_cast<std::size_t>(m + (i - 1) * k)]);
          }
          lk += length * (n - 1) / (static_cast<double>(steps) * k * k);
          ++streams;
        }
        if (streams == 0) continue;
        lk /= streams;
        if (lk <= 0.0) {
          degenerate = true;
          break;
        }
        lnik.push_back(std::log(1.0 / k));
        lnl.push_back(std::log(lk));
      }
      if (!degenerate && lnik.size() >= 2) out[13] = o_slope(lnik, lnl);
    }
  }

  out[14] = 0.0;
  out[22] = 0.0;
  if (var > 0.0) {
    const double m = o_mean(w);
    double m3 = 0.0, m4 = 0.0;
    for (double x : w) {
      const double c = x - m;
      m3 += c * c * c;
      m4 += c * c * c * c;
    }
    m3 /= n;
    m4 /= n;
    out[14] = m3 / std::pow(var, 1.5);
    out[22] = m4 / (var * var);
  }
  out[15] = iav;

  out[16] = 0.0;
  out[17] = 0.0;
  if (var > 0.0 && var_d > 0.0) {
    const double hmob = std::sqrt(var_d / var);
    out[16] = hmob;
    const double var_dd = o_pop_var(o_diff(d));
    out[17] = std::sqrt(var_dd / var_d) / hmob;
  }

  out[18] = ssq;
  out[19] = std::sqrt(dsq / (n - 1));
  int wam = 0;
  for (double x : d) {
    if (std::fabs(x) > cfg.wam_threshold) ++wam;
  }
  out[20] = wam;

  {
    const int seg = n / 3;
    out[21] = 0.0;
    if (seg >= 1) {
      double m1 = 0.0, m2 = 0.0, m3s = 0.0;
      for (int i = 0; i < seg; ++i) m1 += absw[static_cast<std::size_t>(i)];
      for (int i = seg; i < 2 * seg; ++i) m2 += absw[static_cast<std::size_t>(i)];
      for (int i = 2 * seg; i < 3 * seg; ++i) m3s += absw[static_cast<std::size_t>(i)];
      m1 /= seg;
      m2 /= seg;
      m3s /= seg;
      out[21] = ((m2 - m1) + (m3s - m2)) / 2.0;
    }
  }

  {
    Vec a = absw;
    std::sort(a.begin(), a.end());
    const double h = 0.75 * (n - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    out[23] = lo + 1 < a.size() ? a[lo] + frac * (a[lo + 1] - a[lo]) : a.back();
  }

  {
    double lo = w[0], hi = w[0];
    for (double x : w) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    for (int b = 0; b < 10; ++b) out[24 + b] = 0.0;
    if (hi > lo) {
      const double inv = 10.0 / (hi - lo);
      for (double x : w) {
        int b = static_cast<int>((x - lo) * inv);
        if (b < 0) b = 0;
        if (b > 9) b = 9;
        out[24 + b] += 1.0;
      }
      for (int b = 0; b < 10; ++b) out[24 + b] /= n;
    } else {
      out[24] = 1.0;
    }
  }
}

// ----- frequency domain -----

// Naive DFT bin via phasor recurrence, re-anchored periodically to keep the
// rotation error negligible.
std::complex<double> o_dft_bin(const Vec& x, int k) {
  const int n = static_cast<int>(x.size());
  const double base = -2.0 * M_PI * k / n;
  std::complex<double> acc(0.0, 0.0);
  std::complex<double> cur(1.0, 0.0);
  const std::complex<double> step(std::cos(base), std::sin(base));
  for (int j = 0; j < n; ++j) {
    if (j % 64 == 0) {
      const long long idx = (static_cast<long long>(k) * j) % n;
      const double ang = -2.0 * M_PI * static_cast<double>(idx) / n;
      cur = {std::cos(ang), std::sin(ang)};
    }
    acc += x[static_cast<std::size_t>(j)] * cur;
    cur *= step;
  }
  return acc;
}

void o_periodogram(const Vec& w, double fs, Vec& freq, Vec& power) {
  const int n = static_cast<int>(w.size());
  const double m = o_mean(w);
  Vec xc(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) xc[i] = w[i] - m;
  const int half = n / 2;
  freq.resize(static_cast<std::size_t>(half) + 1);
  power.resize(static_cast<std::size_t>(half) + 1);
  for (int k = 0; k <= half; ++k) {
    const std::complex<double> bin = o_dft_bin(xc, k);
    double p = std::norm(bin) / (fs * n);
    if (k != 0 && !(n % 2 == 0 && k == half)) p *= 2.0;
    freq[static_cast<std::size_t>(k)] = k * fs / n;
    power[static_cast<std::size_t>(k)] = p;
  }
}

double o_band(const Vec& freq, const Vec& power, double lo, double hi) {
  double s = 0.0;
  for (std::size_t k = 0; k < freq.size(); ++k) {
    if (freq[k] >= lo && freq[k] < hi) s += power[k];
  }
  return s;
}

void o_fd(const Vec& w, double fs, const FeatureConfig& cfg, double* out) {
  for (int i = 0; i < kFdCount; ++i) out[i] = 0.0;
  bool all_zero = true;
  for (double x : w) {
    if (x != 0.0) {
      all_zero = false;
      break;
    }
  }
  if (all_zero) return;

  Vec freq, power;
  o_periodogram(w, fs, freq, power);
  const int bins = static_cast<int>(power.size());
  const double df = fs / static_cast<double>(w.size());

  for (int k = 1; k < bins; ++k) {
    out[0] += std::fabs(power[static_cast<std::size_t>(k)] -
                        power[static_cast<std::size_t>(k - 1)]);
  }
  double total = 0.0;
  for (double p : power) total += p;
  if (total > 0.0) {
    double fp = 0.0;
    for (int k = 0; k < bins; ++k) fp += freq[static_cast<std::size_t>(k)] * power[static_cast<std::size_t>(k)];
    out[1] = fp / total;
    const double half = 0.5 * total;
    double cum = 0.0;
    for (int k = 0; k < bins; ++k) {
      const double next = cum + power[static_cast<std::size_t>(k)];
      if (next >= half) {
        out[2] = k == 0 ? freq[0]
                        : freq[static_cast<std::size_t>(k - 1)] +
                              (half - cum) / power[static_cast<std::size_t>(k)] * df;
        break;
      }
      cum = next;
    }
  }

  Vec pk;
  for (int k = 1; k + 1 < bins; ++k) {
    if (power[static_cast<std::size_t>(k)] > power[static_cast<std::size_t>(k - 1)] &&
        power[static_cast<std::size_t>(k)] > power[static_cast<std::size_t>(k + 1)]) {
      pk.push_back(power[static_cast<std::size_t>(k)]);
    }
  }
  if (!pk.empty()) {
    const double m = o_mean(pk);
    double ss = 0.0;
    for (double v : pk) ss += (v - m) * (v - m);
    out[3] = m;
    out[4] = std::sqrt(ss / static_cast<double>(pk.size()));
  }

  const double low = o_band(freq, power, cfg.fr_low_lo_hz, cfg.fr_low_hi_hz);
  const double high = o_band(freq, power, cfg.fr_high_lo_hz, cfg.fr_high_hi_hz);
  out[5] = high > 0.0 ? low / high : 0.0;

  int arg = 0;
  for (int k = 1; k < bins; ++k) {
    if (power[static_cast<std::size_t>(k)] > power[static_cast<std::size_t>(arg)]) arg = k;
  }
  out[6] = freq[static_cast<std::size_t>(arg)];

  for (int b = 0; b < 49; ++b) {
    const double lo = 10.0 * (b + 1);
    out[7 + b] = o_band(freq, power, lo, lo + 10.0);
  }
}

// ----- time-frequency -----

int o_reflect(int t, int n) {
  while (t < 0 || t >= n) {
    if (t < 0) t = -t - 1;
    if (t >= n) t = 2 * n - 1 - t;
  }
  return t;
}

void o_step(const Vec& x, Vec& lo, Vec& hi) {
  const int n = static_cast<int>(x.size());
  const int out_len = (n + wavelet::kSym5Len - 1) / 2;
  lo.assign(static_cast<std::size_t>(out_len), 0.0);
  hi.assign(static_cast<std::size_t>(out_len), 0.0);
  const auto& h = wavelet::sym5_dec_lo();
  const auto& g = wavelet::sym5_dec_hi();
  for (int i = 0; i < out_len; ++i) {
    double a = 0.0, d = 0.0;
    for (int k = 0; k < wavelet::kSym5Len; ++k) {
      const double v = x[static_cast<std::size_t>(o_reflect(2 * i + 1 - k, n))];
      a += h[static_cast<std::size_t>(k)] * v;
      d += g[static_cast<std::size_t>(k)] * v;
    }
    lo[static_cast<std::size_t>(i)] = a;
    hi[static_cast<std::size_t>(i)] = d;
  }
}

void o_tf(const Vec& w, const FeatureConfig& cfg, double* out) {
  // Level-4 DWT concatenation [A4, D4, D3, D2, D1].
  Vec cur = w;
  std::vector<Vec> details;
  for (int l = 0; l < 4; ++l) {
    Vec lo, hi;
    o_step(cur, lo, hi);
    details.push_back(hi);
    cur = lo;
  }
  Vec concat = cur;
  for (auto it = details.rbegin(); it != details.rend(); ++it) {
    concat.insert(concat.end(), it->begin(), it->end());
  }

  const double var = o_pop_var(concat);
  out[0] = std::sqrt(var);
  out[1] = var;
  double wl = 0.0;
  for (std::size_t i = 0; i + 1 < concat.size(); ++i) {
    wl += std::fabs(concat[i + 1] - concat[i]);
  }
  out[2] = wl;
  double energy = 0.0, maxav = 0.0, mav = 0.0;
  for (double c : concat) {
    energy += c * c;
    maxav = std::max(maxav, std::fabs(c));
    mav += std::fabs(c);
  }
  out[3] = energy;
  out[4] = maxav;
  int zc = 0;
  for (std::size_t i = 0; i + 1 < concat.size(); ++i) {
    if (concat[i] * concat[i + 1] < 0.0) ++zc;
  }
  out[5] = zc;
  out[6] = o_mean(concat);
  out[7] = mav / static_cast<double>(concat.size());

  // Depth-4 WPT in natural order; the frequency index of a node is the
  // prefix-XOR of its path bits (highpass = 1, most significant first).
  std::vector<Vec> natural;
  natural.push_back(w);
  for (int l = 0; l < 4; ++l) {
    std::vector<Vec> next;
    for (const auto& node : natural) {
      Vec lo, hi;
      o_step(node, lo, hi);
      next.push_back(lo);
      next.push_back(hi);
    }
    natural = std::move(next);
  }
  std::vector<Vec> by_freq(16);
  for (int nat = 0; nat < 16; ++nat) {
    int f = 0;
    int acc = 0;
    for (int bit = 3; bit >= 0; --bit) {
      acc ^= (nat >> bit) & 1;
      f = (f << 1) | acc;
    }
    by_freq[static_cast<std::size_t>(f)] = natural[static_cast<std::size_t>(nat)];
  }

  double energies[16];
  double total = 0.0;
  for (int i = 0; i < 16; ++i) {
    double e = 0.0;
    for (double c : by_freq[static_cast<std::size_t>(i)]) e += c * c;
    energies[i] = e;
    total += e;
  }
  const double eps = cfg.wpt_log_floor;
  for (int i = 0; i < 16; ++i) {
    const double rms = std::sqrt(
        energies[i] / static_cast<double>(by_freq[static_cast<std::size_t>(i)].size()));
    out[8 + i] = std::log(rms + eps);
    out[24 + i] = total > 0.0 ? energies[i] / total : 1.0 / 16.0;
    out[40 + i] = std::log(energies[i] + eps) - std::log(total + eps);
  }
}

}  // namespace

std::vector<double> oracle_features(const std::vector<double>& window,
                                    double fs, double xch_value,
                                    const FeatureConfig& cfg) {
  if (cfg.spectrum != FeatureConfig::Spectrum::Periodogram) {
    throw NumericError("oracle_features: only the periodogram estimator is supported");
  }
  std::vector<double> out(static_cast<std::size_t>(kNumFeatures), 0.0);
  o_td(window, cfg, out.data() + kTdOffset);
  o_fd(window, fs, cfg, out.data() + kFdOffset);
  o_tf(window, cfg, out.data() + kTfOffset);
  out[static_cast<std::size_t>(kXchOffset)] = xch_value;
  return out;
}

std::vector<double> oracle_xch(const std::vector<std::vector<double>>& channels) {
  const std::size_t c = channels.size();
  if (c < 2) throw NumericError("oracle_xch: need at least 2 channels");
  const std::size_t n = channels[0].size();
  std::vector<double> mean(c), sd(c);
  for (std::size_t i = 0; i < c; ++i) {
    mean[i] = o_mean(channels[i]);
    double ss = 0.0;
    for (double x : channels[i]) ss += (x - mean[i]) * (x - mean[i]);
    sd[i] = std::sqrt(ss / static_cast<double>(n));
  }
  std::vector<double> out(c, 0.0);
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      if (i == j) continue;
      double r = 0.0;
      if (sd[i] > 0.0 && sd[j] > 0.0) {
        double dot = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          dot += (channels[i][k] - mean[i]) * (channels[j][k] - mean[j]);
        }
        r = dot / (static_cast<double>(n) * sd[i] * sd[j]);
      }
      out[i] += r;
    }
    out[i] /= static_cast<double>(c - 1);
  }
  return out;
}

}  // namespace emgsens
