#include "emgsens/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "emgsens/csv.hpp"
#include "emgsens/dataset.hpp"
#include "emgsens/errors.hpp"
#include "emgsens/spectrum.hpp"
#include "emgsens/util.hpp"
#include "emgsens/wavelet.hpp"

namespace emgsens {

namespace {

double population_variance(const Eigen::ArrayXd& x) {
  return (x - x.mean()).square().mean();
}

Eigen::ArrayXd diff(const Eigen::ArrayXd& x) {
  return x.tail(x.size() - 1) - x.head(x.size() - 1);
}

int count_sign_flips(const Eigen::ArrayXd& x, double threshold) {
  int count = 0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    if (x[i] * x[i + 1] < 0.0 && std::fabs(x[i] - x[i + 1]) > threshold) {
      ++count;
    }
  }
  return count;
}

double slope_of(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return 0.0;
  return (n * sxy - sx * sy) / denom;
}

// Higuchi curve-length dimension: slope of ln L(k) against ln(1/k).
double higuchi_fd(const Eigen::ArrayXd& x, int kmax) {
  const int n = static_cast<int>(x.size());
  if (n < kmax + 1) return 0.0;
  std::vector<double> lnik, lnl;
  for (int k = 1; k <= kmax; ++k) {
    double lk = 0.0;
    int streams = 0;
    for (int m = 0; m < k; ++m) {
      const int steps = (n - 1 - m) / k;
      if (steps < 1) continue;
      double length = 0.0;
      for (int i = 1; i <= steps; ++i) {
        length += std::fabs(x[m + i * k] - x[m + (i - 1) * k]);
      }
      lk += length * (n - 1) / (static_cast<double>(steps) * k * k);
      ++streams;
    }
    if (streams == 0) continue;
    lk /= streams;
    if (lk <= 0.0) return 0.0;  // constant signal
    lnik.push_back(std::log(1.0 / k));
    lnl.push_back(std::log(lk));
  }
  if (lnik.size() < 2) return 0.0;
  return slope_of(lnik, lnl);
}

// Dyadic box counting on the graph of the window, square boxes in
// range-normalized coordinates: at scale s the box height is
// range * s / (n - 1). Returns the log-log slope of the box count.
double box_counting_fd(const Eigen::ArrayXd& x) {
  const int n = static_cast<int>(x.size());
  const double range = x.maxCoeff() - x.minCoeff();
  std::vector<double> lns, lnn;
  for (int s = 1; s <= n / 8 && s <= 128; s *= 2) {
    const double h = range * s / static_cast<double>(n - 1);
    double count = 0.0;
    for (int start = 0; start < n - 1; start += s) {
      // Column of the polyline graph: samples start..start+s inclusive.
      const int stop = std::min(n - 1, start + s);
      double lo = x[start];
      double hi = x[start];
      for (int i = start + 1; i <= stop; ++i) {
        lo = std::min(lo, x[i]);
        hi = std::max(hi, x[i]);
      }
      count += (h > 0.0) ? std::max(1.0, std::ceil((hi - lo) / h)) : 1.0;
    }
    lns.push_back(std::log(1.0 / s));
    lnn.push_back(std::log(count));
  }
  if (lns.size() < 2) return 0.0;
  return slope_of(lns, lnn);
}

}  // namespace

Eigen::VectorXd compute_td(const Eigen::ArrayXd& w, const FeatureConfig& cfg) {
  const int n = static_cast<int>(w.size());
  if (n < 3) throw NumericError("compute_td: window shorter than 3 samples");

  Eigen::VectorXd f = Eigen::VectorXd::Zero(kTdCount);
  const Eigen::ArrayXd absw = w.abs();
  const Eigen::ArrayXd d = diff(w);
  const double var = population_variance(w);
  const double var_d = population_variance(d);

  f[0] = absw.mean();                       // MAV
  f[1] = std::sqrt(var);                    // STD
  f[2] = var;                               // Var
  f[3] = d.abs().sum();                     // WL
  f[4] = count_sign_flips(w, cfg.zc_threshold);  // ZC
  f[5] = std::sqrt(w.square().mean());      // RMS

  // Peaks of |x|: strict interior local maxima.
  std::vector<int> peaks;
  for (int i = 1; i + 1 < n; ++i) {
    if (absw[i] > absw[i - 1] && absw[i] > absw[i + 1]) peaks.push_back(i);
  }
  f[6] = static_cast<double>(peaks.size());  // NP
  if (!peaks.empty()) {
    double sum = 0.0;
    for (int p : peaks) sum += absw[p];
    f[7] = sum / static_cast<double>(peaks.size());  // MPV
  }
  if (peaks.size() >= 2) {
    f[8] = static_cast<double>(peaks.back() - peaks.front()) /
           static_cast<double>(peaks.size() - 1);  // MFV
  }

  int ssc = 0;
  for (int i = 1; i + 1 < n; ++i) {
    if ((w[i] - w[i - 1]) * (w[i] - w[i + 1]) > cfg.ssc_threshold) ++ssc;
  }
  f[9] = ssc;                                // SSC
  f[10] = f[3] / (n - 1);                    // DAMV
  f[11] = box_counting_fd(w);                // FDim
  const double dsq = d.square().sum();
  f[12] = dsq > 0.0 ? std::log10(std::sqrt(dsq)) : 0.0;  // MFL
  f[13] = higuchi_fd(w, cfg.hfd_kmax);       // HFD

  if (var > 0.0) {
    const Eigen::ArrayXd c = w - w.mean();
    const double m3 = c.cube().mean();
    const double m4 = c.square().square().mean();
    f[14] = m3 / std::pow(var, 1.5);         // Skew
    f[22] = m4 / (var * var);                // Kurt (non-excess)
  }
  f[15] = absw.sum();                        // IAV

  if (var > 0.0 && var_d > 0.0) {
    const double hmob = std::sqrt(var_d / var);
    f[16] = hmob;                            // HMob
    const double var_dd = population_variance(diff(d));
    if (var_dd >= 0.0) {
      const double hmob_d = std::sqrt(var_dd / var_d);
      f[17] = hmob_d / hmob;                 // HCom
    }
  }

  f[18] = w.square().sum();                  // ER
  f[19] = std::sqrt(d.square().mean());      // DASDV
  f[20] = (d.abs() > cfg.wam_threshold).count();  // WAM

  // MAVS: three equal segments, mean of successive MAV differences.
  const int seg = n / 3;
  if (seg >= 1) {
    double prev = absw.segment(0, seg).mean();
    double acc = 0.0;
    for (int s = 1; s < 3; ++s) {
      const double cur = absw.segment(s * seg, seg).mean();
      acc += cur - prev;
      prev = cur;
    }
    f[21] = acc / 2.0;                       // MAVS
  }

  {
    std::vector<double> a(absw.data(), absw.data() + n);
    std::sort(a.begin(), a.end());
    const double h = 0.75 * (n - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    f[23] = lo + 1 < a.size() ? a[lo] + frac * (a[lo + 1] - a[lo]) : a.back();  // Perc
  }

  // Histogram: 10 equal-width bins over [min, max], as proportions.
  {
    const double lo = w.minCoeff();
    const double hi = w.maxCoeff();
    if (hi > lo) {
      const double inv = 10.0 / (hi - lo);
      for (int i = 0; i < n; ++i) {
        int b = static_cast<int>((w[i] - lo) * inv);
        b = std::clamp(b, 0, 9);
        f[24 + b] += 1.0;
      }
      for (int b = 0; b < 10; ++b) f[24 + b] /= n;
    } else {
      f[24] = 1.0;  // constant window: all mass in the first bin
    }
  }
  return f;
}

Eigen::VectorXd compute_fd(const Eigen::ArrayXd& w, double fs,
                           const FeatureConfig& cfg) {
  const int n = static_cast<int>(w.size());
  if (n < 64) throw NumericError("compute_fd: window shorter than 64 samples");
  if (fs <= 0.0) throw NumericError("compute_fd: fs must be positive");

  Eigen::VectorXd f = Eigen::VectorXd::Zero(kFdCount);
  if ((w == 0.0).all()) return f;  // all spectral features 0 by convention

  const PowerSpectrum ps = cfg.spectrum == FeatureConfig::Spectrum::Welch
                               ? welch(w, fs, cfg.welch_segments)
                               : periodogram(w, fs);
  const int bins = static_cast<int>(ps.power.size());
  const double total = ps.power.sum();

  for (int k = 1; k < bins; ++k) f[0] += std::fabs(ps.power[k] - ps.power[k - 1]);  // FD_WL

  if (total > 0.0) {
    f[1] = (ps.freq * ps.power).sum() / total;  // MNF
    // MDF: first frequency where cumulative power reaches half the total,
    // linearly interpolated between bins.
    const double half = 0.5 * total;
    double cum = 0.0;
    for (int k = 0; k < bins; ++k) {
      const double next = cum + ps.power[k];
      if (next >= half) {
        if (k == 0) {
          f[2] = ps.freq[0];
        } else {
          f[2] = ps.freq[k - 1] + (half - cum) / ps.power[k] * ps.df;
        }
        break;
      }
      cum = next;
    }
  }

  // Spectral peaks: strict interior local maxima of the power sequence.
  {
    std::vector<double> pk;
    for (int k = 1; k + 1 < bins; ++k) {
      if (ps.power[k] > ps.power[k - 1] && ps.power[k] > ps.power[k + 1]) {
        pk.push_back(ps.power[k]);
      }
    }
    if (!pk.empty()) {
      double mean = 0.0;
      for (double v : pk) mean += v;
      mean /= static_cast<double>(pk.size());
      double ss = 0.0;
      for (double v : pk) ss += (v - mean) * (v - mean);
      f[3] = mean;                                            // MPK
      f[4] = std::sqrt(ss / static_cast<double>(pk.size()));  // STDPK
    }
  }

  const double low = ps.band_power(cfg.fr_low_lo_hz, cfg.fr_low_hi_hz);
  const double high = ps.band_power(cfg.fr_high_lo_hz, cfg.fr_high_hi_hz);
  f[5] = high > 0.0 ? low / high : 0.0;  // FR

  {
    int arg = 0;
    for (int k = 1; k < bins; ++k) {
      if (ps.power[k] > ps.power[arg]) arg = k;
    }
    f[6] = ps.freq[arg];  // PKF
  }

  // 49 contiguous 10 Hz bands, FE_XHz covering [X, X+10).
  for (int b = 0; b < 49; ++b) {
    const double lo = 10.0 * (b + 1);
    f[7 + b] = ps.band_power(lo, lo + 10.0);
  }
  return f;
}

Eigen::VectorXd compute_tf(const Eigen::ArrayXd& w, const FeatureConfig& cfg) {
  const int n = static_cast<int>(w.size());
  if (n < 16 * wavelet::kSym5Len) {
    throw NumericError("compute_tf: window shorter than 2^4 * filter length");
  }

  Eigen::VectorXd f = Eigen::VectorXd::Zero(kTfCount);

  const Eigen::ArrayXd coeffs = wavelet::dwt_concat(wavelet::dwt(w, 4));
  const double var = population_variance(coeffs);
  f[0] = std::sqrt(var);               // WT_STD
  f[1] = var;                          // WT_Var
  f[2] = diff(coeffs).abs().sum();     // WT_WL
  f[3] = coeffs.square().sum();        // WT_Energy
  f[4] = coeffs.abs().maxCoeff();      // WT_MaxAV
  f[5] = count_sign_flips(coeffs, 0.0);  // WT_ZC
  f[6] = coeffs.mean();                // WT_Mean
  f[7] = coeffs.abs().mean();          // WT_MAV

  const auto nodes = wavelet::wpt_nodes(w, 4);
  Eigen::ArrayXd energy(16);
  for (int i = 0; i < 16; ++i) energy[i] = nodes[static_cast<std::size_t>(i)].square().sum();
  const double total = energy.sum();
  const double eps = cfg.wpt_log_floor;
  for (int i = 0; i < 16; ++i) {
    const double rms =
        std::sqrt(energy[i] / static_cast<double>(nodes[static_cast<std::size_t>(i)].size()));
    f[8 + i] = std::log(rms + eps);                                    // WPT_LogRMS
    f[24 + i] = total > 0.0 ? energy[i] / total : 1.0 / 16.0;          // WPT_RE
    f[40 + i] = std::log(energy[i] + eps) - std::log(total + eps);     // WPT_NLE
  }
  return f;
}

Eigen::VectorXd compute_xch(const Eigen::MatrixXd& ch) {
  const int c = static_cast<int>(ch.rows());
  const int n = static_cast<int>(ch.cols());
  if (c < 2) throw NumericError("compute_xch: need at least 2 channels");

  Eigen::VectorXd mean(c), sd(c);
  Eigen::MatrixXd centered(c, n);
  for (int i = 0; i < c; ++i) {
    mean[i] = ch.row(i).mean();
    centered.row(i) = ch.row(i).array() - mean[i];
    sd[i] = std::sqrt(centered.row(i).squaredNorm() / n);
  }

  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(c, c);
  for (int i = 0; i < c; ++i) {
    for (int j = i + 1; j < c; ++j) {
      double rij = 0.0;
      if (sd[i] > 0.0 && sd[j] > 0.0) {
        rij = centered.row(i).dot(centered.row(j)) / (n * sd[i] * sd[j]);
      }
      r(i, j) = rij;
      r(j, i) = rij;
    }
  }
  Eigen::VectorXd out(c);
  for (int i = 0; i < c; ++i) out[i] = r.row(i).sum() / (c - 1);
  return out;
}

Eigen::VectorXd compute_all(const Eigen::ArrayXd& window, double fs,
                            double xch_value, const FeatureConfig& cfg) {
  Eigen::VectorXd all(kNumFeatures);
  all.segment(kTdOffset, kTdCount) = compute_td(window, cfg);
  all.segment(kFdOffset, kFdCount) = compute_fd(window, fs, cfg);
  all.segment(kTfOffset, kTfCount) = compute_tf(window, cfg);
  all[kXchOffset] = xch_value;
  return all;
}

std::vector<std::string> FeatureMatrix::unique_subjects() const {
  std::vector<std::string> out;
  for (const auto& s : subjects) {
    if (out.empty() || out.back() != s) {
      if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    }
  }
  return out;
}

FeatureMatrix FeatureMatrix::filter_subjects(
    const std::vector<std::string>& keep) const {
  std::set<std::string> want(keep.begin(), keep.end());
  std::vector<int> rows;
  for (int r = 0; r < n_rows(); ++r) {
    if (want.count(subjects[static_cast<std::size_t>(r)])) rows.push_back(r);
  }
  FeatureMatrix out;
  out.feature_names = feature_names;
  out.values = Eigen::MatrixXd(static_cast<int>(rows.size()), values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int r = rows[i];
    out.subjects.push_back(subjects[static_cast<std::size_t>(r)]);
    out.gestures.push_back(gestures[static_cast<std::size_t>(r)]);
    out.channels.push_back(channels[static_cast<std::size_t>(r)]);
    out.values.row(static_cast<int>(i)) = values.row(r);
  }
  return out;
}

FeatureMatrix build_feature_matrix(const std::vector<TrialTensor>& tensors,
                                   double window_fraction,
                                   const FeatureConfig& cfg, int jobs) {
  const auto& cat = feature_catalog();

  FeatureMatrix fm;
  for (const auto& d : cat) fm.feature_names.push_back(d.name);

  struct CellKey {
    int subject;
    int gesture;
    int channel;
  };
  std::vector<CellKey> keys;
  std::vector<Eigen::VectorXd> sums;
  std::vector<int> counts;

  for (std::size_t si = 0; si < tensors.size(); ++si) {
    const TrialTensor& t = tensors[si];
    const AnalysisWindow win =
        AnalysisWindow::centered(t.n_samples, window_fraction);

    // Per-trial feature blocks, filled in parallel and reduced in trial
    // order so the result does not depend on the worker count.
    std::vector<Eigen::MatrixXd> per_trial(static_cast<std::size_t>(t.n_trials));
    parallel_for(static_cast<std::size_t>(t.n_trials), jobs, [&](std::size_t trial) {
      const int tr = static_cast<int>(trial);
      Eigen::MatrixXd channels_win(t.n_channels, win.length());
      for (int c = 0; c < t.n_channels; ++c) {
        channels_win.row(c) =
            t.channel_window(tr, c, win.start, win.end).transpose();
      }
      Eigen::VectorXd xch = t.n_channels >= 2
                                ? compute_xch(channels_win)
                                : Eigen::VectorXd::Zero(t.n_channels);
      Eigen::MatrixXd block(t.n_channels, kNumFeatures);
      for (int c = 0; c < t.n_channels; ++c) {
        const Eigen::ArrayXd w = channels_win.row(c).array().transpose();
        block.row(c) = compute_all(w, t.sampling_rate_hz, xch[c], cfg).transpose();
      }
      for (int c = 0; c < t.n_channels; ++c) {
        for (int k = 0; k < kNumFeatures; ++k) {
          if (!std::isfinite(block(c, k))) {
            throw NumericError(
                "non-finite feature value: subject " + t.subject_id +
                ", trial " + std::to_string(tr) + ", channel " +
                std::to_string(c) + ", feature " +
                cat[static_cast<std::size_t>(k)].name);
          }
        }
      }
      per_trial[trial] = std::move(block);
    });

    // Accumulate per (gesture, channel) cell.
    std::map<std::pair<int, int>, int> cell_index;
    for (int tr = 0; tr < t.n_trials; ++tr) {
      const int g = t.labels[static_cast<std::size_t>(tr)];
      for (int c = 0; c < t.n_channels; ++c) {
        auto key = std::make_pair(g, c);
        auto it = cell_index.find(key);
        if (it == cell_index.end()) {
          it = cell_index.emplace(key, static_cast<int>(keys.size())).first;
          keys.push_back({static_cast<int>(si), g, c});
          sums.push_back(Eigen::VectorXd::Zero(kNumFeatures));
          counts.push_back(0);
        }
        sums[static_cast<std::size_t>(it->second)] +=
            per_trial[static_cast<std::size_t>(tr)].row(c).transpose();
        counts[static_cast<std::size_t>(it->second)] += 1;
      }
    }
  }

  // Deterministic row order: subject (input order), gesture, channel.
  std::vector<int> order(keys.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ka = keys[static_cast<std::size_t>(a)];
    const auto& kb = keys[static_cast<std::size_t>(b)];
    if (ka.subject != kb.subject) return ka.subject < kb.subject;
    if (ka.gesture != kb.gesture) return ka.gesture < kb.gesture;
    return ka.channel < kb.channel;
  });

  fm.values = Eigen::MatrixXd(static_cast<int>(order.size()), kNumFeatures);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const int idx = order[i];
    const auto& k = keys[static_cast<std::size_t>(idx)];
    fm.subjects.push_back(tensors[static_cast<std::size_t>(k.subject)].subject_id);
    fm.gestures.push_back(k.gesture);
    fm.channels.push_back(k.channel);
    fm.values.row(static_cast<int>(i)) =
        sums[static_cast<std::size_t>(idx)].transpose() /
        static_cast<double>(counts[static_cast<std::size_t>(idx)]);
  }
  return fm;
}

void save_feature_matrix(const std::string& path, const FeatureMatrix& fm,
                         const std::vector<std::string>& comments) {
  CsvTable csv;
  csv.comments = comments;
  csv.header = {"subject", "gesture", "channel"};
  for (const auto& n : fm.feature_names) csv.header.push_back(n);
  for (int r = 0; r < fm.n_rows(); ++r) {
    std::vector<std::string> row;
    row.reserve(3 + fm.feature_names.size());
    row.push_back(fm.subjects[static_cast<std::size_t>(r)]);
    row.push_back(std::to_string(fm.gestures[static_cast<std::size_t>(r)]));
    row.push_back(std::to_string(fm.channels[static_cast<std::size_t>(r)]));
    for (int c = 0; c < fm.values.cols(); ++c) {
      row.push_back(format_double(fm.values(r, c)));
    }
    csv.rows.push_back(std::move(row));
  }
  write_csv(path, csv);
}

FeatureMatrix load_feature_matrix(const std::string& path) {
  CsvTable csv = read_csv(path);
  if (csv.header.size() < 4 || csv.header[0] != "subject" ||
      csv.header[1] != "gesture" || csv.header[2] != "channel") {
    throw DataError("feature matrix " + path + ": unexpected header");
  }
  FeatureMatrix fm;
  for (std::size_t i = 3; i < csv.header.size(); ++i) {
    fm.feature_names.push_back(csv.header[i]);
  }
  fm.values = Eigen::MatrixXd(static_cast<int>(csv.rows.size()),
                              static_cast<int>(fm.feature_names.size()));
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    fm.subjects.push_back(row[0]);
    fm.gestures.push_back(std::stoi(row[1]));
    fm.channels.push_back(std::stoi(row[2]));
    for (std::size_t c = 3; c < row.size(); ++c) {
      fm.values(static_cast<int>(r), static_cast<int>(c - 3)) = std::stod(row[c]);
    }
  }
  return fm;
}

}  // namespace emgsens
