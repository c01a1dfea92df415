#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <set>

#include "emgsens/errors.hpp"
#include "emgsens/feature_catalog.hpp"
#include "emgsens/features.hpp"
#include "emgsens/spectrum.hpp"
#include "emgsens/types.hpp"
#include "emgsens/util.hpp"
#include "test_helpers.hpp"

using namespace emgsens;

namespace {

const FeatureConfig kCfg;

Eigen::ArrayXd gaussian_window(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::ArrayXd w(n);
  for (int i = 0; i < n; ++i) w[i] = rng.normal();
  return w;
}

Eigen::ArrayXd tone(int n, double f0, double fs, double amp = 1.0) {
  Eigen::ArrayXd w(n);
  for (int i = 0; i < n; ++i) w[i] = amp * std::sin(2.0 * M_PI * f0 * i / fs);
  return w;
}

int td_idx(const char* name) { return feature_index(name) - kTdOffset; }
int fd_idx(const char* name) { return feature_index(name) - kFdOffset; }
int tf_idx(const char* name) { return feature_index(name) - kTfOffset; }

}  // namespace

TEST_CASE("catalog has exactly 147 uniquely named features in 34/56/56/1 blocks") {
  const auto& cat = feature_catalog();
  REQUIRE(cat.size() == kNumFeatures);
  std::set<std::string> names;
  int td = 0, fd = 0, tf = 0, xch = 0;
  for (const auto& d : cat) {
    names.insert(d.name);
    switch (d.domain) {
      case FeatureDomain::TD: ++td; break;
      case FeatureDomain::FD: ++fd; break;
      case FeatureDomain::TF: ++tf; break;
      case FeatureDomain::XCH: ++xch; break;
    }
  }
  CHECK(names.size() == 147);
  CHECK(td == 34);
  CHECK(fd == 56);
  CHECK(tf == 56);
  CHECK(xch == 1);
  CHECK(feature_index("PKF") == kFdOffset + 6);
  CHECK(feature_index("WPT_RE_0") == kTfOffset + 24);
  CHECK(feature_index("Ch_MeanCor") == kXchOffset);
  CHECK(feature_index("not_a_feature") == -1);
}

TEST_CASE("time-domain hand values") {
  Eigen::ArrayXd w(4);
  w << 1.0, -1.0, 2.0, -2.0;
  const auto f = compute_td(w, kCfg);
  CHECK(f[td_idx("MAV")] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(f[td_idx("IAV")] == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(f[td_idx("RMS")] == doctest::Approx(std::sqrt(2.5)).epsilon(1e-12));
  CHECK(f[td_idx("Var")] == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(f[td_idx("STD")] == doctest::Approx(std::sqrt(2.5)).epsilon(1e-12));
  CHECK(f[td_idx("WL")] == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(f[td_idx("DAMV")] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f[td_idx("DASDV")] ==
        doctest::Approx(std::sqrt(29.0 / 3.0)).epsilon(1e-12));
  CHECK(f[td_idx("ER")] == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("zero crossings and slope sign changes on the alternating window") {
  Eigen::ArrayXd w(4);
  w << 1.0, -1.0, 1.0, -1.0;
  const auto f = compute_td(w, kCfg);
  CHECK(f[td_idx("ZC")] == 3.0);
  CHECK(f[td_idx("SSC")] == 2.0);
}

TEST_CASE("peak features NP, MPV, MFV") {
  Eigen::ArrayXd w(5);
  w << 0.0, 2.0, 0.0, -3.0, 0.0;  // |x| peaks at indices 1 and 3
  const auto f = compute_td(w, kCfg);
  CHECK(f[td_idx("NP")] == 2.0);
  CHECK(f[td_idx("MPV")] == doctest::Approx(2.5));
  CHECK(f[td_idx("MFV")] == doctest::Approx(2.0));

  Eigen::ArrayXd ramp(6);
  ramp << 0, 1, 2, 3, 4, 5;  // no interior peak
  const auto g = compute_td(ramp, kCfg);
  CHECK(g[td_idx("NP")] == 0.0);
  CHECK(g[td_idx("MPV")] == 0.0);
  CHECK(g[td_idx("MFV")] == 0.0);
}

TEST_CASE("WAM counts large amplitude changes against its threshold") {
  Eigen::ArrayXd w(4);
  w << 0.0, 0.1, 0.1, 0.3;  // diffs 0.1, 0.0, 0.2 against theta = 0.05
  const auto f = compute_td(w, kCfg);
  CHECK(f[td_idx("WAM")] == 2.0);

  FeatureConfig strict = kCfg;
  strict.wam_threshold = 0.15;
  CHECK(compute_td(w, strict)[td_idx("WAM")] == 1.0);
}

TEST_CASE("75th percentile uses linear interpolation") {
  Eigen::ArrayXd w(4);
  w << 1.0, -2.0, 3.0, -4.0;  // |x| sorted: 1 2 3 4, h = 2.25
  const auto f = compute_td(w, kCfg);
  CHECK(f[td_idx("Perc")] == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("MAVS over three equal segments") {
  Eigen::ArrayXd w(6);
  w << 1.0, -1.0, 2.0, -2.0, 4.0, -4.0;  // segment MAVs: 1, 2, 4
  const auto f = compute_td(w, kCfg);
  CHECK(f[td_idx("MAVS")] == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("histogram bins are proportions over [min, max]") {
  Eigen::ArrayXd w(10);
  for (int i = 0; i < 10; ++i) w[i] = i;  // one sample per bin
  const auto f = compute_td(w, kCfg);
  double sum = 0.0;
  for (int b = 0; b < 10; ++b) {
    CHECK(f[td_idx("Hist0") + b] == doctest::Approx(0.1));
    sum += f[td_idx("Hist0") + b];
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Higuchi dimension: noise near 2, ramp near 1") {
  const auto noise = gaussian_window(2800, 102);
  const double hfd_noise = compute_td(noise, kCfg)[td_idx("HFD")];
  CHECK(hfd_noise >= 1.9);
  CHECK(hfd_noise <= 2.0);

  Eigen::ArrayXd ramp(2800);
  for (int i = 0; i < 2800; ++i) ramp[i] = 0.002 * i;
  const double hfd_ramp = compute_td(ramp, kCfg)[td_idx("HFD")];
  CHECK(hfd_ramp >= 1.0);
  CHECK(hfd_ramp <= 1.05);
}

TEST_CASE("constant window maps the variance-ratio features to 0, never NaN") {
  Eigen::ArrayXd w = Eigen::ArrayXd::Constant(256, 3.25);
  const auto f = compute_td(w, kCfg);
  for (int i = 0; i < kTdCount; ++i) CHECK(std::isfinite(f[i]));
  CHECK(f[td_idx("HMob")] == 0.0);
  CHECK(f[td_idx("HCom")] == 0.0);
  CHECK(f[td_idx("Skew")] == 0.0);
  CHECK(f[td_idx("Kurt")] == 0.0);
  CHECK(f[td_idx("Hist0")] == 1.0);
  CHECK(f[td_idx("MAV")] == doctest::Approx(3.25));
}

TEST_CASE("scale equivariance of the time-domain block") {
  const auto w = gaussian_window(1024, 7);
  const double c = 3.7;
  const auto f1 = compute_td(w, kCfg);
  FeatureConfig cfg = kCfg;
  cfg.wam_threshold = kCfg.wam_threshold * c;  // WAM threshold is absolute
  const auto f2 = compute_td(w * c, cfg);

  for (const char* name : {"MAV", "RMS", "STD", "IAV", "WL", "DAMV", "DASDV", "MPV"}) {
    CHECK(rel_diff(f2[td_idx(name)], c * f1[td_idx(name)]) < 1e-10);
  }
  CHECK(rel_diff(f2[td_idx("Var")], c * c * f1[td_idx("Var")]) < 1e-10);
  for (const char* name : {"ZC", "SSC", "Skew", "Kurt", "HMob", "HCom", "HFD"}) {
    CHECK(rel_diff(f2[td_idx(name)], f1[td_idx(name)]) < 1e-9);
  }
  for (int b = 0; b < 10; ++b) {
    CHECK(f2[td_idx("Hist0") + b] == f1[td_idx("Hist0") + b]);
  }
}

TEST_CASE("time-reversal invariance") {
  const auto w = gaussian_window(512, 21);
  const Eigen::ArrayXd r = w.reverse();
  const auto f1 = compute_td(w, kCfg);
  const auto f2 = compute_td(r, kCfg);
  for (const char* name : {"MAV", "RMS", "Var", "ZC", "WL"}) {
    CHECK(rel_diff(f2[td_idx(name)], f1[td_idx(name)]) < 1e-12);
  }
  for (int b = 0; b < 10; ++b) {
    CHECK(f2[td_idx("Hist0") + b] == f1[td_idx("Hist0") + b]);
  }
  const auto g1 = compute_fd(w, 2000.0, kCfg);
  const auto g2 = compute_fd(r, 2000.0, kCfg);
  for (int i = 0; i < kFdCount; ++i) CHECK(rel_diff(g2[i], g1[i]) < 1e-9);
}

TEST_CASE("pure tone: PKF and MDF within one frequency bin") {
  const double fs = 2000.0;
  const int n = 2800;
  const double df = fs / n;
  const auto w = tone(n, 50.0, fs);
  const auto f = compute_fd(w, fs, kCfg);
  CHECK(std::fabs(f[fd_idx("PKF")] - 50.0) <= df);
  CHECK(std::fabs(f[fd_idx("MDF")] - 50.0) <= df);
}

TEST_CASE("two equal-power tones: MNF at the midpoint") {
  const double fs = 2000.0;
  const int n = 2800;
  const auto w = tone(n, 40.0, fs) + tone(n, 200.0, fs);
  const auto f = compute_fd(w, fs, kCfg);
  CHECK(std::fabs(f[fd_idx("MNF")] - 120.0) <= fs / n);
}

TEST_CASE("frequency ratio of two on-bin equal tones is 1") {
  const double fs = 2000.0;
  const int n = 2800;
  const auto w = tone(n, 50.0, fs) + tone(n, 200.0, fs);
  const auto f = compute_fd(w, fs, kCfg);
  CHECK(f[fd_idx("FR")] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("FE band partition matches independent in-band power") {
  for (std::uint64_t seed : {31, 32, 33}) {
    const auto w = gaussian_window(2800, seed);
    const auto f = compute_fd(w, 2000.0, kCfg);
    double fe = 0.0;
    for (int b = 0; b < 49; ++b) fe += f[fd_idx("FE_10Hz") + b];
    const PowerSpectrum ps = periodogram(w, 2000.0);
    const double in_band = ps.band_power(10.0, 500.0);
    CHECK(std::fabs(fe - in_band) <= 1e-6 * in_band);
  }
}

TEST_CASE("a 55 Hz tone lands in the FE_50Hz band") {
  const auto w = tone(2800, 55.0, 2000.0);
  const auto f = compute_fd(w, 2000.0, kCfg);
  double fe_sum = 0.0;
  for (int b = 0; b < 49; ++b) fe_sum += f[fd_idx("FE_10Hz") + b];
  CHECK(f[fd_idx("FE_50Hz")] > 0.99 * fe_sum);
}

TEST_CASE("all-zero window: every spectral feature is 0") {
  Eigen::ArrayXd w = Eigen::ArrayXd::Zero(256);
  const auto f = compute_fd(w, 2000.0, kCfg);
  for (int i = 0; i < kFdCount; ++i) CHECK(f[i] == 0.0);
}

TEST_CASE("welch estimator is available through the config") {
  FeatureConfig cfg = kCfg;
  cfg.spectrum = FeatureConfig::Spectrum::Welch;
  const auto w = tone(2800, 120.0, 2000.0) + 0.05 * gaussian_window(2800, 77);
  const auto f = compute_fd(w, 2000.0, cfg);
  // Coarser grid, same dominant tone.
  CHECK(std::fabs(f[fd_idx("PKF")] - 120.0) <= 4.0);
  for (int i = 0; i < kFdCount; ++i) CHECK(std::isfinite(f[i]));
}

TEST_CASE("WPT relative energies sum to 1") {
  for (std::uint64_t seed : {41, 42}) {
    const auto w = gaussian_window(1600, seed);
    const auto f = compute_tf(w, kCfg);
    double sum = 0.0;
    for (int k = 0; k < 16; ++k) sum += f[tf_idx("WPT_RE_0") + k];
    CHECK(std::fabs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("mid-window impulse conserves energy through the DWT") {
  Eigen::ArrayXd w = Eigen::ArrayXd::Zero(1024);
  w[512] = 1.0;
  const auto f = compute_tf(w, kCfg);
  CHECK(std::fabs(f[tf_idx("WT_Energy")] - 1.0) <= 1e-6);
}

TEST_CASE("tones land in the frequency-ordered WPT node that owns their band") {
  const double fs = 2000.0;
  for (int k = 0; k < 16; ++k) {
    const double f0 = (k + 0.5) * fs / 32.0;  // center of node k's band
    const auto w = tone(2800, f0, fs);
    const auto f = compute_tf(w, kCfg);
    int arg = 0;
    for (int n = 1; n < 16; ++n) {
      if (f[tf_idx("WPT_RE_0") + n] > f[tf_idx("WPT_RE_0") + arg]) arg = n;
    }
    CHECK(arg == k);
  }
}

TEST_CASE("zero window: WPT conventions") {
  Eigen::ArrayXd w = Eigen::ArrayXd::Zero(512);
  const auto f = compute_tf(w, kCfg);
  for (int k = 0; k < 16; ++k) {
    CHECK(f[tf_idx("WPT_RE_0") + k] == doctest::Approx(1.0 / 16.0));
    CHECK(f[tf_idx("WPT_LogRMS_0") + k] ==
          doctest::Approx(std::log(1e-12)).epsilon(1e-12));
    CHECK(f[tf_idx("WPT_NLE_0") + k] == 0.0);
  }
}

TEST_CASE("scaling: WPT_RE invariant, WT_Energy quadratic") {
  const auto w = gaussian_window(800, 55);
  const double c = 2.5;
  const auto f1 = compute_tf(w, kCfg);
  const auto f2 = compute_tf(w * c, kCfg);
  for (int k = 0; k < 16; ++k) {
    CHECK(rel_diff(f2[tf_idx("WPT_RE_0") + k], f1[tf_idx("WPT_RE_0") + k]) < 1e-10);
  }
  CHECK(rel_diff(f2[tf_idx("WT_Energy")], c * c * f1[tf_idx("WT_Energy")]) < 1e-10);
}

TEST_CASE("inter-channel correlation") {
  const int n = 2800;
  Rng rng(61);
  Eigen::MatrixXd ch(3, n);
  for (int i = 0; i < n; ++i) {
    ch(0, i) = rng.normal();
    ch(1, i) = ch(0, i);
    ch(2, i) = -ch(0, i);
  }
  SUBCASE("duplicated and negated channels") {
    // r(0,1)=1, r(0,2)=-1, r(1,2)=-1
    const auto x = compute_xch(ch);
    CHECK(x[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(x[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(x[2] == doctest::Approx(-1.0).epsilon(1e-12));

    Eigen::MatrixXd two = ch.topRows(2);
    const auto y = compute_xch(two);
    CHECK(y[0] == doctest::Approx(1.0));
    CHECK(y[1] == doctest::Approx(1.0));
  }
  SUBCASE("constant channel contributes r = 0") {
    Eigen::MatrixXd withc(3, n);
    withc.row(0).setConstant(2.0);
    for (int i = 0; i < n; ++i) {
      withc(1, i) = rng.normal();
      withc(2, i) = rng.normal();
    }
    const auto x = compute_xch(withc);
    CHECK(x[0] == 0.0);
  }
  SUBCASE("independent channels have near-zero mean correlation") {
    Eigen::MatrixXd ind(3, n);
    for (int c = 0; c < 3; ++c) {
      for (int i = 0; i < n; ++i) ind(c, i) = rng.normal();
    }
    const auto x = compute_xch(ind);
    for (int c = 0; c < 3; ++c) CHECK(std::fabs(x[c]) < 0.08);
  }
}

namespace {

TrialTensor small_tensor(std::uint64_t seed, int trials = 4, int channels = 3,
                         int samples = 400) {
  TrialTensor t;
  t.subject_id = "S001";
  t.n_trials = trials;
  t.n_channels = channels;
  t.n_samples = samples;
  t.sampling_rate_hz = 2000.0;
  t.labels.resize(static_cast<std::size_t>(trials));
  for (int i = 0; i < trials; ++i) t.labels[static_cast<std::size_t>(i)] = i % 2;
  t.data.resize(t.expected_size());
  Rng rng(seed);
  for (auto& v : t.data) v = static_cast<float>(rng.normal());
  return t;
}

}  // namespace

TEST_CASE("feature matrix: single trial averaging is the identity") {
  TrialTensor t = small_tensor(71, 1, 3, 400);
  const auto fm = build_feature_matrix({t}, 0.70, kCfg, 1);
  REQUIRE(fm.n_rows() == 3);  // 1 gesture x 3 channels

  const AnalysisWindow win = AnalysisWindow::centered(400, 0.70);
  Eigen::MatrixXd chans(3, win.length());
  for (int c = 0; c < 3; ++c) {
    chans.row(c) = t.channel_window(0, c, win.start, win.end).transpose();
  }
  const auto xch = compute_xch(chans);
  for (int c = 0; c < 3; ++c) {
    const Eigen::ArrayXd w = chans.row(c).array().transpose();
    const auto expect = compute_all(w, 2000.0, xch[c], kCfg);
    for (int k = 0; k < kNumFeatures; ++k) {
      CHECK(fm.values(c, k) == doctest::Approx(expect[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("feature matrix: permuting trial order leaves the matrix unchanged") {
  TrialTensor t = small_tensor(72, 6, 2, 400);
  TrialTensor p = t;
  // Reverse the trials.
  for (int tr = 0; tr < t.n_trials; ++tr) {
    const int src = t.n_trials - 1 - tr;
    p.labels[static_cast<std::size_t>(tr)] = t.labels[static_cast<std::size_t>(src)];
    std::copy(
        t.data.begin() + static_cast<std::ptrdiff_t>(src) * t.n_channels * t.n_samples,
        t.data.begin() + static_cast<std::ptrdiff_t>(src + 1) * t.n_channels * t.n_samples,
        p.data.begin() + static_cast<std::ptrdiff_t>(tr) * t.n_channels * t.n_samples);
  }
  const auto a = build_feature_matrix({t}, 0.70, kCfg, 1);
  const auto b = build_feature_matrix({p}, 0.70, kCfg, 1);
  REQUIRE(a.n_rows() == b.n_rows());
  for (int r = 0; r < a.n_rows(); ++r) {
    for (int k = 0; k < kNumFeatures; ++k) {
      CHECK(a.values(r, k) == doctest::Approx(b.values(r, k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("feature matrix: row count and worker-count independence") {
  std::vector<TrialTensor> tensors;
  for (int s = 0; s < 3; ++s) {
    TrialTensor t = small_tensor(80 + static_cast<std::uint64_t>(s), 8, 3, 400);
    t.subject_id = "P" + std::to_string(s);
    tensors.push_back(std::move(t));
  }
  const auto fm1 = build_feature_matrix(tensors, 0.70, kCfg, 1);
  const auto fm4 = build_feature_matrix(tensors, 0.70, kCfg, 4);
  CHECK(fm1.n_rows() == 3 * 2 * 3);  // subjects x gestures x channels
  REQUIRE(fm1.n_rows() == fm4.n_rows());
  for (int r = 0; r < fm1.n_rows(); ++r) {
    CHECK(fm1.subjects[static_cast<std::size_t>(r)] ==
          fm4.subjects[static_cast<std::size_t>(r)]);
    for (int k = 0; k < kNumFeatures; ++k) {
      CHECK(fm1.values(r, k) == fm4.values(r, k));
    }
  }
}

TEST_CASE("feature matrix: non-finite intermediate names the location") {
  TrialTensor t = small_tensor(90, 2, 2, 400);
  t.data[100] = std::numeric_limits<float>::infinity();  // inside the window
  try {
    build_feature_matrix({t}, 0.70, kCfg, 1);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("S001") != std::string::npos);
    CHECK(msg.find("trial 0") != std::string::npos);
    CHECK(msg.find("channel 0") != std::string::npos);
    CHECK(msg.find("feature") != std::string::npos);
  }
}

TEST_CASE("feature matrix CSV round trip") {
  TempDir dir;
  TrialTensor t = small_tensor(95, 4, 2, 400);
  const auto fm = build_feature_matrix({t}, 0.70, kCfg, 1);
  save_feature_matrix(dir.file("features.csv"), fm, {"# test"});
  const auto back = load_feature_matrix(dir.file("features.csv"));
  REQUIRE(back.n_rows() == fm.n_rows());
  REQUIRE(back.feature_names == fm.feature_names);
  for (int r = 0; r < fm.n_rows(); ++r) {
    CHECK(back.subjects[static_cast<std::size_t>(r)] ==
          fm.subjects[static_cast<std::size_t>(r)]);
    CHECK(back.gestures[static_cast<std::size_t>(r)] ==
          fm.gestures[static_cast<std::size_t>(r)]);
    for (int k = 0; k < kNumFeatures; ++k) {
      CHECK(back.values(r, k) == fm.values(r, k));  // exact round trip
    }
  }
}
