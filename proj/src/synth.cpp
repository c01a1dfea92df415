#include "emgsens/synth.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <set>

#include <nlohmann/json.hpp>
#include <unsupported/Eigen/FFT>

#include "emgsens/errors.hpp"
#include "emgsens/stats.hpp"
#include "emgsens/util.hpp"

using nlohmann::json;

namespace emgsens {

namespace {

struct DemoRange {
  double lo;
  double hi;
};

// Sampler ranges, also used to normalize demographic values into [-1, 1]
// when applying planted effects.
const std::map<std::string, DemoRange>& demo_ranges() {
  static const std::map<std::string, DemoRange> r = {
      {"Age", {18.0, 92.0}},
      {"Sex", {0.0, 1.0}},
      {"Height", {150.0, 195.0}},
      {"Weight", {45.0, 110.0}},
      {"Skin_Hydration", {20.0, 80.0}},
      {"Skin_Elasticity", {0.2, 0.9}},
      {"Subcutaneous_Fat_1", {2.0, 25.0}},
      {"Subcutaneous_Fat_2", {2.0, 25.0}},
      {"Subcutaneous_Fat_3", {2.0, 25.0}},
      {"Subcutaneous_Fat_4", {2.0, 25.0}},
      {"Hair_Density_1", {0.0, 60.0}},
      {"Hair_Density_2", {0.0, 60.0}},
  };
  return r;
}

double normalized_value(const std::string& demographic, double v) {
  const auto& r = demo_ranges().at(demographic);
  const double mid = 0.5 * (r.lo + r.hi);
  const double half = 0.5 * (r.hi - r.lo);
  return (v - mid) / half;
}

struct SubjectPlan {
  double log_gain = 0.0;      // amplitude effects + subject intercept
  double cutoff_hz = 0.0;     // 0 disables the lowpass
  double band_hi_hz = 0.0;
};

}  // namespace

EffectMechanism mechanism_from_string(const std::string& s) {
  if (s == "amplitude-scale") return EffectMechanism::AmplitudeScale;
  if (s == "spectral-lowpass-cutoff") return EffectMechanism::SpectralLowpass;
  if (s == "band-shift") return EffectMechanism::BandShift;
  throw ConfigError("unknown effect mechanism: " + s);
}

std::string mechanism_to_string(EffectMechanism m) {
  switch (m) {
    case EffectMechanism::AmplitudeScale: return "amplitude-scale";
    case EffectMechanism::SpectralLowpass: return "spectral-lowpass-cutoff";
    case EffectMechanism::BandShift: return "band-shift";
  }
  return "?";
}

void SynthSpec::validate() const {
  if (n_subjects <= 0 || n_gestures <= 0 || n_channels <= 0 || n_trials_per <= 0) {
    throw ConfigError("synth: all counts must be positive");
  }
  if (fs <= 0.0) throw ConfigError("synth: fs must be positive");
  if (trial_length < 160) {
    throw ConfigError("synth: trial_length must be at least 160 samples");
  }
  if (band_lo_hz <= 0.0 || band_hi_hz <= band_lo_hz || band_hi_hz > fs / 2.0) {
    throw ConfigError("synth: invalid band edges");
  }
  if (missing_rate < 0.0 || missing_rate >= 1.0) {
    throw ConfigError("synth: missing_rate must be in [0, 1)");
  }
  for (const auto& e : effects) {
    if (demographic_index(e.demographic) < 0) {
      throw ConfigError("synth: unknown demographic in effect plan: " +
                        e.demographic);
    }
    if (!std::isfinite(e.strength)) {
      throw ConfigError("synth: effect strength must be finite");
    }
  }
}

const std::vector<std::string>& family_features(const std::string& family) {
  static const std::vector<std::string> amplitude = {"MAV", "RMS", "IAV", "STD"};
  static const std::vector<std::string> spectral = {"MNF", "MDF"};
  static const std::vector<std::string> none;
  if (family == "amplitude") return amplitude;
  if (family == "spectral") return spectral;
  return none;
}

SynthResult generate_population(const SynthSpec& spec) {
  spec.validate();
  SynthResult out;

  // Population-level random intercepts for gesture and channel, shared by
  // every subject, drawn from their own stream.
  Rng pop_rng(Rng::derive_stream(spec.seed, 0xA0A0A0A0ULL));
  std::vector<double> gesture_off(static_cast<std::size_t>(spec.n_gestures));
  std::vector<double> channel_off(static_cast<std::size_t>(spec.n_channels));
  for (auto& g : gesture_off) g = pop_rng.normal(0.0, spec.sd_gesture);
  for (auto& c : channel_off) c = pop_rng.normal(0.0, spec.sd_channel);

  // Demographics per subject.
  const auto& cols = demographic_columns();
  DemographicTable demo;
  demo.values = Eigen::MatrixXd::Zero(spec.n_subjects, kNumDemographics);
  demo.missing.assign(static_cast<std::size_t>(spec.n_subjects) * kNumDemographics, 0);
  for (int s = 0; s < spec.n_subjects; ++s) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "S%03d", s + 1);
    demo.subject_ids.push_back(buf);
    Rng rng(Rng::derive_stream(spec.seed, 0xD000ULL + static_cast<std::uint64_t>(s)));
    for (int c = 0; c < kNumDemographics; ++c) {
      const std::string& name = cols[static_cast<std::size_t>(c)];
      const auto& r = demo_ranges().at(name);
      double v;
      if (name == "Sex") {
        v = static_cast<double>(s % 2);  // balanced by construction
      } else if (name == "Height" || name == "Weight") {
        const double mid = 0.5 * (r.lo + r.hi);
        const double sd = (r.hi - r.lo) / 6.0;
        v = std::clamp(rng.normal(mid, sd), r.lo, r.hi);
      } else {
        v = rng.uniform(r.lo, r.hi);
      }
      demo.values(s, c) = v;
    }
  }

  // Optional missingness (never Age or Sex, never the full exclusion set).
  if (spec.missing_rate > 0.0) {
    Rng miss_rng(Rng::derive_stream(spec.seed, 0x4D495353ULL));
    for (int s = 0; s < spec.n_subjects; ++s) {
      for (int c = 0; c < kNumDemographics; ++c) {
        const std::string& name = cols[static_cast<std::size_t>(c)];
        if (name == "Age" || name == "Sex") continue;
        if (miss_rng.uniform() < spec.missing_rate) demo.set_missing(s, c, true);
      }
      // Keep at least one of the four exclusion columns observed.
      const int h = demographic_index("Height");
      if (demo.is_missing(s, h) && demo.is_missing(s, demographic_index("Weight")) &&
          demo.is_missing(s, demographic_index("Skin_Elasticity")) &&
          demo.is_missing(s, demographic_index("Skin_Hydration"))) {
        demo.set_missing(s, h, false);
      }
    }
  }
  out.demographics = demo;

  for (const auto& e : spec.effects) {
    out.truth.pairs.push_back(
        {e.mechanism == EffectMechanism::AmplitudeScale ? "amplitude" : "spectral",
         e.demographic, e.mechanism});
  }

  // Per-subject tensors; per-subject RNG streams keep generation
  // order-independent.
  out.tensors.resize(static_cast<std::size_t>(spec.n_subjects));
  parallel_for(static_cast<std::size_t>(spec.n_subjects), 0, [&](std::size_t si) {
    const int s = static_cast<int>(si);
    Rng rng(Rng::derive_stream(spec.seed, 0x5E000ULL + static_cast<std::uint64_t>(s)));

    SubjectPlan plan;
    plan.log_gain = rng.normal(0.0, spec.sd_subject);
    plan.cutoff_hz = 0.0;
    plan.band_hi_hz = spec.band_hi_hz;
    if (spec.subject_spectral_jitter > 0.0) {
      plan.cutoff_hz = spec.lowpass_base_hz *
                       std::exp(rng.normal(0.0, spec.subject_spectral_jitter));
    }
    for (const auto& e : spec.effects) {
      const int col = demographic_index(e.demographic);
      const double z = normalized_value(e.demographic, demo.values(s, col));
      switch (e.mechanism) {
        case EffectMechanism::AmplitudeScale:
          plan.log_gain += e.strength * z;
          break;
        case EffectMechanism::SpectralLowpass: {
          const double base =
              plan.cutoff_hz > 0.0 ? plan.cutoff_hz : spec.lowpass_base_hz;
          plan.cutoff_hz = base * std::exp(-e.strength * z);
          break;
        }
        case EffectMechanism::BandShift:
          plan.band_hi_hz = spec.band_hi_hz * std::exp(-e.strength * z);
          break;
      }
    }

    TrialTensor t;
    t.subject_id = demo.subject_ids[si];
    t.n_trials = spec.n_gestures * spec.n_trials_per;
    t.n_channels = spec.n_channels;
    t.n_samples = spec.trial_length;
    t.sampling_rate_hz = spec.fs;
    t.labels.resize(static_cast<std::size_t>(t.n_trials));
    t.data.resize(t.expected_size());

    const int len = spec.trial_length;
    const int half = len / 2;
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec_buf(static_cast<std::size_t>(len));
    std::vector<std::complex<double>> time_buf(static_cast<std::size_t>(len));

    // Band-limited Gaussian noise synthesized in the frequency domain; the
    // output is normalized to unit RMS so spectral effects do not leak into
    // amplitude features.
    auto draw_signal = [&](std::vector<double>& sig) {
      std::fill(spec_buf.begin(), spec_buf.end(), std::complex<double>(0, 0));
      for (int k = 1; k < half; ++k) {
        const double f = k * spec.fs / len;
        double mag = 0.0;
        if (f >= spec.band_lo_hz && f <= plan.band_hi_hz) {
          mag = 1.0;
          if (plan.cutoff_hz > 0.0) {
            mag /= std::sqrt(1.0 + (f / plan.cutoff_hz) * (f / plan.cutoff_hz));
          }
        }
        const double re = rng.normal();
        const double im = rng.normal();
        if (mag > 0.0) {
          spec_buf[static_cast<std::size_t>(k)] = {mag * re, mag * im};
          spec_buf[static_cast<std::size_t>(len - k)] = {mag * re, -mag * im};
        }
      }
      fft.inv(time_buf, spec_buf);
      double ss = 0.0;
      for (int i = 0; i < len; ++i) {
        sig[static_cast<std::size_t>(i)] = time_buf[static_cast<std::size_t>(i)].real();
        ss += sig[static_cast<std::size_t>(i)] * sig[static_cast<std::size_t>(i)];
      }
      const double rms = std::sqrt(ss / len);
      if (rms > 0.0) {
        for (auto& v : sig) v /= rms;
      }
    };

    const double mix = std::clamp(spec.channel_mixing, 0.0, 1.0);
    const double indiv = std::sqrt(1.0 - mix * mix);
    std::vector<double> common(static_cast<std::size_t>(len));
    std::vector<double> own(static_cast<std::size_t>(len));

    int trial = 0;
    for (int g = 0; g < spec.n_gestures; ++g) {
      for (int rep = 0; rep < spec.n_trials_per; ++rep, ++trial) {
        t.labels[static_cast<std::size_t>(trial)] = g;
        draw_signal(common);
        for (int c = 0; c < spec.n_channels; ++c) {
          draw_signal(own);
          const double gain =
              std::exp(plan.log_gain + gesture_off[static_cast<std::size_t>(g)] +
                       channel_off[static_cast<std::size_t>(c)] +
                       rng.normal(0.0, spec.sd_trial));
          float* dst = t.data.data() +
                       (static_cast<std::size_t>(trial) * spec.n_channels + c) * len;
          for (int i = 0; i < len; ++i) {
            const double v = mix * common[static_cast<std::size_t>(i)] +
                             indiv * own[static_cast<std::size_t>(i)];
            dst[i] = static_cast<float>(gain * v);
          }
        }
      }
    }
    out.tensors[si] = std::move(t);
  });

  return out;
}

SynthSpec synth_spec_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("cannot parse synth spec: ") + e.what());
  }
  SynthSpec s;
  auto get = [&j](const char* k, auto& target) {
    if (j.contains(k)) target = j.at(k).get<std::decay_t<decltype(target)>>();
  };
  get("n_subjects", s.n_subjects);
  get("n_gestures", s.n_gestures);
  get("n_channels", s.n_channels);
  get("n_trials_per", s.n_trials_per);
  get("fs", s.fs);
  get("trial_length", s.trial_length);
  get("band_lo_hz", s.band_lo_hz);
  get("band_hi_hz", s.band_hi_hz);
  get("lowpass_base_hz", s.lowpass_base_hz);
  get("channel_mixing", s.channel_mixing);
  get("sd_subject", s.sd_subject);
  get("sd_gesture", s.sd_gesture);
  get("sd_channel", s.sd_channel);
  get("sd_trial", s.sd_trial);
  get("subject_spectral_jitter", s.subject_spectral_jitter);
  get("missing_rate", s.missing_rate);
  get("seed", s.seed);
  if (j.contains("effects")) {
    for (const auto& e : j.at("effects")) {
      PlannedEffect pe;
      pe.demographic = e.at("demographic").get<std::string>();
      pe.mechanism = mechanism_from_string(e.at("mechanism").get<std::string>());
      pe.strength = e.at("strength").get<double>();
      s.effects.push_back(pe);
    }
  }
  s.validate();
  return s;
}

std::string synth_spec_to_json_text(const SynthSpec& s) {
  json j;
  j["n_subjects"] = s.n_subjects;
  j["n_gestures"] = s.n_gestures;
  j["n_channels"] = s.n_channels;
  j["n_trials_per"] = s.n_trials_per;
  j["fs"] = s.fs;
  j["trial_length"] = s.trial_length;
  j["band_lo_hz"] = s.band_lo_hz;
  j["band_hi_hz"] = s.band_hi_hz;
  j["lowpass_base_hz"] = s.lowpass_base_hz;
  j["channel_mixing"] = s.channel_mixing;
  j["sd_subject"] = s.sd_subject;
  j["sd_gesture"] = s.sd_gesture;
  j["sd_channel"] = s.sd_channel;
  j["sd_trial"] = s.sd_trial;
  j["subject_spectral_jitter"] = s.subject_spectral_jitter;
  j["missing_rate"] = s.missing_rate;
  j["seed"] = s.seed;
  json effects = json::array();
  for (const auto& e : s.effects) {
    effects.push_back({{"demographic", e.demographic},
                       {"mechanism", mechanism_to_string(e.mechanism)},
                       {"strength", e.strength}});
  }
  j["effects"] = effects;
  return j.dump(2) + "\n";
}

std::string ground_truth_to_json_text(const GroundTruth& truth) {
  json pairs = json::array();
  for (const auto& p : truth.pairs) {
    pairs.push_back({{"family", p.family},
                     {"demographic", p.demographic},
                     {"mechanism", mechanism_to_string(p.mechanism)},
                     {"representative_features", family_features(p.family)}});
  }
  json j;
  j["planted_pairs"] = pairs;
  return j.dump(2) + "\n";
}

OlsFit oracle_ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (n <= p) throw NumericError("oracle_ols: need more rows than columns");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < p) throw NumericError("oracle_ols: rank-deficient design");

  OlsFit fit;
  fit.beta = qr.solve(y);
  const Eigen::VectorXd resid = y - X * fit.beta;
  fit.df = n - p;
  fit.sigma2 = resid.squaredNorm() / fit.df;
  const Eigen::MatrixXd xtx_inv =
      (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  fit.se.resize(p);
  fit.t.resize(p);
  fit.p.resize(p);
  for (int j = 0; j < p; ++j) {
    fit.se[j] = std::sqrt(fit.sigma2 * xtx_inv(j, j));
    fit.t[j] = fit.se[j] > 0.0 ? fit.beta[j] / fit.se[j] : 0.0;
    fit.p[j] = p_two_tailed_student(fit.t[j], fit.df);
  }
  return fit;
}

}  // namespace emgsens
