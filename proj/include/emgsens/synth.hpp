#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "emgsens/features.hpp"
#include "emgsens/types.hpp"

namespace emgsens {

// Synthetic sEMG population with planted demographic effects. Surrogate
// signals are band-limited Gaussian noise; effect mechanisms act on
// log-amplitude or on the spectral shape so that amplitude and spectral
// feature families respond selectively.

enum class EffectMechanism { AmplitudeScale, SpectralLowpass, BandShift };

EffectMechanism mechanism_from_string(const std::string& s);
std::string mechanism_to_string(EffectMechanism m);

struct PlannedEffect {
  std::string demographic;
  EffectMechanism mechanism = EffectMechanism::AmplitudeScale;
  double strength = 0.0;
};

struct SynthSpec {
  int n_subjects = 12;
  int n_gestures = 4;
  int n_channels = 4;
  int n_trials_per = 3;       // trials per gesture
  double fs = 2000.0;
  int trial_length = 1024;
  double band_lo_hz = 20.0;
  double band_hi_hz = 450.0;
  double lowpass_base_hz = 300.0;
  double channel_mixing = 0.3;       // shared-component weight across channels
  std::vector<PlannedEffect> effects;
  double sd_subject = 0.05;          // log-amplitude random intercepts
  double sd_gesture = 0.05;
  double sd_channel = 0.05;
  double sd_trial = 0.02;            // trial-to-trial log-amplitude jitter
  double subject_spectral_jitter = 0.0;  // per-subject log-cutoff jitter
  double missing_rate = 0.0;         // demographic cells blanked at random
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError
};

struct GroundTruth {
  struct PlantedPair {
    std::string family;        // "amplitude" or "spectral"
    std::string demographic;
    EffectMechanism mechanism;
  };
  std::vector<PlantedPair> pairs;
};

// Representative features used to score planted-effect recovery.
const std::vector<std::string>& family_features(const std::string& family);

struct SynthResult {
  std::vector<TrialTensor> tensors;
  DemographicTable demographics;
  GroundTruth truth;
};

SynthResult generate_population(const SynthSpec& spec);

SynthSpec synth_spec_from_json_text(const std::string& text);
std::string synth_spec_to_json_text(const SynthSpec& spec);
std::string ground_truth_to_json_text(const GroundTruth& truth);

// ---------------------------------------------------------------------------
// Independent oracles, used only by tests. These re-implement the feature
// definitions and ordinary least squares as straightforward loops with no
// code shared with the main engine (the Symlet-5 filter constants and the
// catalog layout are contract data, not code).

std::vector<double> oracle_features(const std::vector<double>& window,
                                    double fs, double xch_value,
                                    const FeatureConfig& cfg);

// Mean pairwise Pearson correlation per channel.
std::vector<double> oracle_xch(const std::vector<std::vector<double>>& channels);

struct OlsFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
  Eigen::VectorXd t;
  Eigen::VectorXd p;   // two-tailed, Student t reference
  double sigma2 = 0.0;
  int df = 0;
};

// Closed-form least squares with classical t tests. Throws NumericError on
// rank deficiency.
OlsFit oracle_ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X);

}  // namespace emgsens
