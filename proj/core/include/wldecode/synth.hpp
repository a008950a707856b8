#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "wldecode/bands.hpp"
#include "wldecode/epochs.hpp"
#include "wldecode/session.hpp"

namespace wld {

// Multiplicative gain applied to an oscillator depending on the label of the
// surrounding phase (instruction phases count as NS).
struct LabelGains {
  double ns = 1.0;
  double lw = 1.0;
  double hw = 1.0;

  double for_label(Label l) const {
    switch (l) {
      case Label::NS: return ns;
      case Label::LW: return lw;
      case Label::HW: return hw;
    }
    return 1.0;
  }
};

struct SynthConfig {
  std::uint64_t seed = 0;
  int n_participants = 10;

  // 1/f^exponent background, rank-1 shared across channels to mimic common
  // reference / volume conduction.  The shared fraction is the variance share
  // of the common component.
  double background_exponent = 1.0;
  double background_rms = 9.0;        // microvolts
  double background_shared_frac = 0.5;

  // Base oscillator amplitudes (microvolts) for delta/theta/alpha/beta.
  std::array<double, kNumBands> band_amplitudes{5.0, 6.0, 6.0, 2.5};

  // Workload signatures: theta rises frontally, alpha drops parieto-
  // occipitally.  Equal gains (all 1.0) are allowed as the null case.
  LabelGains theta_frontal_gain{1.0, 1.3, 1.8};
  LabelGains alpha_parietal_gain{1.0, 0.8, 0.55};

  double mains_amplitude = 2.0;  // 60 Hz, microvolts
  double blink_rate = 8.0;       // per minute
  double noise_floor = 1.0;      // white noise sigma, microvolts

  // Throws ConfigError on violated invariants (direction-inverting gains,
  // negative amplitudes, out-of-range fractions).
  void validate() const;
};

// Deterministic synthetic recording for one participant: paradigm timeline at
// 1000 Hz, per-channel 1/f background plus band oscillators with
// label-dependent gains, 60 Hz mains, white noise, and blinks on the EOG
// channels leaking into frontal EEG.
RawSession generate_session(const SynthConfig& config, int participant_index);

// Same content over a caller-supplied timeline (short timelines keep tests
// fast).  The timeline must be well-formed at 1000 Hz.
RawSession generate_session(const SynthConfig& config, int participant_index,
                            const EventTimeline& timeline);

// All participants, ids "P1".."Pn".  Materializes every session: at the full
// paradigm length that is ~850 MB per participant, so large cohorts should be
// streamed one generate_session at a time instead.
std::vector<RawSession> generate_cohort(const SynthConfig& config);
std::vector<RawSession> generate_cohort(const SynthConfig& config, const EventTimeline& timeline);

// The fixed 400 ms biphasic blink waveform, unit peak amplitude.
std::vector<double> blink_template(double sample_rate_hz);

// Blink leakage coefficient for an EEG channel name, in (0,1] for frontal
// channels and 0 elsewhere (closer to the eyes leaks more).
double blink_leakage(const std::string& channel_name);

// Adds amplitude * template to the vertical EOG trace at `onset` and the
// leakage-scaled version to each frontal EEG channel.  Returns mutated
// copies.  Throws ValidationError when the template would run past the end.
std::pair<Eigen::VectorXd, MatrixRM> inject_blink(const Eigen::VectorXd& veog,
                                                  const MatrixRM& eeg, std::int64_t onset,
                                                  double amplitude, double sample_rate_hz,
                                                  const Montage& montage);

}  // namespace wld
