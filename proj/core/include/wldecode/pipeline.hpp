#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wldecode/epochs.hpp"
#include "wldecode/filters.hpp"
#include "wldecode/ica.hpp"
#include "wldecode/session.hpp"

namespace wld {

struct PreprocessOptions {
  std::uint64_t seed = 0;
  FilterSpec bandpass;  // defaults to 1-50 Hz order-4 Butterworth
  FilterSpec notch;     // defaults to 60 Hz, Q=30
  int decimation = 10;
  bool apply_ica = true;
  IcaOptions ica;  // ica.seed is derived from `seed`
  double eog_threshold = 0.7;
  bool balance = true;
  int n_threads = 1;

  PreprocessOptions() {
    bandpass.kind = FilterKind::butterworth_bandpass;
    notch.kind = FilterKind::iir_notch;
  }
};

struct PreprocessLog {
  std::vector<std::string> warnings;
  std::vector<int> ica_rejected;
  IcaConvergence ica_convergence;
};

struct PreprocessResult {
  RawSession session;  // filtered, decimated, artifact-cleaned
  EpochSet epochs;
  PreprocessLog log;
};

// Rescales event boundaries by 1/factor; every onset and duration must divide
// exactly.
EventTimeline decimate_timeline(const EventTimeline& timeline, int factor);

// Fixed chain: notch -> band-pass -> decimate -> ICA rejection -> epoch ->
// balance.  Epoch counts depend only on the timeline.  Filtering runs
// per-channel and may be parallelized without changing results.
PreprocessResult preprocess_session(const RawSession& raw, const PreprocessOptions& options = {});

// Cuts non-overlapping 1 s windows from task phases (label LW for level 1,
// HW for levels 2-3) and rest phases (NS); instruction phases are skipped.
// Trailing partial windows are dropped with a warning.  Requires a 100 Hz
// session.
EpochSet epoch_segment(const RawSession& session, std::vector<std::string>* warnings = nullptr);

// Downsamples LW and HW without replacement to the NS count, keeping epoch
// order stable.  Throws BalanceError when a label is missing.
EpochSet balance_classes(const EpochSet& epochs, std::uint64_t seed);

}  // namespace wld
