#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "wldecode/session.hpp"

namespace wld {

enum class Label : std::uint8_t { NS = 0, LW = 1, HW = 2 };

constexpr int kNumClasses = 3;

std::string_view label_name(Label l);
Label label_from_name(std::string_view name);  // throws ValidationError

// One 1-second window of preprocessed EEG: 30 channels x 100 samples.
struct Epoch {
  MatrixRM data;
  Label label = Label::NS;
  std::string participant_id;
  int source_trial = -1;
};

// Preprocessing parameters recorded alongside the epochs they produced.
struct Provenance {
  double bandpass_low_hz = 1.0;
  double bandpass_high_hz = 50.0;
  int bandpass_order = 4;
  double notch_hz = 60.0;
  double notch_q = 30.0;
  bool notch_applied = true;
  int decimation = 10;
  bool ica_applied = true;
  double eog_threshold = 0.7;
  int ica_rejected = 0;
  bool balanced = false;
  std::uint64_t balance_seed = 0;
};

struct EpochSet {
  std::vector<Epoch> epochs;
  Provenance provenance;

  std::array<std::int64_t, kNumClasses> label_counts() const;
  int n_trials() const;  // 1 + max source_trial, 0 if empty
};

// Throws ValidationError on heterogeneous shapes or non-finite values.
void check_epoch_set(const EpochSet& set);

}  // namespace wld
