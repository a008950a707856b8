#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "wldecode/montage.hpp"
#include "wldecode/timeline.hpp"

namespace wld {

// Row-major so each channel (row) is contiguous in memory.
using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A continuous multichannel recording in microvolts plus its annotations.
struct RawSession {
  std::string participant_id;
  double sample_rate = 1000.0;
  MatrixRM eeg;  // 30 x T
  MatrixRM eog;  // 4 x T
  EventTimeline timeline;
  Montage montage;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Collects every invariant violation rather than stopping at the first:
// channel arity, montage consistency, timeline well-formedness, length
// agreement between data and timeline, and sample finiteness.
ValidationReport validate_session(const RawSession& s);

}  // namespace wld
