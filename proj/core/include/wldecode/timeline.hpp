#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace wld {

enum class Phase { instruction, task, rest };

std::string_view phase_name(Phase p);

struct TimelineEvent {
  std::int64_t onset = 0;     // samples
  std::int64_t duration = 0;  // samples
  Phase phase = Phase::task;
  int level = 1;  // 1..3
};

// Ordered, non-overlapping phase annotations over a continuous recording.
struct EventTimeline {
  std::vector<TimelineEvent> events;

  std::int64_t total_samples() const;  // end of the last event, 0 if empty
};

// Throws ValidationError naming the first offending event if the timeline is
// unsorted, overlapping, has non-positive durations, bad levels, or breaks
// the instruction -> task -> rest trial structure.
void check_timeline(const EventTimeline& t);

// The experiment layout: three difficulty levels recorded back to back.
// Level 1: 15 trials of (instruction 10 s, task 60 s, rest 10 s).
// Level 2: 10 trials of (20 s, 60 s, 10 s).
// Level 3: 10 trials of (30 s, 60 s, 10 s).
EventTimeline paradigm_timeline(double sample_rate_hz = 1000.0);

struct EpochCounts {
  std::int64_t ns = 0;
  std::int64_t lw = 0;
  std::int64_t hw = 0;
  std::int64_t total() const { return ns + lw + hw; }
};

// Number of non-overlapping 1 s epochs the timeline yields per label.
// Task seconds count toward the level's label (level 1 -> LW, levels 2 and 3
// -> HW), rest seconds toward NS, instruction seconds toward nothing.
EpochCounts expected_epoch_counts(const EventTimeline& t, double sample_rate_hz = 1000.0);

}  // namespace wld
