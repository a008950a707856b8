#include "wldecode/timeline.hpp"

#include <cmath>
#include <string>

#include "wldecode/errors.hpp"

namespace wld {

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::instruction: return "instruction";
    case Phase::task: return "task";
    case Phase::rest: return "rest";
  }
  return "?";
}

std::int64_t EventTimeline::total_samples() const {
  if (events.empty()) return 0;
  const TimelineEvent& last = events.back();
  return last.onset + last.duration;
}

void check_timeline(const EventTimeline& t) {
  auto fail = [](std::size_t i, const std::string& what) {
    throw ValidationError("timeline event " + std::to_string(i) + ": " + what);
  };
  std::int64_t prev_end = 0;
  for (std::size_t i = 0; i < t.events.size(); ++i) {
    const TimelineEvent& e = t.events[i];
    if (e.duration <= 0) fail(i, "non-positive duration");
    if (e.onset < 0) fail(i, "negative onset");
    if (e.level < 1 || e.level > 3) fail(i, "level out of range");
    if (e.onset < prev_end) fail(i, "overlaps previous event");
    prev_end = e.onset + e.duration;
  }
  // Trial structure: an instruction directly preceding a task must share its
  // level, and a rest must follow a task of the same level.  Trials without
  // instruction, or instructions without a task, are tolerated; rests without
  // a task are not.
  for (std::size_t i = 0; i < t.events.size(); ++i) {
    const TimelineEvent& e = t.events[i];
    if (e.phase == Phase::instruction) {
      if (i + 1 < t.events.size() && t.events[i + 1].phase == Phase::task &&
          t.events[i + 1].level != e.level)
        fail(i, "instruction/task level mismatch");
    } else if (e.phase == Phase::rest) {
      if (i == 0 || t.events[i - 1].phase != Phase::task)
        fail(i, "rest not preceded by task");
      if (t.events[i - 1].level != e.level) fail(i, "task/rest level mismatch");
    }
  }
}

EventTimeline paradigm_timeline(double sample_rate_hz) {
  struct LevelPlan {
    int level;
    int trials;
    double instruction_s, task_s, rest_s;
  };
  constexpr LevelPlan plan[3] = {
      {1, 15, 10.0, 60.0, 10.0},
      {2, 10, 20.0, 60.0, 10.0},
      {3, 10, 30.0, 60.0, 10.0},
  };
  EventTimeline t;
  std::int64_t cursor = 0;
  auto samples = [&](double seconds) {
    return static_cast<std::int64_t>(std::llround(seconds * sample_rate_hz));
  };
  for (const LevelPlan& lp : plan) {
    for (int trial = 0; trial < lp.trials; ++trial) {
      for (auto [phase, secs] : {std::pair{Phase::instruction, lp.instruction_s},
                                 std::pair{Phase::task, lp.task_s},
                                 std::pair{Phase::rest, lp.rest_s}}) {
        t.events.push_back({cursor, samples(secs), phase, lp.level});
        cursor += samples(secs);
      }
    }
  }
  return t;
}

EpochCounts expected_epoch_counts(const EventTimeline& t, double sample_rate_hz) {
  if (sample_rate_hz <= 0.0) throw ValidationError("sample rate must be positive");
  check_timeline(t);
  const auto epoch_len = static_cast<std::int64_t>(std::llround(sample_rate_hz));
  EpochCounts counts;
  for (const TimelineEvent& e : t.events) {
    std::int64_t n = e.duration / epoch_len;
    switch (e.phase) {
      case Phase::instruction: break;
      case Phase::task:
        (e.level == 1 ? counts.lw : counts.hw) += n;
        break;
      case Phase::rest:
        counts.ns += n;
        break;
    }
  }
  return counts;
}

}  // namespace wld
