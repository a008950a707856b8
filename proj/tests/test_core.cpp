#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>

#include "wldecode/epochs.hpp"
#include "wldecode/errors.hpp"
#include "wldecode/montage.hpp"
#include "wldecode/rng.hpp"
#include "wldecode/session.hpp"
#include "wldecode/threading.hpp"
#include "wldecode/timeline.hpp"

using namespace wld;

TEST_CASE("standard montage arity and naming") {
  const Montage& m = standard_montage();
  CHECK(m.eeg_channels.size() == 30);
  CHECK(m.eog_channels.size() == 4);
  CHECK(m.positions.size() == 30);
  CHECK(m.regions.size() == 30);

  std::set<std::string> names(m.eeg_channels.begin(), m.eeg_channels.end());
  CHECK(names.size() == 30);
  CHECK(names.count("AFz") == 0);
  CHECK(names.count("FCz") == 0);

  CHECK(m.regions[static_cast<std::size_t>(m.eeg_index("Fz"))] == Region::frontal);
  CHECK(m.regions[static_cast<std::size_t>(m.eeg_index("Oz"))] == Region::occipital);
  CHECK(m.regions[static_cast<std::size_t>(m.eeg_index("Pz"))] == Region::parietal);
  CHECK(m.regions[static_cast<std::size_t>(m.eeg_index("Cz"))] == Region::central);
  CHECK(m.regions[static_cast<std::size_t>(m.eeg_index("T7"))] == Region::temporal);
  CHECK(m.eeg_index("nope") == -1);

  for (const ChannelPos& p : m.positions) CHECK(p.x * p.x + p.y * p.y <= 1.0);

  // Pure constant: a second call returns the identical structure.
  const Montage& again = standard_montage();
  CHECK(again.eeg_channels == m.eeg_channels);
  CHECK(&again == &m);

  // Region partition sizes for the fixed layout.
  CHECK(m.channels_in(Region::frontal).size() == 7);
  CHECK(m.channels_in(Region::central).size() == 7);
  CHECK(m.channels_in(Region::temporal).size() == 2);
  CHECK(m.channels_in(Region::parietal).size() == 9);
  CHECK(m.channels_in(Region::occipital).size() == 5);
}

TEST_CASE("paradigm timeline structure and totals") {
  EventTimeline t = paradigm_timeline(1000.0);
  CHECK(t.events.size() == 35 * 3);
  CHECK_NOTHROW(check_timeline(t));
  CHECK(t.total_samples() == 3100000);

  int l1 = 0, l2 = 0, l3 = 0;
  for (const TimelineEvent& e : t.events)
    if (e.phase == Phase::task) (e.level == 1 ? l1 : e.level == 2 ? l2 : l3)++;
  CHECK(l1 == 15);
  CHECK(l2 == 10);
  CHECK(l3 == 10);

  // Instruction durations are 10/20/30 s by level.
  for (const TimelineEvent& e : t.events)
    if (e.phase == Phase::instruction) CHECK(e.duration == 10000 * e.level);
}

TEST_CASE("expected epoch counts for the full paradigm") {
  EventTimeline t = paradigm_timeline(1000.0);
  EpochCounts c = expected_epoch_counts(t, 1000.0);
  CHECK(c.lw == 900);
  CHECK(c.hw == 1200);
  CHECK(c.ns == 350);
  CHECK(c.total() == 2450);
  CHECK(10 * c.total() == 24500);
}

TEST_CASE("expected epoch counts edge cases") {
  EventTimeline empty;
  EpochCounts c = expected_epoch_counts(empty, 1000.0);
  CHECK(c.total() == 0);

  EventTimeline overlapping;
  overlapping.events.push_back({0, 1000, Phase::task, 1});
  overlapping.events.push_back({500, 1000, Phase::task, 1});
  CHECK_THROWS_WITH_AS(expected_epoch_counts(overlapping, 1000.0),
                       "timeline event 1: overlaps previous event", ValidationError);

  EventTimeline dangling_rest;
  dangling_rest.events.push_back({0, 1000, Phase::rest, 1});
  CHECK_THROWS_AS(expected_epoch_counts(dangling_rest, 1000.0), ValidationError);

  // Partial trailing second is dropped.
  EventTimeline partial;
  partial.events.push_back({0, 2500, Phase::task, 2});
  EpochCounts pc = expected_epoch_counts(partial, 1000.0);
  CHECK(pc.hw == 2);
  CHECK(pc.total() == 2);
}

namespace {

RawSession small_session() {
  RawSession s;
  s.participant_id = "P1";
  s.sample_rate = 1000.0;
  s.montage = standard_montage();
  EventTimeline t;
  t.events.push_back({0, 2000, Phase::task, 1});
  t.events.push_back({2000, 1000, Phase::rest, 1});
  s.timeline = t;
  s.eeg = MatrixRM::Zero(30, 3000);
  s.eog = MatrixRM::Zero(4, 3000);
  return s;
}

}  // namespace

TEST_CASE("validate_session accepts a well-formed session") {
  RawSession s = small_session();
  ValidationReport r = validate_session(s);
  CHECK(r.ok());
}

TEST_CASE("validate_session reports NaN with channel and index") {
  RawSession s = small_session();
  s.eeg(4, 123) = std::nan("");
  ValidationReport r = validate_session(s);
  REQUIRE(r.violations.size() == 1);
  CHECK(r.violations[0].find("Fz") != std::string::npos);
  CHECK(r.violations[0].find("123") != std::string::npos);
}

TEST_CASE("validate_session reports montage arity violations") {
  RawSession s = small_session();
  s.eeg = MatrixRM::Zero(29, 3000);
  ValidationReport r = validate_session(s);
  CHECK_FALSE(r.ok());
  bool found = false;
  for (const auto& v : r.violations)
    if (v.find("29") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("validate_session collects multiple violations") {
  RawSession s = small_session();
  s.eeg(0, 5) = std::nan("");
  s.eog(1, 7) = std::numeric_limits<double>::infinity();
  s.timeline.events.back().duration += 500;  // length mismatch
  ValidationReport r = validate_session(s);
  CHECK(r.violations.size() == 3);
}

TEST_CASE("rng determinism and stream separation") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  bool differs = false;
  Rng a2(42);
  for (int i = 0; i < 100; ++i)
    if (a2.next() != c.next()) differs = true;
  CHECK(differs);

  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2, 3}) != derive_seed(2, {2, 3}));
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
}

TEST_CASE("rng distributions behave") {
  Rng r(7);
  double sum = 0.0, sumsq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sumsq += u * u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
  CHECK(sumsq / n == doctest::Approx(1.0 / 3.0).epsilon(0.03));

  double nsum = 0.0, nsumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = r.normal();
    nsum += x;
    nsumsq += x * x;
  }
  CHECK(nsum / n == doctest::Approx(0.0).epsilon(0.05));
  CHECK(nsumsq / n == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("rng sampling utilities") {
  Rng r(11);
  std::vector<int> perm = r.permutation(50);
  std::set<int> seen(perm.begin(), perm.end());
  CHECK(seen.size() == 50);
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == 49);

  std::vector<int> sample = r.sample_without_replacement(100, 30);
  CHECK(sample.size() == 30);
  CHECK(std::is_sorted(sample.begin(), sample.end()));
  std::set<int> uniq(sample.begin(), sample.end());
  CHECK(uniq.size() == 30);
  for (int v : sample) {
    CHECK(v >= 0);
    CHECK(v < 100);
  }

  // Same seed, same draw.
  Rng r2(11);
  r2.permutation(50);
  CHECK(r2.sample_without_replacement(100, 30) == sample);
}

TEST_CASE("parallel_for covers all indices and matches serial results") {
  const int n = 1000;
  std::vector<int> hits(n, 0);
  parallel_for(n, 4, [&](int i) { hits[static_cast<std::size_t>(i)]++; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));

  // Per-item derived values are thread-count independent by construction.
  std::vector<std::uint64_t> serial(n), threaded(n);
  parallel_for(n, 1, [&](int i) {
    serial[static_cast<std::size_t>(i)] = derive_seed(9, {static_cast<std::uint64_t>(i)});
  });
  parallel_for(n, 7, [&](int i) {
    threaded[static_cast<std::size_t>(i)] = derive_seed(9, {static_cast<std::uint64_t>(i)});
  });
  CHECK(serial == threaded);

  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](int i) {
                                 if (i == 5) throw ValidationError("boom");
                               }),
                  ValidationError);
}

TEST_CASE("labels round-trip") {
  CHECK(label_name(Label::NS) == "NS");
  CHECK(label_from_name("HW") == Label::HW);
  CHECK_THROWS_AS(label_from_name("XX"), ValidationError);
  CHECK(static_cast<int>(Label::NS) == 0);
  CHECK(static_cast<int>(Label::LW) == 1);
  CHECK(static_cast<int>(Label::HW) == 2);
}

TEST_CASE("epoch set bookkeeping") {
  EpochSet set;
  for (int i = 0; i < 5; ++i) {
    Epoch e;
    e.data = MatrixRM::Zero(30, 100);
    e.label = i < 2 ? Label::LW : Label::NS;
    e.source_trial = i;
    set.epochs.push_back(std::move(e));
  }
  auto counts = set.label_counts();
  CHECK(counts[static_cast<int>(Label::NS)] == 3);
  CHECK(counts[static_cast<int>(Label::LW)] == 2);
  CHECK(counts[static_cast<int>(Label::HW)] == 0);
  CHECK(set.n_trials() == 5);
  CHECK_NOTHROW(check_epoch_set(set));

  set.epochs[1].data = MatrixRM::Zero(30, 99);
  CHECK_THROWS_AS(check_epoch_set(set), ValidationError);
  set.epochs[1].data = MatrixRM::Zero(30, 100);
  set.epochs[1].data(0, 0) = std::nan("");
  CHECK_THROWS_AS(check_epoch_set(set), ValidationError);
}
