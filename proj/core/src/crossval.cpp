#include "wldecode/crossval.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "wldecode/errors.hpp"
#include "wldecode/rng.hpp"
#include "wldecode/stats.hpp"

namespace wld {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void check_plan(const CVPlan& plan) {
  if (plan.n_folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  if (plan.n_repeats < 1) throw ConfigError("cross-validation needs at least 1 repeat");
}

Rng repeat_rng(const CVPlan& plan, int repeat_index) {
  if (repeat_index < 0 || repeat_index >= plan.n_repeats)
    throw ConfigError("repeat index " + std::to_string(repeat_index) + " outside [0, " +
                      std::to_string(plan.n_repeats) + ")");
  return Rng(derive_seed(plan.seed, {0x50, static_cast<std::uint64_t>(repeat_index)}));
}

}  // namespace

PairedTestKind parse_paired_test(const std::string& name) {
  if (name == "wilcoxon") return PairedTestKind::wilcoxon;
  if (name == "paired_t") return PairedTestKind::paired_t;
  throw UsageError("unknown paired test '" + name + "' (expected wilcoxon or paired_t)");
}

std::string to_string(PairedTestKind kind) {
  return kind == PairedTestKind::wilcoxon ? "wilcoxon" : "paired_t";
}

std::vector<std::vector<int>> kfold_split(int n_epochs, const CVPlan& plan, int repeat_index) {
  check_plan(plan);
  if (n_epochs < plan.n_folds)
    throw ValidationError("cannot split " + std::to_string(n_epochs) + " epochs into " +
                          std::to_string(plan.n_folds) + " folds");
  Rng rng = repeat_rng(plan, repeat_index);
  const std::vector<int> perm = rng.permutation(n_epochs);

  std::vector<std::vector<int>> folds(plan.n_folds);
  const int base = n_epochs / plan.n_folds;
  const int extra = n_epochs % plan.n_folds;
  int cursor = 0;
  for (int f = 0; f < plan.n_folds; ++f) {
    const int len = base + (f < extra ? 1 : 0);
    folds[f].assign(perm.begin() + cursor, perm.begin() + cursor + len);
    cursor += len;
  }
  return folds;
}

std::vector<std::vector<int>> kfold_split_grouped(const std::vector<int>& trial_of_epoch,
                                                  const CVPlan& plan, int repeat_index) {
  check_plan(plan);
  std::vector<int> trials(trial_of_epoch.begin(), trial_of_epoch.end());
  std::sort(trials.begin(), trials.end());
  trials.erase(std::unique(trials.begin(), trials.end()), trials.end());
  if (static_cast<int>(trials.size()) < plan.n_folds)
    throw ValidationError("cannot split " + std::to_string(trials.size()) + " trials into " +
                          std::to_string(plan.n_folds) + " folds");

  Rng rng = repeat_rng(plan, repeat_index);
  rng.shuffle(trials);

  // trials is now shuffled, so index lookups go through a sorted copy
  std::vector<int> sorted(trials);
  std::sort(sorted.begin(), sorted.end());
  auto slot_of = [&](int trial) {
    return static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), trial) -
                            sorted.begin());
  };

  std::vector<int> count_of_slot(sorted.size(), 0);
  for (int t : trial_of_epoch) ++count_of_slot[slot_of(t)];

  std::vector<int> fold_of_slot(sorted.size(), -1);
  std::vector<long> fold_load(plan.n_folds, 0);
  for (int trial : trials) {
    int best = 0;
    for (int f = 1; f < plan.n_folds; ++f)
      if (fold_load[f] < fold_load[best]) best = f;
    const int slot = slot_of(trial);
    fold_of_slot[slot] = best;
    fold_load[best] += count_of_slot[slot];
  }

  std::vector<std::vector<int>> folds(plan.n_folds);
  for (int i = 0; i < static_cast<int>(trial_of_epoch.size()); ++i)
    folds[fold_of_slot[slot_of(trial_of_epoch[i])]].push_back(i);
  for (const auto& fold : folds)
    if (fold.empty())
      throw ValidationError("trial-grouped split left an empty fold; too few trials for " +
                            std::to_string(plan.n_folds) + " folds");
  return folds;
}

namespace {

EpochSet subset(const EpochSet& set, const std::vector<int>& indices) {
  EpochSet out;
  out.provenance = set.provenance;
  out.epochs.reserve(indices.size());
  for (int i : indices) out.epochs.push_back(set.epochs[i]);
  return out;
}

}  // namespace

CVRun run_cv(const EpochSet& set, const ClassifierFactory& factory, const CVPlan& plan) {
  check_plan(plan);
  if (set.epochs.empty()) throw ValidationError("cross-validation on an empty epoch set");
  const std::string& pid = set.epochs.front().participant_id;
  for (const auto& e : set.epochs)
    if (e.participant_id != pid)
      throw ValidationError("cross-validation set spans multiple participants ('" + pid +
                            "' and '" + e.participant_id + "')");

  const int n = static_cast<int>(set.epochs.size());
  std::vector<int> trial_of_epoch;
  if (plan.trial_grouped) {
    trial_of_epoch.reserve(n);
    for (const auto& e : set.epochs) trial_of_epoch.push_back(e.source_trial);
  }

  CVRun run;
  run.accuracies.reserve(static_cast<std::size_t>(plan.n_repeats) * plan.n_folds);
  for (int r = 0; r < plan.n_repeats; ++r) {
    const auto folds = plan.trial_grouped ? kfold_split_grouped(trial_of_epoch, plan, r)
                                          : kfold_split(n, plan, r);
    for (int f = 0; f < plan.n_folds; ++f) {
      std::vector<int> train_idx;
      train_idx.reserve(n - folds[f].size());
      for (int g = 0; g < plan.n_folds; ++g)
        if (g != f) train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());

      std::vector<bool> in_train(n, false);
      for (int i : train_idx) in_train[i] = true;
      for (int i : folds[f])
        if (in_train[i])
          throw std::logic_error("fold " + std::to_string(f) + " leaks epoch " +
                                 std::to_string(i) + " into its own training split");

      const EpochSet train_set = subset(set, train_idx);
      const EpochSet test_set = subset(set, folds[f]);

      auto clf = factory();
      const std::uint64_t fit_seed =
          derive_seed(plan.seed, {fnv1a(pid), static_cast<std::uint64_t>(r),
                                  static_cast<std::uint64_t>(f)});
      try {
        clf->fit(train_set, fit_seed);
      } catch (const TrainingFault& fault) {
        throw TrainingFault("repeat " + std::to_string(r) + " fold " + std::to_string(f) +
                                ": " + fault.what(),
                            fault.step());
      }

      const std::vector<Label> predicted = clf->predict(test_set);
      int correct = 0;
      for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == test_set.epochs[i].label) ++correct;
      run.accuracies.push_back(static_cast<double>(correct) / predicted.size());
    }
  }
  run.mean = std::accumulate(run.accuracies.begin(), run.accuracies.end(), 0.0) /
             run.accuracies.size();
  return run;
}

CVRun run_cv(const EpochSet& set, ModelKind kind, const CVPlan& plan, const TrainHyper& hyper) {
  return run_cv(
      set, [&] { return make_classifier(kind, hyper); }, plan);
}

double paired_test(std::span<const double> a, std::span<const double> b, PairedTestKind kind) {
  if (a.size() != b.size())
    throw ValidationError("paired test needs equal-length samples, got " +
                          std::to_string(a.size()) + " and " + std::to_string(b.size()));
  bool any_nonzero = false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) any_nonzero = true;
  if (!any_nonzero)
    throw ValidationError("paired test: all differences are zero (degenerate pairs)");
  if (kind == PairedTestKind::wilcoxon) return wilcoxon_signed_rank_exact(a, b).p;
  return paired_t_test(a, b).p;
}

}  // namespace wld
