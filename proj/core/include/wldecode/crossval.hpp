#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wldecode/epochs.hpp"
#include "wldecode/model.hpp"

namespace wld {

struct CVPlan {
  int n_folds = 5;
  int n_repeats = 4;
  std::uint64_t seed = 0;
  bool trial_grouped = false;  // keep every trial's epochs inside one fold
};

enum class PairedTestKind { wilcoxon, paired_t };

PairedTestKind parse_paired_test(const std::string& name);
std::string to_string(PairedTestKind kind);

// Disjoint index folds covering [0, n_epochs); sizes differ by at most one.
// Each repeat shuffles with its own seed derived from (plan.seed, repeat).
std::vector<std::vector<int>> kfold_split(int n_epochs, const CVPlan& plan, int repeat_index);

// Fold assignment by trial: all epochs sharing a trial id land in the same
// fold. Shuffled trials go greedily to the currently smallest fold, so fold
// sizes stay balanced up to trial granularity.
std::vector<std::vector<int>> kfold_split_grouped(const std::vector<int>& trial_of_epoch,
                                                  const CVPlan& plan, int repeat_index);

struct CVRun {
  std::vector<double> accuracies;  // repeat-major: repeat * n_folds + fold
  double mean = 0.0;
};

using ClassifierFactory = std::function<std::unique_ptr<Classifier>()>;

// Train on n_folds-1 folds, score the held-out fold, for every
// (repeat, fold). Training/validation disjointness is asserted on every
// fold; training faults are re-thrown annotated with (repeat, fold).
CVRun run_cv(const EpochSet& set, const ClassifierFactory& factory, const CVPlan& plan);
CVRun run_cv(const EpochSet& set, ModelKind kind, const CVPlan& plan,
             const TrainHyper& hyper = {});

// Two-sided p-value over paired per-participant means; zero differences
// are dropped (all-zero pairs are a degenerate-input error).
double paired_test(std::span<const double> a, std::span<const double> b,
                   PairedTestKind kind = PairedTestKind::wilcoxon);

}  // namespace wld
