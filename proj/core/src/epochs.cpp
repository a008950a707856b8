#include "wldecode/epochs.hpp"

#include <cmath>

#include "wldecode/errors.hpp"

namespace wld {

std::string_view label_name(Label l) {
  switch (l) {
    case Label::NS: return "NS";
    case Label::LW: return "LW";
    case Label::HW: return "HW";
  }
  return "?";
}

Label label_from_name(std::string_view name) {
  if (name == "NS") return Label::NS;
  if (name == "LW") return Label::LW;
  if (name == "HW") return Label::HW;
  throw ValidationError("unknown label '" + std::string(name) + "'");
}

std::array<std::int64_t, kNumClasses> EpochSet::label_counts() const {
  std::array<std::int64_t, kNumClasses> counts{0, 0, 0};
  for (const Epoch& e : epochs) counts[static_cast<std::size_t>(e.label)]++;
  return counts;
}

int EpochSet::n_trials() const {
  int max_trial = -1;
  for (const Epoch& e : epochs) max_trial = std::max(max_trial, e.source_trial);
  return max_trial + 1;
}

void check_epoch_set(const EpochSet& set) {
  if (set.epochs.empty()) return;
  Eigen::Index rows = set.epochs.front().data.rows();
  Eigen::Index cols = set.epochs.front().data.cols();
  for (std::size_t i = 0; i < set.epochs.size(); ++i) {
    const Epoch& e = set.epochs[i];
    if (e.data.rows() != rows || e.data.cols() != cols)
      throw ValidationError("epoch " + std::to_string(i) + " shape " +
                            std::to_string(e.data.rows()) + "x" + std::to_string(e.data.cols()) +
                            " differs from " + std::to_string(rows) + "x" + std::to_string(cols));
    if (!e.data.allFinite())
      throw ValidationError("epoch " + std::to_string(i) + " contains non-finite values");
  }
}

}  // namespace wld
