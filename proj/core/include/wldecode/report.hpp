#pragma once

#include <string>
#include <vector>

#include "wldecode/crossval.hpp"
#include "wldecode/model.hpp"

namespace wld {

// One participant x model cell: that participant's fold accuracies.
struct CVEntry {
  std::string participant;
  ModelKind model = ModelKind::proposed;
  std::vector<double> accuracies;
};

struct ReportRow {
  std::string participant;
  std::vector<double> mean_accuracy;  // one per column, column order below
};

// Comparison table: one row per participant, one column per model, with
// Avg. / Std. / p-value footer rows. p-values compare each column against
// the first (reference) column via a paired test across participants.
struct CVReport {
  std::vector<ModelKind> models;  // column order
  std::vector<ReportRow> rows;    // participant order: natural sort
  std::vector<double> avg;
  std::vector<double> stddev;    // n-1 denominator
  std::vector<double> p_value;   // NaN for the reference column
  bool footer_available = true;  // false with a single participant
  PairedTestKind test = PairedTestKind::wilcoxon;
};

// Natural participant order: shorter ids first, then lexicographic,
// so "P2" sorts before "P10".
bool participant_less(const std::string& a, const std::string& b);

// Assemble the table from per-cell results. Every participant must have a
// cell for every model that appears anywhere; a missing cell is an error
// naming it. Entry order does not matter.
CVReport build_report(const std::vector<CVEntry>& entries,
                      PairedTestKind test = PairedTestKind::wilcoxon);

std::string render_csv(const CVReport& report);
std::string render_json(const CVReport& report);
std::string render_table(const CVReport& report);

}  // namespace wld
