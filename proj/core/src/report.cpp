#include "wldecode/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "wldecode/errors.hpp"
#include "wldecode/stats.hpp"

namespace wld {

namespace {

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string fmt_p(double p) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", p);
  return buf;
}

std::string cell_name(const std::string& participant, ModelKind model) {
  return "participant '" + participant + "', model '" + to_string(model) + "'";
}

}  // namespace

bool participant_less(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

CVReport build_report(const std::vector<CVEntry>& entries, PairedTestKind test) {
  if (entries.empty()) throw ValidationError("report has no cross-validation results");

  std::map<std::pair<std::string, int>, double> cell_mean;
  std::vector<std::string> participants;
  bool model_present[std::size(kAllModelKinds)] = {};
  for (const auto& entry : entries) {
    if (entry.accuracies.empty())
      throw ValidationError("empty accuracy list for " +
                            cell_name(entry.participant, entry.model));
    for (double a : entry.accuracies)
      if (!(a >= 0.0 && a <= 1.0))
        throw ValidationError("accuracy " + std::to_string(a) + " outside [0,1] for " +
                              cell_name(entry.participant, entry.model));
    const auto key = std::make_pair(entry.participant, static_cast<int>(entry.model));
    if (cell_mean.count(key))
      throw ValidationError("duplicate cross-validation cell: " +
                            cell_name(entry.participant, entry.model));
    cell_mean[key] =
        std::accumulate(entry.accuracies.begin(), entry.accuracies.end(), 0.0) /
        entry.accuracies.size();
    model_present[static_cast<int>(entry.model)] = true;
    if (std::find(participants.begin(), participants.end(), entry.participant) ==
        participants.end())
      participants.push_back(entry.participant);
  }
  std::sort(participants.begin(), participants.end(), participant_less);

  CVReport report;
  report.test = test;
  for (ModelKind kind : kAllModelKinds)
    if (model_present[static_cast<int>(kind)]) report.models.push_back(kind);

  for (const auto& participant : participants) {
    ReportRow row;
    row.participant = participant;
    for (ModelKind kind : report.models) {
      const auto it = cell_mean.find({participant, static_cast<int>(kind)});
      if (it == cell_mean.end())
        throw ValidationError("missing cross-validation cell: " +
                              cell_name(participant, kind));
      row.mean_accuracy.push_back(it->second);
    }
    report.rows.push_back(std::move(row));
  }

  const std::size_t n_models = report.models.size();
  const std::size_t n_participants = report.rows.size();
  report.footer_available = n_participants >= 2;
  report.avg.resize(n_models);
  report.stddev.assign(n_models, std::nan(""));
  report.p_value.assign(n_models, std::nan(""));

  std::vector<std::vector<double>> columns(n_models,
                                           std::vector<double>(n_participants));
  for (std::size_t j = 0; j < n_models; ++j)
    for (std::size_t i = 0; i < n_participants; ++i)
      columns[j][i] = report.rows[i].mean_accuracy[j];

  for (std::size_t j = 0; j < n_models; ++j) {
    report.avg[j] = std::accumulate(columns[j].begin(), columns[j].end(), 0.0) /
                    n_participants;
    if (report.footer_available) report.stddev[j] = aggregate(columns[j]).stddev;
    if (j > 0 && report.footer_available) {
      // too few pairs (or identical columns) leaves the cell unavailable
      // instead of sinking the whole report
      try {
        report.p_value[j] = paired_test(columns[j], columns[0], test);
      } catch (const ValidationError&) {
      } catch (const ConfigError&) {
      }
    }
  }
  return report;
}

namespace {

// footer p cell: the reference column has no comparison; NaN elsewhere
// means the paired test could not run for that column
std::string p_cell(const CVReport& report, std::size_t j) {
  if (j == 0) return "-";
  if (std::isnan(report.p_value[j])) return "unavailable";
  return fmt_p(report.p_value[j]);
}

std::string std_cell(const CVReport& report, std::size_t j) {
  if (std::isnan(report.stddev[j])) return "unavailable";
  return fmt4(report.stddev[j]);
}

}  // namespace

std::string render_csv(const CVReport& report) {
  std::ostringstream out;
  out << "participant";
  for (ModelKind kind : report.models) out << ',' << to_string(kind);
  out << '\n';
  for (const auto& row : report.rows) {
    out << row.participant;
    for (double v : row.mean_accuracy) out << ',' << fmt4(v);
    out << '\n';
  }
  out << "Avg.";
  for (double v : report.avg) out << ',' << fmt4(v);
  out << '\n';
  out << "Std.";
  for (std::size_t j = 0; j < report.models.size(); ++j) out << ',' << std_cell(report, j);
  out << '\n';
  out << "p-value";
  for (std::size_t j = 0; j < report.models.size(); ++j) out << ',' << p_cell(report, j);
  out << '\n';
  return out.str();
}

std::string render_json(const CVReport& report) {
  nlohmann::ordered_json doc;
  doc["test"] = to_string(report.test);
  doc["models"] = nlohmann::ordered_json::array();
  for (ModelKind kind : report.models) doc["models"].push_back(to_string(kind));
  doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    nlohmann::ordered_json r;
    r["participant"] = row.participant;
    r["mean_accuracy"] = row.mean_accuracy;
    doc["rows"].push_back(std::move(r));
  }
  doc["avg"] = report.avg;
  auto nullable = [](double v) {
    return std::isnan(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v);
  };
  doc["std"] = nlohmann::ordered_json::array();
  for (double v : report.stddev) doc["std"].push_back(nullable(v));
  doc["p_value"] = nlohmann::ordered_json::array();
  for (std::size_t j = 0; j < report.models.size(); ++j)
    doc["p_value"].push_back(j == 0 ? nlohmann::ordered_json(nullptr)
                                    : nullable(report.p_value[j]));
  doc["footer_available"] = report.footer_available;
  return doc.dump(2) + "\n";
}

std::string render_table(const CVReport& report) {
  const std::size_t n_models = report.models.size();
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header{"participant"};
  for (ModelKind kind : report.models) header.push_back(to_string(kind));
  grid.push_back(header);
  for (const auto& row : report.rows) {
    std::vector<std::string> cells{row.participant};
    for (double v : row.mean_accuracy) cells.push_back(fmt4(v));
    grid.push_back(std::move(cells));
  }
  std::vector<std::string> avg_row{"Avg."}, std_row{"Std."}, p_row{"p-value"};
  for (std::size_t j = 0; j < n_models; ++j) {
    avg_row.push_back(fmt4(report.avg[j]));
    std_row.push_back(std_cell(report, j));
    p_row.push_back(p_cell(report, j));
  }
  grid.push_back(avg_row);
  grid.push_back(std_row);
  grid.push_back(p_row);

  std::vector<std::size_t> width(n_models + 1, 0);
  for (const auto& cells : grid)
    for (std::size_t j = 0; j < cells.size(); ++j)
      width[j] = std::max(width[j], cells[j].size());

  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (j == 0) {
        out << cells[0] << std::string(width[0] - cells[0].size(), ' ');
      } else {
        out << "  " << std::string(width[j] - cells[j].size(), ' ') << cells[j];
      }
    }
    out << '\n';
  };
  auto rule = [&] {
    std::size_t total = width[0];
    for (std::size_t j = 1; j <= n_models; ++j) total += 2 + width[j];
    out << std::string(total, '-') << '\n';
  };
  emit(grid[0]);
  rule();
  for (std::size_t i = 1; i + 3 < grid.size(); ++i) emit(grid[i]);
  rule();
  emit(avg_row);
  emit(std_row);
  emit(p_row);
  return out.str();
}

}  // namespace wld
