#include "wldecode/topography.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "wldecode/errors.hpp"
#include "wldecode/montage.hpp"
#include "wldecode/stats.hpp"

namespace wld {

namespace {

constexpr double kEpochRateHz = 100.0;
constexpr int kNperseg = 50;

// Width actually integrated by the half-open rectangular band sum: the
// number of Welch bins falling in [low, high) times the bin spacing.
double integrated_width_hz(const BandDefinition& band) {
  const double df = kEpochRateHz / kNperseg;
  int bins = 0;
  for (int k = 0; k <= kNperseg / 2; ++k) {
    const double f = k * df;
    if (f >= band.low_hz && f < band.high_hz) ++bins;
  }
  return bins * df;
}

std::string channel_display_name(const EpochSet& set, int channel) {
  const Montage& montage = standard_montage();
  const auto n_rows = set.epochs.empty() ? 0 : set.epochs.front().data.rows();
  if (static_cast<std::size_t>(n_rows) == montage.eeg_channels.size())
    return montage.eeg_channels[static_cast<std::size_t>(channel)];
  return "ch" + std::to_string(channel);
}

// Per-epoch band power density, [n_epochs](channels x bands).
std::vector<Eigen::MatrixXd> epoch_band_density(const EpochSet& set) {
  const auto& bands = standard_bands();
  Eigen::RowVector4d width;
  for (int b = 0; b < kNumBands; ++b)
    width(b) = integrated_width_hz(bands[static_cast<std::size_t>(b)]);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(set.epochs.size());
  for (const Epoch& e : set.epochs) {
    Eigen::MatrixXd bp = band_power(e.data, kEpochRateHz);
    bp.array().rowwise() /= width.array();
    out.push_back(std::move(bp));
  }
  return out;
}

std::array<std::vector<int>, kNumClasses> indices_by_label(const EpochSet& set) {
  std::array<std::vector<int>, kNumClasses> idx;
  for (std::size_t i = 0; i < set.epochs.size(); ++i)
    idx[static_cast<std::size_t>(set.epochs[i].label)].push_back(static_cast<int>(i));
  return idx;
}

void require_contrast(const std::array<std::vector<int>, kNumClasses>& idx, Label a, Label b) {
  if (a == b)
    throw ValidationError("topography: contrast labels must differ; got " +
                          std::string(label_name(a)) + " twice");
  const auto na = idx[static_cast<std::size_t>(a)].size();
  const auto nb = idx[static_cast<std::size_t>(b)].size();
  if (na < 2 || nb < 2)
    throw ValidationError("topography: need at least 2 epochs per contrast label; got " +
                          std::to_string(na) + " " + std::string(label_name(a)) + " and " +
                          std::to_string(nb) + " " + std::string(label_name(b)));
}

std::vector<TopographyRow> rows_for_band(const EpochSet& set,
                                         const std::vector<Eigen::MatrixXd>& density,
                                         const std::array<std::vector<int>, kNumClasses>& idx,
                                         Band band, Label a, Label b) {
  const int band_col = static_cast<int>(band);
  const Eigen::Index n_channels = density.front().rows();
  std::vector<TopographyRow> rows;
  rows.reserve(static_cast<std::size_t>(n_channels));
  for (Eigen::Index c = 0; c < n_channels; ++c) {
    TopographyRow row;
    row.channel = static_cast<int>(c);
    row.channel_name = channel_display_name(set, row.channel);
    row.band = band;
    std::array<std::vector<double>, kNumClasses> values;
    for (int l = 0; l < kNumClasses; ++l) {
      const auto& members = idx[static_cast<std::size_t>(l)];
      auto& v = values[static_cast<std::size_t>(l)];
      v.reserve(members.size());
      for (int e : members) v.push_back(density[static_cast<std::size_t>(e)](c, band_col));
      if (v.empty()) {
        row.mean_power[static_cast<std::size_t>(l)] = std::numeric_limits<double>::quiet_NaN();
      } else {
        double sum = 0.0;
        for (double x : v) sum += x;
        row.mean_power[static_cast<std::size_t>(l)] = sum / static_cast<double>(v.size());
      }
    }
    const TTestResult tt = welch_t_test(values[static_cast<std::size_t>(a)],
                                        values[static_cast<std::size_t>(b)]);
    row.t_stat = tt.t;
    row.p_value = tt.p;
    row.significant = tt.p < kSignificanceAlpha;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string fmt_g(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string fmt_f(double v, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

std::vector<TopographyRow> topography_stats(const EpochSet& set, const BandDefinition& band,
                                            Label a, Label b) {
  check_epoch_set(set);
  if (set.epochs.empty()) throw ValidationError("topography: empty epoch set");
  const auto idx = indices_by_label(set);
  require_contrast(idx, a, b);
  const auto density = epoch_band_density(set);
  return rows_for_band(set, density, idx, band.band, a, b);
}

TopographyReport topography_report(const EpochSet& set, Label a, Label b) {
  check_epoch_set(set);
  if (set.epochs.empty()) throw ValidationError("topography: empty epoch set");
  const auto idx = indices_by_label(set);
  require_contrast(idx, a, b);
  const auto density = epoch_band_density(set);
  TopographyReport report;
  report.label_a = a;
  report.label_b = b;
  for (const BandDefinition& band : standard_bands()) {
    auto rows = rows_for_band(set, density, idx, band.band, a, b);
    report.rows.insert(report.rows.end(), std::make_move_iterator(rows.begin()),
                       std::make_move_iterator(rows.end()));
  }
  return report;
}

void write_topography_csv(std::ostream& out, const TopographyReport& report) {
  const std::string contrast = std::string(label_name(report.label_a)) + "_vs_" +
                               std::string(label_name(report.label_b));
  out << "channel,name,band,contrast,ns_mean_uv2_per_hz,lw_mean_uv2_per_hz,"
         "hw_mean_uv2_per_hz,t,p_value,significant\n";
  for (const TopographyRow& row : report.rows) {
    out << row.channel << ',' << row.channel_name << ',' << band_name(row.band) << ','
        << contrast << ',' << fmt_g(row.mean_power[0]) << ',' << fmt_g(row.mean_power[1]) << ','
        << fmt_g(row.mean_power[2]) << ',' << fmt_g(row.t_stat) << ',' << fmt_g(row.p_value)
        << ',' << (row.significant ? 1 : 0) << '\n';
  }
}

std::string topography_csv(const TopographyReport& report) {
  std::ostringstream out;
  write_topography_csv(out, report);
  return out.str();
}

namespace {

struct Rgb {
  double r, g, b;
};

// Diverging blue -> pale yellow -> red ramp, u in [0, 1].
std::string ramp_color(double u) {
  static const Rgb stops[5] = {{0x31, 0x36, 0x95},
                               {0x74, 0xad, 0xd1},
                               {0xff, 0xff, 0xbf},
                               {0xf4, 0x6d, 0x43},
                               {0xa5, 0x00, 0x26}};
  u = std::clamp(u, 0.0, 1.0);
  const double scaled = u * 4.0;
  const int lo = std::min(3, static_cast<int>(scaled));
  const double t = scaled - lo;
  const auto mix = [&](double x, double y) { return x + (y - x) * t; };
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<int>(std::lround(mix(stops[lo].r, stops[lo + 1].r))),
                static_cast<int>(std::lround(mix(stops[lo].g, stops[lo + 1].g))),
                static_cast<int>(std::lround(mix(stops[lo].b, stops[lo + 1].b))));
  return buf;
}

double idw_value(const std::vector<ChannelPos>& pos, const std::vector<double>& vals, double x,
                 double y) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const double dx = x - pos[i].x;
    const double dy = y - pos[i].y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < 1e-9) return vals[i];
    const double w = 1.0 / d2;
    num += w * vals[i];
    den += w;
  }
  return num / den;
}

}  // namespace

std::string topography_svg(const TopographyReport& report, Band band) {
  const Montage& montage = standard_montage();
  std::vector<const TopographyRow*> rows;
  for (const TopographyRow& row : report.rows)
    if (row.band == band) rows.push_back(&row);
  if (rows.empty())
    throw ValidationError("topography: report has no rows for band " +
                          std::string(band_name(band)));
  if (rows.size() != montage.eeg_channels.size())
    throw ValidationError("topography: scalp map needs the full " +
                          std::to_string(montage.eeg_channels.size()) + "-channel montage; got " +
                          std::to_string(rows.size()) + " channels");
  std::sort(rows.begin(), rows.end(),
            [](const TopographyRow* a, const TopographyRow* b) { return a->channel < b->channel; });

  double vmin = std::numeric_limits<double>::infinity();
  double vmax = -std::numeric_limits<double>::infinity();
  for (const TopographyRow* row : rows)
    for (int l = 0; l < kNumClasses; ++l) {
      const double v = row->mean_power[static_cast<std::size_t>(l)];
      if (std::isnan(v)) continue;
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
  const double vspan = vmax - vmin;

  constexpr double kRadius = 90.0;
  constexpr double kMapWidth = 220.0;
  constexpr double kMargin = 20.0;
  constexpr int kGrid = 36;
  const double width = kMargin * 2 + kMapWidth * kNumClasses;
  const double height = 330.0;
  const double cy = 150.0;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

  const BandDefinition& def = standard_bands()[static_cast<std::size_t>(band)];
  svg << "<text x=\"" << kMargin << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">"
      << band_name(band) << " band (" << fmt_f(def.low_hz, 0) << "-" << fmt_f(def.high_hz, 0)
      << " Hz), " << label_name(report.label_a) << " vs " << label_name(report.label_b)
      << " contrast</text>\n";

  svg << "<defs>\n";
  for (int l = 0; l < kNumClasses; ++l) {
    const double cx = kMargin + kMapWidth * l + kMapWidth / 2;
    svg << "<clipPath id=\"disk" << l << "\"><circle cx=\"" << fmt_f(cx, 1) << "\" cy=\""
        << fmt_f(cy, 1) << "\" r=\"" << fmt_f(kRadius, 1) << "\"/></clipPath>\n";
  }
  svg << "<linearGradient id=\"ramp\" x1=\"0\" y1=\"0\" x2=\"1\" y2=\"0\">";
  for (int s = 0; s <= 4; ++s)
    svg << "<stop offset=\"" << s * 25 << "%\" stop-color=\"" << ramp_color(s / 4.0) << "\"/>";
  svg << "</linearGradient>\n</defs>\n";

  for (int l = 0; l < kNumClasses; ++l) {
    const double cx = kMargin + kMapWidth * l + kMapWidth / 2;
    const Label lab = static_cast<Label>(l);
    const bool have_data = !std::isnan(rows.front()->mean_power[static_cast<std::size_t>(l)]);

    if (have_data) {
      std::vector<double> vals(rows.size());
      for (std::size_t c = 0; c < rows.size(); ++c)
        vals[c] = rows[c]->mean_power[static_cast<std::size_t>(l)];
      svg << "<g clip-path=\"url(#disk" << l << ")\">\n";
      const double cell = 2.0 / kGrid;
      for (int iy = 0; iy < kGrid; ++iy) {
        for (int ix = 0; ix < kGrid; ++ix) {
          const double ux = -1.0 + (ix + 0.5) * cell;
          const double uy = -1.0 + (iy + 0.5) * cell;
          if (ux * ux + uy * uy > 1.0 + cell * cell) continue;
          const double v = idw_value(montage.positions, vals, ux, uy);
          const double u = vspan > 0.0 ? (v - vmin) / vspan : 0.5;
          const double px = cx + (ux - cell / 2) * kRadius;
          const double py = cy - (uy + cell / 2) * kRadius;
          svg << "<rect x=\"" << fmt_f(px, 1) << "\" y=\"" << fmt_f(py, 1) << "\" width=\""
              << fmt_f(cell * kRadius + 0.4, 1) << "\" height=\"" << fmt_f(cell * kRadius + 0.4, 1)
              << "\" fill=\"" << ramp_color(u) << "\"/>\n";
        }
      }
      svg << "</g>\n";
    }

    // head outline, nose, ears
    svg << "<circle cx=\"" << fmt_f(cx, 1) << "\" cy=\"" << fmt_f(cy, 1) << "\" r=\""
        << fmt_f(kRadius, 1) << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1.5\"/>\n";
    svg << "<path d=\"M " << fmt_f(cx - 9, 1) << ' ' << fmt_f(cy - kRadius + 1, 1) << " L "
        << fmt_f(cx, 1) << ' ' << fmt_f(cy - kRadius - 11, 1) << " L " << fmt_f(cx + 9, 1) << ' '
        << fmt_f(cy - kRadius + 1, 1)
        << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1.5\"/>\n";
    svg << "<ellipse cx=\"" << fmt_f(cx - kRadius - 3, 1) << "\" cy=\"" << fmt_f(cy, 1)
        << "\" rx=\"4\" ry=\"12\" fill=\"none\" stroke=\"#333\" stroke-width=\"1.2\"/>\n";
    svg << "<ellipse cx=\"" << fmt_f(cx + kRadius + 3, 1) << "\" cy=\"" << fmt_f(cy, 1)
        << "\" rx=\"4\" ry=\"12\" fill=\"none\" stroke=\"#333\" stroke-width=\"1.2\"/>\n";

    if (have_data) {
      for (std::size_t c = 0; c < rows.size(); ++c) {
        const ChannelPos& pos = montage.positions[c];
        const double px = cx + pos.x * kRadius;
        const double py = cy - pos.y * kRadius;
        svg << "<circle cx=\"" << fmt_f(px, 1) << "\" cy=\"" << fmt_f(py, 1)
            << "\" r=\"1.8\" fill=\"#222\"/>\n";
        if (rows[c]->significant)
          svg << "<text x=\"" << fmt_f(px, 1) << "\" y=\"" << fmt_f(py + 11, 1)
              << "\" font-family=\"sans-serif\" font-size=\"16\" fill=\"#555\""
                 " text-anchor=\"middle\">*</text>\n";
      }
    } else {
      svg << "<text x=\"" << fmt_f(cx, 1) << "\" y=\"" << fmt_f(cy, 1)
          << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#888\""
             " text-anchor=\"middle\">no epochs</text>\n";
    }

    svg << "<text x=\"" << fmt_f(cx, 1) << "\" y=\"" << fmt_f(cy + kRadius + 24, 1)
        << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">"
        << label_name(lab) << "</text>\n";
  }

  // color bar with range labels
  const double bar_w = 260.0;
  const double bar_x = width / 2 - bar_w / 2;
  const double bar_y = height - 36;
  svg << "<rect x=\"" << fmt_f(bar_x, 1) << "\" y=\"" << fmt_f(bar_y, 1) << "\" width=\""
      << fmt_f(bar_w, 1) << "\" height=\"12\" fill=\"url(#ramp)\" stroke=\"#333\""
      << " stroke-width=\"0.5\"/>\n";
  svg << "<text x=\"" << fmt_f(bar_x - 6, 1) << "\" y=\"" << fmt_f(bar_y + 10, 1)
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
      << fmt_g(vmin) << "</text>\n";
  svg << "<text x=\"" << fmt_f(bar_x + bar_w + 6, 1) << "\" y=\"" << fmt_f(bar_y + 10, 1)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_g(vmax)
      << " &#181;V&#178;/Hz</text>\n";
  svg << "<text x=\"" << fmt_f(bar_x + bar_w / 2, 1) << "\" y=\"" << fmt_f(bar_y + 26, 1)
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
         "* p &lt; 0.05 (" << label_name(report.label_a) << " vs " << label_name(report.label_b)
      << ", uncorrected)</text>\n";

  svg << "</svg>\n";
  return svg.str();
}

}  // namespace wld
