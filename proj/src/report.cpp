#include "emgsens/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "emgsens/csv.hpp"
#include "emgsens/svg.hpp"
#include "emgsens/util.hpp"

namespace emgsens {

namespace {

double jitter01(const std::string& key) {
  return static_cast<double>(fnv1a64(key) % 100000ULL) / 100000.0;
}

}  // namespace

void emit_ranking_figure(const ReportContext& ctx,
                         const std::vector<FeatureSensitivitySummary>& summaries) {
  // Group features by significant-association count, descending.
  std::map<int, std::vector<std::string>, std::greater<int>> groups;
  for (const auto& s : summaries) {
    groups[s.n_significant].push_back(s.feature_name);
  }

  CsvTable csv;
  csv.comments = {ctx.stamp};
  csv.header = {"feature", "n_significant", "group_size"};
  for (const auto& [count, names] : groups) {
    for (const auto& name : names) {
      csv.rows.push_back({name, std::to_string(count),
                          std::to_string(names.size())});
    }
  }
  write_csv(ctx.out_dir + "/fig1_ranking.csv", csv);

  const double width = 900.0;
  const double row_h = 46.0;
  const double height = 70.0 + row_h * static_cast<double>(groups.size());
  SvgDoc svg(width, height);
  svg.comment(ctx.stamp);
  svg.text(width / 2.0, 28.0, "Features by number of significant demographic associations",
           16.0, "middle");

  double max_size = 1.0;
  for (const auto& [count, names] : groups) {
    max_size = std::max(max_size, static_cast<double>(names.size()));
  }
  const double bar_x = 170.0;
  const double bar_max_w = width - bar_x - 40.0;
  double y = 54.0;
  for (const auto& [count, names] : groups) {
    const double w = bar_max_w * static_cast<double>(names.size()) / max_size;
    svg.text(bar_x - 10.0, y + 17.0,
             std::to_string(count) + " significant (" +
                 std::to_string(names.size()) + ")",
             12.0, "end");
    svg.rect(bar_x, y, std::max(w, 2.0), 22.0, "#4878a8");
    std::string label;
    const std::size_t shown = std::min<std::size_t>(names.size(), 8);
    for (std::size_t i = 0; i < shown; ++i) {
      if (i) label += ", ";
      label += names[i];
    }
    if (names.size() > shown) {
      label += " +" + std::to_string(names.size() - shown) + " more";
    }
    svg.text(bar_x + 4.0, y + 36.0, label, 10.0, "start", "#555");
    y += row_h;
  }
  write_text_file(ctx.out_dir + "/fig1_ranking.svg", svg.finish());
}

void emit_effectsize_figure(const ReportContext& ctx,
                            const std::vector<SensitivityResult>& results,
                            const std::vector<BoxStats>& boxes) {
  CsvTable csv;
  csv.comments = {ctx.stamp};
  csv.header = {"demographic", "feature", "eta2_partial"};
  for (const auto& b : boxes) {
    for (const auto& r : results) {
      if (r.demographic_name == b.demographic_name) {
        csv.rows.push_back({r.demographic_name, r.feature_name,
                            format_double(r.eta2_partial)});
      }
    }
  }
  write_csv(ctx.out_dir + "/fig2_effect_sizes.csv", csv);

  double eta_max = 0.08;
  for (const auto& r : results) eta_max = std::max(eta_max, r.eta2_partial);
  eta_max *= 1.08;

  const double width = 60.0 + 72.0 * static_cast<double>(boxes.size()) + 30.0;
  const double height = 460.0;
  const double plot_top = 50.0;
  const double plot_bottom = height - 90.0;
  SvgDoc svg(width, height);
  svg.comment(ctx.stamp);
  svg.text(width / 2.0, 26.0, "Distribution of effect sizes across demographics",
           16.0, "middle");

  auto y_of = [&](double eta) {
    return plot_bottom - (plot_bottom - plot_top) * eta / eta_max;
  };
  // Axis and gridlines.
  svg.line(52.0, plot_top, 52.0, plot_bottom, "#444", 1.0);
  for (int i = 0; i <= 4; ++i) {
    const double eta = eta_max * i / 4.0;
    const double y = y_of(eta);
    svg.line(48.0, y, width - 20.0, y, "#ddd", 0.6);
    char lab[32];
    std::snprintf(lab, sizeof(lab), "%.3f", eta);
    svg.text(44.0, y + 4.0, lab, 10.0, "end");
  }

  double x = 60.0 + 36.0;
  for (const auto& b : boxes) {
    const double half = 20.0;
    // jittered sample cloud
    for (const auto& r : results) {
      if (r.demographic_name != b.demographic_name) continue;
      const double jx = x + (jitter01(r.feature_name + "|" + r.demographic_name) - 0.5) * 40.0;
      svg.circle(jx, y_of(r.eta2_partial), 1.6, "#7f7f7f", 0.45);
    }
    svg.line(x, y_of(b.whisker_lo), x, y_of(b.q1), "#333", 1.0);
    svg.line(x, y_of(b.q3), x, y_of(b.whisker_hi), "#333", 1.0);
    svg.rect(x - half, y_of(b.q3), 2.0 * half, y_of(b.q1) - y_of(b.q3),
             "none", "#205080", 1.4);
    svg.line(x - half, y_of(b.median), x + half, y_of(b.median), "#c03030", 1.8);
    svg.text(x, plot_bottom + 14.0, b.demographic_name, 10.0, "end", "#222", -45.0);
    x += 72.0;
  }
  write_text_file(ctx.out_dir + "/fig2_effect_sizes.svg", svg.finish());
}

void emit_heatmap_figure(const ReportContext& ctx,
                         const std::vector<SensitivityResult>& results,
                         const std::vector<FeatureSensitivitySummary>& summaries) {
  // Rows: features with at least one significant cell, in ranking order.
  std::vector<std::string> features;
  for (const auto& s : summaries) {
    if (s.n_significant > 0) features.push_back(s.feature_name);
  }
  std::vector<std::string> demographics;
  for (const auto& r : results) {
    if (std::find(demographics.begin(), demographics.end(), r.demographic_name) ==
        demographics.end()) {
      demographics.push_back(r.demographic_name);
    }
  }

  std::map<std::pair<std::string, std::string>, const SensitivityResult*> cell;
  double eta_max = 1e-9;
  for (const auto& r : results) {
    cell[{r.feature_name, r.demographic_name}] = &r;
    if (r.significant) eta_max = std::max(eta_max, r.eta2_partial);
  }

  CsvTable csv;
  csv.comments = {ctx.stamp};
  csv.header = {"feature", "demographic", "eta2_partial"};
  for (const auto& fname : features) {
    for (const auto& d : demographics) {
      const auto* r = cell.at({fname, d});
      if (r->significant) {
        csv.rows.push_back({fname, d, format_double(r->eta2_partial)});
      }
    }
  }
  write_csv(ctx.out_dir + "/fig3_heatmap.csv", csv);

  const double cell_w = 46.0;
  const double cell_h = 14.0;
  const double left = 150.0;
  const double top = 110.0;
  const double width =
      left + cell_w * static_cast<double>(demographics.size()) + 30.0;
  const double height =
      features.empty() ? 200.0
                       : top + cell_h * static_cast<double>(features.size()) + 30.0;
  SvgDoc svg(width, height);
  svg.comment(ctx.stamp);
  svg.text(width / 2.0, 26.0, "Significant feature-demographic associations",
           16.0, "middle");

  if (features.empty()) {
    svg.text(width / 2.0, height / 2.0, "no significant associations", 15.0,
             "middle", "#888");
    write_text_file(ctx.out_dir + "/fig3_heatmap.svg", svg.finish());
    return;
  }

  for (std::size_t d = 0; d < demographics.size(); ++d) {
    svg.text(left + cell_w * (static_cast<double>(d) + 0.5), top - 8.0,
             demographics[d], 10.0, "start", "#222", -55.0);
  }
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double y = top + cell_h * static_cast<double>(i);
    svg.text(left - 6.0, y + cell_h - 4.0, features[i], 9.0, "end");
    for (std::size_t d = 0; d < demographics.size(); ++d) {
      const auto* r = cell.at({features[i], demographics[d]});
      const double x = left + cell_w * static_cast<double>(d);
      if (r->significant) {
        svg.rect(x, y, cell_w - 1.0, cell_h - 1.0,
                 SvgDoc::heat_color(r->eta2_partial / eta_max));
      } else {
        svg.rect(x, y, cell_w - 1.0, cell_h - 1.0, "#f4f4f4");
      }
    }
  }
  write_text_file(ctx.out_dir + "/fig3_heatmap.svg", svg.finish());
}

void emit_cim_figure(const ReportContext& ctx, const CimLayout& layout,
                     const std::vector<std::string>& feature_names,
                     const std::vector<std::string>& demographic_names) {
  CsvTable csv;
  csv.comments = {ctx.stamp};
  csv.header = {"feature", "demographic", "loading_product"};
  for (int ri : layout.row_order) {
    for (int ci : layout.col_order) {
      csv.rows.push_back({feature_names[static_cast<std::size_t>(ri)],
                          demographic_names[static_cast<std::size_t>(ci)],
                          format_double(layout.cells(ri, ci))});
    }
  }
  write_csv(ctx.out_dir + "/fig4_cim.csv", csv);

  const int nr = static_cast<int>(layout.row_order.size());
  const int nc = static_cast<int>(layout.col_order.size());
  const double cell_w = 42.0;
  const double cell_h = nr > 60 ? 6.0 : 14.0;
  const double left = 170.0;
  const double top = 120.0;
  const double width = left + cell_w * nc + 40.0;
  const double height = top + cell_h * nr + 40.0;
  SvgDoc svg(width, height);
  svg.comment(ctx.stamp);
  svg.text(width / 2.0, 24.0, "Clustered image map, sPLS component 1", 16.0,
           "middle");

  double vmax = 1e-12;
  for (int i = 0; i < layout.cells.rows(); ++i) {
    for (int j = 0; j < layout.cells.cols(); ++j) {
      vmax = std::max(vmax, std::fabs(layout.cells(i, j)));
    }
  }

  for (int c = 0; c < nc; ++c) {
    svg.text(left + cell_w * (c + 0.5), top - 8.0,
             demographic_names[static_cast<std::size_t>(layout.col_order[static_cast<std::size_t>(c)])],
             10.0, "start", "#222", -55.0);
  }
  for (int r = 0; r < nr; ++r) {
    const double y = top + cell_h * r;
    if (cell_h >= 9.0 || r % 4 == 0) {
      svg.text(left - 6.0, y + cell_h,
               feature_names[static_cast<std::size_t>(layout.row_order[static_cast<std::size_t>(r)])],
               cell_h >= 9.0 ? 9.0 : 6.0, "end");
    }
    for (int c = 0; c < nc; ++c) {
      const double v =
          layout.cells(layout.row_order[static_cast<std::size_t>(r)],
                       layout.col_order[static_cast<std::size_t>(c)]);
      svg.rect(left + cell_w * c, y, cell_w - 0.5, cell_h - 0.5,
               SvgDoc::diverging_color(v / vmax));
    }
  }

  // Row dendrogram sketch on the left margin: vertical extent per merge.
  {
    std::vector<double> node_pos(static_cast<std::size_t>(2 * nr - 1), 0.0);
    for (int r = 0; r < nr; ++r) {
      node_pos[static_cast<std::size_t>(layout.row_order[static_cast<std::size_t>(r)])] =
          top + cell_h * (r + 0.5);
    }
    double hmax = 1e-12;
    for (const auto& m : layout.row_dendrogram.merges) hmax = std::max(hmax, m.height);
    const double span = 60.0;
    int next = nr;
    for (const auto& m : layout.row_dendrogram.merges) {
      const double y1 = node_pos[static_cast<std::size_t>(m.left)];
      const double y2 = node_pos[static_cast<std::size_t>(m.right)];
      const double x = left - 90.0 - span * (m.height / hmax) + span;
      svg.line(x, y1, x, y2, "#999", 0.8);
      node_pos[static_cast<std::size_t>(next)] = 0.5 * (y1 + y2);
      ++next;
    }
  }
  write_text_file(ctx.out_dir + "/fig4_cim.svg", svg.finish());
}

}  // namespace emgsens
