#pragma once

#include <string>
#include <vector>

#include "emgsens/audit.hpp"
#include "emgsens/spls.hpp"

namespace emgsens {

// Every emitted file (SVG and CSV) carries this stamp: a comment line with
// the toolkit version and config hash.
struct ReportContext {
  std::string out_dir;
  std::string stamp;
};

// Figure 1: features grouped by their number of significant demographic
// associations, bar width proportional to group size.
void emit_ranking_figure(const ReportContext& ctx,
                         const std::vector<FeatureSensitivitySummary>& summaries);

// Figure 2: per-demographic eta^2 boxplots with jittered points.
void emit_effectsize_figure(const ReportContext& ctx,
                            const std::vector<SensitivityResult>& results,
                            const std::vector<BoxStats>& boxes);

// Figure 3: eta^2 heatmap of significant cells only; renders an explicit
// placeholder when nothing survives the dual threshold.
void emit_heatmap_figure(const ReportContext& ctx,
                         const std::vector<SensitivityResult>& results,
                         const std::vector<FeatureSensitivitySummary>& summaries);

// Figure 4: clustered image map of the first sPLS component.
void emit_cim_figure(const ReportContext& ctx, const CimLayout& layout,
                     const std::vector<std::string>& feature_names,
                     const std::vector<std::string>& demographic_names);

}  // namespace emgsens
