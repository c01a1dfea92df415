#include "emgsens/audit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "emgsens/errors.hpp"
#include "emgsens/stats.hpp"

namespace emgsens {

std::vector<double> bh_fdr(const std::vector<double>& p) {
  const std::size_t m = p.size();
  if (m == 0) return {};
  for (double v : p) {
    if (!(v > 0.0) || v > 1.0) {
      throw NumericError("bh_fdr: p-values must lie in (0, 1]");
    }
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&p](std::size_t a, std::size_t b) { return p[a] < p[b]; });

  // Step-up: adj_(i) = min_{j >= i} p_(j) * m / j, clipped at 1.
  std::vector<double> adjusted(m);
  double running = 1.0;
  for (std::size_t i = m; i-- > 0;) {
    const double scaled =
        p[order[i]] * static_cast<double>(m) / static_cast<double>(i + 1);
    running = std::min(running, scaled);
    adjusted[order[i]] = std::min(1.0, running);
  }
  return adjusted;
}

std::vector<SensitivityResult> build_sensitivity(
    const std::vector<LmmFit>& fits,
    const std::vector<std::string>& demographics, const AuditConfig& cfg) {
  const int n_demo = static_cast<int>(demographics.size());
  std::vector<SensitivityResult> results;
  results.reserve(fits.size() * static_cast<std::size_t>(n_demo));
  for (const auto& fit : fits) {
    if (fit.eta2.size() != n_demo || fit.beta.size() != n_demo + 1) {
      throw NumericError("build_sensitivity: fit shape mismatch for feature " +
                         fit.feature_name);
    }
    for (int d = 0; d < n_demo; ++d) {
      SensitivityResult r;
      r.feature_name = fit.feature_name;
      r.demographic_name = demographics[static_cast<std::size_t>(d)];
      r.beta = fit.beta[d + 1];
      r.p_raw = fit.p[d + 1];
      r.eta2_partial = fit.eta2[d];
      results.push_back(std::move(r));
    }
  }

  apply_fdr(results, cfg.fdr_per_demographic);
  apply_dual_threshold(results, cfg);
  return results;
}

void apply_fdr(std::vector<SensitivityResult>& results, bool per_demographic) {
  if (per_demographic) {
    std::map<std::string, std::vector<std::size_t>> families;
    for (std::size_t i = 0; i < results.size(); ++i) {
      families[results[i].demographic_name].push_back(i);
    }
    for (auto& [name, idx] : families) {
      std::vector<double> p;
      p.reserve(idx.size());
      for (std::size_t i : idx) p.push_back(results[i].p_raw);
      const auto adj = bh_fdr(p);
      for (std::size_t k = 0; k < idx.size(); ++k) results[idx[k]].p_fdr = adj[k];
    }
  } else {
    std::vector<double> p;
    p.reserve(results.size());
    for (const auto& r : results) p.push_back(r.p_raw);
    const auto adj = bh_fdr(p);
    for (std::size_t i = 0; i < results.size(); ++i) results[i].p_fdr = adj[i];
  }
}

int apply_dual_threshold(std::vector<SensitivityResult>& results,
                         const AuditConfig& cfg) {
  int count = 0;
  for (auto& r : results) {
    r.significant = r.p_fdr < cfg.alpha && r.eta2_partial >= cfg.eta2_min;
    if (r.significant) ++count;
  }
  return count;
}

std::vector<FeatureSensitivitySummary> aggregate_features(
    const std::vector<SensitivityResult>& results) {
  std::map<std::string, std::vector<const SensitivityResult*>> by_feature;
  std::vector<std::string> feature_order;
  for (const auto& r : results) {
    auto it = by_feature.find(r.feature_name);
    if (it == by_feature.end()) {
      feature_order.push_back(r.feature_name);
      by_feature[r.feature_name] = {};
    }
    by_feature[r.feature_name].push_back(&r);
  }

  std::vector<FeatureSensitivitySummary> out;
  out.reserve(feature_order.size());
  for (const auto& name : feature_order) {
    const auto& rows = by_feature[name];
    FeatureSensitivitySummary s;
    s.feature_name = name;
    std::vector<std::pair<double, std::string>> sig;
    for (const auto* r : rows) {
      s.eta2_sum += r->eta2_partial;
      s.eta2_max = std::max(s.eta2_max, r->eta2_partial);
      if (r->significant) {
        ++s.n_significant;
        sig.push_back({r->eta2_partial, r->demographic_name});
      }
    }
    s.eta2_mean = rows.empty() ? 0.0 : s.eta2_sum / static_cast<double>(rows.size());
    std::sort(sig.begin(), sig.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (const auto& [eta, demo] : sig) s.top_demographics.push_back(demo);
    out.push_back(std::move(s));
  }

  std::sort(out.begin(), out.end(),
            [](const FeatureSensitivitySummary& a,
               const FeatureSensitivitySummary& b) {
              if (a.n_significant != b.n_significant) {
                return a.n_significant > b.n_significant;
              }
              if (a.eta2_max != b.eta2_max) return a.eta2_max > b.eta2_max;
              return a.feature_name < b.feature_name;
            });
  return out;
}

std::vector<BoxStats> effectsize_distributions(
    const std::vector<SensitivityResult>& results) {
  std::map<std::string, std::vector<double>> by_demo;
  std::vector<std::string> order;
  for (const auto& r : results) {
    if (!by_demo.count(r.demographic_name)) order.push_back(r.demographic_name);
    by_demo[r.demographic_name].push_back(r.eta2_partial);
  }

  std::vector<BoxStats> out;
  for (const auto& name : order) {
    const auto& v = by_demo[name];
    BoxStats b;
    b.demographic_name = name;
    b.median = quantile(v, 0.5);
    b.q1 = quantile(v, 0.25);
    b.q3 = quantile(v, 0.75);
    const double iqr = b.q3 - b.q1;
    const double lo_fence = b.q1 - 1.5 * iqr;
    const double hi_fence = b.q3 + 1.5 * iqr;
    // Whiskers reach the most extreme points inside the fences.
    b.whisker_lo = b.q1;
    b.whisker_hi = b.q3;
    bool first = true;
    for (double x : v) {
      if (x >= lo_fence && x <= hi_fence) {
        if (first) {
          b.whisker_lo = b.whisker_hi = x;
          first = false;
        } else {
          b.whisker_lo = std::min(b.whisker_lo, x);
          b.whisker_hi = std::max(b.whisker_hi, x);
        }
      } else {
        b.outliers.push_back(x);
      }
    }
    std::sort(b.outliers.begin(), b.outliers.end());
    out.push_back(std::move(b));
  }
  std::sort(out.begin(), out.end(), [](const BoxStats& a, const BoxStats& b) {
    if (a.median != b.median) return a.median > b.median;
    return a.demographic_name < b.demographic_name;
  });
  return out;
}

}  // namespace emgsens
