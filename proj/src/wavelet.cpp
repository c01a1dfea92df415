#include "emgsens/wavelet.hpp"

#include <algorithm>

#include "emgsens/errors.hpp"

namespace emgsens {
namespace wavelet {

const std::array<double, kSym5Len>& sym5_dec_lo() {
  static const std::array<double, kSym5Len> dec_lo = {
      0.019538882735286728,  -0.021101834024758855, -0.17532808990845047,
      0.01660210576452232,   0.6339789634582119,    0.7234076904024206,
      0.19939753397739264,   -0.03913424930238985,  0.029519490925774643,
      0.027333068345077982,
  };
  return dec_lo;
}

const std::array<double, kSym5Len>& sym5_dec_hi() {
  // Quadrature mirror of the lowpass: g[k] = (-1)^(k+1) * h[L-1-k].
  static const std::array<double, kSym5Len> dec_hi = [] {
    const auto& lo = sym5_dec_lo();
    std::array<double, kSym5Len> hi{};
    for (int k = 0; k < kSym5Len; ++k) {
      const double sign = (k % 2 == 0) ? -1.0 : 1.0;
      hi[static_cast<std::size_t>(k)] =
          sign * lo[static_cast<std::size_t>(kSym5Len - 1 - k)];
    }
    return hi;
  }();
  return dec_hi;
}

void analysis_step(const Eigen::ArrayXd& x, Eigen::ArrayXd& lo,
                   Eigen::ArrayXd& hi) {
  const int n = static_cast<int>(x.size());
  const int pad = kSym5Len - 1;
  if (n < pad) {
    throw NumericError("wavelet: signal shorter than filter support");
  }

  // Half-point symmetric extension, materialized once per step.
  Eigen::ArrayXd ext(n + 2 * pad);
  for (int i = 0; i < pad; ++i) ext[i] = x[pad - 1 - i];
  ext.segment(pad, n) = x;
  for (int i = 0; i < pad; ++i) ext[pad + n + i] = x[n - 1 - i];

  const int out = (n + kSym5Len - 1) / 2;
  lo.resize(out);
  hi.resize(out);
  const auto& h = sym5_dec_lo();
  const auto& g = sym5_dec_hi();
  for (int i = 0; i < out; ++i) {
    // ext index of signal sample t is t + pad; t = 2i + 1 - k.
    const int base = 2 * i + 1 + pad;
    double a = 0.0;
    double d = 0.0;
    for (int k = 0; k < kSym5Len; ++k) {
      const double v = ext[base - k];
      a += h[static_cast<std::size_t>(k)] * v;
      d += g[static_cast<std::size_t>(k)] * v;
    }
    lo[i] = a;
    hi[i] = d;
  }
}

Dwt dwt(const Eigen::ArrayXd& x, int levels) {
  Dwt out;
  Eigen::ArrayXd cur = x;
  for (int l = 0; l < levels; ++l) {
    Eigen::ArrayXd lo;
    Eigen::ArrayXd hi;
    analysis_step(cur, lo, hi);
    out.details.push_back(std::move(hi));
    cur = std::move(lo);
  }
  out.approx = std::move(cur);
  return out;
}

Eigen::ArrayXd dwt_concat(const Dwt& d) {
  Eigen::Index total = d.approx.size();
  for (const auto& det : d.details) total += det.size();
  Eigen::ArrayXd out(total);
  Eigen::Index pos = 0;
  out.segment(pos, d.approx.size()) = d.approx;
  pos += d.approx.size();
  for (auto it = d.details.rbegin(); it != d.details.rend(); ++it) {
    out.segment(pos, it->size()) = *it;
    pos += it->size();
  }
  return out;
}

std::vector<Eigen::ArrayXd> wpt_nodes(const Eigen::ArrayXd& x, int levels) {
  struct Node {
    Eigen::ArrayXd coeffs;
    int freq;
  };
  std::vector<Node> cur;
  cur.push_back({x, 0});
  for (int l = 0; l < levels; ++l) {
    std::vector<Node> next;
    next.reserve(cur.size() * 2);
    for (auto& node : cur) {
      Eigen::ArrayXd lo;
      Eigen::ArrayXd hi;
      analysis_step(node.coeffs, lo, hi);
      // Decimating a highpass branch mirrors its spectrum, so the child
      // frequency slots swap whenever the parent's index is odd.
      const int f = node.freq;
      if (f % 2 == 0) {
        next.push_back({std::move(lo), 2 * f});
        next.push_back({std::move(hi), 2 * f + 1});
      } else {
        next.push_back({std::move(lo), 2 * f + 1});
        next.push_back({std::move(hi), 2 * f});
      }
    }
    cur = std::move(next);
  }
  std::sort(cur.begin(), cur.end(),
            [](const Node& a, const Node& b) { return a.freq < b.freq; });
  std::vector<Eigen::ArrayXd> out;
  out.reserve(cur.size());
  for (auto& node : cur) out.push_back(std::move(node.coeffs));
  return out;
}

}  // namespace wavelet
}  // namespace emgsens
