#include "emgsens/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "emgsens/errors.hpp"

namespace emgsens {

namespace {

// Continued-fraction core for the incomplete beta (modified Lentz).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  return h;  // converged for all practical (a, b, x) we pass in
}

double clip_p(double p) {
  if (p > 1.0) return 1.0;
  if (p <= 0.0) return std::numeric_limits<double>::denorm_min();
  return p;
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / M_SQRT2); }

double p_two_tailed_normal(double t) {
  return clip_p(std::erfc(std::fabs(t) / M_SQRT2));
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                          std::lgamma(b) + a * std::log(x) +
                          b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double p_two_tailed_student(double t, double df) {
  if (df <= 0.0) throw NumericError("student t: df must be positive");
  const double x = df / (df + t * t);
  return clip_p(incomplete_beta(0.5 * df, 0.5, x));
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw NumericError("quantile of empty vector");
  std::sort(v.begin(), v.end());
  if (q <= 0.0) return v.front();
  if (q >= 1.0) return v.back();
  const double h = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

}  // namespace emgsens
