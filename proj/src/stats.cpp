#include "cryptofactor/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cryptofactor::stats {

double mean(std::span<const double> x) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_sd(std::span<const double> x) {
  const size_t n = x.size();
  if (n < 2) return 0.0;
  const double m = mean(x);
  double ss = 0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

double population_sd(std::span<const double> x) {
  const size_t n = x.size();
  if (n == 0) return 0.0;
  const double m = mean(x);
  double ss = 0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(n));
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const size_t n = std::min(x.size(), y.size());
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mx = mean(x.subspan(0, n));
  const double my = mean(y.subspan(0, n));
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0 || syy <= 0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

double quantile_sorted(std::span<const double> sorted, double p) {
  const size_t n = sorted.size();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  if (n == 1) return sorted[0];
  p = std::clamp(p, 0.0, 1.0);
  const double h = p * static_cast<double>(n - 1);
  const size_t lo = static_cast<size_t>(h);
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double two_sided_p(double t) { return std::erfc(std::fabs(t) / std::sqrt(2.0)); }

void winsorize(std::vector<double>& x, double lo_p, double hi_p) {
  if (x.size() < 3) return;
  std::vector<double> sorted(x);
  std::sort(sorted.begin(), sorted.end());
  const double lo = quantile_sorted(sorted, lo_p);
  const double hi = quantile_sorted(sorted, hi_p);
  for (double& v : x) v = std::clamp(v, lo, hi);
}

}  // namespace cryptofactor::stats
