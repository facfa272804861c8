#pragma once

#include <span>
#include <vector>

namespace cryptofactor::stats {

double mean(std::span<const double> x);

// Sample standard deviation (n-1 denominator); 0 for n < 2.
double sample_sd(std::span<const double> x);

// Population standard deviation (n denominator).
double population_sd(std::span<const double> x);

// Pearson correlation; NaN when either series is degenerate.
double pearson(std::span<const double> x, std::span<const double> y);

// Linear-interpolation quantile on a pre-sorted vector (type 7).
double quantile_sorted(std::span<const double> sorted, double p);

double normal_cdf(double z);

// Two-sided p-value under the standard normal.
double two_sided_p(double t);

// Clamps values outside the [lo_p, hi_p] empirical quantiles in place.
void winsorize(std::vector<double>& x, double lo_p, double hi_p);

}  // namespace cryptofactor::stats
