#pragma once

#include <span>

namespace covest::stats {

double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> xs);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

struct PairedTest {
  double mean_difference = 0.0;  // mean(a - b)
  double t_statistic = 0.0;
  double p_value = 1.0;          // one-sided, H1: mean(a - b) < 0
};

/// One-sided paired t-test that `a` is smaller than `b`.
PairedTest paired_t_test_less(std::span<const double> a, std::span<const double> b);

}  // namespace covest::stats
