#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace leap::stats {

double mean(std::span<const double> xs);
/// Unbiased (n-1) sample variance; 0 for fewer than two samples.
double sample_variance(std::span<const double> xs);
double median(std::vector<double> xs);
/// Linear-interpolated quantile, q in [0, 1].
double quantile(std::vector<double> xs, double q);

/// Standard normal CDF.
double normal_cdf(double z);

/// P(X >= k) for X ~ Binomial(n, p).
double binomial_upper_tail(std::size_t k, std::size_t n, double p);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = slope * x + intercept. Needs >= 2 distinct x.
LineFit ols(std::span<const double> x, std::span<const double> y);

struct RankTest {
  double u_statistic = 0.0;  ///< Mann-Whitney U for the first sample.
  double p_value = 1.0;      ///< One-sided: first sample stochastically smaller.
  bool exact = false;
};

/// One-sided Mann-Whitney U test of H1: `first` tends to be smaller than
/// `second`. Exact null distribution (no ties) for n1 * n2 <= 400, otherwise a
/// tie-corrected normal approximation with continuity correction. Ties count
/// one half in U; with ties present the normal approximation is always used.
RankTest mann_whitney_less(std::span<const double> first, std::span<const double> second);

}  // namespace leap::stats
