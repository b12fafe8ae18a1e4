#include "leap/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "leap/error.hpp"

namespace leap::stats {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw UsageError("mean of empty sample");
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw UsageError("quantile of empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] + frac * (xs[hi] - xs[lo]);
}

double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double binomial_upper_tail(std::size_t k, std::size_t n, double p) {
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  double total = 0.0;
  for (std::size_t i = k; i <= n; ++i) {
    const double ln_choose = std::lgamma(static_cast<double>(n) + 1.0) -
                             std::lgamma(static_cast<double>(i) + 1.0) -
                             std::lgamma(static_cast<double>(n - i) + 1.0);
    total += std::exp(ln_choose + static_cast<double>(i) * lp +
                      static_cast<double>(n - i) * lq);
  }
  return std::min(total, 1.0);
}

LineFit ols(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw UsageError("ols needs >= 2 paired points");
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw UsageError("ols needs at least two distinct x values");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  return fit;
}

namespace {

// Number of ways to reach each U value with n1 "first" and n2 "second"
// elements, via the standard recurrence f(n1, n2, u) = f(n1-1, n2, u-n2) + f(n1, n2-1, u).
std::vector<double> exact_u_counts(std::size_t n1, std::size_t n2) {
  std::vector<std::vector<std::vector<double>>> f(
      n1 + 1, std::vector<std::vector<double>>(n2 + 1));
  for (std::size_t i = 0; i <= n1; ++i) {
    for (std::size_t j = 0; j <= n2; ++j) {
      f[i][j].assign(i * j + 1, 0.0);
      if (i == 0 || j == 0) {
        f[i][j][0] = 1.0;
        continue;
      }
      for (std::size_t u = 0; u <= i * j; ++u) {
        double c = 0.0;
        if (u >= j) c += f[i - 1][j][u - j];
        if (u <= i * (j - 1)) c += f[i][j - 1][u];
        f[i][j][u] = c;
      }
    }
  }
  return f[n1][n2];
}

}  // namespace

RankTest mann_whitney_less(std::span<const double> first, std::span<const double> second) {
  if (first.empty() || second.empty()) throw UsageError("rank test needs two non-empty samples");
  const std::size_t n1 = first.size();
  const std::size_t n2 = second.size();

  // U counts pairs where the first-sample value exceeds the second-sample value,
  // so small U supports H1 (first is smaller).
  double u = 0.0;
  bool ties = false;
  for (double a : first) {
    for (double b : second) {
      if (a > b) u += 1.0;
      else if (a == b) {
        u += 0.5;
        ties = true;
      }
    }
  }

  RankTest out;
  out.u_statistic = u;
  if (!ties && n1 * n2 <= 400) {
    const auto counts = exact_u_counts(n1, n2);
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    double tail = 0.0;
    const auto uk = static_cast<std::size_t>(u);
    for (std::size_t k = 0; k <= uk; ++k) tail += counts[k];
    out.p_value = tail / total;
    out.exact = true;
    return out;
  }

  // Tie-corrected normal approximation.
  std::vector<double> pooled(first.begin(), first.end());
  pooled.insert(pooled.end(), second.begin(), second.end());
  std::sort(pooled.begin(), pooled.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double n = static_cast<double>(n1 + n2);
  const double mu = static_cast<double>(n1 * n2) / 2.0;
  const double var = static_cast<double>(n1 * n2) / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (var <= 0.0) {
    out.p_value = 1.0;
    return out;
  }
  out.p_value = normal_cdf((u - mu + 0.5) / std::sqrt(var));
  return out;
}

}  // namespace leap::stats
