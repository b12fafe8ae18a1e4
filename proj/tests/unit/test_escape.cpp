#include <gtest/gtest.h>

#include <cmath>

#include "leap/error.hpp"
#include "leap/escape.hpp"
#include "leap/landscapes.hpp"
#include "leap/stats.hpp"

using namespace leap;

namespace {

std::vector<EscapeTrialRecord> synthetic(std::size_t n, std::uint64_t hash) {
  std::vector<EscapeTrialRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].trial_id = i;
    out[i].config_hash = hash;
    out[i].max_steps = 1000000;
  }
  return out;
}

SweepPoint valid_point(double eta, double sigma, double mean) {
  SweepPoint p;
  p.grid = {eta, sigma};
  p.estimate.mean_steps = mean;
  p.estimate.valid = true;
  return p;
}

}  // namespace

TEST(EscapeTrial, ZeroSigmaNeverEscapes) {
  const auto q = quartic_double_well({});
  for (auto noise : {GradientNoise::Exact, GradientNoise::Fisher}) {
    const auto r = run_escape_trial(*q.landscape, q.catalog[0], {0.05, {0.0, true}, noise}, 500, 1, 0);
    EXPECT_FALSE(r.escaped);
    EXPECT_TRUE(r.censored());
    EXPECT_TRUE(q.catalog[0].in_basin(r.final_theta));
    EXPECT_EQ(r.final_theta[0], 1.0);
  }
}

TEST(EscapeTrial, ExactGradientIsStuckAtTheMinimum) {
  // grad L(a) = 0 makes h * grad L vanish whatever h is.
  const auto q = quartic_double_well({});
  const auto r = run_escape_trial(*q.landscape, q.catalog[0], {0.05, {10.0, true}, GradientNoise::Exact}, 1000, 1, 0);
  EXPECT_TRUE(r.censored());
  EXPECT_EQ(r.final_theta[0], 1.0);
}

TEST(EscapeTrial, LargeSigmaEscapesQuickly) {
  const auto q = quartic_double_well({});
  const auto recs = run_escape_trials(*q.landscape, q.catalog[0], {0.01, {10.0, true}, GradientNoise::Fisher}, 2000, 3, 200);
  std::vector<double> steps;
  for (const auto& r : recs) {
    ASSERT_TRUE(r.escaped);
    steps.push_back(static_cast<double>(r.escape_step));
  }
  EXPECT_LT(stats::mean(steps), 100.0);
}

TEST(EscapeTrial, Deterministic) {
  const auto q = quartic_double_well({});
  const EscapeDynamics dyn{0.05, {1.0, true}, GradientNoise::Fisher};
  const auto a = run_escape_trial(*q.landscape, q.catalog[0], dyn, 100000, 7, 4);
  const auto b = run_escape_trial(*q.landscape, q.catalog[0], dyn, 100000, 7, 4);
  EXPECT_EQ(a.escape_step, b.escape_step);
  EXPECT_EQ(a.final_theta, b.final_theta);
  EXPECT_EQ(a.config_hash, b.config_hash);
  const auto c = run_escape_trial(*q.landscape, q.catalog[0], dyn, 100000, 7, 5);
  EXPECT_NE(a.final_theta, c.final_theta);
}

TEST(EscapeTrial, RecordInvariants) {
  const auto q = quartic_double_well({1.0, 0.0, 1.0});
  const auto recs = run_escape_trials(*q.landscape, q.catalog[1], {0.05, {0.8, true}, GradientNoise::Fisher}, 3000, 2, 150);
  for (const auto& r : recs) {
    if (r.escaped) {
      EXPECT_GE(r.escape_step, 1);
      EXPECT_LE(r.escape_step, r.max_steps);
      EXPECT_FALSE(q.catalog[1].in_basin(r.final_theta));
    } else if (!r.diverged) {
      EXPECT_TRUE(q.catalog[1].in_basin(r.final_theta));
    }
  }
}

TEST(EscapeTrial, MeanTimeDecreasesWithSigma) {
  const auto q = quartic_double_well({});
  std::vector<double> means;
  std::vector<std::vector<double>> samples;
  for (double sigma : {0.9, 1.2, 1.6, 2.2}) {
    const auto recs = run_escape_trials(*q.landscape, q.catalog[0], {0.05, {sigma, true}, GradientNoise::Fisher}, 1000000, 11, 200);
    const auto est = estimate_escape_time(recs);
    ASSERT_TRUE(est.valid);
    means.push_back(est.mean_steps);
    std::vector<double> s;
    for (const auto& r : recs) s.push_back(static_cast<double>(r.escape_step));
    samples.push_back(s);
  }
  for (std::size_t i = 1; i < means.size(); ++i) {
    EXPECT_LT(means[i], means[i - 1]);
    // larger sigma escapes stochastically sooner
    EXPECT_LT(stats::mann_whitney_less(samples[i], samples[i - 1]).p_value, 0.01);
  }
}

TEST(EscapeEstimate, DegenerateRecords) {
  auto recs = synthetic(150, 1);
  for (auto& r : recs) {
    r.escaped = true;
    r.escape_step = 42;
  }
  const auto est = estimate_escape_time(recs);
  EXPECT_EQ(est.mean_steps, 42.0);
  EXPECT_EQ(est.ci_halfwidth_95, 0.0);
  EXPECT_TRUE(est.valid);
}

TEST(EscapeEstimate, GeometricOracle) {
  const double p = 0.01;
  RngStream rng(5, 0);
  std::geometric_distribution<long> geo(p);
  auto recs = synthetic(1000, 2);
  for (auto& r : recs) {
    r.escaped = true;
    r.escape_step = 1 + geo(rng.engine());
  }
  const auto est = estimate_escape_time(recs);
  const double sd = std::sqrt(1.0 - p) / p;
  EXPECT_LT(std::abs(est.mean_steps - 1.0 / p), 3.0 * sd / std::sqrt(1000.0));
}

TEST(EscapeEstimate, CensoringThreshold) {
  auto recs = synthetic(500, 3);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    recs[i].escaped = i >= 100;  // 20% censored
    recs[i].escape_step = recs[i].escaped ? 10 : 0;
  }
  const auto est = estimate_escape_time(recs);
  EXPECT_DOUBLE_EQ(est.censored_fraction, 0.2);
  EXPECT_FALSE(est.valid);
}

TEST(EscapeEstimate, DivergedTrialsAreExcluded) {
  auto recs = synthetic(200, 4);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    recs[i].escaped = i % 10 != 0;
    recs[i].diverged = i % 10 == 0;
    recs[i].escape_step = 5;
  }
  const auto est = estimate_escape_time(recs);
  EXPECT_EQ(est.n_diverged, 20u);
  EXPECT_EQ(est.censored_fraction, 0.0);
  EXPECT_EQ(est.n_escaped, 180u);
}

TEST(EscapeEstimate, PreconditionErrors) {
  EXPECT_THROW(estimate_escape_time(synthetic(99, 1)), UsageError);
  auto mixed = synthetic(150, 1);
  mixed[3].config_hash = 2;
  EXPECT_THROW(estimate_escape_time(mixed), UsageError);
}

TEST(EscapeLawFit, RecoversExactExponentialLaw) {
  const auto q = quartic_double_well({});
  std::vector<SweepPoint> pts;
  for (double sigma : {0.6, 0.7, 0.8, 0.9, 1.0}) {
    const double x = 1.0 / (0.05 * sigma * sigma);
    pts.push_back(valid_point(0.05, sigma, std::exp(0.25 * x + 2.0)));
  }
  const auto fit = fit_theorem1(pts, q.catalog[0]);
  EXPECT_NEAR(fit.slope, 0.25, 1e-12);
  EXPECT_NEAR(fit.intercept, 2.0, 1e-10);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
  EXPECT_EQ(fit.points.size(), 5u);
  // q''(1) = 8 and |q''(0)| = 4, so 0.25 = 2 (s/8 + (1-s)/4) gives s = 1
  EXPECT_NEAR(fit.implied_s, 1.0, 1e-12);
}

TEST(EscapeLawFit, TooFewValidPoints) {
  const auto q = quartic_double_well({});
  std::vector<SweepPoint> pts{valid_point(0.05, 1.0, 10), valid_point(0.05, 0.9, 20), valid_point(0.05, 0.8, 40)};
  SweepPoint bad = valid_point(0.05, 0.5, 1e6);
  bad.estimate.valid = false;
  pts.push_back(bad);
  EXPECT_THROW(fit_theorem1(pts, q.catalog[0]), FitError);
}

TEST(EscapeLawSweep, SeedsAreDerivedPerPoint) {
  const auto q = quartic_double_well({});
  const std::vector<GridPoint> grid{{0.05, 2.0}, {0.05, 1.8}, {0.05, 1.6}, {0.05, 1.4}};
  const auto sweep = theorem1_sweep(*q.landscape, q.catalog[0], grid, GradientNoise::Fisher, 100, 100000, 9);
  ASSERT_EQ(sweep.points.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(sweep.points[i].seed, derive_seed(9, i));
  EXPECT_GT(sweep.fit.slope, 0.0);
  const auto again = theorem1_sweep(*q.landscape, q.catalog[0], grid, GradientNoise::Fisher, 100, 100000, 9);
  EXPECT_EQ(again.fit.slope, sweep.fit.slope);
}

TEST(Selection, SymmetricLandscapeIsBalanced) {
  const auto c = curvature_family(4.0, 4.0, 1.0);
  const auto res = minima_selection_experiment(*c.landscape, c.catalog[0], c.catalog[1],
                                               {0.05, {1.0, true}, GradientNoise::Fisher}, 600, 3000, 1);
  EXPECT_TRUE(res.valid);
  EXPECT_LE(std::abs(res.flat_fraction - 0.5), res.ci_halfwidth_95 * 1.3);
}

TEST(Selection, TinySigmaReproducesTheStartPartition) {
  const auto c = curvature_family(2.0, 8.0, 1.0);
  const std::uint64_t seed = 21;
  const std::size_t runs = 500;
  std::size_t left = 0;
  for (std::size_t r = 0; r < runs; ++r) left += selection_start(c.catalog[0], c.catalog[1], seed, r) < 0.0;
  const auto res = minima_selection_experiment(*c.landscape, c.catalog[0], c.catalog[1],
                                               {0.05, {1e-3, true}, GradientNoise::Fisher}, runs, 200, seed);
  EXPECT_EQ(res.n_flat, left);
  EXPECT_EQ(res.n_outside, 0u);
}

TEST(Selection, RejectsBadInputs) {
  const auto c = curvature_family(2.0, 8.0, 1.0);
  const EscapeDynamics dyn{0.05, {1.0, true}, GradientNoise::Fisher};
  EXPECT_THROW(minima_selection_experiment(*c.landscape, c.catalog[0], c.catalog[1], dyn, 499, 10, 1), ConfigError);
  EXPECT_THROW(minima_selection_experiment(*c.landscape, c.catalog[0], c.catalog[0], dyn, 500, 10, 1), UsageError);
}
