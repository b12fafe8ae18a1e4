#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "leap/error.hpp"
#include "leap/perturbation.hpp"
#include "leap/stats.hpp"

using namespace leap;

TEST(Perturbation, ZeroSigmaIsConstantAndDoesNotAdvanceStream) {
  RngStream rng(1, 0);
  RngStream untouched(1, 0);
  const auto h = sample_lr_vector(0.1, {0.0, true}, 5, rng);
  EXPECT_EQ(h.values, std::vector<double>(5, 0.1));
  EXPECT_EQ(rng.normal(), untouched.normal());
}

TEST(Perturbation, DisabledIsConstant) {
  RngStream rng(1, 0);
  RngStream untouched(1, 0);
  const auto h = sample_lr_vector(0.1, {0.5, false}, 4, rng);
  EXPECT_EQ(h.values, std::vector<double>(4, 0.1));
  EXPECT_EQ(rng.normal(), untouched.normal());
}

TEST(Perturbation, FixedSeedRepeats) {
  RngStream a(7, 0);
  RngStream b(7, 0);
  EXPECT_EQ(sample_lr_vector(0.05, {0.1, true}, 100, a).values, sample_lr_vector(0.05, {0.1, true}, 100, b).values);
}

TEST(Perturbation, EntriesAreEtaPlusScaledNormals) {
  RngStream rng(3, 1);
  RngStream mirror(3, 1);
  const auto h = sample_lr_vector(0.2, {0.3, true}, 50, rng);
  for (double v : h.values) ASSERT_DOUBLE_EQ(v, 0.2 + 0.2 * 0.3 * mirror.normal());
}

TEST(Perturbation, MomentsMatchTheGaussianLaw) {
  RngStream rng(11, 0);
  const std::size_t m = 1'000'000;
  const auto h = sample_lr_vector(0.1, {0.05, true}, m, rng);
  const double sd = 0.1 * 0.05;
  const double mean = stats::mean(h.values);
  EXPECT_LT(std::abs(mean - 0.1), 3.0 * sd / std::sqrt(static_cast<double>(m)));
  EXPECT_LT(std::abs(stats::sample_variance(h.values) / (sd * sd) - 1.0), 0.05);
}

TEST(Perturbation, ScaleLawAcrossGrid) {
  RngStream rng(12, 0);
  for (double eta : {0.01, 0.5}) {
    for (double sigma : {0.001, 0.1, 1.0}) {
      const auto h = sample_lr_vector(eta, {sigma, true}, 200000, rng);
      const double target = eta * eta * sigma * sigma;
      EXPECT_LT(std::abs(stats::sample_variance(h.values) / target - 1.0), 0.02) << eta << " " << sigma;
    }
  }
}

TEST(Perturbation, DimensionsAreUncorrelatedAcrossSamples) {
  RngStream rng(5, 0);
  const int n = 100000;
  double s01 = 0, s12 = 0;
  for (int k = 0; k < n; ++k) {
    const auto h = sample_lr_vector(1.0, {1.0, true}, 3, rng);
    s01 += (h.values[0] - 1.0) * (h.values[1] - 1.0);
    s12 += (h.values[1] - 1.0) * (h.values[2] - 1.0);
  }
  EXPECT_LT(std::abs(s01 / n), 0.015);
  EXPECT_LT(std::abs(s12 / n), 0.015);
}

TEST(Perturbation, StatsOnZeroSigma) {
  RngStream rng(1, 0);
  std::vector<LrVector> samples{sample_lr_vector(0.1, {0.0, true}, 10, rng), sample_lr_vector(0.1, {0.0, true}, 10, rng)};
  const auto st = perturbation_stats(samples);
  EXPECT_NEAR(st.variance, 0.0, 1e-30);
  EXPECT_EQ(st.negative_fraction, 0.0);
  EXPECT_EQ(st.count, 20u);
  EXPECT_DOUBLE_EQ(st.mean, 0.1);
}

TEST(Perturbation, NegativeFractionFollowsNormalCdf) {
  RngStream rng(2, 0);
  std::vector<LrVector> small{sample_lr_vector(0.1, {0.05, true}, 1'000'000, rng)};
  EXPECT_LT(perturbation_stats(small).negative_fraction, 1e-6);
  std::vector<LrVector> big{sample_lr_vector(0.1, {0.5, true}, 1'000'000, rng)};
  EXPECT_NEAR(perturbation_stats(big).negative_fraction, stats::normal_cdf(-2.0), 0.003);
  EXPECT_LT(perturbation_stats(big).min, 0.0);  // never clamped
}

TEST(Perturbation, Errors) {
  RngStream rng(1, 0);
  EXPECT_THROW(sample_lr_vector(0.0, {0.1, true}, 3, rng), ConfigError);
  EXPECT_THROW(sample_lr_vector(0.1, {0.1, true}, 0, rng), ConfigError);
  EXPECT_THROW(perturbation_stats({}), UsageError);
  EXPECT_THROW(validate(LeapConfig{-0.1, true}), ConfigError);
}

TEST(Perturbation, DefaultGrid) {
  EXPECT_EQ(default_sigma_grid(), (std::vector<double>{0.1, 0.05, 0.01, 5e-3, 1e-3, 5e-4, 1e-4}));
}
