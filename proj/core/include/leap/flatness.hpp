#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "leap/models.hpp"
#include "leap/rng.hpp"
#include "leap/stats.hpp"
#include "leap/tensor.hpp"

namespace leap {

/// theta -> gradient of the loss being probed.
using GradientFn = std::function<ParamVector(std::span<const double>)>;
/// v -> H v for a fixed theta.
using LinearOperator = std::function<std::vector<double>(std::span<const double>)>;

inline constexpr double kDefaultHvpEpsilon = 1e-4;
inline constexpr double kDefaultDiagEpsilon = 1e-4;

/// (grad(theta + eps v) - grad(theta - eps v)) / (2 eps). v must be a unit vector.
std::vector<double> hvp_fd(const GradientFn& grad, std::span<const double> theta,
                           std::span<const double> v, double epsilon = kDefaultHvpEpsilon);

/// Central-difference diagonal of the Hessian with step eps * (1 + |theta_i|).
/// When `coordinates` is non-empty only those entries are computed (others are 0).
std::vector<double> hessian_diag_fd(const GradientFn& grad, std::span<const double> theta,
                                    double epsilon = kDefaultDiagEpsilon,
                                    std::span<const std::size_t> coordinates = {});

struct PowerIterationResult {
  double eigenvalue = 0.0;      ///< final Rayleigh quotient
  double max_abs_rayleigh = 0.0;
  std::size_t iterations = 0;
  std::size_t restarts = 0;
  bool converged = false;
  std::vector<double> rayleigh_history;
};

/// Power iteration from a random unit start. Converged when successive
/// Rayleigh quotients differ by less than tol * max(1, |estimate|). The
/// dominant-magnitude eigenvalue is returned with its sign. A zero image
/// restarts from a fresh random vector, at most three times.
PowerIterationResult top_eigenvalue_power_iteration(const LinearOperator& hvp, std::size_t dim,
                                                    std::size_t max_iters, double tol, RngStream& rng);

struct DiagSummary {
  double mean = 0.0;
  double max = 0.0;
  double p95 = 0.0;
};

struct FlatnessReport {
  double top_eigenvalue = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  double max_abs_rayleigh = 0.0;
  DiagSummary hessian_diag_summary;
  std::size_t probe_points = 0;  ///< diagonal entries sampled for the summary
  double fd_epsilon = kDefaultHvpEpsilon;
};

struct FlatnessOptions {
  std::size_t max_iters = 300;
  double tol = 1e-5;
  /// Step for both the HVP and the diagonal probes. ReLU networks want a much
  /// smaller step than smooth landscapes: a probe that crosses an activation
  /// kink turns the difference quotient into a jump.
  double fd_epsilon = kDefaultHvpEpsilon;
  /// Diagonal entries sampled (without replacement) for the summary; 0 or
  /// >= M means every coordinate.
  std::size_t probe_points = 256;
};

/// Top eigenvalue plus diag(H) summary at theta.
FlatnessReport flatness_report(const GradientFn& grad, std::span<const double> theta,
                               const FlatnessOptions& options, RngStream& rng);

struct FlatnessArm {
  std::string name;
  MlpSpec spec;
  std::vector<ParamVector> thetas;
  std::vector<std::uint64_t> seeds;  ///< optional labels for the table
};

struct FlatnessRow {
  std::string arm;
  std::uint64_t seed = 0;
  FlatnessReport report;
};

struct FlatnessComparison {
  std::vector<FlatnessRow> rows;
  double median_top_vanilla = 0.0;
  double median_top_leap = 0.0;
  double median_diag_max_vanilla = 0.0;
  double median_diag_max_leap = 0.0;
  stats::RankTest top_test;   ///< H1: LEAP top eigenvalues smaller
  stats::RankTest diag_test;  ///< H1: LEAP diag(H) maxima smaller
  bool all_converged = false;
  bool direction_holds = false;  ///< median_top_leap <= median_top_vanilla
  std::size_t examples_used = 0;
};

/// Compares curvature of two arms on the same example set (the full training
/// loss, optionally subsampled by the caller). Needs >= 5 thetas per arm and
/// identical specs.
FlatnessComparison compare_flatness(const FlatnessArm& vanilla, const FlatnessArm& leap_arm,
                                    const Eigen::Ref<const RowMatrix>& inputs,
                                    std::span<const int> labels, const FlatnessOptions& options,
                                    std::uint64_t seed);

/// Rank-test summary over precomputed per-arm metrics.
struct MetricComparison {
  double median_first = 0.0;
  double median_second = 0.0;
  stats::RankTest test;
};
MetricComparison compare_metric(std::span<const double> leap_values, std::span<const double> vanilla_values);

}  // namespace leap
