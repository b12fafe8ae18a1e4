#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "leap/landscapes.hpp"
#include "leap/perturbation.hpp"
#include "leap/rng.hpp"

namespace leap {

/// Which gradient the LEAP term multiplies in escape runs.
///
///  - Exact: theta -= h * grad L. Literal full-batch update; a trajectory that
///    starts on a minimum has zero gradient and never moves.
///  - Fisher (default): the drift uses grad L, while the perturbation
///    (h - eta) multiplies a minibatch-like gradient g~ = grad L + sqrt|diag H| * xi
///    whose second moment is grad L^2 + |diag H| (Fisher ~ Hessian). LEAP stays
///    the only stochastic term: with sigma = 0 this is plain gradient descent.
///  - Minibatch: theta -= h * g~, which also carries the minibatch noise
///    itself. Exploratory only.
enum class GradientNoise { Exact, Fisher, Minibatch };

std::string_view to_string(GradientNoise noise) noexcept;
GradientNoise gradient_noise_from_string(std::string_view name);

struct EscapeDynamics {
  double eta = 0.01;
  LeapConfig leap{0.0, true};
  GradientNoise noise = GradientNoise::Fisher;
};

struct EscapeTrialRecord {
  std::uint64_t trial_id = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;  ///< identifies (landscape, entry, dynamics, horizon, seed)
  bool escaped = false;
  bool diverged = false;
  std::int64_t escape_step = 0;  ///< valid iff escaped
  std::int64_t max_steps = 0;
  ParamVector final_theta;

  bool censored() const noexcept { return !escaped && !diverged; }
};

std::uint64_t escape_config_hash(const Landscape& landscape, const MinimaCatalogEntry& entry,
                                 const EscapeDynamics& dyn, std::int64_t max_steps, std::uint64_t seed);

/// One first-passage trajectory from entry.location_a, driven by stream
/// (seed, trial_id). Escape is the first step at which the basin predicate fails.
EscapeTrialRecord run_escape_trial(const Landscape& landscape, const MinimaCatalogEntry& entry,
                                   const EscapeDynamics& dyn, std::int64_t max_steps,
                                   std::uint64_t seed, std::uint64_t trial_id);

/// Runs trials 0..n-1 with a shared seed.
std::vector<EscapeTrialRecord> run_escape_trials(const Landscape& landscape,
                                                 const MinimaCatalogEntry& entry,
                                                 const EscapeDynamics& dyn, std::int64_t max_steps,
                                                 std::uint64_t seed, std::size_t n_trials);

inline constexpr double kMaxCensoredFraction = 0.05;
inline constexpr std::size_t kMinRecordsForEstimate = 100;
inline constexpr std::size_t kMinEscapesForValid = 100;

struct EscapeEstimate {
  double mean_steps = 0.0;       ///< over escaped trials
  double sd_steps = 0.0;
  double ci_halfwidth_95 = 0.0;  ///< 1.96 sd / sqrt(n_escaped)
  std::size_t n_trials = 0;
  std::size_t n_escaped = 0;
  std::size_t n_diverged = 0;
  double censored_fraction = 0.0;  ///< censored / (trials - diverged)
  /// censored_fraction <= 5% and at least 100 escapes.
  bool valid = false;
};

/// Requires >= 100 records that share one config hash.
EscapeEstimate estimate_escape_time(const std::vector<EscapeTrialRecord>& records);

struct GridPoint {
  double eta = 0.0;
  double sigma = 0.0;
  double inverse_eta_sigma_sq() const { return 1.0 / (eta * sigma * sigma); }
};

struct SweepPoint {
  GridPoint grid;
  std::uint64_t seed = 0;
  EscapeEstimate estimate;
};

struct Theorem1Fit {
  double slope = 0.0;  ///< coefficient of 1/(eta sigma^2) in log mean escape steps
  double intercept = 0.0;
  double r_squared = 0.0;
  /// (1/(eta sigma^2), log mean steps) for every valid point, in grid order.
  std::vector<std::pair<double, double>> points;
  double span_decades = 0.0;  ///< log10(max mean / min mean) over valid points
  /// Path parameter implied by slope = 2 dL (s / A_ae + (1 - s) / |A_be|)
  /// with the prefactor folded into the intercept. Diagnostic only.
  double implied_s = 0.0;
};

struct Theorem1Sweep {
  std::vector<SweepPoint> points;
  Theorem1Fit fit;
};

inline constexpr std::size_t kMinFitPoints = 4;

/// Estimates escape time at every grid point (seed per point derived from the
/// master seed and point index) and regresses log mean steps on 1/(eta sigma^2)
/// over the valid points. Throws FitError with fewer than 4 valid points.
Theorem1Sweep theorem1_sweep(const Landscape& landscape, const MinimaCatalogEntry& entry,
                             const std::vector<GridPoint>& grid, GradientNoise noise,
                             std::size_t trials_per_point, std::int64_t max_steps, std::uint64_t seed);

/// OLS fit over already-estimated points (invalid points are skipped).
Theorem1Fit fit_theorem1(const std::vector<SweepPoint>& points, const MinimaCatalogEntry& entry);

struct SelectionResult {
  double flat_fraction = 0.0;
  double ci_halfwidth_95 = 0.0;
  double p_value = 1.0;  ///< one-sided binomial, H1: flat fraction > 1/2
  std::size_t n_runs = 0;
  std::size_t n_flat = 0;
  std::size_t n_sharp = 0;
  std::size_t n_outside = 0;  ///< diverged or parked on the saddle
  bool valid = false;         ///< outside <= 5%
};

/// Each run starts at x = u * w, u ~ U[-1, 1], where w is the distance from
/// the saddle to the flat minimum for u < 0 and to the sharp minimum for
/// u > 0, so both basins receive half the initial mass. After `steps`
/// updates the final basin is classified. `flat` and `sharp` must share a
/// saddle. n_runs >= 500.
SelectionResult minima_selection_experiment(const Landscape& landscape, const MinimaCatalogEntry& flat,
                                            const MinimaCatalogEntry& sharp, const EscapeDynamics& dyn,
                                            std::size_t n_runs, std::int64_t steps, std::uint64_t seed);

/// Starting point of selection run `run` (first draw of stream (seed, run)).
double selection_start(const MinimaCatalogEntry& flat, const MinimaCatalogEntry& sharp,
                       std::uint64_t seed, std::uint64_t run);

}  // namespace leap
