#include "leap/escape.hpp"

#include <cmath>

#include "leap/error.hpp"
#include "leap/optimizers.hpp"
#include "leap/stats.hpp"

namespace leap {

std::string_view to_string(GradientNoise noise) noexcept {
  switch (noise) {
    case GradientNoise::Exact: return "exact";
    case GradientNoise::Fisher: return "fisher";
    case GradientNoise::Minibatch: return "minibatch";
  }
  return "unknown";
}

GradientNoise gradient_noise_from_string(std::string_view name) {
  if (name == "exact") return GradientNoise::Exact;
  if (name == "fisher") return GradientNoise::Fisher;
  if (name == "minibatch") return GradientNoise::Minibatch;
  throw ConfigError("escape.gradient_noise", "expected exact, fisher or minibatch; got '" + std::string(name) + "'");
}

namespace {

std::uint64_t hash_bytes(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <class T>
std::uint64_t hash_value(std::uint64_t h, const T& v) {
  return hash_bytes(h, &v, sizeof(T));
}

// One update of the escape dynamics; buffers are owned by the caller.
class Stepper {
 public:
  Stepper(const Landscape& landscape, const EscapeDynamics& dyn)
      : landscape_(landscape),
        dyn_(dyn),
        grad_(landscape.dim()),
        noisy_(landscape.dim()),
        curv_(landscape.dim()),
        state_(OptimizerState::zeros(landscape.dim())) {
    sgd_.kind = OptimizerKind::Sgd;
    sgd_.momentum_beta = 0.0;
    scratch_.h.resize(landscape.dim());
  }

  void step(std::span<double> theta, RngStream& rng) {
    landscape_.gradient(theta, grad_);
    if (dyn_.noise == GradientNoise::Exact) {
      leap_step(theta, grad_, dyn_.eta, dyn_.leap, state_, sgd_, rng, scratch_);
      return;
    }
    auto& h = scratch_.h;
    sample_lr_vector_into(dyn_.eta, dyn_.leap, rng, h);
    if (dyn_.leap.inert()) {
      // Zero perturbation: the minibatch fluctuation would still move a
      // Minibatch-mode trajectory, so only skip the draw for Fisher mode.
      if (dyn_.noise == GradientNoise::Fisher) {
        for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= dyn_.eta * grad_[i];
        return;
      }
    }
    landscape_.hessian_diag(theta, curv_);
    for (std::size_t i = 0; i < theta.size(); ++i)
      noisy_[i] = grad_[i] + std::sqrt(std::abs(curv_[i])) * rng.normal();
    if (dyn_.noise == GradientNoise::Fisher) {
      for (std::size_t i = 0; i < theta.size(); ++i)
        theta[i] -= dyn_.eta * grad_[i] + (h[i] - dyn_.eta) * noisy_[i];
    } else {
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= h[i] * noisy_[i];
    }
  }

 private:
  const Landscape& landscape_;
  EscapeDynamics dyn_;
  std::vector<double> grad_;
  std::vector<double> noisy_;
  std::vector<double> curv_;
  OptimizerState state_;
  OptimizerConfig sgd_;
  LeapScratch scratch_;
};

bool all_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

void check_dynamics(const EscapeDynamics& dyn) {
  if (!(dyn.eta > 0.0)) throw ConfigError("escape.eta", "must be > 0");
  validate(dyn.leap);
}

}  // namespace

std::uint64_t escape_config_hash(const Landscape& landscape, const MinimaCatalogEntry& entry,
                                 const EscapeDynamics& dyn, std::int64_t max_steps, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto name = landscape.name();
  h = hash_bytes(h, name.data(), name.size());
  h = hash_bytes(h, entry.label.data(), entry.label.size());
  for (double v : entry.location_a) h = hash_value(h, v);
  h = hash_value(h, dyn.eta);
  h = hash_value(h, dyn.leap.sigma);
  h = hash_value(h, dyn.leap.enabled);
  h = hash_value(h, static_cast<int>(dyn.noise));
  h = hash_value(h, max_steps);
  h = hash_value(h, seed);
  return h;
}

EscapeTrialRecord run_escape_trial(const Landscape& landscape, const MinimaCatalogEntry& entry,
                                   const EscapeDynamics& dyn, std::int64_t max_steps,
                                   std::uint64_t seed, std::uint64_t trial_id) {
  check_dynamics(dyn);
  if (max_steps < 1) throw ConfigError("escape.max_steps", "must be >= 1");
  if (entry.location_a.size() != landscape.dim()) throw UsageError("catalog entry does not match landscape");

  EscapeTrialRecord rec;
  rec.trial_id = trial_id;
  rec.seed = seed;
  rec.max_steps = max_steps;
  rec.config_hash = escape_config_hash(landscape, entry, dyn, max_steps, seed);

  RngStream rng(seed, trial_id);
  Stepper stepper(landscape, dyn);
  ParamVector theta = entry.location_a;
  for (std::int64_t step = 1; step <= max_steps; ++step) {
    stepper.step(theta, rng);
    if (!all_finite(theta)) {
      rec.diverged = true;
      rec.escape_step = step;
      break;
    }
    if (!entry.in_basin(theta)) {
      rec.escaped = true;
      rec.escape_step = step;
      break;
    }
  }
  rec.final_theta = std::move(theta);
  return rec;
}

std::vector<EscapeTrialRecord> run_escape_trials(const Landscape& landscape,
                                                 const MinimaCatalogEntry& entry,
                                                 const EscapeDynamics& dyn, std::int64_t max_steps,
                                                 std::uint64_t seed, std::size_t n_trials) {
  std::vector<EscapeTrialRecord> out;
  out.reserve(n_trials);
  for (std::size_t t = 0; t < n_trials; ++t)
    out.push_back(run_escape_trial(landscape, entry, dyn, max_steps, seed, t));
  return out;
}

EscapeEstimate estimate_escape_time(const std::vector<EscapeTrialRecord>& records) {
  if (records.size() < kMinRecordsForEstimate)
    throw UsageError("escape estimate needs >= " + std::to_string(kMinRecordsForEstimate) +
                     " records, got " + std::to_string(records.size()));
  const auto hash = records.front().config_hash;
  for (const auto& r : records)
    if (r.config_hash != hash) throw UsageError("records come from more than one configuration");

  EscapeEstimate est;
  est.n_trials = records.size();
  std::vector<double> steps;
  steps.reserve(records.size());
  std::size_t censored = 0;
  for (const auto& r : records) {
    if (r.diverged) ++est.n_diverged;
    else if (r.escaped) steps.push_back(static_cast<double>(r.escape_step));
    else ++censored;
  }
  est.n_escaped = steps.size();
  const std::size_t usable = est.n_trials - est.n_diverged;
  est.censored_fraction = usable == 0 ? 1.0 : static_cast<double>(censored) / static_cast<double>(usable);
  if (!steps.empty()) {
    est.mean_steps = stats::mean(steps);
    est.sd_steps = std::sqrt(stats::sample_variance(steps));
    est.ci_halfwidth_95 = 1.96 * est.sd_steps / std::sqrt(static_cast<double>(steps.size()));
  }
  est.valid = est.censored_fraction <= kMaxCensoredFraction && est.n_escaped >= kMinEscapesForValid;
  return est;
}

Theorem1Fit fit_theorem1(const std::vector<SweepPoint>& points, const MinimaCatalogEntry& entry) {
  std::vector<double> xs, ys;
  Theorem1Fit fit;
  for (const auto& p : points) {
    if (!p.estimate.valid) continue;
    xs.push_back(p.grid.inverse_eta_sigma_sq());
    ys.push_back(std::log(p.estimate.mean_steps));
    fit.points.emplace_back(xs.back(), ys.back());
  }
  if (xs.size() < kMinFitPoints)
    throw FitError("only " + std::to_string(xs.size()) + " valid grid points (need " +
                   std::to_string(kMinFitPoints) +
                   "); widen the grid or raise max_steps so fewer trials are censored");
  const auto line = stats::ols(xs, ys);
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  fit.r_squared = line.r_squared;
  const auto [lo, hi] = std::minmax_element(ys.begin(), ys.end());
  fit.span_decades = (*hi - *lo) / std::log(10.0);
  const double inv_a = 1.0 / entry.A_ae;
  const double inv_b = 1.0 / std::abs(entry.A_be);
  fit.implied_s = inv_a == inv_b ? std::nan("")
                                 : (fit.slope / (2.0 * entry.delta_L) - inv_b) / (inv_a - inv_b);
  return fit;
}

Theorem1Sweep theorem1_sweep(const Landscape& landscape, const MinimaCatalogEntry& entry,
                             const std::vector<GridPoint>& grid, GradientNoise noise,
                             std::size_t trials_per_point, std::int64_t max_steps, std::uint64_t seed) {
  if (grid.empty()) throw ConfigError("sweep.grid", "must not be empty");
  Theorem1Sweep out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EscapeDynamics dyn;
    dyn.eta = grid[i].eta;
    dyn.leap = LeapConfig{grid[i].sigma, true};
    dyn.noise = noise;
    SweepPoint p;
    p.grid = grid[i];
    p.seed = derive_seed(seed, i);
    p.estimate = estimate_escape_time(run_escape_trials(landscape, entry, dyn, max_steps, p.seed, trials_per_point));
    out.points.push_back(p);
  }
  out.fit = fit_theorem1(out.points, entry);
  return out;
}

namespace {

double map_start(const MinimaCatalogEntry& flat, const MinimaCatalogEntry& sharp, double u) {
  const std::size_t ax = flat.escape_axis;
  const double saddle = flat.location_b[ax];
  const double w_flat = flat.location_a[ax] - saddle;
  const double w_sharp = sharp.location_a[ax] - saddle;
  return saddle + (u < 0.0 ? -u * w_flat : u * w_sharp);
}

}  // namespace

double selection_start(const MinimaCatalogEntry& flat, const MinimaCatalogEntry& sharp,
                       std::uint64_t seed, std::uint64_t run) {
  RngStream rng(seed, run);
  return map_start(flat, sharp, rng.uniform(-1.0, 1.0));
}

SelectionResult minima_selection_experiment(const Landscape& landscape, const MinimaCatalogEntry& flat,
                                            const MinimaCatalogEntry& sharp, const EscapeDynamics& dyn,
                                            std::size_t n_runs, std::int64_t steps, std::uint64_t seed) {
  check_dynamics(dyn);
  if (n_runs < 500) throw ConfigError("selection.n_runs", "must be >= 500");
  if (steps < 1) throw ConfigError("selection.steps", "must be >= 1");
  if (flat.escape_axis != sharp.escape_axis || flat.location_b != sharp.location_b)
    throw UsageError("flat and sharp entries must share one saddle");
  if ((flat.location_a[flat.escape_axis] - flat.location_b[flat.escape_axis]) *
          (sharp.location_a[sharp.escape_axis] - sharp.location_b[sharp.escape_axis]) >= 0.0)
    throw UsageError("flat and sharp minima must lie on opposite sides of the saddle");

  SelectionResult res;
  res.n_runs = n_runs;
  Stepper stepper(landscape, dyn);
  for (std::size_t run = 0; run < n_runs; ++run) {
    RngStream rng(seed, run);
    ParamVector theta = flat.location_b;
    theta[flat.escape_axis] = map_start(flat, sharp, rng.uniform(-1.0, 1.0));
    bool diverged = false;
    for (std::int64_t s = 0; s < steps; ++s) {
      stepper.step(theta, rng);
      if (!all_finite(theta)) {
        diverged = true;
        break;
      }
    }
    if (diverged) ++res.n_outside;
    else if (flat.in_basin(theta)) ++res.n_flat;
    else if (sharp.in_basin(theta)) ++res.n_sharp;
    else ++res.n_outside;
  }
  const std::size_t n = res.n_flat + res.n_sharp;
  if (n > 0) {
    res.flat_fraction = static_cast<double>(res.n_flat) / static_cast<double>(n);
    res.ci_halfwidth_95 =
        1.96 * std::sqrt(res.flat_fraction * (1.0 - res.flat_fraction) / static_cast<double>(n));
    res.p_value = stats::binomial_upper_tail(res.n_flat, n, 0.5);
  }
  res.valid = static_cast<double>(res.n_outside) <= 0.05 * static_cast<double>(n_runs);
  return res;
}

}  // namespace leap
