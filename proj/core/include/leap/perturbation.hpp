#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "leap/rng.hpp"

namespace leap {

/// Perturbation intensity sigma scales the noise standard deviation relative
/// to the base rate: h_i = eta + eta * sigma * z_i.
struct LeapConfig {
  double sigma = 0.0;
  bool enabled = false;

  /// True when sampling would produce a constant vector.
  bool inert() const noexcept { return !enabled || sigma == 0.0; }
};

void validate(const LeapConfig& cfg);

/// Per-parameter learning rates sampled around base_eta.
struct LrVector {
  std::vector<double> values;
  double base_eta = 0.0;

  std::size_t size() const noexcept { return values.size(); }
};

/// Draw h ~ N(eta * 1, eta^2 sigma^2 I). Entries are not clamped, so negative
/// rates are possible for large sigma. When cfg is inert every entry equals eta
/// and the stream is left untouched.
LrVector sample_lr_vector(double eta, const LeapConfig& cfg, std::size_t m, RngStream& rng);

/// Allocation-free variant for hot loops; writes into `out`.
void sample_lr_vector_into(double eta, const LeapConfig& cfg, RngStream& rng, std::span<double> out);

struct PerturbationStats {
  double mean = 0.0;
  double variance = 0.0;  ///< Pooled population variance over all entries.
  double min = 0.0;
  double negative_fraction = 0.0;
  std::size_t count = 0;
};

PerturbationStats perturbation_stats(std::span<const LrVector> samples);

/// Default sigma search grid for sweeps.
std::vector<double> default_sigma_grid();

}  // namespace leap
