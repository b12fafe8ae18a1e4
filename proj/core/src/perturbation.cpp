#include "leap/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "leap/error.hpp"

namespace leap {

void validate(const LeapConfig& cfg) {
  if (!(cfg.sigma >= 0.0) || !std::isfinite(cfg.sigma))
    throw ConfigError("leap.sigma", "must be a finite value >= 0");
}

void sample_lr_vector_into(double eta, const LeapConfig& cfg, RngStream& rng, std::span<double> out) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("eta", "base learning rate must be > 0");
  if (out.empty()) throw ConfigError("m", "parameter count must be >= 1");
  validate(cfg);
  if (cfg.inert()) {
    std::fill(out.begin(), out.end(), eta);
    return;
  }
  const double scale = eta * cfg.sigma;
  for (double& h : out) h = eta + scale * rng.normal();
}

LrVector sample_lr_vector(double eta, const LeapConfig& cfg, std::size_t m, RngStream& rng) {
  if (m == 0) throw ConfigError("m", "parameter count must be >= 1");
  LrVector h;
  h.base_eta = eta;
  h.values.resize(m);
  sample_lr_vector_into(eta, cfg, rng, h.values);
  return h;
}

PerturbationStats perturbation_stats(std::span<const LrVector> samples) {
  std::size_t n = 0;
  for (const auto& s : samples) n += s.size();
  if (n == 0) throw UsageError("perturbation_stats needs at least one entry");

  // Two passes keep the variance accurate when eta*sigma is tiny.
  double sum = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  std::size_t negatives = 0;
  for (const auto& s : samples) {
    for (double v : s.values) {
      sum += v;
      lo = std::min(lo, v);
      if (v < 0.0) ++negatives;
    }
  }
  const double m = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& s : samples)
    for (double v : s.values) ss += (v - m) * (v - m);

  PerturbationStats out;
  out.mean = m;
  out.variance = ss / static_cast<double>(n);
  out.min = lo;
  out.negative_fraction = static_cast<double>(negatives) / static_cast<double>(n);
  out.count = n;
  return out;
}

std::vector<double> default_sigma_grid() { return {0.1, 0.05, 0.01, 5e-3, 1e-3, 5e-4, 1e-4}; }

}  // namespace leap
