#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "leap/perturbation.hpp"
#include "leap/rng.hpp"

namespace leap {

enum class OptimizerKind { Sgd, Adam };

/// How a per-parameter rate vector enters Adam.
///  - ScaleFinalStep: theta -= h * mhat / (sqrt(vhat) + eps)   (default)
///  - ScaleGradient:  the gradient is multiplied by h / eta before the moment
///    updates and the step uses the scalar eta.
enum class LeapAdamMode { ScaleFinalStep, ScaleGradient };

std::string_view to_string(OptimizerKind kind) noexcept;
std::string_view to_string(LeapAdamMode mode) noexcept;

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Sgd;
  double momentum_beta = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  ///< Coupled: added to the gradient.
  LeapAdamMode adam_mode = LeapAdamMode::ScaleFinalStep;
};

void validate(const OptimizerConfig& cfg);

struct OptimizerState {
  std::vector<double> velocity;
  std::vector<double> m1;
  std::vector<double> m2;
  std::int64_t step_count = 0;

  static OptimizerState zeros(std::size_t m);
};

/// Momentum SGD with per-parameter rates:
///   v <- beta v + (g + wd theta);  theta <- theta - h * v
/// With momentum_beta == 0 the velocity buffer is bypassed entirely.
void sgd_step(std::span<double> theta, std::span<const double> grad, std::span<const double> h,
              OptimizerState& state, const OptimizerConfig& cfg);

/// Bias-corrected Adam with per-parameter rates (see LeapAdamMode).
/// `eta` is the scalar base rate; only ScaleGradient mode reads it.
void adam_step(std::span<double> theta, std::span<const double> grad, std::span<const double> h,
               OptimizerState& state, const OptimizerConfig& cfg, double eta);

/// Scratch buffer reused across leap_step calls.
struct LeapScratch {
  std::vector<double> h;
};

/// One training update: sample h around schedule_eta, then dispatch to the
/// configured optimizer. Consumes exactly one h sample per call.
void leap_step(std::span<double> theta, std::span<const double> grad, double schedule_eta,
               const LeapConfig& leap_cfg, OptimizerState& state, const OptimizerConfig& cfg,
               RngStream& rng, LeapScratch& scratch);

}  // namespace leap
