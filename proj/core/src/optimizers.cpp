#include "leap/optimizers.hpp"

#include <cmath>

#include "leap/error.hpp"

namespace leap {

std::string_view to_string(OptimizerKind kind) noexcept {
  return kind == OptimizerKind::Sgd ? "sgd" : "adam";
}

std::string_view to_string(LeapAdamMode mode) noexcept {
  return mode == LeapAdamMode::ScaleFinalStep ? "scale_final_step" : "scale_gradient";
}

void validate(const OptimizerConfig& cfg) {
  if (!(cfg.momentum_beta >= 0.0 && cfg.momentum_beta < 1.0))
    throw ConfigError("optimizer.momentum", "must lie in [0, 1)");
  if (!(cfg.weight_decay >= 0.0)) throw ConfigError("optimizer.weight_decay", "must be >= 0");
  if (cfg.kind == OptimizerKind::Adam) {
    if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0)) throw ConfigError("optimizer.beta1", "must lie in [0, 1)");
    if (!(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) throw ConfigError("optimizer.beta2", "must lie in [0, 1)");
    if (!(cfg.epsilon > 0.0)) throw ConfigError("optimizer.epsilon", "must be > 0");
  }
}

OptimizerState OptimizerState::zeros(std::size_t m) {
  OptimizerState s;
  s.velocity.assign(m, 0.0);
  s.m1.assign(m, 0.0);
  s.m2.assign(m, 0.0);
  return s;
}

namespace {

void check_inputs(std::span<double> theta, std::span<const double> grad, std::span<const double> h,
                  const OptimizerState& state, const char* where) {
  const auto m = theta.size();
  if (grad.size() != m || h.size() != m || state.velocity.size() != m || state.m1.size() != m ||
      state.m2.size() != m) {
    throw UsageError(std::string(where) + ": length mismatch (theta has " + std::to_string(m) + ")");
  }
  for (std::size_t i = 0; i < m; ++i)
    if (!std::isfinite(grad[i])) throw NumericFault(std::string(where) + " gradient", i);
}

}  // namespace

void sgd_step(std::span<double> theta, std::span<const double> grad, std::span<const double> h,
              OptimizerState& state, const OptimizerConfig& cfg) {
  check_inputs(theta, grad, h, state, "sgd_step");
  const double beta = cfg.momentum_beta;
  const double wd = cfg.weight_decay;
  if (beta == 0.0) {
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= h[i] * (grad[i] + wd * theta[i]);
  } else {
    auto& v = state.velocity;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      v[i] = beta * v[i] + (grad[i] + wd * theta[i]);
      theta[i] -= h[i] * v[i];
    }
  }
  ++state.step_count;
}

void adam_step(std::span<double> theta, std::span<const double> grad, std::span<const double> h,
               OptimizerState& state, const OptimizerConfig& cfg, double eta) {
  check_inputs(theta, grad, h, state, "adam_step");
  const double b1 = cfg.beta1;
  const double b2 = cfg.beta2;
  const auto t = static_cast<double>(state.step_count + 1);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  const bool scale_grad = cfg.adam_mode == LeapAdamMode::ScaleGradient;
  if (scale_grad && !(eta > 0.0)) throw ConfigError("eta", "scale_gradient mode needs eta > 0");

  for (std::size_t i = 0; i < theta.size(); ++i) {
    double g = grad[i] + cfg.weight_decay * theta[i];
    if (scale_grad) g *= h[i] / eta;
    state.m1[i] = b1 * state.m1[i] + (1.0 - b1) * g;
    state.m2[i] = b2 * state.m2[i] + (1.0 - b2) * g * g;
    const double mhat = state.m1[i] / c1;
    const double vhat = state.m2[i] / c2;
    const double rate = scale_grad ? eta : h[i];
    theta[i] -= rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
  }
  ++state.step_count;
}

void leap_step(std::span<double> theta, std::span<const double> grad, double schedule_eta,
               const LeapConfig& leap_cfg, OptimizerState& state, const OptimizerConfig& cfg,
               RngStream& rng, LeapScratch& scratch) {
  scratch.h.resize(theta.size());
  sample_lr_vector_into(schedule_eta, leap_cfg, rng, scratch.h);
  if (cfg.kind == OptimizerKind::Sgd)
    sgd_step(theta, grad, scratch.h, state, cfg);
  else
    adam_step(theta, grad, scratch.h, state, cfg, schedule_eta);
}

}  // namespace leap
