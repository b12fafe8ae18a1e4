#include "leap/schedules.hpp"

#include <cmath>
#include <numbers>

#include "leap/error.hpp"

namespace leap {

std::string_view to_string(ScheduleKind kind) noexcept {
  switch (kind) {
    case ScheduleKind::Constant: return "constant";
    case ScheduleKind::StepDecay: return "step_decay";
    case ScheduleKind::CosineWarmRestart: return "cosine_warm_restart";
  }
  return "unknown";
}

ScheduleSpec ScheduleSpec::constant(double eta0) {
  ScheduleSpec s;
  s.kind = ScheduleKind::Constant;
  s.eta0 = eta0;
  return s;
}

ScheduleSpec ScheduleSpec::step_decay(double eta0, double gamma, int step_size) {
  ScheduleSpec s;
  s.kind = ScheduleKind::StepDecay;
  s.eta0 = eta0;
  s.gamma = gamma;
  s.step_size = step_size;
  return s;
}

ScheduleSpec ScheduleSpec::cosine_warm_restart(double eta0, double eta_min, int t0, int t_mult) {
  ScheduleSpec s;
  s.kind = ScheduleKind::CosineWarmRestart;
  s.eta0 = eta0;
  s.eta_min = eta_min;
  s.t0 = t0;
  s.t_mult = t_mult;
  return s;
}

void validate(const ScheduleSpec& spec) {
  if (!(spec.eta0 > 0.0) || !std::isfinite(spec.eta0))
    throw ConfigError("schedule.eta0", "must be a finite value > 0");
  switch (spec.kind) {
    case ScheduleKind::Constant:
      break;
    case ScheduleKind::StepDecay:
      if (!(spec.gamma > 0.0 && spec.gamma <= 1.0))
        throw ConfigError("schedule.gamma", "must lie in (0, 1]");
      if (spec.step_size < 1) throw ConfigError("schedule.step_size", "must be >= 1");
      break;
    case ScheduleKind::CosineWarmRestart:
      if (!(spec.eta_min >= 0.0 && spec.eta_min <= spec.eta0))
        throw ConfigError("schedule.eta_min", "must lie in [0, eta0]");
      if (spec.t0 < 1) throw ConfigError("schedule.t0", "must be >= 1");
      if (spec.t_mult < 1) throw ConfigError("schedule.t_mult", "must be >= 1");
      break;
  }
}

double eval_schedule(const ScheduleSpec& spec, int epoch) {
  if (epoch < 1) throw ConfigError("epoch", "epochs are 1-indexed; got " + std::to_string(epoch));
  validate(spec);
  switch (spec.kind) {
    case ScheduleKind::Constant:
      return spec.eta0;
    case ScheduleKind::StepDecay: {
      const int decays = (epoch - 1) / spec.step_size;
      return spec.eta0 * std::pow(spec.gamma, decays);
    }
    case ScheduleKind::CosineWarmRestart: {
      // Walk completed cycles of length t0, t0*t_mult, t0*t_mult^2, ...
      long long t_cur = epoch - 1;
      long long t_i = spec.t0;
      while (t_cur >= t_i) {
        t_cur -= t_i;
        t_i *= spec.t_mult;
      }
      const double phase = std::numbers::pi * static_cast<double>(t_cur) / static_cast<double>(t_i);
      return spec.eta_min + 0.5 * (spec.eta0 - spec.eta_min) * (1.0 + std::cos(phase));
    }
  }
  return spec.eta0;
}

}  // namespace leap
