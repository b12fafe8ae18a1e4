#pragma once

#include <string_view>

namespace leap {

enum class ScheduleKind { Constant, StepDecay, CosineWarmRestart };

std::string_view to_string(ScheduleKind kind) noexcept;

/// Declarative learning-rate schedule. Only the fields of the selected kind
/// are consulted; defaults for step decay are gamma=0.1, step_size=30.
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::Constant;
  double eta0 = 0.1;
  double gamma = 0.1;
  int step_size = 30;
  double eta_min = 0.0;
  int t0 = 10;
  int t_mult = 1;

  static ScheduleSpec constant(double eta0);
  static ScheduleSpec step_decay(double eta0, double gamma, int step_size);
  static ScheduleSpec cosine_warm_restart(double eta0, double eta_min, int t0, int t_mult);
};

/// Throws ConfigError naming the first offending field.
void validate(const ScheduleSpec& spec);

/// Base learning rate for a 1-indexed epoch.
double eval_schedule(const ScheduleSpec& spec, int epoch);

}  // namespace leap
