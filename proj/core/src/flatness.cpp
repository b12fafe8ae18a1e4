#include "leap/flatness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "leap/error.hpp"

namespace leap {

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void check_finite(std::span<const double> g, const char* where) {
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!std::isfinite(g[i])) throw NumericFault(where, i);
}

std::vector<double> random_unit(std::size_t dim, RngStream& rng) {
  std::vector<double> v(dim);
  double n = 0.0;
  while (n == 0.0) {
    for (double& x : v) x = rng.normal();
    n = norm2(v);
  }
  for (double& x : v) x /= n;
  return v;
}

}  // namespace

std::vector<double> hvp_fd(const GradientFn& grad, std::span<const double> theta,
                           std::span<const double> v, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("flatness.fd_epsilon", "must be > 0");
  if (v.size() != theta.size()) throw UsageError("hvp direction length differs from theta");
  if (std::abs(norm2(v) - 1.0) > 1e-10) throw UsageError("hvp direction must be a unit vector");

  std::vector<double> probe(theta.begin(), theta.end());
  for (std::size_t i = 0; i < probe.size(); ++i) probe[i] = theta[i] + epsilon * v[i];
  const auto plus = grad(probe);
  for (std::size_t i = 0; i < probe.size(); ++i) probe[i] = theta[i] - epsilon * v[i];
  const auto minus = grad(probe);
  check_finite(plus, "gradient at hvp probe");
  check_finite(minus, "gradient at hvp probe");

  std::vector<double> out(theta.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (plus[i] - minus[i]) / (2.0 * epsilon);
  return out;
}

std::vector<double> hessian_diag_fd(const GradientFn& grad, std::span<const double> theta,
                                    double epsilon, std::span<const std::size_t> coordinates) {
  if (!(epsilon > 0.0)) throw ConfigError("flatness.fd_epsilon", "must be > 0");
  std::vector<std::size_t> all;
  if (coordinates.empty()) {
    all.resize(theta.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    coordinates = all;
  }
  std::vector<double> out(theta.size(), 0.0);
  std::vector<double> probe(theta.begin(), theta.end());
  for (std::size_t i : coordinates) {
    if (i >= theta.size()) throw UsageError("diagonal probe index out of range");
    const double step = epsilon * (1.0 + std::abs(theta[i]));
    probe[i] = theta[i] + step;
    const auto plus = grad(probe);
    probe[i] = theta[i] - step;
    const auto minus = grad(probe);
    probe[i] = theta[i];
    if (!std::isfinite(plus[i]) || !std::isfinite(minus[i])) throw NumericFault("gradient at diagonal probe", i);
    out[i] = (plus[i] - minus[i]) / (2.0 * step);
  }
  return out;
}

PowerIterationResult top_eigenvalue_power_iteration(const LinearOperator& hvp, std::size_t dim,
                                                    std::size_t max_iters, double tol, RngStream& rng) {
  if (max_iters < 1) throw ConfigError("flatness.max_iters", "must be >= 1");
  if (!(tol > 0.0)) throw ConfigError("flatness.tol", "must be > 0");
  if (dim == 0) throw UsageError("power iteration on an empty operator");

  PowerIterationResult res;
  auto v = random_unit(dim, rng);
  double previous = 0.0;
  bool have_previous = false;
  while (res.iterations < max_iters) {
    auto w = hvp(v);
    check_finite(w, "power iteration image");
    const double wn = norm2(w);
    if (wn == 0.0) {
      if (res.restarts == 3) throw NumericFault("power iteration breakdown after restarts", res.iterations);
      ++res.restarts;
      v = random_unit(dim, rng);
      have_previous = false;
      continue;
    }
    double rq = 0.0;
    for (std::size_t i = 0; i < dim; ++i) rq += v[i] * w[i];
    ++res.iterations;
    res.rayleigh_history.push_back(rq);
    res.max_abs_rayleigh = std::max(res.max_abs_rayleigh, std::abs(rq));
    res.eigenvalue = rq;
    if (have_previous && std::abs(rq - previous) < tol * std::max(1.0, std::abs(rq))) {
      res.converged = true;
      break;
    }
    previous = rq;
    have_previous = true;
    for (std::size_t i = 0; i < dim; ++i) v[i] = w[i] / wn;
  }
  return res;
}

FlatnessReport flatness_report(const GradientFn& grad, std::span<const double> theta,
                               const FlatnessOptions& options, RngStream& rng) {
  const std::size_t m = theta.size();
  FlatnessReport rep;
  rep.fd_epsilon = options.fd_epsilon;

  const LinearOperator op = [&](std::span<const double> v) { return hvp_fd(grad, theta, v, options.fd_epsilon); };
  const auto pi = top_eigenvalue_power_iteration(op, m, options.max_iters, options.tol, rng);
  rep.top_eigenvalue = pi.eigenvalue;
  rep.converged = pi.converged;
  rep.iterations = pi.iterations;
  rep.max_abs_rayleigh = pi.max_abs_rayleigh;

  std::vector<std::size_t> coords(m);
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (options.probe_points > 0 && options.probe_points < m) {
    std::shuffle(coords.begin(), coords.end(), rng.engine());
    coords.resize(options.probe_points);
    std::sort(coords.begin(), coords.end());
  }
  const auto diag = hessian_diag_fd(grad, theta, options.fd_epsilon, coords);
  std::vector<double> sampled;
  sampled.reserve(coords.size());
  for (std::size_t i : coords) sampled.push_back(diag[i]);
  rep.probe_points = sampled.size();
  rep.hessian_diag_summary.mean = stats::mean(sampled);
  rep.hessian_diag_summary.max = *std::max_element(sampled.begin(), sampled.end());
  rep.hessian_diag_summary.p95 = stats::quantile(sampled, 0.95);
  return rep;
}

MetricComparison compare_metric(std::span<const double> leap_values, std::span<const double> vanilla_values) {
  MetricComparison c;
  c.median_first = stats::median({leap_values.begin(), leap_values.end()});
  c.median_second = stats::median({vanilla_values.begin(), vanilla_values.end()});
  c.test = stats::mann_whitney_less(leap_values, vanilla_values);
  return c;
}

FlatnessComparison compare_flatness(const FlatnessArm& vanilla, const FlatnessArm& leap_arm,
                                    const Eigen::Ref<const RowMatrix>& inputs,
                                    std::span<const int> labels, const FlatnessOptions& options,
                                    std::uint64_t seed) {
  if (vanilla.spec.layer_dims != leap_arm.spec.layer_dims || vanilla.spec.init_gain != leap_arm.spec.init_gain)
    throw UsageError("flatness arms use different model specs");
  if (vanilla.thetas.size() < 5 || leap_arm.thetas.size() < 5)
    throw UsageError("flatness comparison needs >= 5 seeds per arm");

  const MlpSpec& spec = vanilla.spec;
  const GradientFn grad = [&](std::span<const double> th) {
    return full_loss_and_gradient(spec, th, inputs, labels).grad;
  };

  FlatnessComparison out;
  out.examples_used = labels.size();
  out.all_converged = true;
  std::vector<double> top_v, top_l, diag_v, diag_l;
  std::uint64_t stream = 0;
  for (const FlatnessArm* arm : {&vanilla, &leap_arm}) {
    const bool is_leap = arm == &leap_arm;
    for (std::size_t k = 0; k < arm->thetas.size(); ++k) {
      RngStream rng(seed, stream++);
      FlatnessRow row;
      row.arm = arm->name;
      row.seed = k < arm->seeds.size() ? arm->seeds[k] : k;
      row.report = flatness_report(grad, arm->thetas[k], options, rng);
      out.all_converged = out.all_converged && row.report.converged;
      (is_leap ? top_l : top_v).push_back(row.report.top_eigenvalue);
      (is_leap ? diag_l : diag_v).push_back(row.report.hessian_diag_summary.max);
      out.rows.push_back(std::move(row));
    }
  }
  const auto top = compare_metric(top_l, top_v);
  const auto dmax = compare_metric(diag_l, diag_v);
  out.median_top_leap = top.median_first;
  out.median_top_vanilla = top.median_second;
  out.top_test = top.test;
  out.median_diag_max_leap = dmax.median_first;
  out.median_diag_max_vanilla = dmax.median_second;
  out.diag_test = dmax.test;
  out.direction_holds = out.median_top_leap <= out.median_top_vanilla;
  return out;
}

}  // namespace leap
