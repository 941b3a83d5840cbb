#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "netepi/errors.hpp"
#include "netepi/models.hpp"
#include "netepi/state.hpp"

namespace netepi {

enum class Method { euler, rk4 };

struct IntegrationOptions {
  Method method = Method::rk4;
  double dt = 0.1;
  // keep full per-degree states and derivatives (needed for phase series)
  bool record_states = true;
};

/// State and derivative just before a parameter switch at times[index].
struct Discontinuity {
  std::size_t index;
  StratifiedState state_before;
  StratifiedState derivative_before;
};

/// Time-indexed solution. `derivatives[i]` is the right-hand side evaluated
/// at `states[i]`; `incidence[i]` is the new-infection inflow evaluated at
/// the previous recorded state (0 at the first point).
struct Trajectory {
  std::vector<double> times;
  std::vector<double> susceptible;
  std::vector<double> prevalence;
  std::vector<double> removed;
  std::vector<double> incidence;
  std::vector<StratifiedState> states;
  std::vector<StratifiedState> derivatives;
  std::vector<Discontinuity> discontinuities;

  std::size_t size() const noexcept { return times.size(); }

  std::size_t peak_index() const {
    return static_cast<std::size_t>(std::max_element(prevalence.begin(), prevalence.end()) - prevalence.begin());
  }
  double peak_prevalence() const { return prevalence.at(peak_index()); }
  double peak_time() const { return times.at(peak_index()); }
  double final_size() const { return removed.back() + prevalence.back(); }
};

namespace detail {

inline void axpy(std::span<double> out, std::span<const double> x, double a, std::span<const double> y) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + a * y[i];
}

inline void check_bounds(const StratifiedState& x, double t, double dt) {
  for (double v : x.values()) {
    if (!(v >= -1e-6 && v <= 1.0 + 1e-6)) {
      throw StabilityError("state left [0,1] at t=" + std::to_string(t) + " (value " + std::to_string(v) +
                           "); use a smaller dt than " + std::to_string(dt));
    }
  }
}

}  // namespace detail

/// Fixed-step integration over [t0, t1]. Steps are shortened so that every
/// model breakpoint falls on a step boundary; the state is recorded after
/// every step.
template <class Model>
Trajectory integrate(const Model& model, StratifiedState x, double t0, double t1,
                     const IntegrationOptions& opts = {}) {
  if (!(opts.dt > 0.0) || !std::isfinite(opts.dt)) throw ParameterError("dt must be > 0");
  if (!(t1 > t0)) throw ParameterError("t_span must satisfy t1 > t0");
  const double eps = 1e-9 * std::max(1.0, std::abs(opts.dt));

  const std::vector<double> breaks = model.breakpoints();
  std::size_t segment = 0;
  while (segment < breaks.size() && breaks[segment] <= t0 + eps) model.apply_breakpoint(segment++, x);

  Trajectory traj;
  StratifiedState k1(x.layout_ptr()), k2(x.layout_ptr()), k3(x.layout_ptr()), k4(x.layout_ptr()),
      tmp(x.layout_ptr());

  auto record = [&](double t, double incidence) {
    traj.times.push_back(t);
    traj.susceptible.push_back(x.total_susceptible());
    traj.prevalence.push_back(x.total_infected());
    traj.removed.push_back(x.r());
    traj.incidence.push_back(incidence);
    if (opts.record_states) {
      traj.states.push_back(x);
      traj.derivatives.push_back(k1);
    }
  };

  double inflow = model.rhs(x, k1, segment);
  record(t0, 0.0);

  double t = t0;
  long n = 0;
  while (t < t1 - eps) {
    const double grid = std::min(t0 + static_cast<double>(n + 1) * opts.dt, t1);
    double target = grid;
    if (segment < breaks.size() && breaks[segment] < grid - eps) target = breaks[segment];
    const double h = target - t;

    auto xv = x.values();
    if (opts.method == Method::euler) {
      detail::axpy(xv, xv, h, k1.values());
    } else {
      detail::axpy(tmp.values(), xv, 0.5 * h, k1.values());
      model.rhs(tmp, k2, segment);
      detail::axpy(tmp.values(), xv, 0.5 * h, k2.values());
      model.rhs(tmp, k3, segment);
      detail::axpy(tmp.values(), xv, h, k3.values());
      model.rhs(tmp, k4, segment);
      const auto a = k1.values(), b = k2.values(), c = k3.values(), d = k4.values();
      for (std::size_t i = 0; i < xv.size(); ++i) xv[i] += h / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]);
    }
    t = target;
    if (target == grid) ++n;
    detail::check_bounds(x, t, opts.dt);

    const double step_incidence = inflow;
    if (segment < breaks.size() && std::abs(t - breaks[segment]) <= eps) {
      Discontinuity jump{traj.times.size(), x, StratifiedState(x.layout_ptr())};
      model.rhs(x, jump.derivative_before, segment);
      model.apply_breakpoint(segment++, x);
      traj.discontinuities.push_back(std::move(jump));
    }
    inflow = model.rhs(x, k1, segment);
    record(t, step_incidence);
  }
  return traj;
}

template <class Model>
Trajectory integrate(const Model& model, double t0, double t1, const IntegrationOptions& opts = {}) {
  return integrate(model, model.initial_state(), t0, t1, opts);
}

inline Trajectory integrate(const AnyModel& model, double t0, double t1, const IntegrationOptions& opts = {}) {
  return std::visit([&](const auto& m) { return integrate(m, t0, t1, opts); }, model);
}

}  // namespace netepi
