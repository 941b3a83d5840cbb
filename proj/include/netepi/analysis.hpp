#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/random/sobol.hpp>

#include "netepi/abm.hpp"
#include "netepi/errors.hpp"
#include "netepi/integrate.hpp"
#include "netepi/parallel.hpp"
#include "netepi/rng.hpp"

namespace netepi {

// ---------------------------------------------------------------- sensitivity

/// Output series of a model for one parameter vector. Every call must return
/// a series of the same length.
using SeriesRunner = std::function<std::vector<double>(std::span<const double>)>;

struct ParameterRange {
  std::string name;
  double lower;
  double upper;
};

/// First-order indices S[j][t]. `noise[j][t]` is one standard error of the
/// estimator; points with zero output variance hold NaN in both.
struct SobolResult {
  std::vector<std::string> names;
  std::vector<std::vector<double>> indices;
  std::vector<std::vector<double>> noise;
  std::vector<double> output_variance;
  std::vector<double> output_mean;
  std::size_t n_base = 0;
  std::size_t evaluations = 0;
};

enum class Sampling { quasi_random, monte_carlo };

/// Saltelli paired-matrix estimator on independent uniform inputs:
///   S_j = mean(f(B) (f(A_B^j) - f(A))) / Var(Y)
/// where A_B^j is A with column j taken from B. Costs n_base (d + 2) runs.
/// Quasi-random sampling takes A and B from the two halves of a 2d-dimensional
/// Sobol sequence (origin skipped, then `seed` further points); Monte Carlo
/// sampling draws them from a generator seeded with `seed`.
inline SobolResult sobol_first_order(const SeriesRunner& model, const std::vector<ParameterRange>& ranges,
                                     std::size_t n_base, std::uint64_t seed, unsigned threads = 1,
                                     Sampling sampling = Sampling::quasi_random) {
  if (n_base < 64) throw ParameterError("sobol_first_order: n_base must be >= 64");
  if (ranges.empty()) throw ParameterError("sobol_first_order: need at least one parameter range");
  for (const auto& r : ranges) {
    if (!(r.upper > r.lower) || !std::isfinite(r.lower) || !std::isfinite(r.upper)) {
      throw ParameterError("sobol_first_order: invalid range for " + r.name);
    }
  }
  const std::size_t d = ranges.size();
  const std::size_t n = n_base;

  // A and B rows, unit-cube coordinates first
  std::vector<std::vector<double>> a(n, std::vector<double>(d)), b(n, std::vector<double>(d));
  if (sampling == Sampling::quasi_random) {
    boost::random::sobol qrng(2 * d);
    qrng.discard(2 * d * (1 + (seed % (std::uint64_t{1} << 20))));
    const double scale = 1.0 / (static_cast<double>(qrng.max()) + 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) a[i][j] = static_cast<double>(qrng()) * scale;
      for (std::size_t j = 0; j < d; ++j) b[i][j] = static_cast<double>(qrng()) * scale;
    }
  } else {
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) a[i][j] = uniform01(rng);
      for (std::size_t j = 0; j < d; ++j) b[i][j] = uniform01(rng);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      a[i][j] = ranges[j].lower + (ranges[j].upper - ranges[j].lower) * a[i][j];
      b[i][j] = ranges[j].lower + (ranges[j].upper - ranges[j].lower) * b[i][j];
    }
  }

  // run index: block 0 = A, block 1 = B, block 2 + j = A_B^j
  const std::size_t runs = n * (d + 2);
  std::vector<std::vector<double>> y(runs);
  parallel_for(runs, threads, [&](std::size_t r) {
    const std::size_t block = r / n, i = r % n;
    std::vector<double> x = block == 1 ? b[i] : a[i];
    if (block >= 2) x[block - 2] = b[i][block - 2];
    y[r] = model(x);
  });
  const std::size_t t_len = y[0].size();
  for (const auto& s : y) {
    if (s.size() != t_len) throw ParameterError("sobol_first_order: model returned series of different lengths");
  }

  SobolResult res;
  for (const auto& r : ranges) res.names.push_back(r.name);
  res.indices.assign(d, std::vector<double>(t_len));
  res.noise.assign(d, std::vector<double>(t_len));
  res.output_variance.resize(t_len);
  res.output_mean.resize(t_len);
  res.n_base = n;
  res.evaluations = runs;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double nd = static_cast<double>(n);

  for (std::size_t t = 0; t < t_len; ++t) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 2 * n; ++i) mean += y[i][t];
    mean /= 2.0 * nd;
    double var = 0.0;
    for (std::size_t i = 0; i < 2 * n; ++i) var += (y[i][t] - mean) * (y[i][t] - mean);
    var /= 2.0 * nd - 1.0;
    res.output_mean[t] = mean;
    res.output_variance[t] = var;
    const bool defined = var > 0.0 && std::isfinite(var);
    for (std::size_t j = 0; j < d; ++j) {
      if (!defined) {
        res.indices[j][t] = res.noise[j][t] = nan;
        continue;
      }
      double m = 0.0, m2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double g = y[n + i][t] * (y[(2 + j) * n + i][t] - y[i][t]);
        const double delta = g - m;
        m += delta / static_cast<double>(i + 1);
        m2 += delta * (g - m);
      }
      res.indices[j][t] = m / var;
      res.noise[j][t] = std::sqrt(m2 / (nd - 1.0) / nd) / var;
    }
  }
  return res;
}

// ---------------------------------------------------------------- phase plots

enum class PhaseVariant { infected, healthy };

/// Pairs (x_m(t), dx_n/dt(t)) for group g, where x is the infected fraction of
/// degree class k (summed over types and stages) or, for the healthy variant,
/// susceptible plus removed. Derivatives are the recorded right-hand sides.
inline std::vector<std::pair<double, double>> phase_series(const Trajectory& traj, int m, int n,
                                                           PhaseVariant variant = PhaseVariant::infected,
                                                           std::size_t group = 0) {
  if (traj.states.size() != traj.size() || traj.derivatives.size() != traj.size() || traj.size() == 0) {
    throw ParameterError("phase_series: trajectory was integrated without recorded states");
  }
  const auto& sh = traj.states.front().shape(group);
  for (int k : {m, n}) {
    if (k < sh.k_min || k > sh.k_max) {
      throw ParameterError("phase_series: degree " + std::to_string(k) + " outside [" + std::to_string(sh.k_min) +
                           ", " + std::to_string(sh.k_max) + "]");
    }
  }
  auto value = [&](const StratifiedState& x, int k) {
    const auto i = static_cast<std::size_t>(k - sh.k_min);
    if (variant == PhaseVariant::infected) return x.infected_at(group, k);
    return x.s(group)[i] + x.removed(group)[i];
  };
  std::vector<std::pair<double, double>> out;
  out.reserve(traj.size());
  for (std::size_t t = 0; t < traj.size(); ++t) {
    out.emplace_back(value(traj.states[t], m), value(traj.derivatives[t], n));
  }
  return out;
}

/// Signed area enclosed by a curve closed back to its first point (shoelace).
inline double enclosed_area(std::span<const std::pair<double, double>> curve) {
  double a = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const auto& p = curve[i];
    const auto& q = curve[(i + 1) % curve.size()];
    a += p.first * q.second - q.first * p.second;
  }
  return 0.5 * a;
}

struct LinearFit {
  double slope;
  double intercept;
  double r_squared;
};

/// Ordinary least squares y = slope x + intercept.
inline LinearFit linear_fit(std::span<const std::pair<double, double>> pts) {
  if (pts.size() < 2) throw ParameterError("linear_fit: need at least two points");
  const double n = static_cast<double>(pts.size());
  double xm = 0.0, ym = 0.0;
  for (auto [x, y] : pts) {
    xm += x;
    ym += y;
  }
  xm /= n;
  ym /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (auto [x, y] : pts) {
    sxx += (x - xm) * (x - xm);
    sxy += (x - xm) * (y - ym);
    syy += (y - ym) * (y - ym);
  }
  if (!(sxx > 0.0)) throw ParameterError("linear_fit: x values are all equal");
  const double slope = sxy / sxx;
  const double r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return {slope, ym - slope * xm, r2};
}

// ---------------------------------------------------------------- ODE vs ABM

struct CoverageReport {
  double coverage;        // fraction of time points inside the band
  std::size_t points;
  double band_sigmas;
  double peak_ode;
  double peak_abm;
  double peak_relative_deviation;  // |peak_ode - peak_abm| / peak_abm
  double peak_time_offset;         // t_peak(ode) - t_peak(abm)
};

/// Compares ODE prevalence against the ensemble mean +- band_sigmas * SE.
inline CoverageReport compare_ode_abm(const Trajectory& ode, const EnsembleSummary& ens, double band_sigmas = 3.0) {
  if (!(band_sigmas >= 0.0)) throw ParameterError("compare_ode_abm: band_sigmas must be >= 0");
  if (ode.size() != ens.times.size() || ode.size() == 0) {
    throw ParameterError("compare_ode_abm: time grids differ in length (" + std::to_string(ode.size()) + " vs " +
                         std::to_string(ens.times.size()) + ")");
  }
  std::size_t inside = 0;
  for (std::size_t i = 0; i < ode.size(); ++i) {
    if (std::abs(ode.times[i] - ens.times[i]) > 1e-9) {
      throw ParameterError("compare_ode_abm: time grids misaligned at index " + std::to_string(i));
    }
    // the absolute slack only absorbs rounding when the band has zero width
    const double diff = std::abs(ode.prevalence[i] - ens.prevalence.mean[i]);
    if (diff <= band_sigmas * ens.prevalence.se[i] + 1e-12) ++inside;
  }
  const auto& mean = ens.prevalence.mean;
  const auto abm_peak = static_cast<std::size_t>(std::max_element(mean.begin(), mean.end()) - mean.begin());
  CoverageReport r;
  r.points = ode.size();
  r.coverage = static_cast<double>(inside) / static_cast<double>(r.points);
  r.band_sigmas = band_sigmas;
  r.peak_ode = ode.peak_prevalence();
  r.peak_abm = mean[abm_peak];
  r.peak_relative_deviation = r.peak_abm > 0.0 ? std::abs(r.peak_ode - r.peak_abm) / r.peak_abm : 0.0;
  r.peak_time_offset = ode.peak_time() - ens.times[abm_peak];
  return r;
}

// ---------------------------------------------------------------- fitting

struct FitOptions {
  int max_iterations = 500;
  double x_tolerance = 1e-8;   // simplex size, relative to each bound width
  double f_tolerance = 1e-14;  // spread of residuals across the simplex
};

struct FitResult {
  std::vector<std::string> names;
  std::vector<double> values;
  double residual = 0.0;
  double initial_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Nelder-Mead minimisation of the squared incidence residual over the free
/// parameters. Trial points are clipped into the bounds.
inline FitResult fit_parameters(const SeriesRunner& model, std::span<const double> observed,
                                const std::vector<ParameterRange>& free, std::vector<double> initial,
                                const FitOptions& opts = {}) {
  if (observed.empty()) throw ParameterError("fit_parameters: observed series is empty");
  if (free.empty()) throw ParameterError("fit_parameters: no free parameters");
  if (initial.size() != free.size()) throw ParameterError("fit_parameters: initial guess has wrong dimension");
  for (const auto& r : free) {
    if (!(r.upper > r.lower) || !std::isfinite(r.lower) || !std::isfinite(r.upper)) {
      throw ParameterError("fit_parameters: bounds for " + r.name + " must be finite with lower < upper");
    }
  }
  const std::size_t d = free.size();
  auto clip = [&](std::vector<double>& x) {
    for (std::size_t j = 0; j < d; ++j) x[j] = std::clamp(x[j], free[j].lower, free[j].upper);
  };
  auto residual = [&](const std::vector<double>& x) {
    const auto y = model(x);
    if (y.size() != observed.size()) throw ParameterError("fit_parameters: model and observed lengths differ");
    double ss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) ss += (y[i] - observed[i]) * (y[i] - observed[i]);
    return std::isfinite(ss) ? ss : std::numeric_limits<double>::infinity();
  };

  clip(initial);
  FitResult res;
  for (const auto& r : free) res.names.push_back(r.name);
  res.initial_residual = residual(initial);
  res.values = initial;
  res.residual = res.initial_residual;
  if (res.initial_residual == 0.0) {
    res.converged = true;
    return res;
  }

  // Simplex of 10% of the bound width along each axis, stepping away from the
  // nearer bound. Clipping can flatten a simplex against a bound, so after
  // convergence the search restarts from the best point until a restart no
  // longer improves it.
  std::vector<std::vector<double>> pts;
  std::vector<double> f;
  auto build_simplex = [&](const std::vector<double>& base, double fbase) {
    pts.assign(1, base);
    f.assign(1, fbase);
    for (std::size_t j = 0; j < d; ++j) {
      auto x = base;
      const double step = 0.1 * (free[j].upper - free[j].lower);
      x[j] += x[j] + step <= free[j].upper ? step : -step;
      clip(x);
      f.push_back(residual(x));
      pts.push_back(std::move(x));
    }
  };
  auto sort_simplex = [&] {
    std::vector<std::size_t> order(pts.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return f[i] < f[j]; });
    std::vector<std::vector<double>> p2;
    std::vector<double> f2;
    for (auto i : order) {
      p2.push_back(pts[i]);
      f2.push_back(f[i]);
    }
    pts = std::move(p2);
    f = std::move(f2);
  };
  auto along = [&](const std::vector<double>& c, const std::vector<double>& w, double coef) {
    std::vector<double> x(d);
    for (std::size_t j = 0; j < d; ++j) x[j] = c[j] + coef * (w[j] - c[j]);
    clip(x);
    return x;
  };

  build_simplex(initial, res.initial_residual);
  double restart_from = res.initial_residual;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    sort_simplex();
    double size = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
      for (std::size_t j = 0; j < d; ++j)
        size = std::max(size, std::abs(pts[i][j] - pts[0][j]) / (free[j].upper - free[j].lower));
    if (size <= opts.x_tolerance && f.back() - f.front() <= opts.f_tolerance) {
      if (restart_from - f.front() <= opts.f_tolerance) {
        res.converged = true;
        break;
      }
      restart_from = f.front();
      const auto best = pts.front();
      build_simplex(best, restart_from);
      continue;
    }
    std::vector<double> centroid(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) centroid[j] += pts[i][j] / static_cast<double>(d);
    const auto& worst = pts.back();

    const auto xr = along(centroid, worst, -1.0);
    const double fr = residual(xr);
    if (fr < f.front()) {
      const auto xe = along(centroid, worst, -2.0);
      const double fe = residual(xe);
      if (fe < fr) {
        pts.back() = xe;
        f.back() = fe;
      } else {
        pts.back() = xr;
        f.back() = fr;
      }
      continue;
    }
    if (fr < f[d - 1]) {
      pts.back() = xr;
      f.back() = fr;
      continue;
    }
    const bool outside = fr < f.back();
    const auto xc = along(centroid, worst, outside ? -0.5 : 0.5);
    const double fc = residual(xc);
    if (fc < (outside ? fr : f.back())) {
      pts.back() = xc;
      f.back() = fc;
      continue;
    }
    for (std::size_t i = 1; i < pts.size(); ++i) {
      pts[i] = along(pts[0], pts[i], 0.5);
      f[i] = residual(pts[i]);
    }
  }
  sort_simplex();
  res.iterations = it;
  if (f.front() <= res.residual) {
    res.values = pts.front();
    res.residual = f.front();
  }
  return res;
}

}  // namespace netepi
