#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "netepi/degree_dist.hpp"
#include "netepi/errors.hpp"
#include "netepi/integrate.hpp"
#include "netepi/models.hpp"
#include "netepi/parallel.hpp"
#include "netepi/rng.hpp"

namespace netepi {

enum class Rewire { full, none };

enum class NodeState : std::uint8_t { susceptible, infected, treated, removed };

/// One realization of the contact network. Adjacency is stored in CSR form:
/// the neighbours of node i are adjacency[offsets[i] .. offsets[i + 1]).
struct NetworkRealization {
  std::size_t n = 0;
  std::vector<int> degrees;  // target degree per node
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> adjacency;
  std::vector<NodeState> node_state;

  std::span<const std::uint32_t> neighbors(std::size_t i) const {
    return std::span<const std::uint32_t>(adjacency).subspan(offsets[i], offsets[i + 1] - offsets[i]);
  }
  std::size_t realized_degree(std::size_t i) const { return offsets[i + 1] - offsets[i]; }
  std::size_t edge_count() const { return adjacency.size() / 2; }
};

namespace detail {

// Scratch space reused across rewiring steps of one simulation.
struct WiringBuffers {
  std::vector<std::uint32_t> stubs;
  std::vector<std::size_t> fill;
  std::vector<std::uint32_t> raw;
  std::vector<std::uint32_t> stamp;
};

// Configuration-model pairing over nodes with active[i] set. Stubs are
// shuffled and paired consecutively; self-loops and repeated pairs are erased.
inline void wire(NetworkRealization& net, const std::vector<char>& active, Rng& rng, WiringBuffers& buf) {
  const std::size_t n = net.n;
  buf.stubs.clear();
  for (std::size_t i = 0; i < n; ++i) {
    if (!active[i]) continue;
    for (int j = 0; j < net.degrees[i]; ++j) buf.stubs.push_back(static_cast<std::uint32_t>(i));
  }
  std::shuffle(buf.stubs.begin(), buf.stubs.end(), rng);
  if (buf.stubs.size() % 2 == 1) buf.stubs.pop_back();

  // counting sort of both endpoints into per-node lists
  std::vector<std::size_t>& count = buf.fill;
  count.assign(n + 1, 0);
  for (std::size_t e = 0; e + 1 < buf.stubs.size(); e += 2) {
    const auto a = buf.stubs[e], b = buf.stubs[e + 1];
    if (a == b) continue;
    ++count[a + 1];
    ++count[b + 1];
  }
  for (std::size_t i = 0; i < n; ++i) count[i + 1] += count[i];
  buf.raw.resize(count[n]);
  std::vector<std::size_t> pos(count.begin(), count.end() - 1);
  for (std::size_t e = 0; e + 1 < buf.stubs.size(); e += 2) {
    const auto a = buf.stubs[e], b = buf.stubs[e + 1];
    if (a == b) continue;
    buf.raw[pos[a]++] = b;
    buf.raw[pos[b]++] = a;
  }

  // erase multi-edges: keep the first occurrence of each neighbour
  buf.stamp.assign(n, UINT32_MAX);
  net.offsets.assign(n + 1, 0);
  net.adjacency.clear();
  net.adjacency.reserve(buf.raw.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = count[i]; j < count[i + 1]; ++j) {
      const auto v = buf.raw[j];
      if (buf.stamp[v] == i) continue;
      buf.stamp[v] = static_cast<std::uint32_t>(i);
      net.adjacency.push_back(v);
    }
    net.offsets[i + 1] = net.adjacency.size();
  }
}

}  // namespace detail

/// Complete graph on n nodes (every degree n - 1).
inline NetworkRealization complete_graph(std::size_t n) {
  if (n < 2) throw ParameterError("complete_graph: n must be >= 2");
  NetworkRealization net;
  net.n = n;
  net.degrees.assign(n, static_cast<int>(n - 1));
  net.node_state.assign(n, NodeState::susceptible);
  net.offsets.assign(1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) net.adjacency.push_back(static_cast<std::uint32_t>(j));
    net.offsets.push_back(net.adjacency.size());
  }
  return net;
}

/// Configuration-model network with n nodes whose degrees are drawn from dist.
inline NetworkRealization generate_network(const DegreeDistribution& dist, std::size_t n, Rng& rng) {
  if (n < 2) throw ParameterError("generate_network: n must be >= 2");
  if (n > UINT32_MAX - 1) throw ParameterError("generate_network: n too large");
  NetworkRealization net;
  net.n = n;
  net.degrees.resize(n);
  for (auto& k : net.degrees) k = dist.sample(rng);
  net.node_state.assign(n, NodeState::susceptible);
  detail::WiringBuffers buf;
  detail::wire(net, std::vector<char>(n, 1), rng, buf);
  return net;
}

struct AbmSpec {
  DegreeDistribution dist = DegreeDistribution::single(1);
  std::size_t n = 10000;
  EpidemicParams params;
  int steps = 100;
  Rewire rewire = Rewire::full;
  // Fraction of infected nodes that are treated; epochs are step indices.
  // Treated nodes transmit with lambda * treatment_efficacy.
  TreatmentSchedule treatment;
  // Infected nodes also leave at rate d (the HIV models' demographic loss).
  bool infected_demographic_loss = false;
  // Start from this graph instead of a generated one (its size overrides n).
  std::optional<NetworkRealization> initial_network;
};

/// Per-step fractions of the initial population n plus raw node counts.
/// Counts exclude nodes that left through demographic turnover.
struct AbmTrajectory : Trajectory {
  std::vector<std::int64_t> s_count, i_count, r_count;
};

/// Discrete-time epidemic on a rewiring configuration-model network. Each
/// step: infection along edges against the start-of-step state, removal of
/// previously infected nodes with probability mu, demographic turnover, and
/// regeneration of the network over non-removed nodes when rewire is full.
inline AbmTrajectory simulate_epidemic(const AbmSpec& spec, Rng& rng) {
  spec.params.validate();
  spec.treatment.validate();
  if (spec.steps < 1) throw ParameterError("simulate_epidemic: steps must be >= 1");
  const auto& p = spec.params;
  NetworkRealization net = spec.initial_network ? *spec.initial_network : generate_network(spec.dist, spec.n, rng);
  if (net.n < 2) throw ParameterError("simulate_epidemic: n must be >= 2");
  const std::size_t n_initial = net.n;
  const double n0 = static_cast<double>(n_initial);
  net.node_state.assign(n_initial, NodeState::susceptible);
  detail::WiringBuffers buf;

  // seed round(rho0 n) distinct nodes, at least one
  const auto seeds = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(p.rho0 * n0)));
  std::vector<std::uint32_t> order(n_initial);
  for (std::size_t i = 0; i < n_initial; ++i) order[i] = static_cast<std::uint32_t>(i);
  for (std::size_t i = 0; i < std::min(seeds, n_initial); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n_initial - 1);
    std::swap(order[i], order[pick(rng)]);
    net.node_state[order[i]] = uniform01(rng) < spec.treatment.initial_coverage ? NodeState::treated
                                                                                   : NodeState::infected;
  }

  std::vector<char> alive(n_initial, 1);  // not removed and not departed
  std::vector<char> departed(n_initial, 0);
  std::vector<std::uint32_t> newly;
  std::size_t segment = 0;

  AbmTrajectory out;
  auto record = [&](int step, double incidence) {
    std::int64_t s = 0, i = 0, r = 0;
    for (std::size_t v = 0; v < net.n; ++v) {
      if (departed[v]) continue;
      switch (net.node_state[v]) {
        case NodeState::susceptible: ++s; break;
        case NodeState::infected:
        case NodeState::treated: ++i; break;
        case NodeState::removed: ++r; break;
      }
    }
    out.times.push_back(step);
    out.susceptible.push_back(static_cast<double>(s) / n0);
    out.prevalence.push_back(static_cast<double>(i) / n0);
    out.removed.push_back(static_cast<double>(r) / n0);
    out.incidence.push_back(incidence);
    out.s_count.push_back(s);
    out.i_count.push_back(i);
    out.r_count.push_back(r);
  };
  record(0, 0.0);

  auto coverage = [&] { return spec.treatment.coverage(segment); };
  const double lam_treated = p.lambda * p.treatment_efficacy;

  for (int step = 1; step <= spec.steps; ++step) {
    // (a) infection along current edges, synchronous
    newly.clear();
    const std::size_t n_now = net.n;
    std::vector<char> hit(n_now, 0);
    for (std::size_t v = 0; v < n_now; ++v) {
      const auto st = net.node_state[v];
      if (departed[v] || (st != NodeState::infected && st != NodeState::treated)) continue;
      const double lam = st == NodeState::treated ? lam_treated : p.lambda;
      if (lam == 0.0) continue;
      for (auto u : net.neighbors(v)) {
        if (hit[u] || departed[u] || net.node_state[u] != NodeState::susceptible) continue;
        if (uniform01(rng) < lam) {
          hit[u] = 1;
          newly.push_back(u);
        }
      }
    }
    // (b) removal of nodes infected at the start of the step
    for (std::size_t v = 0; v < n_now; ++v) {
      const auto st = net.node_state[v];
      if (departed[v] || (st != NodeState::infected && st != NodeState::treated)) continue;
      const double leave = p.mu + (spec.infected_demographic_loss ? p.d : 0.0);
      if (leave > 0.0 && uniform01(rng) < leave) {
        net.node_state[v] = NodeState::removed;
        alive[v] = 0;
      }
    }
    std::sort(newly.begin(), newly.end());
    for (auto u : newly) {
      net.node_state[u] = uniform01(rng) < coverage() ? NodeState::treated : NodeState::infected;
    }
    const double incidence = static_cast<double>(newly.size()) / n0;

    // (d) demographic turnover: susceptibles leave at rate d, arrivals replenish s(0)
    if (p.d > 0.0) {
      for (std::size_t v = 0; v < n_now; ++v) {
        if (departed[v] || net.node_state[v] != NodeState::susceptible || hit[v]) continue;
        if (uniform01(rng) < p.d) {
          departed[v] = 1;
          alive[v] = 0;
        }
      }
      std::binomial_distribution<std::int64_t> arrivals(static_cast<std::int64_t>(n_initial), p.d * (1.0 - p.rho0));
      const auto add = arrivals(rng);
      for (std::int64_t a = 0; a < add; ++a) {
        net.degrees.push_back(spec.dist.sample(rng));
        net.node_state.push_back(NodeState::susceptible);
        alive.push_back(1);
        departed.push_back(0);
      }
      net.n = net.degrees.size();
      if (net.n > UINT32_MAX - 1) throw ParameterError("simulate_epidemic: population grew too large");
    }

    // treatment epoch: reclassify infected to the new coverage
    while (segment < spec.treatment.epochs.size() && spec.treatment.epochs[segment] <= step) {
      ++segment;
      for (std::size_t v = 0; v < net.n; ++v) {
        auto& st = net.node_state[v];
        if (departed[v] || (st != NodeState::infected && st != NodeState::treated)) continue;
        st = uniform01(rng) < coverage() ? NodeState::treated : NodeState::infected;
      }
    }

    // (c, e) removed nodes drop out; regenerate links over the survivors
    if (spec.rewire == Rewire::full) {
      detail::wire(net, alive, rng, buf);
    } else if (net.offsets.size() != net.n + 1) {
      net.offsets.resize(net.n + 1, net.offsets.back());
    }
    record(step, incidence);
  }
  return out;
}

inline AbmTrajectory simulate_epidemic(const DegreeDistribution& dist, std::size_t n, const EpidemicParams& params,
                                       int steps, Rewire rewire, Rng& rng) {
  AbmSpec spec;
  spec.dist = dist;
  spec.n = n;
  spec.params = params;
  spec.steps = steps;
  spec.rewire = rewire;
  return simulate_epidemic(spec, rng);
}

/// Mean, variance and standard error of one series across replicas.
struct SeriesStats {
  std::vector<double> mean, variance, se;
};

struct EnsembleSummary {
  std::vector<double> times;
  SeriesStats prevalence, incidence, susceptible;
  std::size_t replicas = 0;
};

namespace detail {

// Welford accumulation over runs in the given order.
inline SeriesStats accumulate(std::span<const AbmTrajectory> runs, std::vector<double> Trajectory::*field) {
  const std::size_t t = ((runs.front()).*field).size();
  SeriesStats out;
  out.mean.assign(t, 0.0);
  std::vector<double> m2(t, 0.0);
  double count = 0.0;
  for (const auto& run : runs) {
    const auto& x = run.*field;
    if (x.size() != t) throw ParameterError("ensemble runs have different lengths");
    count += 1.0;
    for (std::size_t i = 0; i < t; ++i) {
      const double delta = x[i] - out.mean[i];
      out.mean[i] += delta / count;
      m2[i] += delta * (x[i] - out.mean[i]);
    }
  }
  out.variance.resize(t);
  out.se.resize(t);
  for (std::size_t i = 0; i < t; ++i) {
    out.variance[i] = count > 1.0 ? m2[i] / (count - 1.0) : 0.0;
    out.se[i] = std::sqrt(out.variance[i] / count);
  }
  return out;
}

}  // namespace detail

/// Per-time statistics over replicas (sample variance, se = sqrt(var / R)).
inline EnsembleSummary summarize_runs(std::span<const AbmTrajectory> runs) {
  if (runs.empty()) throw ParameterError("summarize_runs: no runs");
  EnsembleSummary s;
  s.times = runs.front().times;
  s.replicas = runs.size();
  s.prevalence = detail::accumulate(runs, &Trajectory::prevalence);
  s.incidence = detail::accumulate(runs, &Trajectory::incidence);
  s.susceptible = detail::accumulate(runs, &Trajectory::susceptible);
  return s;
}

/// Runs `replicas` independent simulations; replica r is seeded with
/// derive_seed(base_seed, r) so results do not depend on `threads`.
inline EnsembleSummary run_ensemble(const AbmSpec& spec, std::size_t replicas, std::uint64_t base_seed,
                                    unsigned threads = 1) {
  if (replicas < 2) throw ParameterError("run_ensemble: replicas must be >= 2");
  std::vector<AbmTrajectory> runs(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    Rng rng(derive_seed(base_seed, r));
    runs[r] = simulate_epidemic(spec, rng);
  });
  return summarize_runs(runs);
}

}  // namespace netepi
