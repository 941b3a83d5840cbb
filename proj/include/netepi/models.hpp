#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "netepi/degree_dist.hpp"
#include "netepi/errors.hpp"
#include "netepi/mixing.hpp"
#include "netepi/state.hpp"

namespace netepi {

// Right-hand sides of the compartment ODEs on fully rewiring networks.
//
// Every model exposes the same surface, used by `integrate`:
//   layout_ptr()             shared state layout
//   initial_state()          seeded state at t0
//   rhs(x, dx, segment)      writes dx, returns the new-infection inflow
//   breakpoints()            times where parameters switch
//   apply_breakpoint(i, x)   state update when entering segment i + 1
// `segment` counts the breakpoints already passed. Models carry scratch
// buffers, so one instance serves one integration at a time.

enum class LinkDenominator { active, fixed };

struct EpidemicParams {
  double lambda = 0.05;  // transmission per infected contact per step
  double mu = 0.05;      // removal per step
  double rho0 = 0.01;    // initial infected fraction
  double d = 0.0;        // demographic replenishment; 0 disables
  std::optional<double> lambda2;    // second infected type (two_type)
  std::optional<double> lambda_12;  // bipartite: side 1 infects side 2
  std::optional<double> lambda_21;  // bipartite: side 2 infects side 1
  double treatment_efficacy = 0.4;  // multiplier on lambda for treated infectors
  double hetero_asymmetry = 0.5;    // woman-to-man multiplier on lambda

  void validate() const {
    auto unit = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0)) throw ParameterError(std::string(name) + " out of [0,1]");
    };
    unit(lambda, "lambda");
    unit(mu, "mu");
    unit(d, "d");
    unit(treatment_efficacy, "treatment_efficacy");
    unit(hetero_asymmetry, "hetero_asymmetry");
    if (lambda2) unit(*lambda2, "lambda2");
    if (lambda_12) unit(*lambda_12, "lambda_12");
    if (lambda_21) unit(*lambda_21, "lambda_21");
    if (!(rho0 > 0.0 && rho0 < 1.0)) throw ParameterError("rho0 out of (0,1)");
  }

  friend bool operator==(const EpidemicParams&, const EpidemicParams&) = default;
};

/// Disease progression through infected stages. transitions[i][j] is the
/// per-step rate from stage i to stage j; removal[i] the rate from stage i
/// into the absorbing removed compartment. New infections enter stage 0.
struct Progression {
  std::vector<std::vector<double>> transitions;
  std::vector<double> removal;

  static Progression single(double mu) { return Progression{{{0.0}}, {mu}}; }

  int stages() const noexcept { return static_cast<int>(removal.size()); }

  void validate() const {
    const auto n = removal.size();
    if (n == 0) throw ParameterError("progression needs at least one stage");
    if (transitions.size() != n) throw ParameterError("progression transition matrix must be stages x stages");
    for (std::size_t i = 0; i < n; ++i) {
      if (transitions[i].size() != n) throw ParameterError("progression transition matrix must be stages x stages");
      if (!(removal[i] >= 0.0)) throw ParameterError("progression removal rates must be >= 0");
      double out = removal[i];
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        if (!(transitions[i][j] >= 0.0)) throw ParameterError("progression transition rates must be >= 0");
        out += transitions[i][j];
      }
      if (out > 1.0) throw ParameterError("total exit rate of a stage exceeds 1 per step");
    }
  }

  friend bool operator==(const Progression&, const Progression&) = default;
};

/// Piecewise-constant fraction of infected nodes classed as treated.
struct TreatmentSchedule {
  double initial_coverage = 0.0;
  std::vector<double> epochs;     // switch times, strictly increasing
  std::vector<double> coverages;  // coverage from epochs[i] on

  double coverage(std::size_t segment) const {
    return segment == 0 ? initial_coverage : coverages.at(std::min(segment, coverages.size()) - 1);
  }

  void validate() const {
    if (epochs.size() != coverages.size()) throw ParameterError("treatment epochs and coverages differ in length");
    for (std::size_t i = 1; i < epochs.size(); ++i) {
      if (!(epochs[i] > epochs[i - 1])) throw ParameterError("treatment epochs must be strictly increasing");
    }
    auto unit = [](double c) { return c >= 0.0 && c <= 1.0; };
    if (!unit(initial_coverage) || !std::all_of(coverages.begin(), coverages.end(), unit)) {
      throw ParameterError("treatment coverage out of [0,1]");
    }
  }

  friend bool operator==(const TreatmentSchedule&, const TreatmentSchedule&) = default;
};

struct ModelOptions {
  LinkDenominator denominator = LinkDenominator::active;
  std::optional<int> approx_threshold;  // normal link-count approximation above this degree
  std::optional<Progression> progression;
  std::optional<double> type1_share;  // fixed split of new two_type infections; hazard-proportional if unset
  double type2_initial_fraction = 0.5;
  double side1_share = 0.5;  // population share of side 1 (bipartite) or men (hiv_hetero)
  std::optional<double> rho0_side2;
  TreatmentSchedule treatment;

  friend bool operator==(const ModelOptions&, const ModelOptions&) = default;
};

struct SirDerivative {
  double ds;
  double drho;
  double dr;
};

/// ds = -lambda rho s, drho = -mu rho + lambda rho s, dr = mu rho
inline SirDerivative classic_sir_rhs(double s, double rho, double /*r*/, const EpidemicParams& params) {
  const double infection = params.lambda * rho * s;
  return {-infection, -params.mu * rho + infection, params.mu * rho};
}

/// Probability that a random half-edge points to an infected node of each
/// type in group `g`. Active mode divides by the half-edges of non-removed
/// nodes; fixed mode by share * <k>.
inline LinkProbabilities current_link_probability(const StratifiedState& x, std::size_t g,
                                                  const DegreeDistribution& dist, LinkDenominator mode,
                                                  double share = 1.0) {
  const auto& sh = x.shape(g);
  if (sh.types > 2) throw ParameterError("at most two infected types are supported");
  double infected[2] = {0.0, 0.0};
  double active = 0.0;
  const auto s = x.s(g);
  for (std::size_t i = 0; i < sh.degrees(); ++i) {
    const double k = sh.k_min + static_cast<double>(i);
    double node_mass = s[i];
    for (int t = 0; t < sh.types; ++t) {
      double rho = 0.0;
      for (int st = 0; st < sh.stages; ++st) rho += x.rho(g, t, st)[i];
      infected[t] += k * rho;
      node_mass += rho;
    }
    active += k * node_mass;
  }
  const double denom = mode == LinkDenominator::active ? active : share * dist.mean_degree();
  if (!(denom > 0.0)) return LinkProbabilities{0.0, 0.0, true};
  LinkProbabilities p{std::max(0.0, infected[0] / denom), std::max(0.0, infected[1] / denom), false};
  if (const double total = p.p1 + p.p2; total > 1.0) {
    p.p1 /= total;
    p.p2 /= total;
  }
  return p;
}

namespace detail {

struct GroupSeed {
  const DegreeDistribution* dist;
  double share;
  double rho0;
  double type2_fraction;
};

inline void seed_group(StratifiedState& x, std::size_t g, const GroupSeed& seed) {
  const auto& sh = x.shape(g);
  auto s = x.s(g);
  for (std::size_t i = 0; i < sh.degrees(); ++i) {
    const double mass = seed.share * seed.dist->pmf(sh.k_min + static_cast<int>(i));
    s[i] = (1.0 - seed.rho0) * mass;
    if (sh.types == 1) {
      x.rho(g, 0, 0)[i] = seed.rho0 * mass;
    } else {
      x.rho(g, 0, 0)[i] = seed.rho0 * mass * (1.0 - seed.type2_fraction);
      x.rho(g, 1, 0)[i] = seed.rho0 * mass * seed.type2_fraction;
    }
  }
}

inline std::shared_ptr<const MultinomialCoefficients> coefficients_for(int k_max) {
  return std::make_shared<const MultinomialCoefficients>(k_max);
}

// Shared machinery: parameters, progression and demographic anchor s_k(0).
class ModelBase {
 public:
  const EpidemicParams& params() const noexcept { return params_; }
  const ModelOptions& options() const noexcept { return options_; }
  const std::shared_ptr<const StateLayout>& layout_ptr() const noexcept { return layout_; }
  const StratifiedState& initial_state() const noexcept { return initial_; }
  std::vector<double> breakpoints() const { return {}; }
  void apply_breakpoint(std::size_t, StratifiedState&) const {}

 protected:
  ModelBase(EpidemicParams params, ModelOptions options)
      : params_(std::move(params)), options_(std::move(options)),
        progression_(options_.progression.value_or(Progression::single(params_.mu))) {
    params_.validate();
    progression_.validate();
    options_.treatment.validate();
    if (options_.type1_share && !(*options_.type1_share >= 0.0 && *options_.type1_share <= 1.0)) {
      throw ParameterError("type1_share out of [0,1]");
    }
    if (!(options_.type2_initial_fraction >= 0.0 && options_.type2_initial_fraction <= 1.0)) {
      throw ParameterError("type2_initial_fraction out of [0,1]");
    }
    if (!(options_.side1_share > 0.0 && options_.side1_share < 1.0)) throw ParameterError("side1_share out of (0,1)");
    if (options_.rho0_side2 && !(*options_.rho0_side2 >= 0.0 && *options_.rho0_side2 < 1.0)) {
      throw ParameterError("rho0_side2 out of [0,1)");
    }
  }

  void set_layout(std::vector<GroupShape> groups) {
    for (auto& g : groups) g.stages = progression_.stages();
    layout_ = std::make_shared<const StateLayout>(std::move(groups));
    initial_ = StratifiedState(layout_);
  }

  void check(const StratifiedState& x) const {
    if (x.layout_ptr() != layout_ && !(x.layout() == *layout_)) {
      throw ParameterError("state degree support does not match the model");
    }
  }

  void begin(const StratifiedState& x, StratifiedState& dx) const {
    check(x);
    if (dx.layout_ptr() != layout_) dx = StratifiedState(layout_);
    std::fill(dx.values().begin(), dx.values().end(), 0.0);
  }

  // ds_k += -inflow_k + d (s_k(0) - s_k)
  void susceptible_flow(const StratifiedState& x, StratifiedState& dx, std::size_t g,
                        std::span<const double> inflow) const {
    const auto s = x.s(g);
    const auto s0 = initial_.s(g);
    auto ds = dx.s(g);
    for (std::size_t i = 0; i < ds.size(); ++i) ds[i] = -inflow[i] + params_.d * (s0[i] - s[i]);
  }

  // Stage transitions and removal for every type of group g. `extra_outflow`
  // is an additional per-step exit rate into removed (demographic loss).
  void progress(const StratifiedState& x, StratifiedState& dx, std::size_t g, double extra_outflow) const {
    const auto& sh = x.shape(g);
    const int n = progression_.stages();
    for (int t = 0; t < sh.types; ++t) {
      for (int a = 0; a < n; ++a) {
        const auto rho_a = x.rho(g, t, a);
        auto d_a = dx.rho(g, t, a);
        auto d_removed = dx.removed(g);
        const double remove = progression_.removal[static_cast<std::size_t>(a)] + extra_outflow;
        for (std::size_t i = 0; i < rho_a.size(); ++i) {
          d_a[i] -= remove * rho_a[i];
          d_removed[i] += remove * rho_a[i];
        }
        for (int b = 0; b < n; ++b) {
          if (a == b) continue;
          const double rate = progression_.transitions[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
          if (rate == 0.0) continue;
          auto d_b = dx.rho(g, t, b);
          for (std::size_t i = 0; i < rho_a.size(); ++i) {
            d_a[i] -= rate * rho_a[i];
            d_b[i] += rate * rho_a[i];
          }
        }
      }
    }
  }

  EpidemicParams params_;
  ModelOptions options_;
  Progression progression_;
  std::shared_ptr<const StateLayout> layout_;
  StratifiedState initial_;
};

}  // namespace detail

/// Homogeneous-mixing SIR on the state layout of a single k = 1 class.
class ClassicSirModel : public detail::ModelBase {
 public:
  explicit ClassicSirModel(EpidemicParams params, ModelOptions options = {})
      : ModelBase(std::move(params), std::move(options)) {
    options_.progression.reset();
    progression_ = Progression::single(params_.mu);
    set_layout({GroupShape{1, 1, 1, 1}});
    initial_.s()[0] = 1.0 - params_.rho0;
    initial_.rho(0)[0] = params_.rho0;
  }

  double rhs(const StratifiedState& x, StratifiedState& dx, std::size_t = 0) const {
    begin(x, dx);
    const auto d = classic_sir_rhs(x.s()[0], x.rho(0)[0], x.removed()[0], params_);
    dx.s()[0] = d.ds;
    dx.rho(0)[0] = d.drho;
    dx.removed()[0] = d.dr;
    return -d.ds;
  }
};

/// Degree-stratified single-type model.
class StratifiedModel : public detail::ModelBase {
 public:
  StratifiedModel(DegreeDistribution dist, EpidemicParams params, ModelOptions options = {})
      : ModelBase(std::move(params), std::move(options)), dist_(std::move(dist)),
        hazard_(dist_.k_min(), dist_.k_max(), options_.approx_threshold), h_(dist_.size()), inflow_(dist_.size()) {
    set_layout({GroupShape{dist_.k_min(), dist_.k_max(), 1, 1}});
    detail::seed_group(initial_, 0, {&dist_, 1.0, params_.rho0, 0.0});
  }

  const DegreeDistribution& distribution() const noexcept { return dist_; }

  double rhs(const StratifiedState& x, StratifiedState& dx, std::size_t = 0) const {
    begin(x, dx);
    const auto probs = current_link_probability(x, 0, dist_, options_.denominator);
    hazard_.compute(probs.p1, params_.lambda, h_);
    const auto s = x.s();
    double incidence = 0.0;
    auto rho_in = dx.rho(0, 0, 0);
    for (std::size_t i = 0; i < h_.size(); ++i) {
      inflow_[i] = s[i] * h_[i];
      rho_in[i] += inflow_[i];
      incidence += inflow_[i];
    }
    susceptible_flow(x, dx, 0, inflow_);
    progress(x, dx, 0, 0.0);
    return incidence;
  }

 private:
  DegreeDistribution dist_;
  mutable HazardProfile hazard_;
  mutable std::vector<double> h_;
  mutable std::vector<double> inflow_;
};

/// Single population with two infected types of different transmissibility.
class TwoTypeModel : public detail::ModelBase {
 public:
  TwoTypeModel(DegreeDistribution dist, EpidemicParams params, ModelOptions options = {},
               std::shared_ptr<const MultinomialCoefficients> coef = nullptr)
      : ModelBase(std::move(params), std::move(options)), dist_(std::move(dist)),
        hazard_(dist_.k_min(), dist_.k_max(), coef ? coef : detail::coefficients_for(dist_.k_max())),
        marginal_(dist_.k_min(), dist_.k_max(), options_.approx_threshold),
        h_(dist_.size()), h1_(dist_.size()), h2_(dist_.size()), inflow_(dist_.size()) {
    if (!params_.lambda2) throw ParameterError("two_type model requires lambda2");
    set_layout({GroupShape{dist_.k_min(), dist_.k_max(), 2, 1}});
    detail::seed_group(initial_, 0, {&dist_, 1.0, params_.rho0, options_.type2_initial_fraction});
  }

  double rhs(const StratifiedState& x, StratifiedState& dx, std::size_t = 0) const {
    begin(x, dx);
    const double l1 = params_.lambda;
    const double l2 = *params_.lambda2;
    const auto probs = current_link_probability(x, 0, dist_, options_.denominator);
    hazard_.compute(probs, l1, l2, h_);
    if (!options_.type1_share) {
      marginal_.compute(probs.p1, l1, h1_);
      marginal_.compute(probs.p2, l2, h2_);
    }
    const auto s = x.s();
    auto in1 = dx.rho(0, 0, 0);
    auto in2 = dx.rho(0, 1, 0);
    double incidence = 0.0;
    for (std::size_t i = 0; i < h_.size(); ++i) {
      inflow_[i] = s[i] * h_[i];
      double share1;
      if (options_.type1_share) {
        share1 = *options_.type1_share;
      } else {
        const double both = h1_[i] + h2_[i];
        share1 = both > 0.0 ? h1_[i] / both : 0.5;
      }
      in1[i] += share1 * inflow_[i];
      in2[i] += (1.0 - share1) * inflow_[i];
      incidence += inflow_[i];
    }
    susceptible_flow(x, dx, 0, inflow_);
    progress(x, dx, 0, 0.0);
    return incidence;
  }

 private:
  DegreeDistribution dist_;
  mutable TwoTypeHazardProfile hazard_;
  mutable HazardProfile marginal_;
  mutable std::vector<double> h_, h1_, h2_, inflow_;
};

/// Two populations where infection only crosses sides.
class BipartiteModel : public detail::ModelBase {
 public:
  BipartiteModel(DegreeDistribution side1, DegreeDistribution side2, EpidemicParams params,
                 ModelOptions options = {})
      : ModelBase(std::move(params), std::move(options)), dist_{std::move(side1), std::move(side2)},
        hazard_{HazardProfile(dist_[0].k_min(), dist_[0].k_max(), options_.approx_threshold),
                HazardProfile(dist_[1].k_min(), dist_[1].k_max(), options_.approx_threshold)},
        h_{std::vector<double>(dist_[0].size()), std::vector<double>(dist_[1].size())},
        inflow_{std::vector<double>(dist_[0].size()), std::vector<double>(dist_[1].size())} {
    set_layout({GroupShape{dist_[0].k_min(), dist_[0].k_max(), 1, 1},
                GroupShape{dist_[1].k_min(), dist_[1].k_max(), 1, 1}});
    detail::seed_group(initial_, 0, {&dist_[0], share(0), params_.rho0, 0.0});
    detail::seed_group(initial_, 1, {&dist_[1], share(1), options_.rho0_side2.value_or(params_.rho0), 0.0});
  }

  double share(std::size_t g) const noexcept { return g == 0 ? options_.side1_share : 1.0 - options_.side1_share; }

  double rhs(const StratifiedState& x, StratifiedState& dx, std::size_t = 0) const {
    begin(x, dx);
    // lambda into side g: side 1 is infected with lambda_21, side 2 with lambda_12
    const double into[2] = {params_.lambda_21.value_or(params_.lambda), params_.lambda_12.value_or(params_.lambda)};
    double incidence = 0.0;
    for (std::size_t g = 0; g < 2; ++g) {
      const std::size_t other = 1 - g;
      const auto probs = current_link_probability(x, other, dist_[other], options_.denominator, share(other));
      hazard_[g].compute(probs.p1, into[g], h_[g]);
      const auto s = x.s(g);
      auto rho_in = dx.rho(g, 0, 0);
      for (std::size_t i = 0; i < s.size(); ++i) {
        inflow_[g][i] = s[i] * h_[g][i];
        rho_in[i] += inflow_[g][i];
        incidence += inflow_[g][i];
      }
      susceptible_flow(x, dx, g, inflow_[g]);
      progress(x, dx, g, 0.0);
    }
    return incidence;
  }

 private:
  DegreeDistribution dist_[2];
  mutable HazardProfile hazard_[2];
  mutable std::vector<double> h_[2];
  mutable std::vector<double> inflow_[2];
};

namespace detail {

// Shared treatment logic of the HIV models: type 0 untreated, type 1 treated.
class TreatedModelBase : public ModelBase {
 public:
  std::vector<double> breakpoints() const { return options_.treatment.epochs; }

  // Entering segment i + 1: reclassify so the treated share equals the new coverage.
  void apply_breakpoint(std::size_t i, StratifiedState& x) const {
    const double c = options_.treatment.coverage(i + 1);
    for (std::size_t g = 0; g < x.layout().groups(); ++g) {
      for (int st = 0; st < x.shape(g).stages; ++st) {
        auto untreated = x.rho(g, 0, st);
        auto treated = x.rho(g, 1, st);
        for (std::size_t k = 0; k < untreated.size(); ++k) {
          const double total = untreated[k] + treated[k];
          treated[k] = c * total;
          untreated[k] = total - treated[k];
        }
      }
    }
  }

 protected:
  using ModelBase::ModelBase;

  void split_inflow(StratifiedState& dx, std::size_t g, std::span<const double> inflow, std::size_t segment) const {
    const double c = options_.treatment.coverage(segment);
    auto untreated = dx.rho(g, 0, 0);
    auto treated = dx.rho(g, 1, 0);
    for (std::size_t i = 0; i < inflow.size(); ++i) {
      treated[i] += c * inflow[i];
      untreated[i] += (1.0 - c) * inflow[i];
    }
  }
};

}  // namespace detail

/// HIV among men having sex with men: untreated and treated infected types,
/// demographic replenishment of susceptibles and demographic loss of infected.
class HivMsmModel : public detail::TreatedModelBase {
 public:
  HivMsmModel(DegreeDistribution dist, EpidemicParams params, ModelOptions options = {},
              std::shared_ptr<const MultinomialCoefficients> coef = nullptr)
      : TreatedModelBase(std::move(params), std::move(options)), dist_(std::move(dist)),
        hazard_(dist_.k_min(), dist_.k_max(), coef ? coef : detail::coefficients_for(dist_.k_max())),
        h_(dist_.size()), inflow_(dist_.size()) {
    set_layout({GroupShape{dist_.k_min(), dist_.k_max(), 2, 1}});
    detail::seed_group(initial_, 0, {&dist_, 1.0, params_.rho0, options_.treatment.initial_coverage});
  }

  const DegreeDistribution& distribution() const noexcept { return dist_; }

  double rhs(const StratifiedState& x, StratifiedState& dx, std::size_t segment = 0) const {
    begin(x, dx);
    const double i = params_.lambda;
    const auto probs = current_link_probability(x, 0, dist_, options_.denominator);
    hazard_.compute(probs, i, params_.treatment_efficacy * i, h_);
    const auto s = x.s();
    double incidence = 0.0;
    for (std::size_t k = 0; k < h_.size(); ++k) {
      inflow_[k] = s[k] * h_[k];
      incidence += inflow_[k];
    }
    split_inflow(dx, 0, inflow_, segment);
    susceptible_flow(x, dx, 0, inflow_);
    progress(x, dx, 0, params_.d);
    return incidence;
  }

 private:
  DegreeDistribution dist_;
  mutable TwoTypeHazardProfile hazard_;
  mutable std::vector<double> h_, inflow_;
};

/// Heterosexual HIV model: group 0 men, group 1 women. Men are infected at
/// hetero_asymmetry * lambda, women at lambda.
class HivHeteroModel : public detail::TreatedModelBase {
 public:
  HivHeteroModel(DegreeDistribution men, DegreeDistribution women, EpidemicParams params,
                 ModelOptions options = {}, std::shared_ptr<const MultinomialCoefficients> coef = nullptr)
      : TreatedModelBase(std::move(params), std::move(options)), dist_{std::move(men), std::move(women)},
        hazard_{make_hazard(dist_[0], coef = resolve(coef, dist_)), make_hazard(dist_[1], coef)},
        h_{std::vector<double>(dist_[0].size()), std::vector<double>(dist_[1].size())},
        inflow_{std::vector<double>(dist_[0].size()), std::vector<double>(dist_[1].size())} {
    set_layout({GroupShape{dist_[0].k_min(), dist_[0].k_max(), 2, 1},
                GroupShape{dist_[1].k_min(), dist_[1].k_max(), 2, 1}});
    const double c0 = options_.treatment.initial_coverage;
    detail::seed_group(initial_, 0, {&dist_[0], share(0), params_.rho0, c0});
    detail::seed_group(initial_, 1, {&dist_[1], share(1), options_.rho0_side2.value_or(params_.rho0), c0});
  }

  double share(std::size_t g) const noexcept { return g == 0 ? options_.side1_share : 1.0 - options_.side1_share; }

  double rhs(const StratifiedState& x, StratifiedState& dx, std::size_t segment = 0) const {
    begin(x, dx);
    const double into[2] = {params_.hetero_asymmetry * params_.lambda, params_.lambda};
    double incidence = 0.0;
    for (std::size_t g = 0; g < 2; ++g) {
      const std::size_t other = 1 - g;
      const auto probs = current_link_probability(x, other, dist_[other], options_.denominator, share(other));
      hazard_[g].compute(probs, into[g], params_.treatment_efficacy * into[g], h_[g]);
      const auto s = x.s(g);
      for (std::size_t k = 0; k < s.size(); ++k) {
        inflow_[g][k] = s[k] * h_[g][k];
        incidence += inflow_[g][k];
      }
      split_inflow(dx, g, inflow_[g], segment);
      susceptible_flow(x, dx, g, inflow_[g]);
      progress(x, dx, g, params_.d);
    }
    return incidence;
  }

 private:
  static std::shared_ptr<const MultinomialCoefficients> resolve(std::shared_ptr<const MultinomialCoefficients> coef,
                                                                 const DegreeDistribution (&d)[2]) {
    return coef ? coef : detail::coefficients_for(std::max(d[0].k_max(), d[1].k_max()));
  }
  static TwoTypeHazardProfile make_hazard(const DegreeDistribution& d,
                                          const std::shared_ptr<const MultinomialCoefficients>& coef) {
    return TwoTypeHazardProfile(d.k_min(), d.k_max(), coef);
  }

  DegreeDistribution dist_[2];
  mutable TwoTypeHazardProfile hazard_[2];
  mutable std::vector<double> h_[2];
  mutable std::vector<double> inflow_[2];
};

using AnyModel = std::variant<ClassicSirModel, StratifiedModel, TwoTypeModel, BipartiteModel, HivMsmModel,
                              HivHeteroModel>;

}  // namespace netepi
