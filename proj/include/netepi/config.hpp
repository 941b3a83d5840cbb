#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "netepi/abm.hpp"
#include "netepi/analysis.hpp"
#include "netepi/integrate.hpp"
#include "netepi/models.hpp"

// JSON run configuration. The schema is documented in docs/config.md.

namespace netepi {

enum class ModelKind { classic, stratified, two_type, bipartite, hiv_msm, hiv_hetero };

struct DistributionSpec {
  enum class Kind { power_law, single, weights };
  Kind kind = Kind::power_law;
  double gamma = 3.0;
  int k_min = 1;
  int k_max = 30;
  std::vector<double> weights;  // kind == weights: weights[i] for degree k_min + i

  DegreeDistribution build() const {
    switch (kind) {
      case Kind::power_law: return DegreeDistribution::truncated_power_law(gamma, k_min, k_max);
      case Kind::single: return DegreeDistribution::single(k_min);
      case Kind::weights: return DegreeDistribution::from_weights(k_min, weights);
    }
    return DegreeDistribution::single(1);
  }

  friend bool operator==(const DistributionSpec&, const DistributionSpec&) = default;
};

struct AbmSettings {
  std::uint64_t n = 10000;
  std::uint64_t replicas = 100;
  Rewire rewire = Rewire::full;
  std::optional<int> steps;  // defaults to the length of t_span

  friend bool operator==(const AbmSettings&, const AbmSettings&) = default;
};

struct SensitivitySettings {
  std::uint64_t n_base = 512;
  Sampling sampling = Sampling::quasi_random;
  std::string output = "incidence";
  std::vector<ParameterRange> parameters;

  friend bool operator==(const SensitivitySettings& a, const SensitivitySettings& b) {
    if (a.n_base != b.n_base || a.sampling != b.sampling || a.output != b.output) return false;
    if (a.parameters.size() != b.parameters.size()) return false;
    for (std::size_t i = 0; i < a.parameters.size(); ++i) {
      const auto &x = a.parameters[i], &y = b.parameters[i];
      if (x.name != y.name || x.lower != y.lower || x.upper != y.upper) return false;
    }
    return true;
  }
};

struct PhaseSettings {
  int m = 1;
  int n = 1;
  PhaseVariant variant = PhaseVariant::infected;
  std::uint64_t group = 0;

  friend bool operator==(const PhaseSettings&, const PhaseSettings&) = default;
};

struct FreeParameter {
  std::string name;
  double lower;
  double upper;
  double initial;

  friend bool operator==(const FreeParameter&, const FreeParameter&) = default;
};

struct FitSettings {
  std::string output = "incidence";
  std::vector<double> observed;   // one value per output time
  std::string observed_file;      // or a run-ode / run-abm CSV output
  std::vector<FreeParameter> free;
  int max_iterations = 500;

  friend bool operator==(const FitSettings&, const FitSettings&) = default;
};

struct OutputSettings {
  std::string dir = ".";
  bool per_degree = false;

  friend bool operator==(const OutputSettings&, const OutputSettings&) = default;
};

struct SimulationSpec {
  ModelKind model = ModelKind::classic;
  std::optional<DistributionSpec> distribution;
  std::optional<DistributionSpec> distribution2;
  EpidemicParams params;
  ModelOptions options;
  Method method = Method::rk4;
  double dt = 0.1;
  double t0 = 0.0;
  double t1 = 100.0;
  double band_sigmas = 3.0;
  std::uint64_t seed = 1;  // ABM ensembles and Sobol sampling
  AbmSettings abm;
  SensitivitySettings sensitivity;
  PhaseSettings phase;
  FitSettings fit;
  OutputSettings output;

  IntegrationOptions integration(bool record_states = false) const { return {method, dt, record_states}; }
  int abm_steps() const { return abm.steps.value_or(static_cast<int>(std::floor(t1 - t0 + 1e-9))); }

  friend bool operator==(const SimulationSpec&, const SimulationSpec&) = default;
};

inline const char* to_string(ModelKind m) {
  switch (m) {
    case ModelKind::classic: return "classic";
    case ModelKind::stratified: return "stratified";
    case ModelKind::two_type: return "two_type";
    case ModelKind::bipartite: return "bipartite";
    case ModelKind::hiv_msm: return "hiv_msm";
    case ModelKind::hiv_hetero: return "hiv_hetero";
  }
  return "";
}

inline bool two_sided(ModelKind m) { return m == ModelKind::bipartite || m == ModelKind::hiv_hetero; }
inline bool abm_supported(ModelKind m) { return m == ModelKind::stratified || m == ModelKind::hiv_msm; }

// Parameters that sensitivity and fit may vary.
inline const std::vector<std::string>& variable_parameters() {
  static const std::vector<std::string> names{"lambda",   "mu",      "rho0",       "d",
                                              "lambda2",  "lambda_12", "lambda_21", "treatment_efficacy",
                                              "hetero_asymmetry", "gamma", "gamma2"};
  return names;
}

/// Sets a named parameter; `gamma`/`gamma2` address the power-law exponent of
/// the first/second distribution.
inline void set_parameter(SimulationSpec& spec, const std::string& name, double v) {
  auto& p = spec.params;
  if (name == "lambda") p.lambda = v;
  else if (name == "mu") p.mu = v;
  else if (name == "rho0") p.rho0 = v;
  else if (name == "d") p.d = v;
  else if (name == "lambda2") p.lambda2 = v;
  else if (name == "lambda_12") p.lambda_12 = v;
  else if (name == "lambda_21") p.lambda_21 = v;
  else if (name == "treatment_efficacy") p.treatment_efficacy = v;
  else if (name == "hetero_asymmetry") p.hetero_asymmetry = v;
  else if (name == "gamma" || name == "gamma2") {
    auto& dist = name == "gamma" ? spec.distribution : spec.distribution2;
    if (!dist || dist->kind != DistributionSpec::Kind::power_law) {
      throw ParameterError(name + " needs a power_law " + (name == "gamma" ? "distribution" : "distribution2"));
    }
    dist->gamma = v;
  } else {
    throw ParameterError("unknown parameter " + name);
  }
}

inline AnyModel build_model(const SimulationSpec& spec) {
  switch (spec.model) {
    case ModelKind::classic: return ClassicSirModel(spec.params, spec.options);
    case ModelKind::stratified: return StratifiedModel(spec.distribution->build(), spec.params, spec.options);
    case ModelKind::two_type: return TwoTypeModel(spec.distribution->build(), spec.params, spec.options);
    case ModelKind::bipartite:
      return BipartiteModel(spec.distribution->build(), spec.distribution2->build(), spec.params, spec.options);
    case ModelKind::hiv_msm: return HivMsmModel(spec.distribution->build(), spec.params, spec.options);
    case ModelKind::hiv_hetero:
      return HivHeteroModel(spec.distribution->build(), spec.distribution2->build(), spec.params, spec.options);
  }
  throw ParameterError("unknown model");
}

/// ABM counterpart of the ODE run. Treatment epochs become step offsets from t0.
inline AbmSpec build_abm(const SimulationSpec& spec) {
  AbmSpec a;
  a.dist = spec.distribution->build();
  a.n = static_cast<std::size_t>(spec.abm.n);
  a.params = spec.params;
  a.steps = spec.abm_steps();
  a.rewire = spec.abm.rewire;
  a.treatment = spec.options.treatment;
  for (auto& e : a.treatment.epochs) e = std::round(e - spec.t0);
  a.infected_demographic_loss = spec.model == ModelKind::hiv_msm;
  return a;
}

namespace detail {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Walks one JSON object, recording consumed keys so leftovers can be reported.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  bool has(const std::string& key) {
    return find(key) != nullptr;
  }

  const json& require(const std::string& key) {
    const json* v = find(key);
    if (!v) throw ConfigError(field(key), "missing required field");
    return *v;
  }

  std::optional<double> number(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) throw ConfigError(field(key), "expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) throw ConfigError(field(key), "must be finite");
    return x;
  }

  double number(const std::string& key, double fallback) { return number(key).value_or(fallback); }

  std::optional<std::int64_t> integer(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
    return v->get<std::int64_t>();
  }

  std::optional<std::string> string(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) throw ConfigError(field(key), "expected a string");
    return v->get<std::string>();
  }

  std::optional<bool> boolean(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) throw ConfigError(field(key), "expected true or false");
    return v->get<bool>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json* v = find(key);
    if (!v) return {};
    if (!v->is_array()) throw ConfigError(field(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto& e = (*v)[i];
      if (!e.is_number() || !std::isfinite(e.get<double>())) {
        throw ConfigError(field(key) + "[" + std::to_string(i) + "]", "expected a finite number");
      }
      out.push_back(e.get<double>());
    }
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class E>
E parse_enum(ObjectReader& r, const std::string& key, E fallback,
             std::initializer_list<std::pair<const char*, E>> options) {
  const auto s = r.string(key);
  if (!s) return fallback;
  std::string allowed;
  for (const auto& [name, value] : options) {
    if (*s == name) return value;
    allowed += allowed.empty() ? name : std::string(" | ") + name;
  }
  throw ConfigError(r.field(key), "expected one of " + allowed + ", got \"" + *s + "\"");
}

inline void unit_interval(const ObjectReader& r, const std::string& key, double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(r.field(key), key + " out of [0,1]");
}

inline std::uint64_t positive(const ObjectReader& r, const std::string& key, std::int64_t v, std::int64_t min) {
  if (v < min) throw ConfigError(r.field(key), "must be >= " + std::to_string(min));
  return static_cast<std::uint64_t>(v);
}

inline DistributionSpec parse_distribution(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  DistributionSpec d;
  d.kind = parse_enum(r, "type", DistributionSpec::Kind::power_law,
                      {{"power_law", DistributionSpec::Kind::power_law},
                       {"single", DistributionSpec::Kind::single},
                       {"weights", DistributionSpec::Kind::weights}});
  switch (d.kind) {
    case DistributionSpec::Kind::power_law:
      d.gamma = r.number("gamma", 3.0);
      d.k_min = static_cast<int>(r.integer("k_min").value_or(1));
      d.k_max = static_cast<int>(r.integer("k_max").value_or(30));
      if (d.k_min < 1) throw ConfigError(r.field("k_min"), "must be >= 1");
      if (d.k_max < d.k_min) throw ConfigError(r.field("k_max"), "must be >= k_min");
      break;
    case DistributionSpec::Kind::single: {
      d.k_min = d.k_max = static_cast<int>(r.integer("k").value_or(1));
      if (d.k_min < 1) throw ConfigError(r.field("k"), "must be >= 1");
      d.gamma = 0.0;
      break;
    }
    case DistributionSpec::Kind::weights:
      d.k_min = static_cast<int>(r.integer("k_min").value_or(1));
      if (d.k_min < 1) throw ConfigError(r.field("k_min"), "must be >= 1");
      d.weights = r.numbers("weights");
      if (d.weights.empty()) throw ConfigError(r.field("weights"), "missing required field");
      d.k_max = d.k_min + static_cast<int>(d.weights.size()) - 1;
      d.gamma = 0.0;
      break;
  }
  r.finish();
  try {
    (void)d.build();
  } catch (const ParameterError& e) {
    throw ConfigError(path, e.what());
  }
  return d;
}

inline std::vector<ParameterRange> parse_ranges(const json& j, const std::string& path, bool with_initial = false) {
  if (!j.is_array()) throw ConfigError(path, "expected an array");
  std::vector<ParameterRange> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    ObjectReader r(j[i], p);
    ParameterRange range;
    range.name = r.string("name").value_or("");
    if (range.name.empty()) throw ConfigError(r.field("name"), "missing required field");
    range.lower = r.number("lower").value_or(std::nan(""));
    range.upper = r.number("upper").value_or(std::nan(""));
    if (with_initial) (void)r.number("initial");
    r.finish();
    const auto& names = variable_parameters();
    if (std::find(names.begin(), names.end(), range.name) == names.end()) {
      throw ConfigError(p + ".name", "unknown parameter \"" + range.name + "\"");
    }
    if (!(range.upper > range.lower)) throw ConfigError(p, "needs lower < upper");
    out.push_back(range);
  }
  return out;
}

}  // namespace detail

/// Parses and validates a configuration document. Errors name the offending
/// field path.
inline SimulationSpec parse_config_json(const nlohmann::json& root) {
  using detail::ObjectReader;
  ObjectReader r(root, "");
  SimulationSpec spec;
  spec.model = detail::parse_enum(r, "model", ModelKind::classic,
                                  {{"classic", ModelKind::classic},
                                   {"stratified", ModelKind::stratified},
                                   {"two_type", ModelKind::two_type},
                                   {"bipartite", ModelKind::bipartite},
                                   {"hiv_msm", ModelKind::hiv_msm},
                                   {"hiv_hetero", ModelKind::hiv_hetero}});
  if (!r.has("model")) throw ConfigError("model", "missing required field");

  auto& p = spec.params;
  p.lambda = r.number("lambda").value_or(std::nan(""));
  if (std::isnan(p.lambda)) throw ConfigError("lambda", "missing required field");
  detail::unit_interval(r, "lambda", p.lambda);
  p.mu = r.number("mu", 0.0);
  detail::unit_interval(r, "mu", p.mu);
  p.rho0 = r.number("rho0").value_or(std::nan(""));
  if (std::isnan(p.rho0)) throw ConfigError("rho0", "missing required field");
  if (!(p.rho0 > 0.0 && p.rho0 < 1.0)) throw ConfigError("rho0", "rho0 out of (0,1)");
  p.d = r.number("d", 0.0);
  detail::unit_interval(r, "d", p.d);
  p.lambda2 = r.number("lambda2");
  p.lambda_12 = r.number("lambda_12");
  p.lambda_21 = r.number("lambda_21");
  if (p.lambda2) detail::unit_interval(r, "lambda2", *p.lambda2);
  if (p.lambda_12) detail::unit_interval(r, "lambda_12", *p.lambda_12);
  if (p.lambda_21) detail::unit_interval(r, "lambda_21", *p.lambda_21);
  p.treatment_efficacy = r.number("treatment_efficacy", 0.4);
  detail::unit_interval(r, "treatment_efficacy", p.treatment_efficacy);
  p.hetero_asymmetry = r.number("hetero_asymmetry", 0.5);
  detail::unit_interval(r, "hetero_asymmetry", p.hetero_asymmetry);

  const auto span = r.numbers("t_span");
  if (!r.has("t_span")) throw ConfigError("t_span", "missing required field");
  if (span.size() != 2 || !(span[1] > span[0])) throw ConfigError("t_span", "expected [t0, t1] with t1 > t0");
  spec.t0 = span[0];
  spec.t1 = span[1];

  if (const auto* j = r.find("distribution")) spec.distribution = detail::parse_distribution(*j, "distribution");
  if (const auto* j = r.find("distribution2")) spec.distribution2 = detail::parse_distribution(*j, "distribution2");
  if (spec.model != ModelKind::classic && !spec.distribution) {
    throw ConfigError("distribution", std::string("required by model ") + to_string(spec.model));
  }
  if (two_sided(spec.model) && !spec.distribution2) {
    throw ConfigError("distribution2", std::string("required by model ") + to_string(spec.model));
  }
  if (spec.model == ModelKind::two_type && !p.lambda2) throw ConfigError("lambda2", "required by model two_type");

  if (const auto* j = r.find("integrator")) {
    ObjectReader ir(*j, "integrator");
    spec.method = detail::parse_enum(ir, "method", Method::rk4, {{"rk4", Method::rk4}, {"euler", Method::euler}});
    spec.dt = ir.number("dt", 0.1);
    if (!(spec.dt > 0.0)) throw ConfigError("integrator.dt", "must be > 0");
    ir.finish();
  }

  if (const auto* j = r.find("options")) {
    ObjectReader o(*j, "options");
    auto& opt = spec.options;
    opt.denominator = detail::parse_enum(o, "denominator", LinkDenominator::active,
                                         {{"active", LinkDenominator::active}, {"fixed", LinkDenominator::fixed}});
    if (auto v = o.integer("approx_threshold")) opt.approx_threshold = static_cast<int>(*v);
    opt.type1_share = o.number("type1_share");
    opt.type2_initial_fraction = o.number("type2_initial_fraction", 0.5);
    opt.side1_share = o.number("side1_share", 0.5);
    opt.rho0_side2 = o.number("rho0_side2");
    if (opt.type1_share) detail::unit_interval(o, "type1_share", *opt.type1_share);
    detail::unit_interval(o, "type2_initial_fraction", opt.type2_initial_fraction);
    if (!(opt.side1_share > 0.0 && opt.side1_share < 1.0)) throw ConfigError("options.side1_share", "out of (0,1)");
    if (opt.rho0_side2 && !(*opt.rho0_side2 > 0.0 && *opt.rho0_side2 < 1.0)) {
      throw ConfigError("options.rho0_side2", "out of (0,1)");
    }
    if (const auto* pj = o.find("progression")) {
      ObjectReader pr(*pj, "options.progression");
      Progression prog;
      prog.removal = pr.numbers("removal");
      const auto& tj = pr.require("transitions");
      if (!tj.is_array()) throw ConfigError("options.progression.transitions", "expected an array of rows");
      for (std::size_t i = 0; i < tj.size(); ++i) {
        const std::string path = "options.progression.transitions[" + std::to_string(i) + "]";
        if (!tj[i].is_array()) throw ConfigError(path, "expected an array of numbers");
        std::vector<double> row;
        for (const auto& e : tj[i]) {
          if (!e.is_number()) throw ConfigError(path, "expected an array of numbers");
          row.push_back(e.get<double>());
        }
        prog.transitions.push_back(std::move(row));
      }
      pr.finish();
      try {
        prog.validate();
      } catch (const ParameterError& e) {
        throw ConfigError("options.progression", e.what());
      }
      opt.progression = std::move(prog);
    }
    o.finish();
  }

  if (const auto* j = r.find("treatment")) {
    ObjectReader t(*j, "treatment");
    auto& tr = spec.options.treatment;
    tr.initial_coverage = t.number("initial_coverage", 0.0);
    tr.epochs = t.numbers("epochs");
    tr.coverages = t.numbers("coverages");
    t.finish();
    try {
      tr.validate();
    } catch (const ParameterError& e) {
      throw ConfigError("treatment", e.what());
    }
  }

  if (auto v = r.integer("seed")) spec.seed = detail::positive(r, "seed", *v, 0);

  if (const auto* j = r.find("abm")) {
    ObjectReader a(*j, "abm");
    if (auto v = a.integer("n")) spec.abm.n = detail::positive(a, "n", *v, 2);
    if (auto v = a.integer("replicas")) spec.abm.replicas = detail::positive(a, "replicas", *v, 2);
    spec.abm.rewire = detail::parse_enum(a, "rewire", Rewire::full, {{"full", Rewire::full}, {"none", Rewire::none}});
    if (auto v = a.integer("steps")) spec.abm.steps = static_cast<int>(detail::positive(a, "steps", *v, 1));
    a.finish();
  }

  if (const auto* j = r.find("compare")) {
    ObjectReader c(*j, "compare");
    spec.band_sigmas = c.number("band_sigmas", 3.0);
    if (!(spec.band_sigmas > 0.0)) throw ConfigError("compare.band_sigmas", "must be > 0");
    c.finish();
  }

  if (const auto* j = r.find("sensitivity")) {
    ObjectReader s(*j, "sensitivity");
    auto& sens = spec.sensitivity;
    if (auto v = s.integer("n_base")) sens.n_base = detail::positive(s, "n_base", *v, 64);
    sens.sampling = detail::parse_enum(s, "sampling", Sampling::quasi_random,
                                       {{"quasi_random", Sampling::quasi_random},
                                        {"monte_carlo", Sampling::monte_carlo}});
    sens.output = detail::parse_enum<std::string>(s, "output", "incidence",
                                                  {{"incidence", "incidence"}, {"prevalence", "prevalence"}});
    if (const auto* pj = s.find("parameters")) sens.parameters = detail::parse_ranges(*pj, "sensitivity.parameters");
    s.finish();
  }

  if (const auto* j = r.find("phase")) {
    ObjectReader ph(*j, "phase");
    spec.phase.m = static_cast<int>(ph.integer("m").value_or(1));
    spec.phase.n = static_cast<int>(ph.integer("n").value_or(spec.phase.m));
    spec.phase.variant = detail::parse_enum(ph, "variant", PhaseVariant::infected,
                                            {{"infected", PhaseVariant::infected}, {"healthy", PhaseVariant::healthy}});
    if (auto v = ph.integer("group")) spec.phase.group = detail::positive(ph, "group", *v, 0);
    ph.finish();
    if (spec.phase.m < 1) throw ConfigError("phase.m", "must be >= 1");
    if (spec.phase.n < 1) throw ConfigError("phase.n", "must be >= 1");
    const std::uint64_t groups = two_sided(spec.model) ? 2 : 1;
    if (spec.phase.group >= groups) throw ConfigError("phase.group", "no such group in this model");
  }

  if (const auto* j = r.find("fit")) {
    ObjectReader f(*j, "fit");
    auto& fit = spec.fit;
    fit.output = detail::parse_enum<std::string>(f, "output", "incidence",
                                                 {{"incidence", "incidence"}, {"prevalence", "prevalence"}});
    fit.observed = f.numbers("observed");
    fit.observed_file = f.string("observed_file").value_or("");
    if (auto v = f.integer("max_iterations")) fit.max_iterations = static_cast<int>(detail::positive(f, "max_iterations", *v, 1));
    if (const auto* fj = f.find("free")) {
      if (!fj->is_array()) throw ConfigError("fit.free", "expected an array");
      const auto ranges = detail::parse_ranges(*fj, "fit.free", true);
      for (std::size_t i = 0; i < ranges.size(); ++i) {
        const auto& e = (*fj)[i];
        double init = 0.5 * (ranges[i].lower + ranges[i].upper);
        if (auto it = e.find("initial"); it != e.end() && !it->is_null()) init = it->get<double>();
        fit.free.push_back({ranges[i].name, ranges[i].lower, ranges[i].upper, init});
      }
    }
    f.finish();
    if (!fit.observed.empty() && !fit.observed_file.empty()) {
      throw ConfigError("fit.observed_file", "give either observed or observed_file, not both");
    }
  }

  if (const auto* j = r.find("output")) {
    ObjectReader o(*j, "output");
    spec.output.dir = o.string("dir").value_or(".");
    spec.output.per_degree = o.boolean("per_degree").value_or(false);
    o.finish();
  }

  r.finish();

  if (spec.abm.steps.value_or(1) < 1 || spec.abm_steps() < 1) throw ConfigError("t_span", "shorter than one ABM step");

  // remaining domain checks live in the model constructors
  try {
    (void)build_model(spec);
  } catch (const ParameterError& e) {
    throw ConfigError("model", e.what());
  }
  return spec;
}

inline SimulationSpec parse_config_text(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  return parse_config_json(root);
}

inline SimulationSpec parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

namespace detail {

inline ojson dump_distribution(const DistributionSpec& d) {
  ojson j;
  switch (d.kind) {
    case DistributionSpec::Kind::power_law:
      j["type"] = "power_law";
      j["gamma"] = d.gamma;
      j["k_min"] = d.k_min;
      j["k_max"] = d.k_max;
      break;
    case DistributionSpec::Kind::single:
      j["type"] = "single";
      j["k"] = d.k_min;
      break;
    case DistributionSpec::Kind::weights:
      j["type"] = "weights";
      j["k_min"] = d.k_min;
      j["weights"] = d.weights;
      break;
  }
  return j;
}

}  // namespace detail

/// Canonical form: every field with defaults applied, keys in a fixed order.
inline nlohmann::ordered_json canonical_json(const SimulationSpec& spec) {
  using detail::ojson;
  ojson j;
  const auto& p = spec.params;
  j["model"] = to_string(spec.model);
  j["lambda"] = p.lambda;
  j["mu"] = p.mu;
  j["rho0"] = p.rho0;
  j["d"] = p.d;
  if (p.lambda2) j["lambda2"] = *p.lambda2;
  if (p.lambda_12) j["lambda_12"] = *p.lambda_12;
  if (p.lambda_21) j["lambda_21"] = *p.lambda_21;
  j["treatment_efficacy"] = p.treatment_efficacy;
  j["hetero_asymmetry"] = p.hetero_asymmetry;
  j["t_span"] = {spec.t0, spec.t1};
  if (spec.distribution) j["distribution"] = detail::dump_distribution(*spec.distribution);
  if (spec.distribution2) j["distribution2"] = detail::dump_distribution(*spec.distribution2);
  j["seed"] = spec.seed;
  j["integrator"] = {{"method", spec.method == Method::rk4 ? "rk4" : "euler"}, {"dt", spec.dt}};

  const auto& o = spec.options;
  ojson opt;
  opt["denominator"] = o.denominator == LinkDenominator::active ? "active" : "fixed";
  if (o.approx_threshold) opt["approx_threshold"] = *o.approx_threshold;
  if (o.type1_share) opt["type1_share"] = *o.type1_share;
  opt["type2_initial_fraction"] = o.type2_initial_fraction;
  opt["side1_share"] = o.side1_share;
  if (o.rho0_side2) opt["rho0_side2"] = *o.rho0_side2;
  if (o.progression) opt["progression"] = {{"transitions", o.progression->transitions}, {"removal", o.progression->removal}};
  j["options"] = opt;
  j["treatment"] = {{"initial_coverage", o.treatment.initial_coverage},
                    {"epochs", o.treatment.epochs},
                    {"coverages", o.treatment.coverages}};

  ojson abm{{"n", spec.abm.n},
            {"replicas", spec.abm.replicas},
            {"rewire", spec.abm.rewire == Rewire::full ? "full" : "none"}};
  if (spec.abm.steps) abm["steps"] = *spec.abm.steps;
  j["abm"] = abm;
  j["compare"] = {{"band_sigmas", spec.band_sigmas}};

  const auto& s = spec.sensitivity;
  ojson params = ojson::array();
  for (const auto& r : s.parameters) params.push_back({{"name", r.name}, {"lower", r.lower}, {"upper", r.upper}});
  j["sensitivity"] = {{"n_base", s.n_base},
                      {"sampling", s.sampling == Sampling::quasi_random ? "quasi_random" : "monte_carlo"},
                      {"output", s.output},
                      {"parameters", params}};
  j["phase"] = {{"m", spec.phase.m},
                {"n", spec.phase.n},
                {"variant", spec.phase.variant == PhaseVariant::infected ? "infected" : "healthy"},
                {"group", spec.phase.group}};

  const auto& f = spec.fit;
  ojson free = ojson::array();
  for (const auto& v : f.free) free.push_back({{"name", v.name}, {"lower", v.lower}, {"upper", v.upper}, {"initial", v.initial}});
  ojson fit{{"output", f.output}};
  if (!f.observed_file.empty()) fit["observed_file"] = f.observed_file;
  else fit["observed"] = f.observed;
  fit["free"] = free;
  fit["max_iterations"] = f.max_iterations;
  j["fit"] = fit;
  j["output"] = {{"dir", spec.output.dir}, {"per_degree", spec.output.per_degree}};
  return j;
}

inline std::string dump_config(const SimulationSpec& spec) { return canonical_json(spec).dump(2) + "\n"; }

}  // namespace netepi
