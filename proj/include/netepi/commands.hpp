#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "netepi/config.hpp"

namespace netepi {

enum class Command { run_ode, run_abm, compare, sensitivity, phase, fit };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::run_ode: return "run-ode";
    case Command::run_abm: return "run-abm";
    case Command::compare: return "compare";
    case Command::sensitivity: return "sensitivity";
    case Command::phase: return "phase";
    case Command::fit: return "fit";
  }
  return "";
}

inline std::optional<Command> parse_command(const std::string& s) {
  for (auto c : {Command::run_ode, Command::run_abm, Command::compare, Command::sensitivity, Command::phase,
                 Command::fit}) {
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

struct RunContext {
  std::filesystem::path out_dir = ".";
  unsigned threads = 1;
  bool plot = false;
};

struct OutputFile {
  std::string name;
  std::string content;
};

struct CommandResult {
  std::vector<OutputFile> files;
  std::string summary;  // one line, no trailing newline
};

// Shortest text that reads back to the same double.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) { row_strings(header); }

  void row(std::initializer_list<double> values) { row(std::vector<double>(values)); }

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      out_ << format_number(values[i]);
    }
    out_ << "\r\n";
  }

  std::string str() const { return out_.str(); }

 private:
  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << "\r\n";
  }

  std::ostringstream out_;
};

inline std::string summary_line(double peak, double peak_time, double final_size) {
  return "peak_prevalence=" + format_number(peak) + " peak_time=" + format_number(peak_time) +
         " final_size=" + format_number(final_size);
}

inline std::string summary_line(const Trajectory& tr) {
  return summary_line(tr.peak_prevalence(), tr.peak_time(), tr.final_size());
}

inline Trajectory run_ode(const SimulationSpec& spec, bool record_states = false) {
  return integrate(build_model(spec), spec.t0, spec.t1, spec.integration(record_states));
}

inline std::string trajectory_csv(const Trajectory& tr, bool per_degree) {
  std::vector<std::string> header{"t", "s_total", "i_total", "r", "incidence"};
  const StratifiedState* first = per_degree && !tr.states.empty() ? &tr.states.front() : nullptr;
  std::size_t groups = first ? first->layout().groups() : 0;
  auto prefix = [&](const char* what, std::size_t g) {
    return std::string(what) + (groups > 1 ? std::to_string(g + 1) : "") + "_k";
  };
  for (std::size_t g = 0; g < groups; ++g) {
    const auto& sh = first->shape(g);
    for (int k = sh.k_min; k <= sh.k_max; ++k) header.push_back(prefix("s", g) + std::to_string(k));
    for (int k = sh.k_min; k <= sh.k_max; ++k) header.push_back(prefix("i", g) + std::to_string(k));
  }
  CsvWriter csv(header);
  std::vector<double> row;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    row = {tr.times[i], tr.susceptible[i], tr.prevalence[i], tr.removed[i], tr.incidence[i]};
    for (std::size_t g = 0; g < groups; ++g) {
      const auto& x = tr.states[i];
      const auto& sh = x.shape(g);
      for (double v : x.s(g)) row.push_back(v);
      for (std::size_t k = 0; k < sh.degrees(); ++k) {
        double total = 0.0;
        for (int type = 0; type < sh.types; ++type)
          for (int stage = 0; stage < sh.stages; ++stage) total += x.rho(g, type, stage)[k];
        row.push_back(total);
      }
    }
    csv.row(row);
  }
  return csv.str();
}

// Picks the ODE points at whole steps from t0 so they line up with the ABM.
inline Trajectory at_whole_steps(const Trajectory& tr, double t0, int steps) {
  Trajectory out;
  std::size_t i = 0;
  for (int step = 0; step <= steps; ++step) {
    const double t = t0 + step;
    while (i < tr.size() && tr.times[i] < t - 1e-9) ++i;
    if (i == tr.size() || std::abs(tr.times[i] - t) > 1e-9) {
      throw ConfigError("integrator.dt", "must divide 1 so the ODE output lines up with ABM steps");
    }
    out.times.push_back(t);
    out.susceptible.push_back(tr.susceptible[i]);
    out.prevalence.push_back(tr.prevalence[i]);
    out.removed.push_back(tr.removed[i]);
    out.incidence.push_back(tr.incidence[i]);
  }
  return out;
}

inline void require_abm(const SimulationSpec& spec) {
  if (!abm_supported(spec.model)) {
    throw ConfigError("model", std::string("the ABM supports stratified and hiv_msm, not ") + to_string(spec.model));
  }
}

inline EnsembleSummary run_abm(const SimulationSpec& spec, unsigned threads) {
  require_abm(spec);
  auto ens = run_ensemble(build_abm(spec), static_cast<std::size_t>(spec.abm.replicas), spec.seed, threads);
  for (auto& t : ens.times) t += spec.t0;
  return ens;
}

inline std::string ensemble_csv(const EnsembleSummary& e) {
  CsvWriter csv({"t", "mean_prev", "se_prev", "mean_inc", "se_inc", "replicas"});
  for (std::size_t i = 0; i < e.times.size(); ++i) {
    csv.row({e.times[i], e.prevalence.mean[i], e.prevalence.se[i], e.incidence.mean[i], e.incidence.se[i],
             static_cast<double>(e.replicas)});
  }
  return csv.str();
}

// Output series used by sensitivity and fit. Incidence drops t0, where it is
// zero by convention.
inline std::vector<double> output_series(const Trajectory& tr, const std::string& output) {
  if (output == "prevalence") return tr.prevalence;
  return std::vector<double>(tr.incidence.begin() + 1, tr.incidence.end());
}

inline std::vector<double> output_times(const Trajectory& tr, const std::string& output) {
  if (output == "prevalence") return tr.times;
  return std::vector<double>(tr.times.begin() + 1, tr.times.end());
}

inline SeriesRunner series_runner(const SimulationSpec& spec, const std::vector<std::string>& names,
                                  const std::string& output) {
  return [spec, names, output](std::span<const double> x) {
    SimulationSpec s = spec;
    for (std::size_t j = 0; j < names.size(); ++j) set_parameter(s, names[j], x[j]);
    return output_series(run_ode(s), output);
  };
}

// First column of `path` whose header is one of `columns`.
inline std::vector<double> read_csv_column(const std::filesystem::path& path, const std::vector<std::string>& columns) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  auto split = [](std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("fit.observed_file", "empty file " + path.string());
  const auto header = split(line);
  auto it = header.end();
  for (const auto& c : columns) {
    if (it == header.end()) it = std::find(header.begin(), header.end(), c);
  }
  if (it == header.end()) throw ConfigError("fit.observed_file", "no column named " + columns.front());
  const auto col = static_cast<std::size_t>(it - header.begin());
  std::vector<double> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    double v = 0.0;
    if (col >= cells.size()) throw ConfigError("fit.observed_file", "short row at line " + std::to_string(lineno));
    const auto& c = cells[col];
    const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
    if (res.ec != std::errc() || res.ptr != c.data() + c.size()) {
      throw ConfigError("fit.observed_file", "not a number at line " + std::to_string(lineno));
    }
    out.push_back(v);
  }
  return out;
}

inline std::string json_text(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

// Self-contained matplotlib script that plots `ycols` against `xcol`.
inline std::string plot_script(const std::string& csv, const std::string& xcol, const std::vector<std::string>& ycols,
                               const std::string& png) {
  std::string cols;
  for (const auto& c : ycols) cols += (cols.empty() ? "\"" : ", \"") + c + "\"";
  return "import csv\n"
         "import os\n"
         "import matplotlib\n"
         "matplotlib.use(\"Agg\")\n"
         "import matplotlib.pyplot as plt\n\n"
         "here = os.path.dirname(os.path.abspath(__file__))\n"
         "with open(os.path.join(here, \"" + csv + "\"), newline=\"\") as f:\n"
         "    rows = list(csv.DictReader(f))\n"
         "x = [float(r[\"" + xcol + "\"]) for r in rows]\n"
         "for col in [" + cols + "]:\n"
         "    plt.plot(x, [float(r[col]) for r in rows], label=col)\n"
         "plt.xlabel(\"" + xcol + "\")\n"
         "plt.legend()\n"
         "plt.savefig(os.path.join(here, \"" + png + "\"), dpi=150)\n";
}

}  // namespace detail

/// Runs one command and returns its outputs in memory.
inline CommandResult run_command(const SimulationSpec& spec, Command cmd, const RunContext& ctx) {
  using detail::CsvWriter;
  using ojson = nlohmann::ordered_json;
  CommandResult res;
  auto add = [&](std::string name, std::string content) { res.files.push_back({std::move(name), std::move(content)}); };
  auto plot = [&](const std::string& csv, const std::string& x, const std::vector<std::string>& y) {
    if (!ctx.plot) return;
    const auto stem = csv.substr(0, csv.find('.'));
    add("plot_" + stem + ".py", detail::plot_script(csv, x, y, stem + ".png"));
  };

  switch (cmd) {
    case Command::run_ode: {
      const auto tr = detail::run_ode(spec, spec.output.per_degree);
      add("trajectory.csv", detail::trajectory_csv(tr, spec.output.per_degree));
      plot("trajectory.csv", "t", {"s_total", "i_total", "r"});
      res.summary = detail::summary_line(tr);
      break;
    }
    case Command::run_abm: {
      const auto ens = detail::run_abm(spec, ctx.threads);
      add("ensemble.csv", detail::ensemble_csv(ens));
      plot("ensemble.csv", "t", {"mean_prev"});
      const auto& m = ens.prevalence.mean;
      const auto peak = static_cast<std::size_t>(std::max_element(m.begin(), m.end()) - m.begin());
      res.summary = detail::summary_line(m[peak], ens.times[peak], 1.0 - ens.susceptible.mean.back());
      break;
    }
    case Command::compare: {
      detail::require_abm(spec);
      const int steps = spec.abm_steps();
      SimulationSpec ode_spec = spec;
      ode_spec.t1 = spec.t0 + steps;
      const auto ode = detail::at_whole_steps(detail::run_ode(ode_spec), spec.t0, steps);
      const auto ens = detail::run_abm(spec, ctx.threads);
      const auto rep = compare_ode_abm(ode, ens, spec.band_sigmas);
      CsvWriter csv({"t", "ode_prev", "mean_prev", "se_prev", "inside"});
      for (std::size_t i = 0; i < ode.size(); ++i) {
        const bool inside =
            std::abs(ode.prevalence[i] - ens.prevalence.mean[i]) <= spec.band_sigmas * ens.prevalence.se[i] + 1e-12;
        csv.row({ode.times[i], ode.prevalence[i], ens.prevalence.mean[i], ens.prevalence.se[i], inside ? 1.0 : 0.0});
      }
      add("compare.csv", csv.str());
      ojson j{{"coverage", rep.coverage},
              {"points", rep.points},
              {"band_sigmas", rep.band_sigmas},
              {"replicas", ens.replicas},
              {"peak_ode", rep.peak_ode},
              {"peak_abm", rep.peak_abm},
              {"peak_relative_deviation", rep.peak_relative_deviation},
              {"peak_time_offset", rep.peak_time_offset}};
      add("compare_report.json", detail::json_text(j));
      plot("compare.csv", "t", {"ode_prev", "mean_prev"});
      res.summary = detail::summary_line(ode) + " coverage=" + format_number(rep.coverage);
      break;
    }
    case Command::sensitivity: {
      const auto& sens = spec.sensitivity;
      if (sens.parameters.empty()) throw ConfigError("sensitivity.parameters", "missing required field");
      std::vector<std::string> names;
      for (const auto& r : sens.parameters) names.push_back(r.name);
      for (const auto& n : names) {
        SimulationSpec probe = spec;
        try {
          set_parameter(probe, n, 0.0);
        } catch (const ParameterError& e) {
          throw ConfigError("sensitivity.parameters", e.what());
        }
      }
      const auto base = detail::run_ode(spec);
      const auto times = detail::output_times(base, sens.output);
      const auto r = sobol_first_order(detail::series_runner(spec, names, sens.output), sens.parameters,
                                       static_cast<std::size_t>(sens.n_base), spec.seed, ctx.threads, sens.sampling);
      std::vector<std::string> header{"t"}, se_header{"t"};
      for (const auto& n : names) {
        header.push_back("S_" + n);
        se_header.push_back("se_" + n);
      }
      CsvWriter s_csv(header), se_csv(se_header);
      for (std::size_t t = 0; t < times.size(); ++t) {
        std::vector<double> row{times[t]}, se_row{times[t]};
        for (std::size_t j = 0; j < names.size(); ++j) {
          row.push_back(r.indices[j][t]);
          se_row.push_back(r.noise[j][t]);
        }
        s_csv.row(row);
        se_csv.row(se_row);
      }
      add("sobol.csv", s_csv.str());
      add("sobol_se.csv", se_csv.str());
      plot("sobol.csv", "t", std::vector<std::string>(header.begin() + 1, header.end()));
      res.summary = detail::summary_line(base) + " evaluations=" + std::to_string(r.evaluations);
      break;
    }
    case Command::phase: {
      const auto tr = detail::run_ode(spec, true);
      std::vector<std::pair<double, double>> curve;
      try {
        curve = phase_series(tr, spec.phase.m, spec.phase.n, spec.phase.variant, spec.phase.group);
      } catch (const ParameterError& e) {
        throw ConfigError("phase", e.what());
      }
      const std::string x = spec.phase.variant == PhaseVariant::infected ? "rho_" : "healthy_";
      const std::string xcol = x + std::to_string(spec.phase.m);
      const std::string ycol = "d" + x + std::to_string(spec.phase.n) + "_dt";
      CsvWriter csv({xcol, ycol});
      for (const auto& [a, b] : curve) csv.row({a, b});
      add("phase.csv", csv.str());
      plot("phase.csv", xcol, {ycol});
      res.summary = detail::summary_line(tr);
      break;
    }
    case Command::fit: {
      const auto& fit = spec.fit;
      if (fit.free.empty()) throw ConfigError("fit.free", "missing required field");
      std::vector<double> observed = fit.observed;
      if (!fit.observed_file.empty()) {
        // trajectory (run-ode) or ensemble (run-abm) output; both start at t0
        observed = detail::read_csv_column(fit.observed_file, fit.output == "prevalence"
                                                                  ? std::vector<std::string>{"i_total", "mean_prev"}
                                                                  : std::vector<std::string>{"incidence", "mean_inc"});
        if (fit.output == "incidence" && !observed.empty()) observed.erase(observed.begin());
      }
      if (observed.empty()) throw ConfigError("fit.observed", "missing required field");
      const auto base = detail::run_ode(spec);
      const auto times = detail::output_times(base, fit.output);
      if (observed.size() != times.size()) {
        throw ConfigError("fit.observed", "has " + std::to_string(observed.size()) + " values, the model produces " +
                                              std::to_string(times.size()));
      }
      std::vector<std::string> names;
      std::vector<ParameterRange> ranges;
      std::vector<double> initial;
      for (const auto& f : fit.free) {
        names.push_back(f.name);
        ranges.push_back({f.name, f.lower, f.upper});
        initial.push_back(f.initial);
      }
      FitOptions opts;
      opts.max_iterations = fit.max_iterations;
      const auto runner = detail::series_runner(spec, names, fit.output);
      const auto r = fit_parameters(runner, observed, ranges, initial, opts);
      const auto fitted = runner(r.values);
      CsvWriter csv({"t", "observed", "fitted"});
      for (std::size_t i = 0; i < times.size(); ++i) csv.row({times[i], observed[i], fitted[i]});
      ojson params;
      for (std::size_t j = 0; j < names.size(); ++j) params[names[j]] = r.values[j];
      ojson j{{"parameters", params},
              {"residual", r.residual},
              {"initial_residual", r.initial_residual},
              {"iterations", r.iterations},
              {"converged", r.converged}};
      add("fit.json", detail::json_text(j));
      add("fit.csv", csv.str());
      plot("fit.csv", "t", {"observed", "fitted"});
      SimulationSpec best = spec;
      for (std::size_t k = 0; k < names.size(); ++k) set_parameter(best, names[k], r.values[k]);
      res.summary = detail::summary_line(detail::run_ode(best));
      break;
    }
  }
  return res;
}

/// Writes the outputs of `res` under ctx.out_dir. On failure the files
/// already written are removed before the IoError propagates.
inline std::vector<std::filesystem::path> write_outputs(const CommandResult& res, const RunContext& ctx) {
  namespace fs = std::filesystem;
  std::vector<fs::path> written;
  auto cleanup = [&] {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
  };
  std::error_code ec;
  fs::create_directories(ctx.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + ctx.out_dir.string() + ": " + ec.message());
  for (const auto& f : res.files) {
    const auto path = ctx.out_dir / f.name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (out) written.push_back(path);
    out << f.content;
    out.close();
    if (!out) {
      cleanup();
      throw IoError("cannot write " + path.string());
    }
  }
  return written;
}

}  // namespace netepi
