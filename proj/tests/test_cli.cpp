#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "netepi/commands.hpp"

using namespace netepi;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = NETEPI_SOURCE_DIR;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ConfigError config_error(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "no ConfigError for " << text;
  return ConfigError("", "");
}

std::vector<std::vector<double>> parse_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

const std::string& content(const CommandResult& r, const std::string& name) {
  for (const auto& f : r.files)
    if (f.name == name) return f.content;
  throw std::runtime_error("missing output " + name);
}

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("netepi_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NETEPI_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallAbm = R"({
  "model": "stratified", "lambda": 0.1, "mu": 0.05, "rho0": 0.02, "t_span": [0, 40],
  "distribution": {"type": "power_law", "gamma": 2.5, "k_max": 20},
  "integrator": {"method": "euler", "dt": 1},
  "seed": 3,
  "abm": {"n": 1500, "replicas": 8}
})";

}  // namespace

TEST(Config, MinimalClassicGetsDefaults) {
  const auto spec = parse_config_text(R"({"model": "classic", "lambda": 0.3, "mu": 0.1, "rho0": 0.01, "t_span": [0, 50]})");
  EXPECT_EQ(spec.model, ModelKind::classic);
  EXPECT_EQ(spec.method, Method::rk4);
  EXPECT_EQ(spec.dt, 0.1);
  EXPECT_EQ(spec.t1, 50.0);
  EXPECT_EQ(spec.params.d, 0.0);
}

TEST(Config, DomainViolationNamesField) {
  const auto e = config_error(R"({"model": "classic", "lambda": 1.5, "mu": 0.1, "rho0": 0.01, "t_span": [0, 50]})");
  EXPECT_EQ(e.field(), "lambda");
  EXPECT_NE(std::string(e.what()).find("lambda out of [0,1]"), std::string::npos);
}

TEST(Config, UnknownKeysRejectedWithPath) {
  EXPECT_EQ(config_error(R"({"model": "classic", "lambda": 0.1, "mu": 0.1, "rho0": 0.01, "t_span": [0, 5],
                             "lamda": 0.2})").field(),
            "lamda");
  EXPECT_EQ(config_error(R"({"model": "classic", "lambda": 0.1, "mu": 0.1, "rho0": 0.01, "t_span": [0, 5],
                             "abm": {"n": 100, "replica": 4}})").field(),
            "abm.replica");
  EXPECT_EQ(config_error(R"({"model": "stratified", "lambda": 0.1, "rho0": 0.01, "t_span": [0, 5],
                             "distribution": {"gamma": 3, "kmax": 4}})").field(),
            "distribution.kmax");
}

TEST(Config, MissingAndInvalidFields) {
  EXPECT_EQ(config_error(R"({"model": "classic", "mu": 0.1, "rho0": 0.01, "t_span": [0, 5]})").field(), "lambda");
  EXPECT_EQ(config_error(R"({"lambda": 0.1, "rho0": 0.01, "t_span": [0, 5]})").field(), "model");
  EXPECT_EQ(config_error(R"({"model": "classic", "lambda": 0.1, "rho0": 0.01})").field(), "t_span");
  EXPECT_EQ(config_error(R"({"model": "classic", "lambda": 0.1, "rho0": 0.01, "t_span": [5, 5]})").field(), "t_span");
  EXPECT_EQ(config_error(R"({"model": "stratified", "lambda": 0.1, "rho0": 0.01, "t_span": [0, 5]})").field(),
            "distribution");
  EXPECT_EQ(config_error(R"({"model": "two_type", "lambda": 0.1, "rho0": 0.01, "t_span": [0, 5],
                             "distribution": {"k_max": 5}})").field(),
            "lambda2");
  EXPECT_EQ(config_error(R"({"model": "classic", "lambda": 0.1, "rho0": 0.01, "t_span": [0, 5],
                             "integrator": {"method": "rk45"}})").field(),
            "integrator.method");
  EXPECT_EQ(config_error(R"({"model": "classic", "lambda": 0.1, "rho0": 0.01, "t_span": [0, 5],
                             "integrator": {"dt": 0}})").field(),
            "integrator.dt");
  EXPECT_EQ(config_error(R"({"model": "classic", "lambda": "0.1", "rho0": 0.01, "t_span": [0, 5]})").field(), "lambda");
  EXPECT_EQ(config_error(R"({"model": "classic", "lambda": 0.1, "rho0": 0.01, "t_span": [0, 5],
                             "treatment": {"epochs": [3, 2], "coverages": [0.1, 0.2]}})").field(),
            "treatment");
  EXPECT_EQ(config_error(R"({"model": "stratified", "lambda": 0.1, "rho0": 0.01, "t_span": [0, 5],
                             "distribution": {"k_max": 5},
                             "sensitivity": {"parameters": [{"name": "beta", "lower": 0, "upper": 1}]}})")
                .field(),
            "sensitivity.parameters[0].name");
  EXPECT_EQ(config_error("{not json").field(), "<root>");
}

TEST(Config, HivMsmTwoEpochSchedule) {
  const auto spec = parse_config((kSource / "configs/hiv_msm.json").string());
  EXPECT_EQ(spec.model, ModelKind::hiv_msm);
  EXPECT_EQ(spec.options.treatment.epochs, (std::vector<double>{1988, 1996}));
  EXPECT_EQ(spec.options.treatment.coverages.size(), 2u);
  const auto model = build_model(spec);
  EXPECT_EQ(std::get<HivMsmModel>(model).breakpoints(), (std::vector<double>{1988, 1996}));
}

TEST(Config, CanonicalDumpRoundTrips) {
  for (const auto& entry : fs::directory_iterator(kSource / "configs")) {
    SCOPED_TRACE(entry.path().string());
    const auto spec = parse_config(entry.path().string());
    const auto text = dump_config(spec);
    const auto again = parse_config_text(text);
    EXPECT_TRUE(again == spec);
    EXPECT_EQ(dump_config(again), text);
  }
}

TEST(Commands, RunOdeMatchesGoldenPeak) {
  auto spec = parse_config((kSource / "configs/phase_loop.json").string());
  const double golden = std::stod(read_file(kSource / "tests/golden/phase_loop_peak_prevalence.txt"));
  const auto rows = parse_csv(content(run_command(spec, Command::run_ode, {}), "trajectory.csv"));
  double peak = 0.0;
  for (const auto& r : rows) peak = std::max(peak, r[2]);
  EXPECT_NEAR(peak, golden, 1e-9);
  // the golden value is itself checked against halved steps
  spec.dt = 0.05;
  const auto halved = run_command(spec, Command::run_ode, {});
  double peak_half = 0.0;
  for (const auto& r : parse_csv(content(halved, "trajectory.csv"))) peak_half = std::max(peak_half, r[2]);
  EXPECT_NEAR(peak_half, golden, 1e-6);
}

TEST(Commands, TrajectoryColumnsAndPerDegree) {
  auto spec = parse_config_text(R"({"model": "bipartite", "lambda": 0.2, "mu": 0.1, "rho0": 0.01, "t_span": [0, 3],
      "distribution": {"k_max": 3}, "distribution2": {"type": "single", "k": 2},
      "output": {"per_degree": true}})");
  const auto text = content(run_command(spec, Command::run_ode, {}), "trajectory.csv");
  EXPECT_EQ(text.substr(0, text.find("\r\n")), "t,s_total,i_total,r,incidence,s1_k1,s1_k2,s1_k3,i1_k1,i1_k2,i1_k3,s2_k2,i2_k2");
  const auto rows = parse_csv(text);
  ASSERT_EQ(rows.size(), 31u);
  for (const auto& r : rows) {
    EXPECT_NEAR(r[5] + r[6] + r[7] + r[11], r[1], 1e-15);
    EXPECT_NEAR(r[8] + r[9] + r[10] + r[12], r[2], 1e-15);
  }
}

TEST(Commands, PhaseTracesClosedLoop) {
  const auto spec = parse_config((kSource / "configs/phase_loop.json").string());
  const auto res = run_command(spec, Command::phase, {});
  const auto text = content(res, "phase.csv");
  EXPECT_EQ(text.substr(0, text.find("\r\n")), "rho_10,drho_10_dt");
  const auto rows = parse_csv(text);
  std::vector<std::pair<double, double>> curve;
  for (const auto& r : rows) curve.emplace_back(r[0], r[1]);
  EXPECT_LT(std::abs(curve.front().second), 1e-4);
  EXPECT_LT(std::abs(curve.back().second), 1e-4);
  EXPECT_GT(std::abs(enclosed_area(curve)), 0.0);
  EXPECT_GT(rows.front()[1], 0.0);
  EXPECT_LT(rows.back()[1], 0.0);
}

TEST(Commands, SensitivityColumns) {
  auto spec = parse_config_text(R"({"model": "stratified", "lambda": 0.1, "mu": 0.05, "rho0": 0.01, "t_span": [0, 20],
      "distribution": {"k_max": 10}, "integrator": {"method": "euler", "dt": 1},
      "sensitivity": {"n_base": 64, "parameters": [{"name": "lambda", "lower": 0.05, "upper": 0.15},
                                                   {"name": "gamma", "lower": 2, "upper": 3}]}})");
  const auto res = run_command(spec, Command::sensitivity, {});
  const auto text = content(res, "sobol.csv");
  EXPECT_EQ(text.substr(0, text.find("\r\n")), "t,S_lambda,S_gamma");
  const auto rows = parse_csv(text);
  ASSERT_EQ(rows.size(), 20u);
  EXPECT_EQ(rows.front()[0], 1.0);
  EXPECT_NE(res.summary.find("evaluations=256"), std::string::npos);

  spec.sensitivity.parameters = {{"gamma2", 2.0, 3.0}};
  EXPECT_THROW(run_command(spec, Command::sensitivity, {}), ConfigError);
}

TEST(Commands, FitRecoversLambdaFromInlineSeries) {
  auto spec = parse_config_text(R"({"model": "stratified", "lambda": 0.07, "mu": 0.05, "rho0": 0.01, "t_span": [0, 60],
      "distribution": {"k_max": 20}, "integrator": {"method": "euler", "dt": 1}})");
  const auto truth = detail::run_ode(spec);
  spec.params.lambda = 0.3;
  spec.fit.observed = detail::output_series(truth, "incidence");
  spec.fit.free = {{"lambda", 0.01, 0.5, 0.3}};
  const auto res = run_command(spec, Command::fit, {});
  const auto j = nlohmann::json::parse(content(res, "fit.json"));
  EXPECT_NEAR(j["parameters"]["lambda"].get<double>(), 0.07, 1e-6);
  EXPECT_TRUE(j["converged"].get<bool>());

  spec.fit.observed.pop_back();
  EXPECT_THROW(run_command(spec, Command::fit, {}), ConfigError);
}

TEST(Commands, AbmOnlyForSupportedModels) {
  auto spec = parse_config_text(R"({"model": "classic", "lambda": 0.1, "rho0": 0.01, "t_span": [0, 5]})");
  EXPECT_THROW(run_command(spec, Command::run_abm, {}), ConfigError);
}

TEST(Commands, CompareNeedsWholeStepGrid) {
  auto spec = parse_config_text(kSmallAbm);
  spec.dt = 0.3;
  EXPECT_THROW(run_command(spec, Command::compare, {}), ConfigError);
  spec.dt = 0.25;
  const auto res = run_command(spec, Command::compare, {});
  const auto rows = parse_csv(content(res, "compare.csv"));
  EXPECT_EQ(rows.size(), 41u);
  EXPECT_EQ(rows.back()[0], 40.0);
}

TEST(Commands, DeterministicAcrossRunsAndThreads) {
  const auto spec = parse_config_text(kSmallAbm);
  for (auto cmd : {Command::run_abm, Command::compare}) {
    const auto a = run_command(spec, cmd, {".", 1, true});
    const auto b = run_command(spec, cmd, {".", 3, true});
    ASSERT_EQ(a.files.size(), b.files.size());
    for (std::size_t i = 0; i < a.files.size(); ++i) EXPECT_EQ(a.files[i].content, b.files[i].content);
    EXPECT_EQ(a.summary, b.summary);
  }
  auto other = spec;
  other.seed = 4;
  EXPECT_NE(content(run_command(spec, Command::run_abm, {}), "ensemble.csv"),
            content(run_command(other, Command::run_abm, {}), "ensemble.csv"));
}

TEST(Commands, FailedWriteRemovesPartialOutputs) {
  const auto dir = scratch_dir("partial");
  CommandResult res;
  res.files = {{"first.csv", "a\r\n"}, {"missing/second.csv", "b\r\n"}};
  EXPECT_THROW(write_outputs(res, {dir, 1, false}), IoError);
  EXPECT_FALSE(fs::exists(dir / "first.csv"));
  fs::remove_all(dir);
}

TEST(Binary, ExitCodesAndOutputs) {
  const auto dir = scratch_dir("binary");
  fs::create_directories(dir);
  const auto cfg = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  };
  const auto good = cfg("good.json", R"({"model": "classic", "lambda": 0.3, "mu": 0.1, "rho0": 0.01, "t_span": [0, 20]})");
  EXPECT_EQ(run_cli("run-ode --config " + good + " --out " + (dir / "a").string() + " --plot"), 0);
  EXPECT_TRUE(fs::exists(dir / "a/trajectory.csv"));
  EXPECT_TRUE(fs::exists(dir / "a/plot_trajectory.py"));
  EXPECT_EQ(run_cli("run-ode --config " + good + " --out " + (dir / "b").string()), 0);
  EXPECT_EQ(read_file(dir / "a/trajectory.csv"), read_file(dir / "b/trajectory.csv"));

  const auto bad = cfg("bad.json", R"({"model": "classic", "lambda": 1.5, "rho0": 0.01, "t_span": [0, 20]})");
  EXPECT_EQ(run_cli("run-ode --config " + bad + " --out " + (dir / "c").string()), 1);
  EXPECT_FALSE(fs::exists(dir / "c/trajectory.csv"));

  // euler with a huge step overshoots the unit interval
  const auto unstable = cfg("unstable.json", R"({"model": "classic", "lambda": 1.0, "mu": 0.0, "rho0": 0.5,
      "t_span": [0, 20], "integrator": {"method": "euler", "dt": 5}})");
  EXPECT_EQ(run_cli("run-ode --config " + unstable + " --out " + (dir / "d").string()), 2);
  EXPECT_FALSE(fs::exists(dir / "d/trajectory.csv"));

  EXPECT_EQ(run_cli("run-ode --config " + (dir / "absent.json").string()), 3);
  EXPECT_EQ(run_cli("run-ode --config " + good + " --out /proc/netepi_forbidden"), 3);
  EXPECT_EQ(run_cli("run-ode"), 1);
  EXPECT_EQ(run_cli("simulate --config " + good), 1);
  fs::remove_all(dir);
}
