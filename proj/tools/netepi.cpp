#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "netepi/commands.hpp"

namespace {

enum ExitCode { ok = 0, config_error = 1, numerical_error = 2, io_error = 3 };

unsigned threads_from_env() {
  const char* v = std::getenv("NETEPI_THREADS");
  if (!v || !*v) return 0;
  try {
    return static_cast<unsigned>(std::stoul(v));
  } catch (const std::exception&) {
    throw netepi::ConfigError("NETEPI_THREADS", std::string("not a non-negative integer: ") + v);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Degree-stratified epidemic ODEs on rewiring networks, with an agent-based check"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out_dir;
  bool plot = false;
  bool dump = false;

  for (auto cmd : {netepi::Command::run_ode, netepi::Command::run_abm, netepi::Command::compare,
                   netepi::Command::sensitivity, netepi::Command::phase, netepi::Command::fit}) {
    auto* sub = app.add_subcommand(netepi::to_string(cmd));
    sub->add_option("--config", config_path, "JSON configuration file")->required();
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_option("--threads", threads, "worker threads, 0 = all cores (default: NETEPI_THREADS or 0)");
    sub->add_option("--out", out_dir, "output directory (default: output.dir from the config)");
    sub->add_flag("--plot", plot, "also write a matplotlib script per CSV");
    sub->add_flag("--dump-config", dump, "print the canonical configuration and exit");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? ok : config_error;
  }

  const auto command = *netepi::parse_command(app.get_subcommands().front()->get_name());
  try {
    auto spec = netepi::parse_config(config_path);
    if (seed) spec.seed = *seed;
    if (dump) {
      std::cout << netepi::dump_config(spec);
      return ok;
    }
    netepi::RunContext ctx;
    ctx.out_dir = out_dir.empty() ? std::filesystem::path(spec.output.dir) : std::filesystem::path(out_dir);
    ctx.threads = threads ? *threads : threads_from_env();
    ctx.plot = plot;
    const auto res = netepi::run_command(spec, command, ctx);
    netepi::write_outputs(res, ctx);
    std::cout << res.summary << '\n';
    return ok;
  } catch (const netepi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const netepi::ParameterError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const netepi::StabilityError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return numerical_error;
  } catch (const netepi::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return io_error;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return io_error;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return numerical_error;
  }
}
