#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "hvp/config.hpp"
#include "hvp/run.hpp"

namespace {

int report_config_error(const hvp::config_error& e) {
  std::cerr << "configuration error";
  if (auto* many = dynamic_cast<const hvp::config_errors*>(&e)) {
    std::cerr << (many->problems().size() == 1 ? ":\n" : "s:\n");
    for (const auto& p : many->problems()) std::cerr << "  " << p << "\n";
  } else {
    std::cerr << ":\n  " << e.what() << "\n";
  }
  return static_cast<int>(hvp::ExitCode::config);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive Hermite-Fourier Vlasov-Poisson solver"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "Run a simulation from a config file");
  run->add_option("--config", config_path, "Flat key = value config file")->required();
  run->add_option("--override", overrides, "key=value, applied after the file (repeatable)");
  run->add_option("--out", out_dir, "Output directory (overrides output.dir)");

  app.add_subcommand("list-scenarios", "List built-in initial conditions");

  std::string scenario;
  auto* defaults = app.add_subcommand("print-defaults", "Print the fully resolved default config of a scenario");
  defaults->add_option("scenario", scenario, "Scenario name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(hvp::ExitCode::config);
  }

  try {
    if (app.got_subcommand("list-scenarios")) {
      for (auto s : hvp::all_scenarios()) std::cout << hvp::to_string(s) << "  " << hvp::describe(s) << "\n";
      return 0;
    }
    if (app.got_subcommand("print-defaults")) {
      hvp::KeyValueConfig kv;
      kv.set("scenario.name", scenario);
      std::cout << hvp::to_text(hvp::manifest(hvp::resolve_config(kv)));
      return 0;
    }
    auto kv = hvp::KeyValueConfig::load(config_path);
    for (const auto& o : overrides) kv.override_with(o);
    if (!out_dir.empty()) kv.override_with("output.dir=" + out_dir);
    const auto rc = hvp::resolve_config(kv);
    return static_cast<int>(hvp::run(rc, std::cerr));
  } catch (const hvp::config_error& e) {
    return report_config_error(e);
  } catch (const hvp::io_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return static_cast<int>(hvp::ExitCode::io);
  }
}
