#include <cmath>
#include <iostream>

#include <CLI11.hpp>

#include "bioconv/harness.hpp"

namespace bioconv {

namespace {

// Flag name -> settings key. Flags override the config file.
const std::vector<std::pair<std::string, std::string>> kFlagKeys = {
    {"--scheme", "scheme"}, {"--mode", "mode"},     {"--nu", "nu"},       {"--viscous-form", "viscous_form"},
    {"--sizes", "sizes"},   {"--size", "size"},     {"--tau", "tau"},     {"--T", "T"},
    {"--theta", "theta"},   {"--U", "U"},           {"--gamma", "gamma"}, {"--g", "g"},
    {"--alpha", "alpha"},   {"--k", "k"},           {"--out", "out"},     {"--snapshots", "snapshots"},
    {"--jobs", "jobs"}};

struct Command {
  explicit Command(CLI::App* sub) : app(sub) {}
  CLI::App* app;
  std::string config_path;
  std::map<std::string, std::string> values;
  bool export_fields = false;
};

void add_flags(Command& cmd) {
  cmd.app->add_option("--config", cmd.config_path, "key = value settings file");
  for (const auto& [flag, key] : kFlagKeys) cmd.app->add_option(flag, cmd.values[key]);
  cmd.app->add_flag("--export-fields", cmd.export_fields, "write VTK snapshots");
}

RunConfig resolve(const Command& cmd, RunConfig defaults) {
  Settings settings;
  if (!cmd.config_path.empty()) settings = read_settings_file(cmd.config_path);
  for (const auto& [flag, key] : kFlagKeys) {
    if (cmd.app->count(flag) > 0) settings[key] = cmd.values.at(key);
  }
  if (cmd.export_fields) settings["export_fields"] = "true";
  RunConfig config = make_config(settings, std::move(defaults));
  config.validate();
  return config;
}

void report_failures(const ConvergenceReport& report) {
  for (const auto& run : report.runs) {
    if (!run.record) std::cerr << "run n=" << run.n << " failed: " << run.error << "\n";
  }
}

int do_converge(const RunConfig& config) {
  const ConvergenceReport report = run_convergence_study(config);
  write_convergence_csv(report, config.out_dir);
  report_failures(report);
  std::cerr << "wrote convergence tables to " << config.out_dir.string() << "\n";
  return report.all_succeeded() ? 0 : 1;
}

int do_stability(const RunConfig& config) {
  const ConvergenceReport report = run_stability_study(config);
  write_stability_csv(report, config.out_dir);
  report_failures(report);
  std::cerr << "wrote stability table to " << config.out_dir.string() << "\n";
  return report.all_succeeded() ? 0 : 1;
}

std::string snapshot_name(double t) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "fields_t%.4f.vtk", t);
  return buf;
}

// Single run on the first mesh size; writes diagnostics, the final state
// and, when requested, snapshots at the configured times.
int do_simulate(const RunConfig& config, bool snapshots) {
  const int n = config.sizes.front();
  const Mesh mesh = build_unit_square_mesh(n);
  const ModelParams params = config.params_for(n);
  const ProblemData data = config.mode == Mode::Manufactured ? manufactured_problem(params) : physical_problem();
  const SpaceSet spaces = build_spaces(mesh, config.mode == Mode::Physical);

  std::vector<int> snapshot_steps;
  if (snapshots) {
    for (double t : config.snapshot_times) {
      const double k = t / params.tau;
      if (t < 0.0 || t > params.final_time + 1e-12 || std::abs(k - std::round(k)) > 1e-9) {
        throw ConfigError("snapshot time " + std::to_string(t) + " is not a time level of the run");
      }
      snapshot_steps.push_back(static_cast<int>(std::lround(k)));
    }
    if (std::count(snapshot_steps.begin(), snapshot_steps.end(), 0) > 0) {
      TimeStepper stepper(mesh, params, data);
      export_vtk(stepper.initial_state(), spaces, mesh, config.out_dir / snapshot_name(0.0), 0.0);
    }
  }
  const StepObserver observer = [&](const FieldState& s, const StepDiagnostics&) {
    if (std::count(snapshot_steps.begin(), snapshot_steps.end(), s.step) > 0) {
      export_vtk(s, spaces, mesh, config.out_dir / snapshot_name(s.t), s.t);
    }
  };
  std::cerr << "simulate: " << describe(config) << " n=" << n << "\n";
  SimulationResult result;
  try {
    result = run_simulation(params, config.scheme, mesh, data, observer);
  } catch (const std::exception& e) {
    std::cerr << "simulation failed: " << e.what() << "\n";
    return 1;
  }
  write_diagnostics_csv(result.diagnostics, config, config.out_dir / "diagnostics.csv");
  export_vtk(result.final_state, spaces, mesh, config.out_dir / "final.vtk", result.final_state.t);
  if (config.mode == Mode::Manufactured) {
    const FieldState& s = result.final_state;
    const ErrorRecord r = error_norms({s.u_curr, s.p_curr, s.c_curr}, spaces, mesh, s.t);
    std::cerr << "errors at t=" << s.t << ": u_l2=" << r.velocity_l2 << " c_l2=" << r.concentration_l2
              << " p_l2=" << r.pressure_l2 << "\n";
  }
  std::cerr << "wrote " << (config.out_dir / "final.vtk").string() << " and diagnostics.csv (" << result.solves
            << " solves)\n";
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Mixed finite element solver for the bioconvection system"};
  app.require_subcommand(1, 1);

  Command converge{app.add_subcommand("converge", "manufactured-solution convergence study")};
  Command stability{app.add_subcommand("stability", "final-time discrete norms per mesh size")};
  Command simulate{app.add_subcommand("simulate", "single run: diagnostics CSV and final-state VTK")};
  Command exporter{app.add_subcommand("export", "single run with VTK snapshots")};
  for (Command* cmd : {&converge, &stability, &simulate, &exporter}) add_flags(*cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (converge.app->parsed()) return do_converge(resolve(converge, {}));
    if (stability.app->parsed()) {
      RunConfig defaults;
      defaults.mode = Mode::Physical;
      return do_stability(resolve(stability, defaults));
    }
    if (simulate.app->parsed()) {
      RunConfig defaults;
      defaults.sizes = {16};
      const RunConfig config = resolve(simulate, defaults);
      return do_simulate(config, config.export_fields);
    }
    RunConfig defaults;
    defaults.sizes = {16};
    defaults.export_fields = true;
    defaults.snapshot_times = {0.0, 0.25, 0.5, 0.75, 1.0};
    return do_simulate(resolve(exporter, defaults), true);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace bioconv
