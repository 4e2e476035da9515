#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bioconv/schemes.hpp"

namespace bioconv {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  Scheme scheme = Scheme::Decoupled;
  Mode mode = Mode::Manufactured;
  ModelParams params;                // tau is overridden per mesh
  std::vector<int> sizes{4, 8, 16, 32};
  std::optional<double> tau;         // unset: tau = h = 1/n
  std::filesystem::path out_dir = "out";
  bool export_fields = false;
  std::vector<double> snapshot_times;
  int jobs = 1;

  [[nodiscard]] ModelParams params_for(int n) const;
  /// Throws ConfigError.
  void validate() const;
};

/// Flat "key = value" settings; '#' starts a comment.
using Settings = std::map<std::string, std::string>;

Settings parse_settings(const std::string& text);
Settings read_settings_file(const std::filesystem::path& path);

/// Applies settings over the defaults. Unknown keys or malformed values throw
/// ConfigError. Keys: scheme, mode, nu, viscous_form, sizes, size, tau, T,
/// theta, U, gamma, g, alpha, k, out, export_fields, snapshots, jobs.
RunConfig make_config(const Settings& settings, RunConfig defaults = {});

/// Single-line summary of every parameter, used as the CSV header comment.
std::string describe(const RunConfig& config);

struct RunOutcome {
  int n = 0;
  std::optional<ErrorRecord> record;
  std::string error;
  double wall_seconds = 0.0;
  int solves = 0;
  double max_solver_residual = 0.0;
};

struct ConvergenceReport {
  RunConfig config;
  std::vector<RunOutcome> runs;  // ordered by h descending

  [[nodiscard]] std::vector<ErrorRecord> records() const;
  [[nodiscard]] bool all_succeeded() const;
};

/// Manufactured-solution sweep over config.sizes. Runs with config.jobs
/// worker threads; failures are recorded, not thrown.
ConvergenceReport run_convergence_study(const RunConfig& config);

/// Writes errors_l2.csv, errors_h1.csv, errors_relative.csv and
/// errors_l2l2.csv into `dir`.
void write_convergence_csv(const ConvergenceReport& report, const std::filesystem::path& dir);

/// Final-time discrete norms per mesh size; written as stability.csv.
ConvergenceReport run_stability_study(const RunConfig& config);
void write_stability_csv(const ConvergenceReport& report, const std::filesystem::path& dir);

/// Rate column text: two decimals, empty when there is no coarser partner.
std::string format_rate(const std::optional<double>& rate);
/// Full-precision scientific notation.
std::string format_value(double value);

/// Legacy ASCII VTK unstructured grid with the P1 part of the velocity, the
/// pressure and the concentration as point data.
void export_vtk(const FieldState& state, const SpaceSet& spaces, const Mesh& mesh,
                const std::filesystem::path& path, double t);
std::string vtk_text(const FieldState& state, const SpaceSet& spaces, const Mesh& mesh, double t);

void write_diagnostics_csv(const std::vector<StepDiagnostics>& diagnostics, const RunConfig& config,
                           const std::filesystem::path& path);

/// Writes to a temporary file next to `path`, then renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Subcommands converge | stability | simulate | export. Returns 0 on
/// success, 1 if any run failed, 2 on configuration or usage errors.
int cli_main(int argc, char** argv);

}  // namespace bioconv
