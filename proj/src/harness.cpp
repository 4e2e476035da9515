#include "bioconv/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

namespace bioconv {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("invalid value for '" + key + "': '" + value + "'");
  }
  if (used != value.size() || !std::isfinite(out)) throw ConfigError("invalid value for '" + key + "': '" + value + "'");
  return out;
}

int to_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  int out = 0;
  try {
    out = std::stoi(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("invalid integer for '" + key + "': '" + value + "'");
  }
  if (used != value.size()) throw ConfigError("invalid integer for '" + key + "': '" + value + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw ConfigError("invalid boolean for '" + key + "': '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) items.push_back(trim(item));
  return items;
}

}  // namespace

ModelParams RunConfig::params_for(int n) const {
  ModelParams p = params;
  p.tau = tau ? *tau : 1.0 / n;
  return p;
}

void RunConfig::validate() const {
  if (sizes.empty()) throw ConfigError("at least one mesh size is required");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 1) throw ConfigError("mesh sizes must be positive");
    if (i > 0 && sizes[i] != 2 * sizes[i - 1]) {
      throw ConfigError("mesh sizes must double at each entry (h halving), got " + std::to_string(sizes[i - 1]) +
                        " then " + std::to_string(sizes[i]));
    }
  }
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  try {
    for (int n : sizes) {
      const ModelParams p = params_for(n);
      p.validate();
      (void)p.num_steps();
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

Settings parse_settings(const std::string& text) {
  Settings settings;
  std::stringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(number) + ": empty key");
    settings[key] = trim(line.substr(eq + 1));
  }
  return settings;
}

Settings read_settings_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_settings(buffer.str());
}

RunConfig make_config(const Settings& settings, RunConfig config) {
  for (const auto& [key, value] : settings) {
    try {
      if (key == "scheme") {
        config.scheme = parse_scheme(value);
      } else if (key == "mode") {
        config.mode = parse_mode(value);
      } else if (key == "nu") {
        config.params.viscosity = ViscosityLaw::parse(value);
      } else if (key == "viscous_form") {
        if (value == "gradient") {
          config.params.viscous_form = ViscousForm::Gradient;
        } else if (value == "symmetric") {
          config.params.viscous_form = ViscousForm::SymmetricGradient;
        } else {
          throw ConfigError("viscous_form must be gradient|symmetric");
        }
      } else if (key == "sizes") {
        config.sizes.clear();
        for (const auto& item : split_list(value)) config.sizes.push_back(to_int(key, item));
      } else if (key == "size") {
        config.sizes = {to_int(key, value)};
      } else if (key == "tau") {
        config.tau = to_double(key, value);
      } else if (key == "T") {
        config.params.final_time = to_double(key, value);
      } else if (key == "theta") {
        config.params.theta = to_double(key, value);
      } else if (key == "U") {
        config.params.swim_speed = to_double(key, value);
      } else if (key == "gamma") {
        config.params.gamma = to_double(key, value);
      } else if (key == "g") {
        config.params.gravity = to_double(key, value);
      } else if (key == "alpha") {
        config.params.alpha = to_double(key, value);
      } else if (key == "k") {
        config.params.viscosity_bound = to_double(key, value);
      } else if (key == "out") {
        config.out_dir = value;
      } else if (key == "export_fields") {
        config.export_fields = to_bool(key, value);
      } else if (key == "snapshots") {
        config.snapshot_times.clear();
        for (const auto& item : split_list(value)) config.snapshot_times.push_back(to_double(key, item));
      } else if (key == "jobs") {
        config.jobs = to_int(key, value);
      } else {
        throw ConfigError("unknown setting '" + key + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  return config;
}

std::string describe(const RunConfig& config) {
  const ModelParams& p = config.params;
  std::ostringstream out;
  out.precision(17);
  out << "scheme=" << to_string(config.scheme) << " mode=" << to_string(config.mode)
      << " nu=" << p.viscosity.to_string()
      << " viscous_form=" << (p.viscous_form == ViscousForm::Gradient ? "gradient" : "symmetric")
      << " theta=" << p.theta << " U=" << p.swim_speed << " gamma=" << p.gamma << " g=" << p.gravity
      << " alpha=" << p.alpha << " k=" << p.viscosity_bound << " T=" << p.final_time << " tau=";
  if (config.tau) {
    out << *config.tau;
  } else {
    out << "h";
  }
  return out.str();
}

std::vector<ErrorRecord> ConvergenceReport::records() const {
  std::vector<ErrorRecord> out;
  for (const auto& run : runs) {
    if (run.record) out.push_back(*run.record);
  }
  return out;
}

bool ConvergenceReport::all_succeeded() const {
  for (const auto& run : runs) {
    if (!run.record) return false;
  }
  return true;
}

namespace {

RunOutcome run_one(const RunConfig& config, int n) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  RunOutcome out;
  out.n = n;
  try {
    const Mesh mesh = build_unit_square_mesh(n);
    const ModelParams params = config.params_for(n);
    const ProblemData data = config.mode == Mode::Manufactured ? manufactured_problem(params) : physical_problem();
    const SpaceSet spaces = build_spaces(mesh, config.mode == Mode::Physical);
    double acc_u = 0.0, acc_c = 0.0, acc_p = 0.0;
    StepObserver observer;
    if (config.mode == Mode::Manufactured) {
      observer = [&](const FieldState& s, const StepDiagnostics&) {
        const ErrorRecord e = error_norms({s.u_curr, s.p_curr, s.c_curr}, spaces, mesh, s.t);
        acc_u += params.tau * e.velocity_l2 * e.velocity_l2;
        acc_c += params.tau * e.concentration_l2 * e.concentration_l2;
        acc_p += params.tau * e.pressure_l2 * e.pressure_l2;
      };
    }
    const SimulationResult result = run_simulation(params, config.scheme, mesh, data, observer);
    const FieldState& s = result.final_state;
    ErrorRecord record;
    if (config.mode == Mode::Manufactured) {
      record = error_norms({s.u_curr, s.p_curr, s.c_curr}, spaces, mesh, s.t);
      record.velocity_l2l2 = std::sqrt(acc_u);
      record.concentration_l2l2 = std::sqrt(acc_c);
      record.pressure_l2l2 = std::sqrt(acc_p);
    } else {
      const FieldNorms norms = field_norms({s.u_curr, s.p_curr, s.c_curr}, spaces, mesh);
      record.n = n;
      record.h = mesh.spacing();
      record.velocity_norm_l2 = norms.velocity_l2;
      record.velocity_norm_h1 = norms.velocity_h1;
      record.concentration_norm_l2 = norms.concentration_l2;
      record.concentration_norm_h1 = norms.concentration_h1;
      record.pressure_norm_l2 = norms.pressure_l2;
    }
    record.tau = params.tau;
    out.record = record;
    out.solves = result.solves;
    for (const auto& d : result.diagnostics) out.max_solver_residual = std::max(out.max_solver_residual, d.solver_residual);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  out.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return out;
}

ConvergenceReport run_sweep(const RunConfig& config, const char* label) {
  config.validate();
  ConvergenceReport report;
  report.config = config;
  report.runs.resize(config.sizes.size());
  const std::size_t jobs = static_cast<std::size_t>(config.jobs);
  for (std::size_t first = 0; first < config.sizes.size(); first += jobs) {
    const std::size_t last = std::min(config.sizes.size(), first + jobs);
    std::vector<std::future<RunOutcome>> pending;
    for (std::size_t i = first; i < last; ++i) {
      pending.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, run_one, std::cref(config),
                                   config.sizes[i]));
    }
    for (std::size_t i = first; i < last; ++i) {
      report.runs[i] = pending[i - first].get();
      const RunOutcome& run = report.runs[i];
      std::cerr << "[" << label << "] n=" << run.n << " " << (run.record ? "ok" : "FAILED: " + run.error) << " ("
                << run.wall_seconds << " s, " << run.solves << " solves)\n";
    }
  }
  return report;
}

struct Column {
  std::string name;
  double ErrorRecord::*field;
  bool with_rate;
};

std::string table_csv(const ConvergenceReport& report, const std::vector<Column>& columns) {
  std::ostringstream out;
  out << "# " << describe(report.config) << "\n";
  for (const auto& run : report.runs) {
    if (!run.record) out << "# failed n=" << run.n << ": " << run.error << "\n";
  }
  out << "n,h,tau";
  for (const auto& c : columns) {
    out << "," << c.name;
    if (c.with_rate) out << ",rate";
  }
  out << "\n";
  const ErrorRecord* previous = nullptr;
  for (const auto& run : report.runs) {
    if (!run.record) {
      previous = nullptr;
      continue;
    }
    const ErrorRecord& r = *run.record;
    const bool paired = previous != nullptr && previous->n * 2 == r.n;
    out << r.n << "," << format_value(r.h) << "," << format_value(r.tau);
    for (const auto& c : columns) {
      out << "," << format_value(r.*c.field);
      if (c.with_rate) {
        std::optional<double> rate;
        if (paired && previous->*c.field > 0.0 && r.*c.field > 0.0) rate = convergence_rate(previous->*c.field, r.*c.field);
        out << "," << format_rate(rate);
      }
    }
    out << "\n";
    previous = &r;
  }
  return out.str();
}

}  // namespace

ConvergenceReport run_convergence_study(const RunConfig& config) {
  if (config.mode != Mode::Manufactured) throw ConfigError("convergence studies need manufactured mode");
  return run_sweep(config, "converge");
}

ConvergenceReport run_stability_study(const RunConfig& config) { return run_sweep(config, "stability"); }

std::string format_rate(const std::optional<double>& rate) {
  if (!rate) return {};
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.2f", *rate);
  return buffer;
}

std::string format_value(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.16e", value);
  return buffer;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw std::runtime_error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void write_convergence_csv(const ConvergenceReport& report, const std::filesystem::path& dir) {
  using R = ErrorRecord;
  write_file_atomic(dir / "errors_l2.csv", table_csv(report, {{"u_l2", &R::velocity_l2, true},
                                                               {"c_l2", &R::concentration_l2, true},
                                                               {"p_l2", &R::pressure_l2, true}}));
  write_file_atomic(dir / "errors_h1.csv",
                    table_csv(report, {{"u_h1", &R::velocity_h1, true}, {"c_h1", &R::concentration_h1, true}}));
  write_file_atomic(dir / "errors_relative.csv", table_csv(report, {{"u_l2_rel", &R::velocity_l2_rel, true},
                                                                     {"c_l2_rel", &R::concentration_l2_rel, true},
                                                                     {"p_l2_rel", &R::pressure_l2_rel, true}}));
  write_file_atomic(dir / "errors_l2l2.csv", table_csv(report, {{"u_l2l2", &R::velocity_l2l2, false},
                                                                 {"c_l2l2", &R::concentration_l2l2, false},
                                                                 {"p_l2l2", &R::pressure_l2l2, false}}));
}

void write_stability_csv(const ConvergenceReport& report, const std::filesystem::path& dir) {
  using R = ErrorRecord;
  write_file_atomic(dir / "stability.csv", table_csv(report, {{"u_l2", &R::velocity_norm_l2, false},
                                                               {"u_h1", &R::velocity_norm_h1, false},
                                                               {"c_l2", &R::concentration_norm_l2, false},
                                                               {"c_h1", &R::concentration_norm_h1, false},
                                                               {"p_l2", &R::pressure_norm_l2, false}}));
}

void write_diagnostics_csv(const std::vector<StepDiagnostics>& diagnostics, const RunConfig& config,
                           const std::filesystem::path& path) {
  std::ostringstream out;
  out << "# " << describe(config) << "\n";
  out << "step,t,u_l2,u_h1,c_l2,c_h1,p_l2,solver_residual,u_telescope,c_telescope,u_convection_energy,"
         "c_convection_energy,c_mean,p_mean,nu_min,nu_max,nu_out_of_bounds\n";
  for (const auto& d : diagnostics) {
    out << d.step;
    for (double v : {d.t, d.velocity_l2, d.velocity_h1, d.concentration_l2, d.concentration_h1, d.pressure_l2,
                     d.solver_residual, d.velocity_telescope_residual, d.concentration_telescope_residual,
                     d.velocity_convection_energy, d.concentration_convection_energy, d.concentration_mean,
                     d.pressure_mean, d.viscosity_min, d.viscosity_max}) {
      out << "," << format_value(v);
    }
    out << "," << (d.viscosity_out_of_bounds ? 1 : 0) << "\n";
  }
  write_file_atomic(path, out.str());
}

std::string vtk_text(const FieldState& state, const SpaceSet& spaces, const Mesh& mesh, double t) {
  const int nv = static_cast<int>(mesh.num_nodes());
  const int nt = static_cast<int>(mesh.num_triangles());
  // Node DOFs come first in every space, so the P1 part is read off directly.
  const double p_mean = [&] {
    const Vector w = integral_weights(spaces.pressure, mesh);
    return w.dot(state.p_curr) / w.sum();
  }();
  std::ostringstream out;
  char buf[96];
  out << "# vtk DataFile Version 3.0\n";
  std::snprintf(buf, sizeof buf, "bioconv t=%.9g (velocity bubble components dropped)\n", t);
  out << buf << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nv << " double\n";
  for (const auto& x : mesh.nodes) {
    std::snprintf(buf, sizeof buf, "%.9g %.9g 0\n", x.x(), x.y());
    out << buf;
  }
  out << "CELLS " << nt << " " << 4 * nt << "\n";
  for (const auto& tri : mesh.triangles) out << "3 " << tri[0] << " " << tri[1] << " " << tri[2] << "\n";
  out << "CELL_TYPES " << nt << "\n";
  for (int e = 0; e < nt; ++e) out << "5\n";
  out << "POINT_DATA " << nv << "\nVECTORS velocity double\n";
  for (int v = 0; v < nv; ++v) {
    std::snprintf(buf, sizeof buf, "%.9g %.9g 0\n", state.u_curr[2 * v], state.u_curr[2 * v + 1]);
    out << buf;
  }
  out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (int v = 0; v < nv; ++v) {
    std::snprintf(buf, sizeof buf, "%.9g\n", state.p_curr[v] - p_mean);
    out << buf;
  }
  out << "SCALARS concentration double 1\nLOOKUP_TABLE default\n";
  for (int v = 0; v < nv; ++v) {
    std::snprintf(buf, sizeof buf, "%.9g\n", state.c_curr[v]);
    out << buf;
  }
  return out.str();
}

void export_vtk(const FieldState& state, const SpaceSet& spaces, const Mesh& mesh, const std::filesystem::path& path,
                double t) {
  write_file_atomic(path, vtk_text(state, spaces, mesh, t));
}

}  // namespace bioconv
