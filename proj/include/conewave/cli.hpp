#pragma once

// Scenario orchestration behind the conewave tool: a sectioned key = value
// config, one runner per subcommand, CSV and summary output, exit codes.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "conewave/error.hpp"
#include "conewave/exact_solutions.hpp"
#include "conewave/quadrature.hpp"
#include "conewave/solver.hpp"

namespace conewave {

/// A config that does not parse or violates a cross-field constraint.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum ExitCode : int {
  exit_ok = 0,
  exit_unexpected = 1,
  exit_config = 2,
  exit_assertion = 3,
  exit_io = 4,
};

/// Section -> key -> raw value. Keys before any section header are an error,
/// as are duplicate keys. '#' and ';' start comments.
using IniDocument = std::map<std::string, std::map<std::string, std::string>>;
IniDocument parse_ini(std::istream& in, const std::string& origin = "config");

struct RunConfig {
  // [problem]
  int n = 3;
  double p = 2.0;
  std::string potential = "constant";  ///< constant | perturbed
  double c0 = 1.0;
  double v_eps = 0.0;
  double v_t_center = 0.0;
  double v_width = 1.0;

  // [grid]
  double R = 4.0;
  int J = 1024;
  double cfl = 0.9;
  double t0 = -1.0;
  double t_end = 0.0;
  double phi_max = 1e6;
  std::vector<double> snapshot_times;
  /// Uniform snapshots t0, t0 + step, ... up to t_end; 0 disables.
  double snapshot_step = 0.0;
  /// Two times of equal sign; log-spaced snapshots between them.
  std::vector<double> snapshot_log_range;
  int snapshots_per_decade = 16;
  double diagnostic_radius = 0.0;

  // [data]
  std::string data_kind = "zero";  ///< zero | truncated_ode | gaussian | file | ode
  double M = 2.0;
  double w = 0.25;
  double A = 0.0;
  double s = 0.5;
  std::string data_path;

  // [diagnostics]
  double sigma0 = 0.25;
  double sigma1 = 0.5;
  double sigma = 0.5;
  double gamma = 1.2;
  double eta = 2.0;
  std::vector<double> t_star{1.0};
  std::vector<double> a{0.25};
  double window_lo = -0.5;
  double window_hi = -0.05;
  std::vector<double> T{4.0, 8.0, 16.0, 32.0};
  int per_decade = 16;
  std::string kind = "annulus";  ///< verify-localized: annulus | timecone
  std::string quantity = "mz";   ///< rate-fit: mz | annulus | slab
  double r_max = 0.5;            ///< convergence error radius

  // [verify]
  std::size_t cases = 200;
  std::uint64_t seed = 7;
  std::string mode = "global";  ///< verify-carleman: global | shifted
  double a_min = 0.05;
  double a_max = 0.45;
  std::size_t fields = 20;
  double eps_floor = 1e-4;
  int cells = 32;
  int order = 4;

  // [output]
  std::string directory = "out";
  int precision = 17;

  // [sweep]
  std::string scenario;
  std::vector<double> sweep_p;
  std::vector<double> sweep_M;
  std::vector<int> sweep_J;
  std::vector<double> sweep_gamma;
  std::vector<double> sweep_a;

  /// Typed values from a parsed document; unknown sections or keys are a ConfigError.
  static RunConfig from_document(const IniDocument& doc);
  static RunConfig load(const std::string& path);

  PotentialSpec potential_spec() const;
  SolverConfig solver() const;
  InitialDataSpec data() const;
  QuadratureSpec quadrature() const;
  /// Union of the explicit, uniform and log-spaced snapshot times, sorted.
  std::vector<double> snapshot_schedule() const;

  /// Every constraint the command will rely on. Throws ConfigError.
  void validate(const std::string& command) const;
};

/// Subcommands accepted by run_command.
const std::vector<std::string>& command_names();

struct CliOptions {
  std::string command;
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

/// The --threads value, else CONEWAVE_THREADS, else the hardware concurrency.
unsigned resolve_threads(std::optional<unsigned> flag);

/// key=value lines of the summary file, in order.
using Summary = std::vector<std::pair<std::string, std::string>>;

struct ScenarioOutcome {
  /// false is a failed scientific assertion (exit 3).
  bool ok = true;
  /// sweep: the worst cell exit code.
  int exit_code = exit_ok;
  Summary summary;
  /// The number a sweep tabulates per cell.
  std::string headline_name;
  double headline = 0.0;
};

/// Runs one scenario into `out_dir` (created if needed) and writes its
/// `summary`. Exceptions propagate.
ScenarioOutcome run_scenario(const std::string& command, const RunConfig& config,
                             const std::string& out_dir, unsigned threads);

/// Loads the config, applies the flags, runs, and maps the outcome and any
/// exception to an exit code. Messages go to `err`.
int run_command(const CliOptions& options, std::ostream& err);

}  // namespace conewave
