#pragma once

// Radial finite-difference evolution of d_t^2 phi = Laplace phi + V |phi|^{p-1} phi:
// explicit leapfrog, conservative radial Laplacian, Dirichlet outer boundary,
// blow-up detection by a threshold on max |phi|.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "conewave/exact_solutions.hpp"
#include "conewave/fields.hpp"

namespace conewave {

struct SolverConfig {
  int n = 3;
  double p = 2.0;
  PotentialSpec V = PotentialSpec::constant();
  /// Outer radius R; r_j = j R / J.
  double radius = 4.0;
  /// Number of radial intervals; the grid has J + 1 nodes.
  int intervals = 1024;
  /// Requested dt / dr. The step is shortened so that an integer number of
  /// steps reaches t_end; the realized ratio never exceeds this value.
  double cfl = 0.9;
  double t0 = -1.0;
  double t_end = 0.0;
  double phi_max = 1e6;
  std::vector<double> snapshot_times;
  /// Largest radius any diagnostic reads; 0 skips the causal-buffer check
  /// R >= diagnostic_radius + (t_end - t0).
  double diagnostic_radius = 0.0;
  /// false drops the V |phi|^{p-1} phi term (linear wave equation).
  bool nonlinear = true;

  double dr() const { return radius / intervals; }
  /// Number of leapfrog steps from t0 to t_end.
  long steps() const;
  double dt() const;

  /// Throws InvalidArgument; a CFL factor above 1 is not an error here but
  /// yields RunStatus::cfl_violation from evolve().
  void validate() const;
};

enum class RunStatus { completed, blew_up, cfl_violation };
std::string to_string(RunStatus status);

struct EnergySample {
  /// Half-step time t_m + dt / 2.
  double t = 0.0;
  double energy = 0.0;
};

struct RunResult {
  RunStatus status = RunStatus::completed;
  int n = 3;
  double p = 2.0;
  double t0 = 0.0;
  double dr = 0.0;
  double dt = 0.0;
  int intervals = 0;
  long steps_taken = 0;
  /// Time of the last computed level.
  double t_final = 0.0;
  /// Time at which max |phi| reached phi_max, interpolated between the two
  /// levels on which phi^{-1/k} is linear for a self-similar profile; NaN
  /// unless blew_up.
  double t_b = std::numeric_limits<double>::quiet_NaN();
  /// (max |phi|)^{-1/k} extrapolated linearly to zero from the last two
  /// levels; NaN unless blew_up.
  double t_blowup_extrapolated = std::numeric_limits<double>::quiet_NaN();
  /// Running maximum of |phi| over all levels.
  double max_phi = 0.0;
  /// Per node: first level time with |phi| > phi_max, +inf where it never happened.
  std::vector<double> blowup_surface;
  /// Levels at the requested snapshot times (nearest grid time).
  DiscreteField snapshots{1, 1.0, 4};
  /// phi(t_m, 0) at every level.
  std::vector<double> axis_times;
  std::vector<double> axis_values;
  /// Leapfrog energy sum vol_j (d_t phi)^2 + stiffness - 2/(p+1) V |phi|^{p+1},
  /// between consecutive levels.
  std::vector<EnergySample> energy;
  /// The last computed level.
  std::vector<double> final_phi;
};

/// Runs the scheme. Throws SolverError with the grid location if a value
/// turns non-finite before the blow-up threshold.
RunResult evolve(const SolverConfig& config, const InitialDataSpec& data);

/// Richardson extrapolation of the threshold-crossing time from runs on J and
/// 2J intervals (second order): (4 t_fine - t_coarse) / 3.
double richardson_blowup_time(const RunResult& coarse, const RunResult& fine);

/// sqrt(sum vol_j e_j^2) of the last level against `reference` over r <= r_max.
double final_l2_error(const RunResult& run, const Field& reference, double r_max);

struct ConvergenceReport {
  std::vector<int> intervals;
  std::vector<double> errors;
  /// Least-squares slope of log error against log dr; NaN when all errors are zero.
  double order = std::numeric_limits<double>::quiet_NaN();
};

/// Runs the base configuration on each J and measures the discrete L2 error
/// sqrt(sum vol_j e_j^2) against `reference` at t_end over r <= r_max.
ConvergenceReport convergence_study(const SolverConfig& base, const InitialDataSpec& data,
                                    const std::vector<int>& intervals, const Field& reference,
                                    double r_max);

struct FiniteSpeedReport {
  bool ok = true;
  /// First violating (t, r, phi).
  std::optional<std::array<double, 3>> witness;
};

/// |phi(t, r_j)| <= 1e-12 at every stored level for r_j beyond
/// support_radius + (t - t0) dr / dt + 2 dr, the reach of the discrete stencil.
FiniteSpeedReport finite_speed_check(const DiscreteField& history, double t0, double dt,
                                     double support_radius);
FiniteSpeedReport finite_speed_check(const RunResult& run, double support_radius);

/// One stored level as a snapshot (phi_t from the stored central difference).
Snapshot snapshot_at(const RunResult& run, std::size_t level);

/// Header "status,t_b,J,dt,max_phi" and one row.
void write_run_summary(std::ostream& out, const RunResult& run);

}  // namespace conewave
