#include "conewave/solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "conewave/error.hpp"
#include "conewave/format.hpp"

namespace conewave {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Conservative radial Laplacian: cell j spans [r_{j-1/2}, r_{j+1/2}] with
// volume (r_{j+1/2}^n - r_{j-1/2}^n) / n, so that sum vol_j u_j (L v)_j is
// minus a symmetric stiffness form. The first cell reaches down to the axis
// and carries no flux through it; the axis value itself is the even
// extrapolation (4 u_1 - u_2) / 3. A flux-carrying axis cell of volume
// (dr/2)^n / n would raise the spectral radius to about 2n / dr^2 and break
// stability below dt = dr.
struct RadialGrid {
  int n;
  double dr;
  std::size_t nodes;  // J + 1; node J carries the Dirichlet value.
  std::vector<double> vol;
  std::vector<double> face;  // r_{j+1/2}^{n-1} / dr

  RadialGrid(int n_, double dr_, std::size_t nodes_) : n(n_), dr(dr_), nodes(nodes_) {
    vol.assign(nodes, 0.0);
    face.assign(nodes, 0.0);
    for (std::size_t j = 1; j < nodes; ++j) {
      const double hi = (static_cast<double>(j) + 0.5) * dr;
      const double lo = j == 1 ? 0.0 : (static_cast<double>(j) - 0.5) * dr;
      vol[j] = (std::pow(hi, n) - std::pow(lo, n)) / n;
      face[j] = std::pow(hi, n - 1) / dr;
    }
  }

  void laplacian(const std::vector<double>& u, std::vector<double>& out) const {
    const std::size_t last = nodes - 1;
    for (std::size_t j = 1; j < last; ++j) {
      const double right = face[j] * (u[j + 1] - u[j]);
      const double left = face[j - 1] * (u[j] - u[j - 1]);
      out[j] = (right - left) / vol[j];
    }
    out[0] = 0.0;
    out[last] = 0.0;
  }

  double stiffness(const std::vector<double>& u, const std::vector<double>& v) const {
    double s = 0.0;
    for (std::size_t j = 1; j + 1 < nodes; ++j) s += face[j] * (u[j + 1] - u[j]) * (v[j + 1] - v[j]);
    return s;
  }

  static void close_axis(std::vector<double>& u) { u[0] = (4.0 * u[1] - u[2]) / 3.0; }
};

double max_abs(const std::vector<double>& u) {
  double m = 0.0;
  for (double x : u) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

long SolverConfig::steps() const {
  const double span = t_end - t0;
  return std::max(1L, static_cast<long>(std::ceil(span / (cfl * dr()) - 1e-9)));
}

double SolverConfig::dt() const { return (t_end - t0) / static_cast<double>(steps()); }

void SolverConfig::validate() const {
  if (n < 1) throw InvalidArgument("solver: dimension n must be at least 1");
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidArgument("solver: p must be >= 1");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("solver: radius must be positive");
  if (intervals < 2) throw InvalidArgument("solver: need at least 2 radial intervals");
  if (!(cfl > 0.0) || !std::isfinite(cfl)) throw InvalidArgument("solver: CFL factor must be positive");
  if (!std::isfinite(t0) || !std::isfinite(t_end) || !(t_end > t0))
    throw InvalidArgument("solver: need finite t0 < t_end");
  if (!(phi_max > 0.0)) throw InvalidArgument("solver: blow-up threshold must be positive");
  if (diagnostic_radius < 0.0) throw InvalidArgument("solver: negative diagnostic radius");
  if (diagnostic_radius > 0.0 && radius < diagnostic_radius + (t_end - t0)) {
    std::ostringstream os;
    os << "solver: radius " << radius << " is inside the causal buffer diagnostic_radius + (t_end - t0) = "
       << diagnostic_radius + (t_end - t0);
    throw InvalidArgument(os.str());
  }
}

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::completed: return "completed";
    case RunStatus::blew_up: return "blew_up";
    case RunStatus::cfl_violation: return "cfl_violation";
  }
  return "unknown";
}

RunResult evolve(const SolverConfig& config, const InitialDataSpec& data) {
  config.validate();
  data.validate();

  const std::size_t nodes = static_cast<std::size_t>(config.intervals) + 1;
  const double dr = config.dr();

  RunResult run;
  run.n = config.n;
  run.p = config.p;
  run.t0 = config.t0;
  run.dr = dr;
  run.intervals = config.intervals;
  run.t_final = config.t0;
  run.snapshots = DiscreteField(config.n, dr, nodes);
  run.blowup_surface.assign(nodes, kInf);
  if (config.cfl > 1.0) {
    run.status = RunStatus::cfl_violation;
    return run;
  }

  const long steps = config.steps();
  const double dt = config.dt();
  run.dt = dt;
  const double k = config.p > 1.0 ? 2.0 / (config.p - 1.0) : kInf;

  const RadialGrid grid(config.n, dr, nodes);
  InitialData init = sample_initial_data(data, config.n, config.p, config.t0, dr, nodes);
  init.phi.back() = 0.0;
  init.phi_t.back() = 0.0;

  // Requested snapshot levels, sorted and deduplicated.
  std::vector<long> snap_levels;
  for (double ts : config.snapshot_times) {
    const long m = std::lround((ts - config.t0) / dt);
    snap_levels.push_back(std::clamp(m, 0L, steps));
  }
  std::sort(snap_levels.begin(), snap_levels.end());
  snap_levels.erase(std::unique(snap_levels.begin(), snap_levels.end()), snap_levels.end());
  std::size_t next_snap = 0;

  const bool v_constant = config.V.is_constant();
  std::vector<double> v_nodes(nodes, config.V.c0());
  auto refresh_potential = [&](double t) {
    if (v_constant) return;
    for (std::size_t j = 0; j < nodes; ++j) v_nodes[j] = config.V.value(t, dr * static_cast<double>(j));
  };
  auto force = [&](const std::vector<double>& u, std::vector<double>& out) {
    grid.laplacian(u, out);
    if (!config.nonlinear) return;
    for (std::size_t j = 1; j + 1 < nodes; ++j) out[j] += v_nodes[j] * signed_pow(u[j], config.p);
  };
  auto potential_energy = [&](const std::vector<double>& u) {
    if (!config.nonlinear) return 0.0;
    double s = 0.0;
    for (std::size_t j = 1; j + 1 < nodes; ++j)
      s += grid.vol[j] * v_nodes[j] * std::pow(std::abs(u[j]), config.p + 1.0);
    return 2.0 / (config.p + 1.0) * s;
  };

  std::vector<double> older;  // level m - 2, kept for the final backward difference
  std::vector<double> prev = init.phi;
  std::vector<double> cur(nodes, 0.0);
  std::vector<double> acc(nodes, 0.0);
  std::vector<double> dphi(nodes, 0.0);

  auto time_of = [&](long m) { return config.t0 + dt * static_cast<double>(m); };

  auto record_axis = [&](long m, const std::vector<double>& u) {
    run.axis_times.push_back(time_of(m));
    run.axis_values.push_back(u[0]);
  };

  auto maybe_snapshot = [&](long m, const std::vector<double>& u, const std::vector<double>& ut) {
    if (next_snap < snap_levels.size() && snap_levels[next_snap] == m) {
      run.snapshots.append_level(time_of(m), u, ut);
      ++next_snap;
    }
  };

  // Checks a freshly computed level; returns true if the run must halt.
  double prev_max = max_abs(prev);
  auto inspect = [&](long m, const std::vector<double>& u) {
    const double t = time_of(m);
    double level_max = 0.0;
    std::size_t bad = nodes;
    for (std::size_t j = 0; j < nodes; ++j) {
      const double a = std::abs(u[j]);
      if (!std::isfinite(a)) {
        if (bad == nodes) bad = j;
        continue;
      }
      level_max = std::max(level_max, a);
      if (a > config.phi_max && run.blowup_surface[j] == kInf) run.blowup_surface[j] = t;
    }
    run.steps_taken = m;
    run.t_final = t;
    if (level_max > config.phi_max) {
      run.status = RunStatus::blew_up;
      run.max_phi = std::max(run.max_phi, level_max);
      if (m == 0 || !std::isfinite(k)) {
        run.t_b = t;
        run.t_blowup_extrapolated = t;
      } else {
        const double u0 = std::pow(prev_max, -1.0 / k);
        const double u1 = std::pow(level_max, -1.0 / k);
        const double ustar = std::pow(config.phi_max, -1.0 / k);
        const double t_prev = time_of(m - 1);
        if (u0 > u1) {
          run.t_b = t_prev + dt * (u0 - ustar) / (u0 - u1);
          run.t_blowup_extrapolated = t_prev + dt * u0 / (u0 - u1);
        } else {
          run.t_b = t;
          run.t_blowup_extrapolated = t;
        }
      }
      return true;
    }
    if (bad != nodes) {
      std::ostringstream os;
      os << "solver: non-finite value at t = " << t << ", r = " << dr * static_cast<double>(bad)
         << " (node " << bad << ") before the blow-up threshold";
      throw SolverError(os.str(), t, dr * static_cast<double>(bad));
    }
    run.max_phi = std::max(run.max_phi, level_max);
    prev_max = level_max;
    return false;
  };

  auto record_energy = [&](long m, const std::vector<double>& lo, const std::vector<double>& hi) {
    double kinetic = 0.0;
    for (std::size_t j = 1; j + 1 < nodes; ++j) {
      const double v = (hi[j] - lo[j]) / dt;
      kinetic += grid.vol[j] * v * v;
    }
    const double e = kinetic + grid.stiffness(hi, lo) - 0.5 * (potential_energy(lo) + potential_energy(hi));
    run.energy.push_back({time_of(m) + 0.5 * dt, unit_sphere_area(config.n) * e});
  };

  refresh_potential(config.t0);
  if (inspect(0, prev)) {
    record_axis(0, prev);
    maybe_snapshot(0, prev, init.phi_t);
    run.final_phi = prev;
    return run;
  }
  record_axis(0, prev);
  maybe_snapshot(0, prev, init.phi_t);

  // Taylor start: phi^1 = phi^0 + dt psi + dt^2 / 2 (L phi^0 + N(phi^0)).
  force(prev, acc);
  for (std::size_t j = 1; j + 1 < nodes; ++j)
    cur[j] = prev[j] + dt * init.phi_t[j] + 0.5 * dt * dt * acc[j];
  cur.back() = 0.0;
  RadialGrid::close_axis(cur);

  long m = 1;
  for (;;) {
    refresh_potential(time_of(m));
    const bool halt = inspect(m, cur);
    record_axis(m, cur);
    if (halt) break;
    record_energy(m - 1, prev, cur);
    if (m == steps) break;

    force(cur, acc);
    std::vector<double> next(nodes, 0.0);
    for (std::size_t j = 1; j + 1 < nodes; ++j)
      next[j] = 2.0 * cur[j] - prev[j] + dt * dt * acc[j];
    RadialGrid::close_axis(next);

    // Level m is now bracketed: central difference for its time derivative.
    if (next_snap < snap_levels.size() && snap_levels[next_snap] == m) {
      for (std::size_t j = 0; j < nodes; ++j) dphi[j] = (next[j] - prev[j]) / (2.0 * dt);
      maybe_snapshot(m, cur, dphi);
    }
    older = std::move(prev);
    prev = std::move(cur);
    cur = std::move(next);
    ++m;
  }

  // The last level has no successor: backward differences.
  if (next_snap < snap_levels.size() && snap_levels[next_snap] == m) {
    for (std::size_t j = 0; j < nodes; ++j)
      dphi[j] = older.empty() ? (cur[j] - prev[j]) / dt
                              : (3.0 * cur[j] - 4.0 * prev[j] + older[j]) / (2.0 * dt);
    maybe_snapshot(m, cur, dphi);
  }
  run.final_phi = cur;
  return run;
}

double richardson_blowup_time(const RunResult& coarse, const RunResult& fine) {
  if (coarse.status != RunStatus::blew_up || fine.status != RunStatus::blew_up)
    throw InvalidArgument("richardson_blowup_time: both runs must have blown up");
  if (std::abs(coarse.dr - 2.0 * fine.dr) > 1e-9 * coarse.dr)
    throw InvalidArgument("richardson_blowup_time: the fine grid must halve the coarse spacing");
  return (4.0 * fine.t_b - coarse.t_b) / 3.0;
}

double final_l2_error(const RunResult& run, const Field& reference, double r_max) {
  if (run.final_phi.empty()) throw InvalidArgument("final_l2_error: run has no final level");
  const RadialGrid grid(run.n, run.dr, run.final_phi.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < run.final_phi.size(); ++j) {
    const double r = run.dr * static_cast<double>(j);
    if (r > r_max + 1e-12 * r_max) break;
    const double e = run.final_phi[j] - reference.sample(run.t_final, r).phi;
    sum += grid.vol[j] * e * e;
  }
  return std::sqrt(sum);
}

ConvergenceReport convergence_study(const SolverConfig& base, const InitialDataSpec& data,
                                    const std::vector<int>& intervals, const Field& reference,
                                    double r_max) {
  if (intervals.size() < 2) throw InvalidArgument("convergence_study: need at least two levels");
  if (!(r_max > 0.0) || r_max > base.radius)
    throw InvalidArgument("convergence_study: r_max must lie in (0, R]");

  ConvergenceReport report;
  std::vector<double> log_dr;
  std::vector<double> log_err;
  bool all_positive = true;
  for (int J : intervals) {
    SolverConfig cfg = base;
    cfg.intervals = J;
    cfg.snapshot_times.clear();
    const RunResult run = evolve(cfg, data);
    if (run.status != RunStatus::completed)
      throw SolverError("convergence_study: run on J = " + std::to_string(J) + " ended " +
                            to_string(run.status),
                        run.t_final, 0.0);
    const double err = final_l2_error(run, reference, r_max);
    report.intervals.push_back(J);
    report.errors.push_back(err);
    if (!(err > 0.0)) all_positive = false;
    log_dr.push_back(std::log(run.dr));
    log_err.push_back(std::log(err));
  }
  if (all_positive) {
    const double nlev = static_cast<double>(log_dr.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < log_dr.size(); ++i) {
      sx += log_dr[i];
      sy += log_err[i];
      sxx += log_dr[i] * log_dr[i];
      sxy += log_dr[i] * log_err[i];
    }
    report.order = (nlev * sxy - sx * sy) / (nlev * sxx - sx * sx);
  }
  return report;
}

FiniteSpeedReport finite_speed_check(const DiscreteField& history, double t0, double dt,
                                     double support_radius) {
  if (!(dt > 0.0)) throw InvalidArgument("finite_speed_check: dt must be positive");
  FiniteSpeedReport report;
  const double dr = history.dr();
  const double speed = dr / dt;
  for (std::size_t m = 0; m < history.levels(); ++m) {
    const double t = history.time(m);
    const double reach = support_radius + (t - t0) * speed + 2.0 * dr;
    const auto phi = history.phi(m);
    for (std::size_t j = 0; j < phi.size(); ++j) {
      const double r = dr * static_cast<double>(j);
      if (r <= reach) continue;
      if (!(std::abs(phi[j]) <= 1e-12)) {
        report.ok = false;
        report.witness = std::array<double, 3>{t, r, phi[j]};
        return report;
      }
    }
  }
  return report;
}

FiniteSpeedReport finite_speed_check(const RunResult& run, double support_radius) {
  if (run.status == RunStatus::cfl_violation) return {};
  return finite_speed_check(run.snapshots, run.t0, run.dt, support_radius);
}

Snapshot snapshot_at(const RunResult& run, std::size_t level) {
  if (level >= run.snapshots.levels()) throw InvalidArgument("snapshot_at: level out of range");
  Snapshot s;
  s.n = run.n;
  s.p = run.p;
  s.t = run.snapshots.time(level);
  const auto phi = run.snapshots.phi(level);
  const auto phi_t = run.snapshots.phi_t(level);
  s.phi.assign(phi.begin(), phi.end());
  s.phi_t.assign(phi_t.begin(), phi_t.end());
  s.r.resize(phi.size());
  for (std::size_t j = 0; j < phi.size(); ++j) s.r[j] = run.dr * static_cast<double>(j);
  return s;
}

void write_run_summary(std::ostream& out, const RunResult& run) {
  out << "status,t_b,J,dt,max_phi\n"
      << to_string(run.status) << ',' << format_real(run.t_b) << ',' << run.intervals << ','
      << format_real(run.dt) << ',' << format_real(run.max_phi) << '\n';
}

}  // namespace conewave
