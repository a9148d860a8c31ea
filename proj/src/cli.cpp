#include "conewave/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "conewave/carleman.hpp"
#include "conewave/energetics.hpp"
#include "conewave/format.hpp"
#include "conewave/parallel.hpp"

namespace conewave {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& where, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ConfigError(where + ": not a finite number: '" + text + "'");
  return v;
}

long long parse_integer(const std::string& where, const std::string& text) {
  long long v = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError(where + ": not an integer: '" + text + "'");
  return v;
}

/// Consumes the known keys of one section; finish() rejects the rest.
class SectionReader {
 public:
  SectionReader(const IniDocument& doc, std::string name) : name_(std::move(name)) {
    if (auto it = doc.find(name_); it != doc.end()) entries_ = it->second;
  }

  void read(const char* key, double& v) {
    if (auto raw = take(key)) v = parse_double(where(key), *raw);
  }
  void read(const char* key, int& v) {
    if (auto raw = take(key)) {
      const auto x = parse_integer(where(key), *raw);
      if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
        throw ConfigError(where(key) + ": out of range");
      v = static_cast<int>(x);
    }
  }
  void read(const char* key, std::size_t& v) {
    if (auto raw = take(key)) {
      const auto x = parse_integer(where(key), *raw);
      if (x < 0) throw ConfigError(where(key) + ": must be non-negative");
      v = static_cast<std::size_t>(x);
    }
  }
  void read_u64(const char* key, std::uint64_t& v) {
    if (auto raw = take(key)) {
      const char* end = raw->data() + raw->size();
      const auto [ptr, ec] = std::from_chars(raw->data(), end, v);
      if (ec != std::errc() || ptr != end)
        throw ConfigError(where(key) + ": not an unsigned 64-bit integer: '" + *raw + "'");
    }
  }
  void read(const char* key, std::string& v) {
    if (auto raw = take(key)) v = *raw;
  }
  void read(const char* key, std::vector<double>& v) {
    if (auto raw = take(key)) {
      v.clear();
      for (const auto& item : split_list(*raw)) v.push_back(parse_double(where(key), item));
    }
  }
  void read(const char* key, std::vector<int>& v) {
    if (auto raw = take(key)) {
      v.clear();
      for (const auto& item : split_list(*raw)) {
        int x = 0;
        SectionReader one(name_, key, item);
        one.read(key, x);
        v.push_back(x);
      }
    }
  }

  void finish() const {
    if (!entries_.empty())
      throw ConfigError("unknown key '" + entries_.begin()->first + "' in [" + name_ + "]");
  }

 private:
  SectionReader(std::string name, const char* key, const std::string& value)
      : name_(std::move(name)) {
    entries_[key] = value;
  }

  std::optional<std::string> take(const char* key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    std::string raw = it->second;
    entries_.erase(it);
    return raw;
  }
  std::string where(const char* key) const { return "[" + name_ + "] " + key; }

  std::string name_;
  std::map<std::string, std::string> entries_;
};

void require(bool condition, const std::string& message) {
  if (!condition) throw ConfigError(message);
}

void write_summary(const std::string& path, const Summary& summary) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& [k, v] : summary) out << k << '=' << v << '\n';
  if (!out) throw IoError("cannot write " + path);
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void close_output(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw IoError("cannot write " + path.string());
}

template <class Writer>
void write_file(const fs::path& path, Writer&& writer) {
  auto out = open_output(path);
  writer(out);
  close_output(out, path);
}

std::string yes_no(bool b) { return b ? "true" : "false"; }

/// A field to run diagnostics on: phi* in closed form, or the snapshot
/// history of a solver run.
struct FieldSource {
  FieldPtr closed;
  std::optional<RunResult> run;

  const Field& field() const {
    if (closed) return *closed;
    return run->snapshots;
  }
  bool discrete() const { return !closed; }

  /// Evaluation times in [lo, hi]: snapshot levels, or log-spaced for phi*.
  std::vector<double> times_in(double lo, double hi, int per_decade) const {
    if (discrete()) return level_times_in(run->snapshots, lo, hi);
    return log_spaced_times(lo, hi, per_decade);
  }
};

FieldSource field_source(const RunConfig& cfg) {
  FieldSource src;
  if (cfg.data_kind == "ode") {
    src.closed = ode_field(cfg.p);
    return src;
  }
  src.run = evolve(cfg.solver(), cfg.data());
  if (src.run->status == RunStatus::cfl_violation) throw ConfigError("[grid] cfl: above 1");
  if (src.run->snapshots.levels() < 2)
    throw ConfigError("[grid]: diagnostics need at least two snapshot times before the run ends");
  return src;
}

/// Sup-time candidates covering every window |t*|/eta .. eta |t*| of the given
/// t*; for a run, the stored levels plus the grid points inside its time range.
std::vector<double> sup_candidates(const FieldSource& src, const std::vector<double>& t_stars,
                                   double eta, int per_decade) {
  std::vector<double> out;
  double lo = -std::numeric_limits<double>::infinity(), hi = -lo;
  if (src.discrete()) {
    out = src.run->snapshots.times();
    lo = out.front();
    hi = out.back();
  }
  for (double ts : t_stars)
    for (double t : sup_time_grid(ts, eta, per_decade))
      if (t >= lo && t <= hi) out.push_back(t);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// The annulus sup window of every t* must lie inside the stored history,
/// otherwise the sup would silently cover only part of it.
void require_windows_covered(const FieldSource& src, const std::vector<double>& t_stars,
                             double eta) {
  if (!src.discrete()) return;
  const auto& times = src.run->snapshots.times();
  for (double ts : t_stars) {
    const double a = std::min(ts * eta, ts / eta), b = std::max(ts * eta, ts / eta);
    const double tol = 1e-9 * std::abs(ts);
    if (a < times.front() - tol || b > times.back() + tol)
      throw ConfigError("[diagnostics] window: the sup window [" + format_real(a) + ", " +
                        format_real(b) + "] of t*=" + format_real(ts) +
                        " is not covered by the run [" + format_real(times.front()) + ", " +
                        format_real(times.back()) + "]");
  }
}

ScenarioOutcome run_simulate(const RunConfig& cfg, const fs::path& out_dir) {
  const auto run = evolve(cfg.solver(), cfg.data());
  ScenarioOutcome res;
  write_file(out_dir / "run.csv", [&](std::ostream& o) { write_run_summary(o, run); });
  write_file(out_dir / "axis.csv", [&](std::ostream& o) {
    o << "t,phi_axis\n";
    for (std::size_t i = 0; i < run.axis_times.size(); ++i)
      o << format_real(run.axis_times[i]) << ',' << format_real(run.axis_values[i]) << '\n';
  });
  write_file(out_dir / "energy.csv", [&](std::ostream& o) {
    o << "t,energy\n";
    for (const auto& e : run.energy) o << format_real(e.t) << ',' << format_real(e.energy) << '\n';
  });
  bool all_zero = true;
  for (std::size_t m = 0; m < run.snapshots.levels(); ++m) {
    std::ostringstream name;
    name << "snapshot_" << std::setw(4) << std::setfill('0') << m << ".txt";
    write_file(out_dir / name.str(), [&](std::ostream& o) { write_snapshot(o, snapshot_at(run, m)); });
    for (double v : run.snapshots.phi(m)) all_zero = all_zero && v == 0.0;
  }

  res.summary = {{"command", "simulate"},
                 {"status", to_string(run.status)},
                 {"t_final", format_real(run.t_final)},
                 {"steps", std::to_string(run.steps_taken)},
                 {"dt", format_real(run.dt)},
                 {"dr", format_real(run.dr)},
                 {"max_phi", format_real(run.max_phi)},
                 {"t_b", format_real(run.t_b)},
                 {"t_blowup_extrapolated", format_real(run.t_blowup_extrapolated)},
                 {"snapshots", std::to_string(run.snapshots.levels())},
                 {"snapshots_all_zero", yes_no(all_zero)}};
  const double support = cfg.data().support_radius();
  if (std::isfinite(support)) {
    const auto fsr = finite_speed_check(run, support);
    res.ok = fsr.ok;
    res.summary.emplace_back("finite_speed", yes_no(fsr.ok));
    res.summary.emplace_back("finite_speed_tolerance", "1e-12");
  }
  res.headline_name = run.status == RunStatus::blew_up ? "t_b" : "max_phi";
  res.headline = run.status == RunStatus::blew_up ? run.t_b : run.max_phi;
  if (run.status == RunStatus::cfl_violation) res.ok = false;
  return res;
}

ScenarioOutcome run_verify_carleman(const RunConfig& cfg, const fs::path& out_dir,
                                    unsigned threads) {
  ScenarioOutcome res;
  const auto q = cfg.quadrature();
  if (cfg.mode == "global") {
    const auto cases = random_carleman_cases(cfg.cases, cfg.seed, cfg.a_min, cfg.a_max);
    const auto reports = verify_batch(cases, q, threads);
    write_file(out_dir / "carleman.csv",
               [&](std::ostream& o) { write_carleman_csv(o, cases, reports); });
    std::size_t passed = 0;
    double min_slack = std::numeric_limits<double>::infinity();
    for (const auto& r : reports) {
      passed += r.pass ? 1 : 0;
      min_slack = std::min(min_slack, r.slack + r.tolerance);
    }
    res.ok = passed == reports.size();
    res.summary = {{"command", "verify-carleman"},
                   {"mode", "global"},
                   {"status", res.ok ? "pass" : "fail"},
                   {"seed", std::to_string(cfg.seed)},
                   {"cases", std::to_string(reports.size())},
                   {"passed", std::to_string(passed)},
                   {"min_slack_plus_tolerance", format_real(min_slack)},
                   {"tolerance", "1e-6*(|lhs|+|rhs|)+error_estimate"}};
    res.headline_name = "passed";
    res.headline = static_cast<double>(passed);
    return res;
  }

  const auto fields = random_shifted_fields(cfg.fields, cfg.seed);
  struct Row {
    double a;
    ShiftedScaling scaling;
  };
  std::vector<Row> rows(fields.size() * cfg.a.size());
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    CarlemanParams params;
    params.n = cfg.n;
    params.p = cfg.p;
    params.a = cfg.a[i % cfg.a.size()];
    params.V = PotentialSpec::constant(cfg.c0);
    rows[i] = {params.a, shifted_scaling_check(params, fields[i / cfg.a.size()], cfg.sigma,
                                               cfg.t_star, q, cfg.eps_floor)};
  });
  std::size_t passed = 0;
  double worst_spread = 0.0;
  write_file(out_dir / "shifted.csv", [&](std::ostream& o) {
    o << "field_id,a,t_star,K,spread,flux_vanishing\n";
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < rows[i].scaling.K.size(); ++j)
        o << i / cfg.a.size() << ',' << format_real(rows[i].a) << ','
          << format_real(rows[i].scaling.t_stars[j]) << ',' << format_real(rows[i].scaling.K[j])
          << ',' << format_real(rows[i].scaling.spread) << ','
          << (rows[i].scaling.flux_vanishing ? 1 : 0) << '\n';
  });
  for (const auto& r : rows) {
    const bool finite = std::all_of(r.scaling.K.begin(), r.scaling.K.end(),
                                    [](double k) { return std::isfinite(k) && k > 0.0; });
    const bool ok = finite && r.scaling.spread <= 2.0 && r.scaling.flux_vanishing;
    passed += ok ? 1 : 0;
    worst_spread = std::max(worst_spread, r.scaling.spread);
  }
  res.ok = passed == rows.size();
  res.summary = {{"command", "verify-carleman"},
                 {"mode", "shifted"},
                 {"status", res.ok ? "pass" : "fail"},
                 {"seed", std::to_string(cfg.seed)},
                 {"fields", std::to_string(fields.size())},
                 {"checks", std::to_string(rows.size())},
                 {"passed", std::to_string(passed)},
                 {"max_K_spread", format_real(worst_spread)},
                 {"K_spread_tolerance", "2"}};
  res.headline_name = "max_K_spread";
  res.headline = worst_spread;
  return res;
}

LocalizedSpec localized_spec(const RunConfig& cfg, double t_star) {
  LocalizedSpec spec;
  spec.kind = cfg.kind == "timecone" ? LocalizedSpec::Kind::timecone : LocalizedSpec::Kind::annulus;
  spec.sigma = cfg.sigma;
  spec.sigma0 = cfg.sigma0;
  spec.sigma1 = cfg.sigma1;
  spec.gamma = cfg.gamma;
  spec.eta = cfg.eta;
  spec.t_star = t_star;
  spec.p = cfg.p;
  spec.n = cfg.n;
  return spec;
}

ScenarioOutcome run_verify_localized(const RunConfig& cfg, const fs::path& out_dir) {
  const auto src = field_source(cfg);
  const auto q = cfg.quadrature();
  if (cfg.kind == "annulus") require_windows_covered(src, cfg.t_star, cfg.eta);
  const auto sup = sup_candidates(src, cfg.t_star, cfg.eta, cfg.per_decade);
  std::vector<LocalizedReport> reports;
  for (double ts : cfg.t_star)
    reports.push_back(localized_estimate_check(src.field(), localized_spec(cfg, ts), sup, q));
  write_file(out_dir / "localized.csv", [&](std::ostream& o) {
    o << "t_star,lhs,rhs,ratio,tau_max,err_est\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const auto& r = reports[i];
      o << format_real(cfg.t_star[i]) << ',' << format_real(r.lhs) << ',' << format_real(r.rhs)
        << ',' << format_real(r.ratio) << ',' << format_real(r.tau_max) << ','
        << format_real(r.lhs_error + r.rhs_error) << '\n';
    }
  });

  double mean = 0.0;
  bool finite = true;
  for (const auto& r : reports) {
    finite = finite && std::isfinite(r.ratio) && r.ratio > 0.0;
    mean += r.ratio;
  }
  mean /= static_cast<double>(reports.size());
  double deviation = 0.0;
  for (const auto& r : reports) deviation = std::max(deviation, std::abs(r.ratio / mean - 1.0));
  ScenarioOutcome res;
  res.ok = finite && deviation < 0.2;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& r : reports) {
    lo = std::min(lo, r.ratio);
    hi = std::max(hi, r.ratio);
  }
  res.summary = {{"command", "verify-localized"},
                 {"kind", cfg.kind},
                 {"status", res.ok ? "pass" : "fail"},
                 {"t_stars", std::to_string(reports.size())},
                 {"ratio_min", format_real(lo)},
                 {"ratio_max", format_real(hi)},
                 {"ratio_mean", format_real(mean)},
                 {"max_relative_deviation", format_real(deviation)},
                 {"deviation_tolerance", "0.2"}};
  res.headline_name = "ratio_mean";
  res.headline = mean;
  return res;
}

ScenarioOutcome run_energy_profile(const RunConfig& cfg, const fs::path& out_dir) {
  const auto src = field_source(cfg);
  const auto times = src.times_in(cfg.window_lo, cfg.window_hi, cfg.per_decade);
  if (times.empty()) throw ConfigError("[diagnostics] window: no evaluation times inside");
  EnergyProfileSpec spec;
  spec.sigma0 = cfg.sigma0;
  spec.sigma1 = cfg.sigma1;
  spec.gamma = cfg.gamma;
  spec.eta = cfg.eta;
  spec.p = cfg.p;
  spec.n = cfg.n;
  require_windows_covered(src, times, cfg.eta);
  const auto sup = sup_candidates(src, times, cfg.eta, cfg.per_decade);
  const auto rows = energy_profile(src.field(), spec, times, sup, cfg.quadrature());
  write_file(out_dir / "energy.csv", [&](std::ostream& o) { write_energy_csv(o, rows); });
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& r : rows) {
    lo = std::min(lo, r.ratio);
    hi = std::max(hi, r.ratio);
  }
  ScenarioOutcome res;
  res.summary = {{"command", "energy-profile"},
                 {"status", "ok"},
                 {"rows", std::to_string(rows.size())},
                 {"ratio_min", format_real(lo)},
                 {"ratio_max", format_real(hi)}};
  res.headline_name = "ratio_max";
  res.headline = hi;
  return res;
}

ScenarioOutcome run_rate_fit(const RunConfig& cfg, const fs::path& out_dir) {
  const auto src = field_source(cfg);
  const auto times = src.times_in(cfg.window_lo, cfg.window_hi, cfg.per_decade);
  const auto q = cfg.quadrature();
  std::vector<double> y;
  for (double t : times) {
    if (cfg.quantity == "mz")
      y.push_back(mz_ball_quantity(src.field(), t, cfg.p, cfg.n, 1.0, q).value);
    else if (cfg.quantity == "annulus")
      y.push_back(annulus_quantity(src.field(), cfg.sigma0, cfg.sigma1, t, cfg.p, cfg.n, q).value);
    else
      y.push_back(slab_quantity(src.field(), cfg.sigma, cfg.gamma, t, cfg.p, cfg.n, q).value);
  }
  const auto fit = rate_fit(times, y, cfg.window_lo, cfg.window_hi);
  write_file(out_dir / "rate.csv", [&](std::ostream& o) {
    o << "t," << cfg.quantity << "_q\n";
    for (std::size_t i = 0; i < times.size(); ++i)
      o << format_real(times[i]) << ',' << format_real(y[i]) << '\n';
  });
  ScenarioOutcome res;
  res.summary = {{"command", "rate-fit"},
                 {"status", "ok"},
                 {"quantity", cfg.quantity},
                 {"samples", std::to_string(fit.samples)},
                 {"slope", format_real(fit.slope)},
                 {"intercept", format_real(fit.intercept)},
                 {"residual", format_real(fit.residual)},
                 {"eps_hat", format_real(fit.eps_hat)},
                 {"K_hat", format_real(fit.K_hat)},
                 {"delta_hat", format_real(fit.delta_hat)}};
  res.headline_name = "slope";
  res.headline = fit.slope;
  return res;
}

ScenarioOutcome run_decay(const RunConfig& cfg, const fs::path& out_dir) {
  const auto src = field_source(cfg);
  const auto points = decay_partials(src.field(), cfg.sigma, cfg.T, cfg.p, cfg.n, cfg.quadrature());
  write_file(out_dir / "decay.csv", [&](std::ostream& o) { write_decay_csv(o, points); });
  write_file(out_dir / "decay_increments.csv", [&](std::ostream& o) {
    o << "T,D_increment,L_increment\n";
    for (const auto& pt : points)
      o << format_real(pt.T) << ',' << format_real(pt.D_increment) << ','
        << format_real(pt.L_increment) << '\n';
  });
  // Doubling increments D(T_i) - D(T_{i-1}) for i >= 1 must strictly decrease;
  // after the first doubling, L may grow by less than 10% per step.
  bool decreasing = true;
  for (std::size_t i = 2; i < points.size(); ++i)
    decreasing = decreasing && points[i].D_increment < points[i - 1].D_increment;
  double growth = 0.0;
  for (std::size_t i = 2; i < points.size(); ++i)
    growth = std::max(growth, points[i].L_increment / points[i - 1].L);
  ScenarioOutcome res;
  res.ok = decreasing && growth < 0.1;
  res.summary = {{"command", "decay"},
                 {"status", res.ok ? "pass" : "fail"},
                 {"T_count", std::to_string(points.size())},
                 {"D_final", format_real(points.back().D)},
                 {"L_final", format_real(points.back().L)},
                 {"D_increments_decreasing", yes_no(decreasing)},
                 {"L_growth_max", format_real(growth)},
                 {"L_growth_tolerance", "0.1"}};
  res.headline_name = "L_growth_max";
  res.headline = growth;
  return res;
}

/// Discrete L2 error at t_end against phi* over r <= r_max for one J.
ScenarioOutcome run_convergence(const RunConfig& cfg) {
  const auto ref = ode_field(cfg.p);
  SolverConfig sc = cfg.solver();
  sc.snapshot_times.clear();
  const auto run = evolve(sc, cfg.data());
  if (run.status != RunStatus::completed)
    throw SolverError("convergence: run ended " + to_string(run.status), run.t_final, 0.0);
  if (cfg.r_max > cfg.R) throw ConfigError("[diagnostics] r_max: must not exceed R");
  const double error = final_l2_error(run, *ref, cfg.r_max);
  ScenarioOutcome res;
  res.summary = {{"command", "convergence"},
                 {"status", "ok"},
                 {"J", std::to_string(cfg.J)},
                 {"dr", format_real(run.dr)},
                 {"error", format_real(error)}};
  res.headline = error;
  res.headline_name = "error";
  return res;
}

const std::set<std::string> kSweepScenarios{"simulate",       "verify-carleman", "verify-localized",
                                            "energy-profile", "rate-fit",        "decay",
                                            "convergence"};

struct SweepCell {
  double p, M, gamma, a;
  int J;
};

ScenarioOutcome run_sweep(const RunConfig& cfg, const fs::path& out_dir, unsigned threads,
                          int& exit_code) {
  std::vector<SweepCell> cells;
  auto or_base = [](const std::vector<double>& v, double base) {
    return v.empty() ? std::vector<double>{base} : v;
  };
  const auto ps = or_base(cfg.sweep_p, cfg.p);
  const auto Ms = or_base(cfg.sweep_M, cfg.M);
  const auto gammas = or_base(cfg.sweep_gamma, cfg.gamma);
  const auto as = or_base(cfg.sweep_a, cfg.a.front());
  const auto Js = cfg.sweep_J.empty() ? std::vector<int>{cfg.J} : cfg.sweep_J;
  for (double p : ps)
    for (double M : Ms)
      for (int J : Js)
        for (double g : gammas)
          for (double a : as) cells.push_back({p, M, g, a, J});

  std::vector<RunConfig> configs;
  for (const auto& c : cells) {
    RunConfig cc = cfg;
    cc.p = c.p;
    cc.M = c.M;
    cc.J = c.J;
    cc.gamma = c.gamma;
    if (!cfg.sweep_a.empty()) {
      cc.a = {c.a};
      cc.a_min = cc.a_max = c.a;
    }
    cc.validate(cfg.scenario);
    configs.push_back(std::move(cc));
  }

  std::vector<ScenarioOutcome> outcomes(cells.size());
  std::vector<int> codes(cells.size(), exit_ok);
  std::vector<std::string> messages(cells.size());
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    const auto dir = out_dir / ("cell_" + std::to_string(i));
    try {
      outcomes[i] = run_scenario(cfg.scenario, configs[i], dir.string(), 1);
      codes[i] = outcomes[i].ok ? exit_ok : exit_assertion;
    } catch (const IoError& e) {
      codes[i] = exit_io;
      messages[i] = e.what();
    } catch (const InvalidArgument& e) {
      codes[i] = exit_config;
      messages[i] = e.what();
    } catch (const DomainError& e) {
      codes[i] = exit_config;
      messages[i] = e.what();
    } catch (const std::exception& e) {
      codes[i] = exit_assertion;
      messages[i] = e.what();
    }
  });

  std::string headline_name;
  for (const auto& o : outcomes)
    if (!o.headline_name.empty()) headline_name = o.headline_name;
  write_file(out_dir / "sweep.csv", [&](std::ostream& o) {
    o << "cell,p,M,J,gamma,a,exit_code,headline\n";
    for (std::size_t i = 0; i < cells.size(); ++i)
      o << i << ',' << format_real(cells[i].p) << ',' << format_real(cells[i].M) << ','
        << cells[i].J << ',' << format_real(cells[i].gamma) << ',' << format_real(cells[i].a)
        << ',' << codes[i] << ','
        << format_real(codes[i] == exit_ok || codes[i] == exit_assertion
                           ? outcomes[i].headline
                           : std::numeric_limits<double>::quiet_NaN())
        << '\n';
  });

  ScenarioOutcome res;
  exit_code = exit_ok;
  std::size_t passed = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    exit_code = std::max(exit_code, codes[i]);
    passed += codes[i] == exit_ok ? 1 : 0;
  }
  res.ok = exit_code == exit_ok;
  res.summary = {{"command", "sweep"},
                 {"scenario", cfg.scenario},
                 {"status", res.ok ? "pass" : "fail"},
                 {"cells", std::to_string(cells.size())},
                 {"passed", std::to_string(passed)},
                 {"headline", headline_name}};

  // Convergence over J: least-squares order of the error against dr.
  Summary aggregate{{"cells", std::to_string(cells.size())}, {"passed", std::to_string(passed)}};
  if (cfg.scenario == "convergence" && cfg.sweep_J.size() >= 2 && res.ok) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      x.push_back(std::log(cfg.R / cells[i].J));
      y.push_back(std::log(outcomes[i].headline));
    }
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
    }
    const double order = sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
    aggregate.emplace_back("fitted_order", format_real(order));
    res.summary.emplace_back("fitted_order", format_real(order));
    res.headline_name = "fitted_order";
    res.headline = order;
  }
  write_file(out_dir / "aggregate.csv", [&](std::ostream& o) {
    o << "key,value\n";
    for (const auto& [k, v] : aggregate) o << k << ',' << v << '\n';
  });
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (!messages[i].empty()) res.summary.emplace_back("cell_" + std::to_string(i) + "_error", messages[i]);
  return res;
}

}  // namespace

IniDocument parse_ini(std::istream& in, const std::string& origin) {
  IniDocument doc;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto cut = line.find_first_of("#;");
    if (cut != std::string::npos) line.erase(cut);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      doc[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    if (section.empty()) throw ConfigError(where + ": key outside any section");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!doc[section].emplace(key, trim(line.substr(eq + 1))).second)
      throw ConfigError(where + ": duplicate key '" + key + "' in [" + section + "]");
  }
  return doc;
}

RunConfig RunConfig::from_document(const IniDocument& doc) {
  static const std::set<std::string> known{"problem",     "grid",   "data",  "diagnostics",
                                           "verify",      "output", "sweep"};
  for (const auto& [name, entries] : doc)
    if (!known.count(name)) throw ConfigError("unknown section [" + name + "]");

  RunConfig c;
  SectionReader problem(doc, "problem");
  problem.read("n", c.n);
  problem.read("p", c.p);
  problem.read("potential", c.potential);
  problem.read("c0", c.c0);
  problem.read("v_eps", c.v_eps);
  problem.read("v_t_center", c.v_t_center);
  problem.read("v_width", c.v_width);
  problem.finish();

  SectionReader grid(doc, "grid");
  grid.read("R", c.R);
  grid.read("J", c.J);
  grid.read("cfl", c.cfl);
  grid.read("t0", c.t0);
  grid.read("t_end", c.t_end);
  grid.read("phi_max", c.phi_max);
  grid.read("snapshot_times", c.snapshot_times);
  grid.read("snapshot_step", c.snapshot_step);
  grid.read("snapshot_log_range", c.snapshot_log_range);
  grid.read("snapshots_per_decade", c.snapshots_per_decade);
  grid.read("diagnostic_radius", c.diagnostic_radius);
  grid.finish();

  SectionReader data(doc, "data");
  data.read("kind", c.data_kind);
  data.read("M", c.M);
  data.read("w", c.w);
  data.read("A", c.A);
  data.read("s", c.s);
  data.read("path", c.data_path);
  data.finish();

  SectionReader diag(doc, "diagnostics");
  diag.read("sigma0", c.sigma0);
  diag.read("sigma1", c.sigma1);
  diag.read("sigma", c.sigma);
  diag.read("gamma", c.gamma);
  diag.read("eta", c.eta);
  diag.read("t_star", c.t_star);
  diag.read("a", c.a);
  diag.read("window_lo", c.window_lo);
  diag.read("window_hi", c.window_hi);
  diag.read("T", c.T);
  diag.read("per_decade", c.per_decade);
  diag.read("kind", c.kind);
  diag.read("quantity", c.quantity);
  diag.read("r_max", c.r_max);
  diag.finish();

  SectionReader verify(doc, "verify");
  verify.read("cases", c.cases);
  verify.read_u64("seed", c.seed);
  verify.read("mode", c.mode);
  verify.read("a_min", c.a_min);
  verify.read("a_max", c.a_max);
  verify.read("fields", c.fields);
  verify.read("eps_floor", c.eps_floor);
  verify.read("cells", c.cells);
  verify.read("order", c.order);
  verify.finish();

  SectionReader output(doc, "output");
  output.read("directory", c.directory);
  output.read("precision", c.precision);
  output.finish();

  SectionReader sweep(doc, "sweep");
  sweep.read("scenario", c.scenario);
  sweep.read("p", c.sweep_p);
  sweep.read("M", c.sweep_M);
  sweep.read("J", c.sweep_J);
  sweep.read("gamma", c.sweep_gamma);
  sweep.read("a", c.sweep_a);
  sweep.finish();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  return from_document(parse_ini(in, path));
}

PotentialSpec RunConfig::potential_spec() const {
  if (potential == "perturbed") return PotentialSpec::perturbed(c0, v_eps, v_t_center, v_width);
  return PotentialSpec::constant(c0);
}

SolverConfig RunConfig::solver() const {
  SolverConfig s;
  s.n = n;
  s.p = p;
  s.V = potential_spec();
  s.radius = R;
  s.intervals = J;
  s.cfl = cfl;
  s.t0 = t0;
  s.t_end = t_end;
  s.phi_max = phi_max;
  s.snapshot_times = snapshot_schedule();
  s.diagnostic_radius = diagnostic_radius;
  return s;
}

InitialDataSpec RunConfig::data() const {
  if (data_kind == "zero") return InitialDataSpec::zero();
  if (data_kind == "truncated_ode") return InitialDataSpec::truncated_ode(M, w);
  if (data_kind == "gaussian") return InitialDataSpec::gaussian(A, s);
  if (data_kind == "file") return InitialDataSpec::file(data_path);
  if (data_kind == "ode") return InitialDataSpec::closed_form(ode_field(p));
  throw ConfigError("[data] kind: unknown '" + data_kind + "'");
}

QuadratureSpec RunConfig::quadrature() const {
  QuadratureSpec q;
  q.cells_t = cells;
  q.cells_r = cells;
  q.base_order = order;
  return q;
}

std::vector<double> RunConfig::snapshot_schedule() const {
  std::vector<double> out = snapshot_times;
  if (snapshot_step > 0.0) {
    const auto count = static_cast<long>(std::floor((t_end - t0) / snapshot_step + 1e-9));
    for (long i = 0; i <= count; ++i) out.push_back(t0 + static_cast<double>(i) * snapshot_step);
  }
  if (!snapshot_log_range.empty()) {
    const auto lt = log_spaced_times(snapshot_log_range[0], snapshot_log_range[1],
                                     snapshots_per_decade);
    out.insert(out.end(), lt.begin(), lt.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void RunConfig::validate(const std::string& command) const {
  auto wrap = [](const char* section, auto&& check) {
    try {
      check();
    } catch (const ConfigError&) {
      throw;
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("[") + section + "] " + e.what());
    }
  };

  require(n >= 1, "[problem] n: must be >= 1");
  require(p > 1.0, "[problem] p: must be > 1");
  require(potential == "constant" || potential == "perturbed",
          "[problem] potential: constant or perturbed");
  require(c0 > 0.0, "[problem] c0: must be positive");
  require(precision == 17, "[output] precision: only 17 significant digits are supported");
  require(!directory.empty(), "[output] directory: must not be empty");
  require(snapshot_log_range.empty() || snapshot_log_range.size() == 2,
          "[grid] snapshot_log_range: two times expected");
  require(snapshots_per_decade >= 1, "[grid] snapshots_per_decade: must be >= 1");
  require(per_decade >= 1, "[diagnostics] per_decade: must be >= 1");
  require(cells >= 1, "[verify] cells: must be >= 1");
  require(order == 2 || order == 4 || order == 6, "[verify] order: 2, 4 or 6");

  const std::string cmd = command == "sweep" ? scenario : command;
  const bool needs_run = cmd == "simulate" || cmd == "convergence" ||
                         ((cmd == "verify-localized" || cmd == "energy-profile" ||
                           cmd == "rate-fit" || cmd == "decay") &&
                          data_kind != "ode");
  if (command == "sweep") {
    require(!scenario.empty(), "[sweep] scenario: required");
    require(kSweepScenarios.count(scenario) > 0, "[sweep] scenario: unknown '" + scenario + "'");
    require(!(sweep_p.empty() && sweep_M.empty() && sweep_J.empty() && sweep_gamma.empty() &&
              sweep_a.empty()),
            "[sweep]: empty parameter grid");
    return;  // cells are validated individually
  }

  if (needs_run) {
    wrap("grid", [&] { solver().validate(); });
    wrap("data", [&] { data().validate(); });
    if (potential == "perturbed")
      require(v_width > 0.0, "[problem] v_width: must be positive");
  } else if (data_kind == "ode") {
    require(is_subconformal(p, n) || cmd == "rate-fit", "[problem] p: must be subconformal");
  }

  if (cmd == "verify-carleman") {
    require(mode == "global" || mode == "shifted", "[verify] mode: global or shifted");
    if (mode == "global") {
      require(cases >= 1, "[verify] cases: must be >= 1");
      require(a_min > 0.0 && a_min <= a_max, "[verify] a_min, a_max: need 0 < a_min <= a_max");
    } else {
      require(fields >= 1, "[verify] fields: must be >= 1");
      require(!a.empty(), "[diagnostics] a: at least one value");
      require(!t_star.empty(), "[diagnostics] t_star: at least one value");
      for (double ts : t_star) require(ts > 0.0, "[diagnostics] t_star: must be positive");
      require(sigma > 0.0 && sigma < 1.0, "[diagnostics] sigma: must lie in (0, 1)");
      require(eps_floor > 0.0 && eps_floor < 1e-2, "[verify] eps_floor: must lie in (0, 1e-2)");
      for (double av : a) {
        CarlemanParams params;
        params.n = n;
        params.p = p;
        params.a = av;
        wrap("diagnostics", [&] { params.validate_subconformal(); });
      }
    }
  }
  if (cmd == "verify-localized" || cmd == "energy-profile") {
    require(sigma0 < sigma1, "[diagnostics] sigma0 < sigma1 required");
    require(!t_star.empty(), "[diagnostics] t_star: at least one value");
    require(kind == "annulus" || kind == "timecone", "[diagnostics] kind: annulus or timecone");
    if (cmd == "verify-localized")
      for (double ts : t_star) wrap("diagnostics", [&] { localized_spec(*this, ts).validate(); });
    else
      wrap("diagnostics", [&] { localized_spec(*this, window_hi).validate(); });
  }
  if (cmd == "energy-profile" || cmd == "rate-fit") {
    require(window_lo < window_hi, "[diagnostics] window_lo < window_hi required");
    require(window_lo * window_hi > 0.0, "[diagnostics] window: both ends of one sign, nonzero");
  }
  if (cmd == "rate-fit") {
    require(quantity == "mz" || quantity == "annulus" || quantity == "slab",
            "[diagnostics] quantity: mz, annulus or slab");
    if (quantity == "mz") require(window_hi < 0.0, "[diagnostics] window: mz needs t < 0");
    if (quantity == "annulus") require(sigma0 < sigma1, "[diagnostics] sigma0 < sigma1 required");
  }
  if (cmd == "decay") {
    require(T.size() >= 2, "[diagnostics] T: at least two values");
    for (std::size_t i = 0; i < T.size(); ++i)
      require(T[i] > 1.0 && (i == 0 || T[i] > T[i - 1]),
              "[diagnostics] T: increasing values above 1");
    require(sigma > 0.0 && sigma < 1.0, "[diagnostics] sigma: must lie in (0, 1)");
  }
  if (cmd == "convergence") {
    require(data_kind == "truncated_ode" || data_kind == "ode",
            "[data] kind: convergence compares against phi*, use truncated_ode or ode");
    require(r_max > 0.0, "[diagnostics] r_max: must be positive");
  }
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate",       "verify-carleman", "verify-localized",
                                              "energy-profile", "rate-fit",        "decay",
                                              "sweep"};
  return names;
}

unsigned resolve_threads(std::optional<unsigned> flag) {
  if (flag) {
    if (*flag == 0) throw ConfigError("--threads: must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv("CONEWAVE_THREADS"); env && *env) {
    const auto v = parse_integer("CONEWAVE_THREADS", trim(env));
    if (v < 1) throw ConfigError("CONEWAVE_THREADS: must be >= 1");
    return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ScenarioOutcome run_scenario(const std::string& command, const RunConfig& config,
                             const std::string& out_dir, unsigned threads) {
  config.validate(command);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());
  const fs::path dir(out_dir);

  ScenarioOutcome res;
  if (command == "simulate")
    res = run_simulate(config, dir);
  else if (command == "verify-carleman")
    res = run_verify_carleman(config, dir, threads);
  else if (command == "verify-localized")
    res = run_verify_localized(config, dir);
  else if (command == "energy-profile")
    res = run_energy_profile(config, dir);
  else if (command == "rate-fit")
    res = run_rate_fit(config, dir);
  else if (command == "decay")
    res = run_decay(config, dir);
  else if (command == "convergence")
    res = run_convergence(config);
  else if (command == "sweep") {
    int code = exit_ok;
    res = run_sweep(config, dir, threads, code);
    res.exit_code = code;
  } else
    throw ConfigError("unknown command '" + command + "'");
  write_summary((dir / "summary").string(), res.summary);
  return res;
}

int run_command(const CliOptions& options, std::ostream& err) {
  try {
    auto config = RunConfig::load(options.config_path);
    if (options.seed) config.seed = *options.seed;
    if (options.out_dir) config.directory = *options.out_dir;
    const unsigned threads = resolve_threads(options.threads);
    const auto res = run_scenario(options.command, config, config.directory, threads);
    if (res.exit_code != exit_ok && res.exit_code != exit_assertion) {
      err << "conewave sweep: a cell failed with exit code " << res.exit_code << ", see "
          << (fs::path(config.directory) / "summary").string() << '\n';
      return res.exit_code;
    }
    if (!res.ok) {
      err << "conewave " << options.command << ": assertion failed, see "
          << (fs::path(config.directory) / "summary").string() << '\n';
      return exit_assertion;
    }
    return exit_ok;
  } catch (const IoError& e) {
    err << "conewave: I/O error: " << e.what() << '\n';
    return exit_io;
  } catch (const InvalidArgument& e) {
    err << "conewave: invalid configuration: " << e.what() << '\n';
    return exit_config;
  } catch (const DomainError& e) {
    err << "conewave: invalid configuration: " << e.what() << '\n';
    return exit_config;
  } catch (const SolverError& e) {
    err << "conewave: solver failure at t=" << format_real(e.t()) << " r=" << format_real(e.r())
        << ": " << e.what() << '\n';
    return exit_assertion;
  } catch (const QuadratureError& e) {
    err << "conewave: quadrature failure at t=" << format_real(e.t())
        << " r=" << format_real(e.r()) << ": " << e.what() << '\n';
    return exit_assertion;
  } catch (const std::exception& e) {
    err << "conewave: " << e.what() << '\n';
    return exit_unexpected;
  }
}

}  // namespace conewave
