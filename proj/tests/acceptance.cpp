// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "conewave/carleman.hpp"
#include "conewave/cli.hpp"
#include "conewave/energetics.hpp"
#include "conewave/exact_solutions.hpp"
#include "conewave/geometry.hpp"
#include "conewave/random.hpp"
#include "conewave/solver.hpp"

using namespace conewave;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// phi* for n = 3, p = 2: C = 6, k = 2, by direct substitution rather than the library.
constexpr double kC = 6.0;
constexpr double kK = 2.0;

Verdict weight_identity() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(20240601);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const int n = rng.uniform_int(1, 4);
    std::vector<double> v(n), x(n);
    const double speed = rng.uniform(0.0, 0.95);
    double norm = 0.0;
    for (auto& c : v) {
      c = rng.normal();
      norm += c * c;
    }
    for (auto& c : v) c *= speed / std::sqrt(norm);
    for (auto& c : x) c = rng.uniform(-3.0, 3.0);
    const ShiftedWeight w(rng.uniform(-2.0, 2.0), i % 4 == 0 ? RaySpec{} : RaySpec(v));
    const MinkowskiPoint p(rng.uniform(-3.0, 3.0), x);
    const double f = eval_weight(w, p);
    const auto g = eval_weight_gradient(w, p);
    double scale = g.t * g.t;
    for (double c : g.x) scale += c * c;
    const double err = std::abs(minkowski_norm_sq(g) - f) / std::max(std::abs(f), scale);
    worst = std::max(worst, err);
  }
  const double secs = seconds_since(start);
  return {worst < 1e-12 && secs < 1.0,
          "max rel err " + fmt("%.2e", worst) + ", " + fmt("%.3f", secs) + " s"};
}

Verdict carleman_suite() {
  const auto start = std::chrono::steady_clock::now();
  const auto cases = random_carleman_cases(200, 7);
  const auto reports = verify_batch(cases, QuadratureSpec{}, 1);
  std::size_t passed = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& r : reports) {
    // slack >= -(1e-6 scale + error_estimate)
    passed += r.slack >= -r.tolerance ? 1 : 0;
    worst = std::min(worst, r.slack + r.tolerance);
  }
  const double secs = seconds_since(start);
  return {passed == 200 && secs < 300.0,
          std::to_string(passed) + "/200 cases, min slack+tol " + fmt("%.2e", worst) + ", " +
              fmt("%.1f", secs) + " s"};
}

Verdict shifted_estimate() {
  const auto fields = random_shifted_fields(20, 7);
  CarlemanParams params;
  params.n = 3;
  params.p = 2.0;
  params.a = 0.25;
  std::size_t ok = 0;
  double worst = 1.0;
  bool levels_ok = true;
  for (const auto& f : fields) {
    const auto rep = shifted_scaling_check(params, f, 0.5, {1.0, 2.0, 4.0}, QuadratureSpec{}, 1e-4);
    const bool finite = std::all_of(rep.K.begin(), rep.K.end(),
                                    [](double k) { return std::isfinite(k) && k > 0.0; });
    ok += finite && rep.spread <= 2.0 && rep.flux_vanishing ? 1 : 0;
    worst = std::max(worst, rep.spread);
  }
  for (double ts : {1.0, 2.0, 4.0})
    levels_ok = levels_ok && flux_probe_levels(ExteriorRegionSpec(0.5, ts), 1e-4) ==
                                 std::vector<double>{1e-2, 1e-3, 1e-4};
  return {ok == 20 && levels_ok, std::to_string(ok) + "/20 fields, max K spread " +
                                     fmt("%.6f", worst) + ", flux probe eps 1e-2..1e-4"};
}

Verdict scaling_laws() {
  // Closed form by hand: |t|^{2-n+2k} 4 pi int r^2 (phi_t^2 + phi^2/t^2) over
  // the annulus, with phi = C |t|^-k, phi_t = k C |t|^{-k-1}.
  const double s0 = 0.25, s1 = 0.5;
  const double shell = 4.0 * std::numbers::pi * (s1 * s1 * s1 - s0 * s0 * s0) / 3.0;
  const double grad_hand = shell * kK * kK * kC * kC;
  const double phi_hand = shell * kC * kC;
  const auto lib = annulus_scaling_constant(2.0, 3, s0, s1);
  const auto slab = slab_scaling_constant(2.0, 3, 0.5, 1.2);
  const auto field = ode_field(2.0);
  double worst = std::abs(lib.grad - grad_hand) / grad_hand;
  worst = std::max(worst, std::abs(lib.phi - phi_hand) / phi_hand);
  worst = std::max(worst, std::abs(grad_hand - 65.97) / 65.97);
  worst = std::max(worst, std::abs(phi_hand - 16.49) / 16.49);
  for (double t : {-1.0, -0.1, -0.01, -0.001}) {
    const double a = annulus_quantity(*field, s0, s1, t, 2.0, 3).value;
    const double sl = slab_quantity(*field, 0.5, 1.2, t, 2.0, 3).value;
    worst = std::max(worst, std::abs(a - (grad_hand + phi_hand)) / (grad_hand + phi_hand));
    worst = std::max(worst, std::abs(sl - (slab.grad + slab.phi)) / (slab.grad + slab.phi));
  }
  return {worst < 1e-2, "annulus " + fmt("%.4f", grad_hand) + " + " + fmt("%.4f", phi_hand) +
                            ", slab " + fmt("%.4f", slab.grad + slab.phi) +
                            ", t in [-1,-1e-3], max rel err " + fmt("%.2e", worst)};
}

SolverConfig blowup_config(int J, double t_end) {
  SolverConfig c;
  c.n = 3;
  c.p = 2.0;
  c.radius = 4.0;
  c.intervals = J;
  c.t0 = -1.0;
  c.t_end = t_end;
  return c;
}

Verdict solver_convergence() {
  const auto start = std::chrono::steady_clock::now();
  const auto data = InitialDataSpec::truncated_ode(2.0, 0.25);
  const auto ref = ode_field(2.0);
  const auto conv = convergence_study(blowup_config(512, -0.1), data, {512, 1024, 2048}, *ref, 0.5);
  std::vector<double> tb;
  for (int J : {512, 1024, 2048}) {
    const auto run = evolve(blowup_config(J, 0.5), data);
    tb.push_back(run.status == RunStatus::blew_up ? run.t_blowup_extrapolated
                                                  : std::numeric_limits<double>::quiet_NaN());
  }
  const bool monotone = std::isfinite(tb[0]) && std::abs(tb[1]) < std::abs(tb[0]) &&
                        std::abs(tb[2]) < std::abs(tb[1]);
  const double secs = seconds_since(start);
  return {std::abs(conv.order - 2.0) <= 0.3 && monotone && secs < 600.0,
          "order " + fmt("%.3f", conv.order) + ", t_blowup " + fmt("%.3e", tb[0]) + " -> " +
              fmt("%.3e", tb[1]) + " -> " + fmt("%.3e", tb[2]) + ", " + fmt("%.1f", secs) + " s"};
}

RunResult truncated_run(int J) {
  SolverConfig c = blowup_config(J, -0.04);
  c.snapshot_times = log_spaced_times(-1.0, -0.04, 32);
  return evolve(c, InitialDataSpec::truncated_ode(2.0, 0.25));
}

Verdict mz_rate() {
  // C (1 + k) sqrt(|B^3|): ||phi*|| = C |t|^-k sqrt(|B^3|) |t|^{3/2}, same for |t| ||phi*_t||.
  const double mz_hand = kC * (1.0 + kK) * std::sqrt(4.0 * std::numbers::pi / 3.0);
  const auto run = truncated_run(4096);
  const auto times = level_times_in(run.snapshots, -0.5, -0.05);
  std::vector<double> y;
  for (double t : times) y.push_back(mz_ball_quantity(run.snapshots, t, 2.0, 3).value);
  const auto fit = rate_fit(times, y, -0.5, -0.05);
  const double ratio = fit.eps_hat / mz_hand;
  const bool ok = std::abs(fit.slope) <= 0.1 && fit.eps_hat > 0.0 && ratio >= 1.0 / 3.0 &&
                  ratio <= 3.0 && std::abs(mz_hand - 36.84) < 0.01;
  return {ok, "slope " + fmt("%.2e", fit.slope) + " over " + std::to_string(fit.samples) +
                  " levels, eps_hat " + fmt("%.4f", fit.eps_hat) + " vs " + fmt("%.4f", mz_hand)};
}

Verdict localized_ratio() {
  const std::vector<double> t_stars{-0.5, -0.25, -0.125};
  auto check = [&](const Field& field, const std::function<std::vector<double>(double)>& sup,
                   std::vector<double>& ratios) {
    for (double ts : t_stars) {
      LocalizedSpec spec;
      spec.t_star = ts;
      const auto rep = localized_estimate_check(field, spec, sup(ts), QuadratureSpec{});
      ratios.push_back(rep.ratio);
    }
    double mean = 0.0;
    for (double r : ratios) mean += r / static_cast<double>(ratios.size());
    double dev = 0.0;
    bool finite = true;
    for (double r : ratios) {
      finite = finite && std::isfinite(r) && r > 0.0;
      dev = std::max(dev, std::abs(r / mean - 1.0));
    }
    return finite ? dev : std::numeric_limits<double>::infinity();
  };
  std::vector<double> ode_ratios, run_ratios;
  const auto ode = ode_field(2.0);
  const double ode_dev = check(*ode, [](double ts) { return sup_time_grid(ts, 2.0, 16); }, ode_ratios);
  const auto run = truncated_run(1024);
  const double run_dev = check(
      run.snapshots,
      [&](double ts) {
        auto times = level_times_in(run.snapshots, 2.0 * ts, ts / 2.0);
        for (double t : sup_time_grid(ts, 2.0, 16)) times.push_back(t);
        return times;
      },
      run_ratios);
  return {ode_dev < 0.2 && run_dev < 0.2,
          "phi* ratio " + fmt("%.4f", ode_ratios[0]) + " (dev " + fmt("%.1e", ode_dev) +
              "), run ratios " + fmt("%.4f", run_ratios[0]) + ".." + fmt("%.4f", run_ratios[2]) +
              " (dev " + fmt("%.1e", run_dev) + ")"};
}

Verdict decay_diagnostic() {
  SolverConfig c;
  c.n = 3;
  c.p = 2.0;
  c.radius = 48.0;
  c.intervals = 2048;
  c.t0 = 1.0;
  c.t_end = 32.0;
  c.diagnostic_radius = 16.0;
  for (double t = 1.0; t <= 32.0 + 1e-12; t += 0.125) c.snapshot_times.push_back(t);
  const auto run = evolve(c, InitialDataSpec::gaussian(1e-3, 0.5));
  const std::vector<double> T{4.0, 8.0, 16.0, 32.0};
  const auto pts = decay_partials(run.snapshots, 0.5, T, 2.0, 3);
  // pts[i].D_increment = D(T_i) - D(T_{i-1}): D(2T) - D(T) for T = 4, 8, 16.
  const bool decreasing =
      pts[2].D_increment < pts[1].D_increment && pts[3].D_increment < pts[2].D_increment;
  const double growth = pts[2].L_increment / pts[1].L;
  return {run.status == RunStatus::completed && decreasing && growth < 0.1,
          "D increments " + fmt("%.2e", pts[1].D_increment) + " > " +
              fmt("%.2e", pts[2].D_increment) + " > " + fmt("%.2e", pts[3].D_increment) +
              ", L(16)-L(8) = " + fmt("%.2e", growth) + " L(8)"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict reproducibility() {
  const auto root = fs::temp_directory_path() / "conewave_acceptance_repro";
  fs::remove_all(root);
  RunConfig carleman;
  carleman.cases = 50;
  carleman.seed = 7;
  RunConfig sim;
  sim.R = 4.0;
  sim.J = 256;
  sim.t0 = 0.0;
  sim.t_end = 2.0;
  sim.snapshot_step = 0.5;
  sim.data_kind = "gaussian";
  sim.A = 0.8;
  sim.s = 0.4;
  RunConfig decay = sim;
  decay.R = 24.0;
  decay.J = 512;
  decay.t0 = 1.0;
  decay.t_end = 9.0;
  decay.snapshot_step = 0.125;
  decay.A = 1e-3;
  decay.T = {2.0, 4.0, 8.0};
  std::size_t files = 0, identical = 0;
  for (const auto& [cmd, cfg] : {std::pair<std::string, RunConfig>{"verify-carleman", carleman},
                                 {"simulate", sim},
                                 {"decay", decay}}) {
    run_scenario(cmd, cfg, (root / (cmd + "_1")).string(), 1);
    run_scenario(cmd, cfg, (root / (cmd + "_2")).string(), 4);
    for (const auto& entry : fs::directory_iterator(root / (cmd + "_1"))) {
      ++files;
      identical +=
          slurp(entry.path()) == slurp(root / (cmd + "_2") / entry.path().filename()) ? 1 : 0;
    }
  }
  fs::remove_all(root);
  return {files > 0 && identical == files,
          std::to_string(identical) + "/" + std::to_string(files) +
              " output files byte-identical across repeated runs (1 and 4 threads)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"weight identity", weight_identity},
      {"global Carleman suite", carleman_suite},
      {"shifted estimate", shifted_estimate},
      {"ODE scaling laws", scaling_laws},
      {"solver convergence", solver_convergence},
      {"MZ rate diagnostics", mz_rate},
      {"localized ratio", localized_ratio},
      {"decay diagnostic", decay_diagnostic},
      {"reproducibility", reproducibility},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::printf("criterion %zu [%s] %s: %s\n", i + 1, v.pass ? "PASS" : "FAIL",
                criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
