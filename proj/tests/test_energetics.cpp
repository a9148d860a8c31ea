#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "conewave/energetics.hpp"
#include "conewave/error.hpp"
#include "conewave/exact_solutions.hpp"
#include "conewave/solver.hpp"
#include "oracles.hpp"

using namespace conewave;

namespace {

constexpr double kPi = std::numbers::pi;

// phi* for p = 2: C = 6, k = 2, by direct substitution into phi'' = phi^2.
constexpr double kC = 6.0;
constexpr double kK = 2.0;

QuadratureSpec fine() {
  QuadratureSpec q;
  q.cells_t = 48;
  q.cells_r = 48;
  q.base_order = 6;
  return q;
}

// Slab oracle for phi*, n = 3: integrate the spatially constant integrand over
// the ball of radius sigma |t| analytically and over t by tanh-sinh.
double slab_oracle(double sigma, double gamma, double t_star, double weight_power,
                   const std::function<double(double)>& density) {
  const double lo = t_star > 0 ? t_star / gamma : gamma * t_star;
  const double hi = t_star > 0 ? gamma * t_star : t_star / gamma;
  const double v = oracle::tanh_sinh(
      [&](double t) { return density(t) * 4.0 * kPi / 3.0 * std::pow(sigma * std::abs(t), 3); }, lo,
      hi);
  return std::pow(std::abs(t_star), weight_power) * v;
}

}  // namespace

TEST(AnnulusQuantity, OdeProfileMatchesClosedForm) {
  // |t|^{2k-1} * k^2 C^2 |t|^{-2k-2} * 4 pi (s1^3 - s0^3)|t|^3 / 3, and the phi^2 part.
  const double shell = 4.0 * kPi * (0.125 - 0.015625) / 3.0;
  const double grad = kK * kK * kC * kC * shell;
  const double phi2 = kC * kC * shell;
  EXPECT_NEAR(grad, 65.97, 5e-3);
  EXPECT_NEAR(phi2, 16.49, 5e-3);
  const auto ode = ode_field(2.0);
  for (double t : {-1.0, -0.1, -0.01, -0.001}) {
    const QuadratureResult a = annulus_quantity(*ode, 0.25, 0.5, t, 2.0, 3);
    EXPECT_NEAR(a.value, grad + phi2, 1e-9 * (grad + phi2)) << t;
    EXPECT_LT(a.error_estimate, 1e-8 * a.value);
  }
}

TEST(AnnulusQuantity, TrivialCases) {
  EXPECT_EQ(annulus_quantity(*zero_field(), 0.25, 0.5, -0.5, 2.0, 3).value, 0.0);
  // Supported inside r < 0.1 < sigma0 |t| = 0.25.
  DiscreteField history(3, 0.01, 101);
  std::vector<double> phi(101, 0.0), phit(101, 0.0);
  for (int j = 0; j < 10; ++j) phi[j] = 1.0 - (j / 10.0) * (j / 10.0);
  history.append_level(-1.0, phi, phit);
  history.append_level(-0.5, phi, phit);
  EXPECT_EQ(annulus_quantity(history, 0.25, 0.5, -1.0, 2.0, 3).value, 0.0);
  EXPECT_THROW(annulus_quantity(history, 0.25, 0.5, -0.2, 2.0, 3), DomainError);
  EXPECT_THROW(annulus_quantity(*ode_field(2.0), 0.25, 0.5, 0.5, 2.0, 3), DomainError);
  EXPECT_THROW(annulus_quantity(*ode_field(2.0), 0.5, 0.25, -0.5, 2.0, 3), InvalidArgument);
}

TEST(SlabQuantity, OdeProfileMatchesIndependentQuadrature) {
  const auto ode = ode_field(2.0);
  for (double ts : {-0.5, -0.05, -0.005}) {
    const double expected = slab_oracle(0.25, 1.2, ts, 1.0 - 3.0 + 2.0 * kK, [&](double t) {
      const double a = std::abs(t);
      return kK * kK * kC * kC * std::pow(a, -2 * kK - 2) + kC * kC * std::pow(a, -2 * kK) / (ts * ts);
    });
    const QuadratureResult s = slab_quantity(*ode, 0.25, 1.2, ts, 2.0, 3);
    EXPECT_NEAR(s.value, expected, 1e-8 * expected) << ts;
    const ScalingConstants c = slab_scaling_constant(2.0, 3, 0.25, 1.2);
    EXPECT_NEAR(s.value, c.grad + c.phi, 1e-6 * s.value);
  }
  EXPECT_EQ(slab_quantity(*zero_field(), 0.25, 1.2, -0.5, 2.0, 3).value, 0.0);
}

TEST(SlabQuantity, ThinSlabIsLinearInGammaMinusOne) {
  const auto ode = ode_field(2.0);
  const double a = slab_quantity(*ode, 0.25, 1.05, -0.5, 2.0, 3).value;
  const double b = slab_quantity(*ode, 0.25, 1.10, -0.5, 2.0, 3).value;
  EXPECT_NEAR(b / a, 2.0, 0.2);
}

TEST(MzBallQuantity, OdeValueIsTimeIndependent) {
  // C (1 + k) sqrt(|B^3|) = 18 sqrt(4 pi / 3).
  const double expected = kC * (1.0 + kK) * std::sqrt(4.0 * kPi / 3.0);
  EXPECT_NEAR(expected, 36.84, 5e-3);
  const auto ode = ode_field(2.0);
  for (double t : {-1.0, -0.3, -0.01}) {
    EXPECT_NEAR(mz_ball_quantity(*ode, t, 2.0, 3).value, expected, 1e-10 * expected);
    EXPECT_NEAR(mz_ball_quantity(*ode, t, 2.0, 3, 0.5).value, expected * std::pow(0.5, 1.5),
                1e-10 * expected);
  }
  EXPECT_EQ(mz_ball_quantity(*zero_field(), -0.5, 2.0, 3).value, 0.0);
  EXPECT_THROW(mz_ball_quantity(*ode, 0.5, 2.0, 3), DomainError);
}

TEST(LateralQuantity, MatchesLineIntegral) {
  const auto g = gaussian_field(0.7, 2.0, 1.5, 0.8, 0.6);
  const double sigma = 0.5, eta = 2.0, ts = 2.0, p = 2.0;
  const double w = std::sqrt(1.0 - sigma * sigma) * 4.0 * kPi;
  const double expected = oracle::tanh_sinh(
      [&](double t) {
        const double r = sigma * t;
        const FieldSample s = g->sample(t, r);
        const double f = s.phi_t * s.phi_t + s.phi_r * s.phi_r + std::pow(std::abs(s.phi), p + 1) +
                         s.phi * s.phi / (ts * ts);
        return f * w * r * r;
      },
      ts / eta, ts * eta);
  EXPECT_NEAR(lateral_quantity(*g, sigma, eta, ts, p, 3, fine()).value, expected, 1e-8 * expected);
}

TEST(LocalizedEstimate, ZeroFieldIsVacuous) {
  LocalizedSpec spec;
  spec.t_star = -0.5;
  const auto times = sup_time_grid(spec.t_star, spec.eta);
  const LocalizedReport r = localized_estimate_check(*zero_field(), spec, times);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_EQ(r.rhs, 0.0);
  EXPECT_TRUE(r.vacuous);
  EXPECT_TRUE(std::isinf(r.ratio));
}

TEST(LocalizedEstimate, OdeRatioIsScaleInvariant) {
  const auto ode = ode_field(2.0);
  std::vector<double> ratios;
  for (double ts : {-0.5, -0.25, -0.125}) {
    LocalizedSpec spec;
    spec.t_star = ts;
    const auto times = sup_time_grid(ts, spec.eta);
    const LocalizedReport r = localized_estimate_check(*ode, spec, times);
    EXPECT_GT(r.ratio, 0.0);
    EXPECT_TRUE(std::isfinite(r.ratio));
    // The annulus integrand grows toward the singularity: the sup sits at |t*|/eta.
    EXPECT_NEAR(r.tau_max, ts / spec.eta, 1e-15);
    // Independent lhs: int |phi*|^3 over the slab.
    const double lhs = slab_oracle(0.25, 1.2, ts, 0.0,
                                   [](double t) { return std::pow(kC / (t * t), 3.0); });
    EXPECT_NEAR(r.lhs, lhs, 1e-8 * lhs);
    // rhs at tau = t*/eta, closed form on the annulus.
    const double tau = std::abs(ts) / spec.eta;
    const double shell = 4.0 * kPi * (0.125 - 0.015625) / 3.0 * std::pow(tau, 3);
    const double phi = kC / (tau * tau);
    const double rhs = std::abs(ts) * shell *
                       (std::pow(kK * phi / tau, 2) + std::pow(phi, 3) + phi * phi / (ts * ts));
    EXPECT_NEAR(r.rhs, rhs, 1e-9 * rhs);
    ratios.push_back(r.ratio);
  }
  EXPECT_NEAR(ratios[1], ratios[0], 1e-8 * ratios[0]);
  EXPECT_NEAR(ratios[2], ratios[0], 1e-8 * ratios[0]);
}

TEST(LocalizedEstimate, TimeconeKindOnManufacturedField) {
  const auto g = gaussian_field(0.4, 2.0, 1.0, 0.5, 0.7);
  LocalizedSpec spec;
  spec.kind = LocalizedSpec::Kind::timecone;
  spec.sigma = 0.5;
  spec.t_star = 2.0;
  const LocalizedReport r = localized_estimate_check(*g, spec, {}, fine());
  const double lhs = oracle::tanh_sinh(
      [&](double t) {
        return oracle::tanh_sinh(
            [&](double rr) { return std::pow(std::abs(g->sample(t, rr).phi), 3.0) * 4 * kPi * rr * rr; },
            0.0, 0.5 * t);
      },
      2.0 / 1.2, 2.4, 6);
  EXPECT_NEAR(r.lhs, lhs, 1e-7 * lhs);
  EXPECT_NEAR(r.rhs, 2.0 * lateral_quantity(*g, 0.5, 2.0, 2.0, 2.0, 3, fine()).value, 1e-12 * r.rhs);
  EXPECT_GT(r.ratio, 0.0);
}

TEST(LocalizedEstimate, RangeViolations) {
  LocalizedSpec spec;
  spec.kind = LocalizedSpec::Kind::timecone;
  spec.t_star = 1.0;
  spec.p = 2.6;  // above 1 + 12/8 in three dimensions
  EXPECT_THROW(spec.validate(), InvalidArgument);
  spec.p = 2.0;
  spec.t_star = -1.0;
  EXPECT_THROW(spec.validate(), InvalidArgument);
  spec = LocalizedSpec{};
  spec.p = 3.0;  // conformal in three dimensions
  EXPECT_THROW(spec.validate(), InvalidArgument);
  spec = LocalizedSpec{};
  spec.eta = 1.1;  // below gamma
  EXPECT_THROW(spec.validate(), InvalidArgument);
  spec = LocalizedSpec{};
  spec.t_star = -0.5;
  const std::vector<double> outside{-0.1, -2.0};
  EXPECT_THROW(localized_estimate_check(*ode_field(2.0), spec, outside), InvalidArgument);
  EXPECT_NEAR(timecone_exponent_limit(3), 2.5, 1e-15);
  EXPECT_NEAR(timecone_exponent_limit(2), 5.0, 1e-15);
}

TEST(SupTimeGrid, LogSpacedWithEnds) {
  const auto g = sup_time_grid(-0.5, 2.0, 16);
  EXPECT_DOUBLE_EQ(g.front(), -1.0);
  EXPECT_DOUBLE_EQ(g.back(), -0.25);
  EXPECT_EQ(g.size(), 11u);  // ceil(16 log10 4) = 10 intervals
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_LT(g[i - 1], g[i]);
  EXPECT_THROW(log_spaced_times(-1.0, 1.0, 4), InvalidArgument);
}

TEST(DecayPartials, ConstantFieldClosedForms) {
  const double c = 0.5, sigma = 0.5, p = 2.0;
  const auto field = constant_field(c);
  const std::vector<double> Ts{2.0, 4.0, 8.0};
  const auto pts = decay_partials(*field, sigma, Ts, p, 3, fine());
  ASSERT_EQ(pts.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const double T = Ts[i];
    const double s3 = sigma * sigma * sigma;
    // D = c^3 4 pi s^3 (T^3 - 1) / 9, H = c^2 4 pi s^3 (T^2 - 1) / 6,
    // L = c^3 4 pi sqrt(1 - s^2) s^2 (T^3 - 1) / 3.
    EXPECT_NEAR(pts[i].D, c * c * c * 4 * kPi * s3 * (T * T * T - 1) / 9, 1e-10);
    EXPECT_NEAR(pts[i].H, c * c * 4 * kPi * s3 * (T * T - 1) / 6, 1e-10);
    EXPECT_NEAR(pts[i].L, c * c * c * 4 * kPi * std::sqrt(1 - sigma * sigma) * sigma * sigma * (T * T * T - 1) / 3,
                1e-10);
  }
  const auto zero = decay_partials(*zero_field(), sigma, Ts, p, 3);
  for (const auto& d : zero) {
    EXPECT_EQ(d.D, 0.0);
    EXPECT_EQ(d.L, 0.0);
    EXPECT_EQ(d.H, 0.0);
  }
  const std::vector<double> bad{0.5};
  EXPECT_THROW(decay_partials(*field, sigma, bad, p, 3), InvalidArgument);
}

TEST(DecayPartials, InsufficientCoverage) {
  DiscreteField history(3, 0.1, 50);
  std::vector<double> z(50, 0.0);
  history.append_level(1.0, z, z);
  history.append_level(2.0, z, z);
  const std::vector<double> Ts{4.0};
  EXPECT_THROW(decay_partials(history, 0.5, Ts, 2.0, 3), DomainError);
}

TEST(RateFit, Examples) {
  std::vector<double> t, y, c;
  for (int i = 0; i < 10; ++i) {
    const double ti = -std::pow(10.0, -0.2 * i);
    t.push_back(ti);
    y.push_back(5.0 * std::pow(std::abs(ti), -3.0));
    c.push_back(2.5);
  }
  const RateReport r = rate_fit(t, y, -1.0, -0.01);
  EXPECT_NEAR(r.slope, -3.0, 1e-12);
  EXPECT_NEAR(r.residual, 0.0, 1e-12);
  EXPECT_NEAR(std::exp(r.intercept), 5.0, 1e-10);
  EXPECT_EQ(r.samples, 10u);
  // |t| from 1 down to 10^{-1.8}: the last decade is |t| <= 10^{-0.8}.
  EXPECT_NEAR(r.delta_hat, 5.0 * std::pow(10.0, 1.8 * 3), 1e-6 * r.delta_hat);
  const RateReport k = rate_fit(t, c, -1.0, 0.0);
  EXPECT_NEAR(k.slope, 0.0, 1e-14);
  EXPECT_EQ(k.eps_hat, 2.5);
  EXPECT_EQ(k.K_hat, 2.5);
  y[3] = 0.0;
  EXPECT_THROW(rate_fit(t, y, -1.0, 0.0), InvalidArgument);
  EXPECT_THROW(rate_fit(t, c, -1.0, -0.7), InvalidArgument);
}

TEST(EnergyProfile, OdeRowsAndCsv) {
  const auto ode = ode_field(2.0);
  EnergyProfileSpec spec;
  const std::vector<double> times{-0.5, -0.05};
  std::vector<double> sup;
  for (double t : times)
    for (double s : sup_time_grid(t, spec.eta)) sup.push_back(s);
  const auto rows = energy_profile(*ode, spec, times, sup);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    EXPECT_NEAR(r.annulus, 82.46, 0.01);
    EXPECT_NEAR(r.mz, 36.84, 0.01);
    EXPECT_NEAR(r.ratio, rows[0].ratio, 1e-8 * rows[0].ratio);
  }
  std::ostringstream os;
  write_energy_csv(os, rows);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "t,annulus_q,slab_q,mz_q,lhs_1_6,rhs_1_6,ratio,err_est");
  std::ostringstream d;
  write_decay_csv(d, {DecayPoint{2.0, 1.0, 0.5, 0.0, 0.0}});
  EXPECT_EQ(d.str(), "T,D,L\n2,1,0.5\n");
}

TEST(Diagnostics, SideMassAndSlabConstantForOde) {
  const auto ode = ode_field(2.0);
  const auto times = log_spaced_times(-0.5, -0.05, 4);
  const SideMassReport side = side_mass_diagnostic(*ode, 0.25, 0.5, times, 2.0, 3);
  EXPECT_TRUE(side.ok);
  // Inner ball r < |t|/4: (k^2 C^2 + C^2) 4 pi (1/4)^3 / 3.
  EXPECT_NEAR(side.inner_min, (kK * kK + 1) * kC * kC * 4 * kPi / 3 / 64, 1e-8);
  const SlabAnnulusReport k = slab_annulus_constant(*ode, 0.25, 0.5, 1.2, times, 2.0, 3);
  const ScalingConstants sc = slab_scaling_constant(2.0, 3, 0.25, 1.2);
  EXPECT_NEAR(k.K, (sc.grad + sc.phi) / 82.46, 1e-3);
  const SideMassReport none = side_mass_diagnostic(*zero_field(), 0.25, 0.5, times, 2.0, 3);
  EXPECT_FALSE(none.ok);
}

TEST(SolverDiagnostics, TruncatedOdeRunFollowsTheProfile) {
  SolverConfig c;
  c.n = 3;
  c.p = 2.0;
  c.radius = 4.0;
  c.intervals = 1024;
  c.t0 = -1.0;
  c.t_end = 0.5;
  c.snapshot_times = log_spaced_times(-1.0, -0.02, 16);
  const RunResult run = evolve(c, InitialDataSpec::truncated_ode(2.0, 0.25));
  ASSERT_EQ(run.status, RunStatus::blew_up);
  std::vector<double> ts, mz;
  for (double t : level_times_in(run.snapshots, -0.5, -0.05)) {
    ts.push_back(t);
    mz.push_back(mz_ball_quantity(run.snapshots, t, 2.0, 3).value);
  }
  const RateReport rate = rate_fit(ts, mz, -0.5, -0.05);
  EXPECT_NEAR(rate.slope, 0.0, 0.1);
  EXPECT_GT(rate.eps_hat, 36.84 / 3);
  EXPECT_LT(rate.K_hat, 36.84 * 3);
}
