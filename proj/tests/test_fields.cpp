#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "conewave/error.hpp"
#include "conewave/exact_solutions.hpp"
#include "conewave/fields.hpp"
#include "oracles.hpp"

using namespace conewave;

TEST(GradientNorm, Examples) {
  EXPECT_EQ(gradient_norm_sq(*constant_field(3.0), 0.2, 0.7), 0.0);
  const auto tr = polynomial_field({{0.0, 1.0}, {1.0}});
  EXPECT_DOUBLE_EQ(gradient_norm_sq(*tr, 0.3, 0.9), 2.0);
}

TEST(GradientNorm, OdeTimeDerivativeAgainstDifferenceQuotient) {
  const auto phi = ode_field(2.0);
  const auto s = phi->sample(-1.0, 0.4);
  EXPECT_DOUBLE_EQ(s.phi_t * s.phi_t, 144.0);
  const double h = 1e-6;
  const double fd = (phi->sample(-1.0 + h, 0.0).phi - phi->sample(-1.0 - h, 0.0).phi) / (2 * h);
  EXPECT_NEAR(fd * fd, 144.0, 1e-5);
  EXPECT_DOUBLE_EQ(gradient_norm_sq(*phi, -1.0, 0.4), 144.0);
}

TEST(Box, Examples) {
  const auto t2 = polynomial_field({{0.0}, {0.0}, {1.0}});
  EXPECT_DOUBLE_EQ(box_operator(*t2, 3, 0.7, 0.2), -2.0);
  const auto r2 = polynomial_field({{0.0, 0.0, 1.0}});
  EXPECT_DOUBLE_EQ(box_operator(*r2, 3, 0.1, 0.5), 6.0);
  EXPECT_DOUBLE_EQ(box_operator(*r2, 3, 0.1, 0.0), 6.0);
  const auto ode = ode_field(2.0);
  const double box = box_operator(*ode, 3, -1.0, 0.3);
  EXPECT_DOUBLE_EQ(box, -36.0);
  const double u = ode->sample(-1.0, 0.3).phi;
  EXPECT_DOUBLE_EQ(box, -std::abs(u) * u);
}

TEST(Residual, Examples) {
  const auto V = PotentialSpec::constant(1.0);
  EXPECT_EQ(nonlinear_residual(*zero_field(), 3, V, 2.0, 0.5, 0.5), 0.0);
  EXPECT_NEAR(nonlinear_residual(*ode_field(2.0), 3, V, 2.0, -1.0, 0.5), 0.0, 1e-12);
  for (double p : {1.5, 2.0, 3.0}) {
    const double c = 0.7;
    EXPECT_DOUBLE_EQ(nonlinear_residual(*constant_field(c), 2, V, p, 0.0, 1.0), std::pow(c, p));
    EXPECT_NEAR(nonlinear_residual(*ode_field(p), 2, V, p, -0.3, 1.0), 0.0,
                1e-12 * std::pow(ode_value(p, -0.3).phi, p));
  }
}

TEST(SignedPower, ConventionAtZeroAndSign) {
  EXPECT_EQ(signed_pow(0.0, 1.5), 0.0);
  EXPECT_DOUBLE_EQ(signed_pow(-4.0, 1.5), -8.0);
  EXPECT_DOUBLE_EQ(signed_pow(4.0, 1.5), 8.0);
}

namespace {

std::vector<std::pair<const char*, FieldPtr>> builtin_fields() {
  return {
      {"polynomial", polynomial_field({{0.3, -0.2, 0.5}, {1.0, 0.4}, {0.7}})},
      {"gaussian", gaussian_field(1.3, 0.2, 0.8, 0.5, 0.6)},
      {"static-gaussian", gaussian_field(0.5, 0.0, INFINITY, 0.0, 1.0)},
      {"traveling", traveling_bump(0.9, 1.0, 0.4)},
      {"product", product_field(polynomial_field({{1.0, 0.0, 0.5}, {0.2}}), gaussian_field(1.0, 0.0, 1.5, 0.0, 1.0))},
      {"sum", sum_field({gaussian_field(1.0, 0.0, 1.0, 0.0, 1.0), constant_field(0.2)})},
      {"rescaled", rescaled_field(gaussian_field(1.0, 0.1, 1.0, 0.3, 0.7), 2.5, 2.0)},
      {"shifted", time_shifted_field(traveling_bump(1.0, 0.5, 0.3), 0.4)},
      {"ode", ode_field(2.0)},
  };
}

}  // namespace

// Every analytic jet agrees with centered differences of phi and of its first
// derivatives with a fitted slope of 2.
TEST(ManufacturedJets, MatchCenteredDifferencesAtSecondOrder) {
  const double t = -0.7, r = 0.45;
  for (const auto& [name, f] : builtin_fields()) {
    const FieldJet j = f->jet(t, r);
    std::vector<double> hs{1e-2, 1e-3, 1e-4};
    std::vector<double> et, er;
    for (double h : hs) {
      const double dt = (f->jet(t + h, r).phi - f->jet(t - h, r).phi) / (2 * h);
      const double dr = (f->jet(t, r + h).phi - f->jet(t, r - h).phi) / (2 * h);
      et.push_back(std::abs(dt - j.phi_t));
      er.push_back(std::abs(dr - j.phi_r));
      const double dtt = (f->jet(t + h, r).phi_t - f->jet(t - h, r).phi_t) / (2 * h);
      const double drr = (f->jet(t, r + h).phi_r - f->jet(t, r - h).phi_r) / (2 * h);
      const double dtr = (f->jet(t, r + h).phi_t - f->jet(t, r - h).phi_t) / (2 * h);
      EXPECT_NEAR(dtt, j.phi_tt, 1e-2 * (1 + std::abs(j.phi_tt))) << name;
      EXPECT_NEAR(drr, j.phi_rr, 1e-2 * (1 + std::abs(j.phi_rr))) << name;
      EXPECT_NEAR(dtr, j.phi_tr, 1e-2 * (1 + std::abs(j.phi_tr))) << name;
    }
    auto check = [&](const std::vector<double>& e, const char* what) {
      if (e[0] < 1e-12) return;  // derivative reproduced exactly (polynomial of low degree)
      EXPECT_NEAR(oracle::loglog_slope(hs, e), 2.0, 0.3) << name << " " << what;
    };
    check(et, "t");
    check(er, "r");
  }
}

TEST(ManufacturedJets, TravelingBumpSolvesTheOneDimensionalWaveEquation) {
  const auto f = traveling_bump(1.0, 0.7, 0.3);
  for (double t : {-0.5, 0.0, 0.8})
    for (double r : {0.0, 0.2, 1.1}) EXPECT_NEAR(box_operator(*f, 1, t, r), 0.0, 1e-12);
}

TEST(Potential, BumpGradientIsNormalized) {
  const auto V = PotentialSpec::perturbed(1.0, 1.0, 0.5, 0.3);
  double best = 0;
  for (int i = 0; i <= 400; ++i) {
    const double rho = 0.6 * i / 400;
    const auto g = V.gradient(0.5, rho);
    best = std::max(best, std::hypot(g.t, g.r));
  }
  EXPECT_NEAR(best, 1.0, 1e-4);
  EXPECT_LE(best, 1.0 + 1e-12);
  // Gradient against differences of the value.
  const double h = 1e-6;
  const auto g = V.gradient(0.6, 0.2);
  EXPECT_NEAR(g.t, (V.value(0.6 + h, 0.2) - V.value(0.6 - h, 0.2)) / (2 * h), 1e-8);
  EXPECT_NEAR(g.r, (V.value(0.6, 0.2 + h) - V.value(0.6, 0.2 - h)) / (2 * h), 1e-8);
}

TEST(Potential, ValidationOnSlab) {
  const SlabSpec slab(0.5, 1.5, 1.0);
  EXPECT_NO_THROW(PotentialSpec::constant(1.0).validate_on(slab, 2.0, 0.0));
  EXPECT_THROW(PotentialSpec::constant(3.0).validate_on(slab, 2.0, 0.0), InvalidArgument);
  const auto V = PotentialSpec::perturbed(1.0, 0.1, 1.0, 0.5);
  EXPECT_NO_THROW(V.validate_on(slab, 2.0, 0.1));
  EXPECT_THROW(V.validate_on(slab, 2.0, 0.01), InvalidArgument);
  EXPECT_THROW(PotentialSpec::constant(0.0), InvalidArgument);
}

TEST(Discrete, NodeStencilsAndParity) {
  const auto f = gaussian_field(1.0, 0.0, 2.0, 0.0, 0.8);
  const double dr = 0.01;
  const std::vector<double> times{-0.01, 0.0, 0.01};
  const auto d = DiscreteField::from_closed_form(*f, 3, dr, 301, times);
  EXPECT_EQ(d.node_sample(1, 0).phi_r, 0.0);
  for (std::size_t j : {std::size_t{1}, std::size_t{50}, std::size_t{300}}) {
    const double r = dr * j;
    const auto exact = f->jet(0.0, r);
    EXPECT_NEAR(d.node_sample(1, j).phi_r, exact.phi_r, 1e-3);
    EXPECT_NEAR(gradient_norm_sq(d, 1, j), gradient_norm_sq(*f, 0.0, r), 1e-3);
  }
  for (std::size_t j : {std::size_t{0}, std::size_t{1}, std::size_t{100}})
    EXPECT_NEAR(box_operator(d, 1, j), box_operator(*f, 3, 0.0, dr * j), 5e-3);
  EXPECT_THROW(box_operator(d, 0, 5), DomainError);
  EXPECT_THROW(box_operator(d, 1, 300), DomainError);
}

TEST(Discrete, OdeResidualConvergesAtSecondOrder) {
  for (double p : {1.5, 2.0, 3.0}) {
    const auto f = ode_field(p);
    const auto V = PotentialSpec::constant(1.0);
    std::vector<double> hs, errs;
    for (double dt : {0.02, 0.01, 0.005}) {
      const std::vector<double> times{-1.0 - dt, -1.0, -1.0 + dt};
      const auto d = DiscreteField::from_closed_form(*f, 2, 0.1, 8, times);
      hs.push_back(dt);
      errs.push_back(std::abs(nonlinear_residual(d, V, p, 1, 3)));
    }
    EXPECT_NEAR(oracle::loglog_slope(hs, errs), 2.0, 0.3) << p;
  }
}

TEST(Discrete, InterpolationIsAccurateAndChecksRange) {
  const auto f = gaussian_field(1.0, 0.3, 1.0, 0.0, 0.7);
  std::vector<double> times;
  for (int m = 0; m <= 20; ++m) times.push_back(0.05 * m);
  const auto d = DiscreteField::from_closed_form(*f, 2, 0.02, 151, times);
  for (double t : {0.0, 0.123, 0.5, 0.999})
    for (double r : {0.0, 0.013, 0.5, 2.99, 3.0}) {
      const auto s = d.sample(t, r);
      const auto e = f->sample(t, r);
      EXPECT_NEAR(s.phi, e.phi, 1e-5);
      EXPECT_NEAR(s.phi_t, e.phi_t, 1e-4);
      EXPECT_NEAR(s.phi_r, e.phi_r, 1e-3);
    }
  EXPECT_THROW(d.sample(1.2, 0.1), DomainError);
  EXPECT_THROW(d.sample(0.5, 3.1), DomainError);
  EXPECT_EQ(d.nearest_level(0.124), 2u);
}

TEST(Snapshot, RoundTripIsExact) {
  Snapshot s;
  s.n = 3;
  s.p = 2.0;
  s.t = -0.1234567890123456789;
  for (int j = 0; j < 6; ++j) {
    s.r.push_back(0.1 * j);
    s.phi.push_back(std::exp(-0.3 * j) / 3.0);
    s.phi_t.push_back(-1.0 / (j + 7.0));
  }
  std::stringstream io;
  write_snapshot(io, s);
  EXPECT_EQ(io.str().substr(0, 2), "# ");
  const Snapshot back = read_snapshot(io);
  EXPECT_EQ(back.n, 3);
  EXPECT_EQ(back.t, s.t);
  EXPECT_EQ(back.phi, s.phi);
  EXPECT_EQ(back.phi_t, s.phi_t);
  EXPECT_EQ(back.r, s.r);
}

TEST(Snapshot, RejectsMalformedInput) {
  std::stringstream no_header("0 1 2\n0.1 1 2\n");
  EXPECT_THROW(read_snapshot(no_header), InvalidArgument);
  std::stringstream uneven("# 1 2 0\n0 1 0\n0.1 1 0\n0.3 1 0\n0.4 1 0\n");
  EXPECT_THROW(read_snapshot(uneven), InvalidArgument);
  EXPECT_THROW(read_snapshot(std::string("/nonexistent/dir/snap.txt")), IoError);
}
