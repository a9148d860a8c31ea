#pragma once

// Weighted functionals of a field: annulus, slab, ball and lateral-cone
// energies, the two sides of the localized estimates, decay integrals on the
// forward cone, and log-log rate fits of the resulting time series.
//
// ∇ is the spacetime gradient, |∇phi|^2 = phi_t^2 + phi_r^2. Fields backed by a
// discrete history are checked for time coverage first (DomainError).

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "conewave/fields.hpp"
#include "conewave/quadrature.hpp"

namespace conewave {

/// |t|^{2-n+4/(p-1)} int_A (|∇phi|^2 + |t|^{-2} phi^2) over the annulus
/// sigma0 |t| < r < sigma1 |t|.
QuadratureResult annulus_quantity(const Field& field, double sigma0, double sigma1, double t,
                                  double p, int n, const QuadratureSpec& q = {});

/// The same weight over the inner ball r < sigma0 |t|.
QuadratureResult inner_ball_quantity(const Field& field, double sigma0, double t, double p, int n,
                                     const QuadratureSpec& q = {});

/// |t*|^{1-n+4/(p-1)} int_R (|∇phi|^2 + |t*|^{-2} phi^2) over the slab
/// R^sigma_gamma(t*) (time-reflected for t* < 0).
QuadratureResult slab_quantity(const Field& field, double sigma, double gamma, double t_star,
                               double p, int n, const QuadratureSpec& q = {});

/// (-t)^k (||phi|| + (-t) ||phi_t|| + (-t) ||phi_r||) / (-t)^{n/2}, L^2 norms
/// over B(0, -sigma t), k = 2/(p-1). Needs t < 0.
QuadratureResult mz_ball_quantity(const Field& field, double t, double p, int n,
                                  double sigma = 1.0, const QuadratureSpec& q = {});

/// int_R |phi|^{p+1} over R^sigma_gamma(t*).
QuadratureResult lp_slab_quantity(const Field& field, double sigma, double gamma, double t_star,
                                  double p, int n, const QuadratureSpec& q = {});

/// int_K (|∇phi|^2 + |phi|^{p+1} + t*^{-2} phi^2) over the lateral cone
/// {r = sigma t, t*/eta < t < eta t*}, t* > 0.
QuadratureResult lateral_quantity(const Field& field, double sigma, double eta, double t_star,
                                  double p, int n, const QuadratureSpec& q = {});

/// Upper exponent of the cone-boundary estimate: 1 + 4/(n-1) for n <= 2,
/// 1 + 4n/(n^2+n-4) for n >= 3.
double timecone_exponent_limit(int n);

struct LocalizedSpec {
  enum class Kind { timecone, annulus };
  Kind kind = Kind::annulus;
  /// timecone: the cone aperture; annulus: unused.
  double sigma = 0.5;
  double sigma0 = 0.25;
  double sigma1 = 0.5;
  double gamma = 1.2;
  double eta = 2.0;
  double t_star = 1.0;
  double p = 2.0;
  int n = 3;

  /// Parameter ranges plus the exponent range of the kind. Throws InvalidArgument.
  void validate() const;
};

struct LocalizedReport {
  double lhs = 0.0;
  double lhs_error = 0.0;
  double rhs = 0.0;
  double rhs_error = 0.0;
  /// rhs / lhs; +inf when lhs = 0.
  double ratio = 0.0;
  /// Both sides vanish; the inequality holds trivially.
  bool vacuous = false;
  /// annulus kind: the tau attaining the sup.
  double tau_max = std::numeric_limits<double>::quiet_NaN();
  std::size_t tau_count = 0;
};

/// Both sides of the localized estimate. The annulus kind takes the sup over
/// the given times inside the window |t*|/eta <= |tau| <= eta |t*| (same sign
/// as t*); none there is an InvalidArgument. The timecone kind needs t* > 0.
LocalizedReport localized_estimate_check(const Field& field, const LocalizedSpec& spec,
                                         std::span<const double> sup_times,
                                         const QuadratureSpec& q = {});

/// Log-spaced times covering the window |t*|/eta .. eta |t*| with
/// per_decade points per decade, both ends included.
std::vector<double> sup_time_grid(double t_star, double eta, int per_decade = 16);

/// Log-spaced times t_a .. t_b (same sign) with per_decade points per decade, ends included.
std::vector<double> log_spaced_times(double t_a, double t_b, int per_decade);

struct DecayPoint {
  double T = 0.0;
  /// int over C^sigma, 1 < t < T of t^{-1} |phi|^{p+1}.
  double D = 0.0;
  /// int over the lateral cone r = sigma t, 1 < t < T of |∇phi|^2 + |phi|^{p+1}.
  double L = 0.0;
  /// int over C^sigma, 1 < t < T of t^{-2} phi^2.
  double H = 0.0;
  /// D and L over the last interval (T_prev, T) alone, integrated separately
  /// so that tail increments far below D survive rounding.
  double D_increment = 0.0;
  double L_increment = 0.0;
  double error_estimate = 0.0;
};

/// Cumulative decay integrals at each T (each T > 1, increasing).
std::vector<DecayPoint> decay_partials(const Field& field, double sigma,
                                       std::span<const double> T_values, double p, int n,
                                       const QuadratureSpec& q = {});

struct RateReport {
  /// Slope of log y against log |t| by least squares.
  double slope = 0.0;
  double intercept = 0.0;
  /// Root-mean-square residual of the log fit.
  double residual = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::size_t samples = 0;
  /// Observed infimum and supremum of y over the window.
  double eps_hat = 0.0;
  double K_hat = 0.0;
  /// max y over the last decade of |t| in the window (the decade nearest t = 0
  /// for negative times, the farthest one for positive times).
  double delta_hat = 0.0;
};

/// Fits y ~ |t|^slope over samples with window_lo <= t <= window_hi. Needs at
/// least 3 samples there, all with y > 0 and t != 0.
RateReport rate_fit(std::span<const double> t, std::span<const double> y, double window_lo,
                    double window_hi);

struct EnergyProfileSpec {
  double sigma0 = 0.25;
  double sigma1 = 0.5;
  double gamma = 1.2;
  double eta = 2.0;
  double p = 2.0;
  int n = 3;
};

struct EnergyRow {
  double t = 0.0;
  double annulus = 0.0;
  double slab = 0.0;
  double mz = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  double error_estimate = 0.0;
};

/// Per time t: annulus and slab quantities, the ball quantity, and both sides
/// of the annulus localized estimate with t* = t (sup over sup_times).
std::vector<EnergyRow> energy_profile(const Field& field, const EnergyProfileSpec& spec,
                                      std::span<const double> times,
                                      std::span<const double> sup_times,
                                      const QuadratureSpec& q = {});

/// Header "t,annulus_q,slab_q,mz_q,lhs_1_6,rhs_1_6,ratio,err_est".
void write_energy_csv(std::ostream& out, const std::vector<EnergyRow>& rows);
/// Header "T,D,L".
void write_decay_csv(std::ostream& out, const std::vector<DecayPoint>& points);

/// Inner mass versus annulus mass over a time window: the inner-ball and
/// annulus quantities must both stay bounded away from zero.
struct SideMassReport {
  double inner_min = 0.0;
  double annulus_min = 0.0;
  double annulus_max = 0.0;
  bool ok = false;
};
SideMassReport side_mass_diagnostic(const Field& field, double sigma0, double sigma1,
                                    std::span<const double> times, double p, int n,
                                    const QuadratureSpec& q = {});

/// max over times of the slab quantity divided by max over times of the
/// annulus quantity: the constant K in slab <= K * annulus on the window.
struct SlabAnnulusReport {
  double slab_max = 0.0;
  double annulus_max = 0.0;
  double K = 0.0;
};
SlabAnnulusReport slab_annulus_constant(const Field& field, double sigma0, double sigma1,
                                        double gamma, std::span<const double> times, double p,
                                        int n, const QuadratureSpec& q = {});

/// Snapshot times of a discrete history inside [t_a, t_b].
std::vector<double> level_times_in(const DiscreteField& history, double t_a, double t_b);

}  // namespace conewave
