#pragma once

// The weighted Carleman inequality for the focusing equation: its bulk
// coefficient, the boundary current, a small library of admissible regions,
// and quadrature checks of the global estimate and of the shifted estimate
// on the exterior regions D^sigma_{t*}.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "conewave/error.hpp"
#include "conewave/fields.hpp"
#include "conewave/geometry.hpp"
#include "conewave/quadrature.hpp"

namespace conewave {

struct CarlemanParams {
  int n = 3;
  double a = 0.25;
  double p = 2.0;
  PotentialSpec V = PotentialSpec::constant();
  /// Unshifted weight f by default; the shifted estimate uses the axis shift.
  ShiftedWeight shift;

  /// n >= 1, a > 0, p >= 1.
  void validate() const;
  /// validate() plus p - 1 < 4 / (n - 1 + 4a), the range in which the
  /// constant-potential part of the bulk coefficient is positive.
  void validate_subconformal() const;
};

/// Gamma_V = grad f . grad log V - (n - 1 + 4a)/4 (p - 1 - 4/(n - 1 + 4a)),
/// with the weight of params.shift.
double bulk_gamma(const CarlemanParams& params, RadialPoint p);

/// The boundary current P^V as a covector (P_t, P_r). Throws DomainError
/// where the weight is not positive.
RadialVector flux_vector(const CarlemanParams& params, const FieldSample& phi, RadialPoint p);
RadialVector flux_vector(const CarlemanParams& params, const Field& field, RadialPoint p);

/// Pointwise bulk integrands (without the measure):
/// lhs = (p+1)^{-1} f^{2a} V Gamma_V |phi|^{p+1}, rhs = (8a)^{-1} f^{2a+1} (box_V phi)^2.
struct BulkDensities {
  double lhs = 0.0;
  double rhs = 0.0;
};
BulkDensities bulk_densities(const CarlemanParams& params, const FieldJet& jet, RadialPoint p);

/// Why a region was rejected, with a point that demonstrates it.
struct AdmissibilityWitness {
  std::string reason;
  RadialPoint point;
};

class InadmissibleRegion : public InvalidArgument {
 public:
  explicit InadmissibleRegion(AdmissibilityWitness w)
      : InvalidArgument("inadmissible region: " + w.reason), witness_(std::move(w)) {}
  const AdmissibilityWitness& witness() const noexcept { return witness_; }

 private:
  AdmissibilityWitness witness_;
};

/// Regions with closed-form boundary pieces, all relative to a weight f_{t*}
/// on the axis:
///  - box {t_lo < t < t_hi, r_lo < r < r_hi};
///  - frustum {t_lo < t < t_hi, r_lo < r < sigma t}, capped by the time cone;
///  - exterior {f_{t*} > eps, r < sigma t};
///  - clipped exterior, the exterior cut by the planes t_lo and t_hi.
/// Construction checks only the shape parameters; admissibility for the
/// weight (closure inside {f > 0}) is reported by witness().
class AdmissibleRegion {
 public:
  enum class Kind { box, frustum, exterior, clipped_exterior };

  static AdmissibleRegion box(double t_lo, double t_hi, double r_lo, double r_hi,
                              double t_star = 0.0);
  static AdmissibleRegion frustum(double sigma, double t_lo, double t_hi, double r_lo,
                                  double t_star);
  static AdmissibleRegion exterior(double sigma, double t_star, double eps);
  static AdmissibleRegion clipped_exterior(double sigma, double t_star, double eps, double t_lo,
                                           double t_hi);

  Kind kind() const noexcept { return kind_; }
  ShiftedWeight weight() const { return ShiftedWeight::axis(t_star_); }
  double t_star() const noexcept { return t_star_; }
  double sigma() const noexcept { return sigma_; }
  double eps() const noexcept { return eps_; }
  double t_lower() const noexcept { return t_lo_; }
  double t_upper() const noexcept { return t_hi_; }

  std::optional<AdmissibilityWitness> witness() const;
  std::vector<BoundaryPiece> pieces() const;
  RadialDomain domain(int n) const;
  bool contains(RadialPoint p) const;
  std::string describe() const;

  /// The region after (t, r) -> (lambda t, lambda r) followed by t -> t + shift.
  AdmissibleRegion transformed(double lambda, double shift) const;

 private:
  /// Radius of the lower r edge at time t (r_lo, or the level set).
  double lower_radius(double t) const;
  double upper_radius(double t) const;

  Kind kind_ = Kind::box;
  double t_star_ = 0.0;
  double sigma_ = 0.0;
  double eps_ = 0.0;
  double t_lo_ = 0.0;
  double t_hi_ = 0.0;
  double r_lo_ = 0.0;
  double r_hi_ = 0.0;
};

struct PieceFlux {
  BoundaryPiece piece;
  QuadratureResult flux;
};

struct CarlemanReport {
  double lhs_bulk = 0.0;
  double lhs_error = 0.0;
  double rhs_bulk = 0.0;
  double rhs_bulk_error = 0.0;
  std::vector<PieceFlux> boundary;
  double rhs_boundary = 0.0;
  double boundary_error = 0.0;
  /// rhs_bulk + rhs_boundary - lhs_bulk.
  double slack = 0.0;
  double error_estimate = 0.0;
  /// 1e-6 (|lhs| + |rhs|) + error_estimate.
  double tolerance = 0.0;
  bool pass = false;
};

/// Evaluates both sides of the global inequality on an admissible region.
/// The region weight must match params.shift. Throws InadmissibleRegion.
CarlemanReport verify_global(const CarlemanParams& params, const ManufacturedField& field,
                             const AdmissibleRegion& region, const QuadratureSpec& q);

struct FluxProbePoint {
  double eps = 0.0;
  double flux = 0.0;
  double error_estimate = 0.0;
};

/// Flux of P^V through the level set {f_{t*} = eps} inside the cone, per eps.
std::vector<FluxProbePoint> vanishing_flux_probe(const CarlemanParams& params, const Field& field,
                                                 const ExteriorRegionSpec& exterior,
                                                 const std::vector<double>& eps_values,
                                                 const QuadratureSpec& q);

/// Decades min(1e-2, sigma^2 t*^2 / 8) 10^{-k} down to eps_floor.
std::vector<double> flux_probe_levels(const ExteriorRegionSpec& exterior, double eps_floor);

struct ShiftedReport {
  /// Integral of f_{t*}^{2a} |phi|^{p+1} over D^sigma_{t*}.
  double lhs = 0.0;
  double lhs_error = 0.0;
  /// Cone-piece terms with their t* weights: t*^{1+4a} |grad phi|^2,
  /// t*^{1+4a} |phi|^{p+1}, t*^{-1+4a} phi^2, t* f^{-1+2a} phi^2.
  std::array<double, 4> terms{};
  std::array<double, 4> term_errors{};
  double rhs = 0.0;
  /// rhs / lhs (infinite when lhs vanishes and rhs does not).
  double ratio = 0.0;
  std::vector<FluxProbePoint> flux_probe;
  /// |flux| strictly decreasing as eps decreases.
  bool flux_vanishing = false;
};

/// The shifted estimate on D^sigma_{t*} for the axis ray.
ShiftedReport verify_shifted(const CarlemanParams& params, const ManufacturedField& field,
                             const ExteriorRegionSpec& exterior, const QuadratureSpec& q,
                             double eps_floor = 1e-4);

struct CarlemanCase {
  std::size_t id = 0;
  CarlemanParams params;
  FieldPtr field;
  AdmissibleRegion region = AdmissibleRegion::box(0.0, 1.0, 2.0, 3.0);
};

/// Randomized admissible instances: Gaussian-bump fields, a in [0.05, 0.45],
/// p in [1, 4], constant or bump-perturbed V, all four region families.
std::vector<CarlemanCase> random_carleman_cases(std::size_t count, std::uint64_t seed,
                                                double a_lo = 0.05, double a_hi = 0.45);

/// Gaussian-bump fields (one or two bumps, time-dependent or static) centred
/// in D^sigma_{t*} for t* = 1 and sigma = 0.5, for the shifted estimate.
std::vector<FieldPtr> random_shifted_fields(std::size_t count, std::uint64_t seed);

/// K = lhs / rhs of the shifted estimate for a field self-similarly rescaled
/// to each t* (phi -> lambda^{-k} phi(./lambda), lambda = t*), with the flux
/// probe at every t*.
struct ShiftedScaling {
  std::vector<double> t_stars;
  std::vector<double> K;
  /// max K / min K.
  double spread = 0.0;
  bool flux_vanishing = false;
};
ShiftedScaling shifted_scaling_check(const CarlemanParams& params, const FieldPtr& field,
                                     double sigma, const std::vector<double>& t_stars,
                                     const QuadratureSpec& q, double eps_floor = 1e-4);

/// Verifies the cases on `threads` workers; report i belongs to case i.
std::vector<CarlemanReport> verify_batch(const std::vector<CarlemanCase>& cases,
                                         const QuadratureSpec& q, unsigned threads = 1);

/// Header plus one row per case:
/// case_id, a, p, n, lhs, rhs_bulk, rhs_boundary, slack, err_est, pass.
void write_carleman_csv(std::ostream& out, const std::vector<CarlemanCase>& cases,
                        const std::vector<CarlemanReport>& reports);

}  // namespace conewave
