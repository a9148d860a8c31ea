#pragma once

// Deterministic composite quadrature in the radial reduction (t, r), with
// power-graded meshes towards flagged singular edges and a one-level
// refinement difference as error estimate.

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "conewave/geometry.hpp"

namespace conewave {

struct QuadratureSpec {
  /// 2 = midpoint, 4 = two-point Gauss, 6 = three-point Gauss per cell.
  int base_order = 4;
  int cells_t = 32;
  int cells_r = 32;
  /// Node spacing near a flagged edge behaves like distance^grading_exponent.
  double grading_exponent = 3.0;
  /// Number of uniform doublings; the error estimate compares the last two.
  int refinement_levels = 1;

  void validate() const;
};

struct QuadratureResult {
  double value = 0.0;
  /// |value_fine - value_coarse| over the last refinement.
  double error_estimate = 0.0;
  std::size_t nodes_used = 0;
};

/// Marks an interval end as singular. With a finite exponent beta (integrand
/// ~ distance^beta) the grading q is adjusted so that q (1 + beta) is the
/// next integer at or above grading_exponent (1 + beta); the mapped integrand
/// then starts with an integer power.
struct EdgeFlag {
  bool singular = false;
  double exponent = std::numeric_limits<double>::quiet_NaN();
};

struct EdgeGrading {
  EdgeFlag lower;
  EdgeFlag upper;

  static EdgeGrading none() { return {}; }
  static EdgeGrading lower_edge(double exponent = std::numeric_limits<double>::quiet_NaN()) {
    return {{true, exponent}, {}};
  }
  static EdgeGrading upper_edge(double exponent = std::numeric_limits<double>::quiet_NaN()) {
    return {{}, {true, exponent}};
  }
  static EdgeGrading both(double exponent = std::numeric_limits<double>::quiet_NaN()) {
    return {{true, exponent}, {true, exponent}};
  }
};

using Integrand1 = std::function<double(double)>;
using Integrand2 = std::function<double(double t, double r)>;
/// Integrands singular at an end must be evaluated from the exact distances to
/// the ends; with an edge exponent near -1 most of the integral lies closer to
/// the edge than double precision can resolve in absolute coordinates.
using OffsetIntegrand1 = std::function<double(double x, double from_lo, double from_hi)>;
using OffsetIntegrand2 = std::function<double(double t, double r, double from_lo, double from_hi)>;

/// A vertically simple region {t_lo < t < t_hi, r_lower(t) < r < r_upper(t)}
/// of the (t, r) half plane, integrated against w r^{n-1} dr dt.
struct RadialDomain {
  int dimension = 1;
  double t_lo = 0.0;
  double t_hi = 0.0;
  /// Interior kinks of r_lower / r_upper; the t mesh is split there.
  std::vector<double> t_breaks;
  std::function<double(double)> r_lower;
  std::function<double(double)> r_upper;
  EdgeGrading t_grading;
  /// Grading in the normalized radial variable: lower = the r_lower edge.
  EdgeGrading r_grading;
};

/// Composite rule nodes on [a, b] (cells split proportionally across breaks).
/// from_lo = x - a and from_hi = b - x are computed from the mesh map, not by
/// subtraction, so they stay exact far below the spacing of doubles near a, b.
struct QuadratureNode {
  double x;
  double w;
  double from_lo;
  double from_hi;
};
std::vector<QuadratureNode> composite_rule(double a, double b, int cells, int order,
                                           double grading_exponent, EdgeGrading grading,
                                           std::span<const double> breaks = {});

/// One-dimensional integral of g over [a, b]; uses max(cells_t, cells_r) cells.
QuadratureResult integrate_interval(double a, double b, const Integrand1& g,
                                    const QuadratureSpec& q, EdgeGrading grading = {},
                                    std::span<const double> breaks = {});

QuadratureResult integrate_interval_offsets(double a, double b, const OffsetIntegrand1& g,
                                            const QuadratureSpec& q, EdgeGrading grading = {},
                                            std::span<const double> breaks = {});

QuadratureResult integrate_bulk(const RadialDomain& domain, const Integrand2& integrand,
                                const QuadratureSpec& q);

/// Spatial integral over the annulus at its time level (integrand(t, r) w r^{n-1} dr).
QuadratureResult integrate_bulk(const AnnulusSpec& annulus, int n, const Integrand2& integrand,
                                const QuadratureSpec& q);
/// Spacetime integral over the slab R^sigma_gamma(t*).
QuadratureResult integrate_bulk(const SlabSpec& slab, int n, const Integrand2& integrand,
                                const QuadratureSpec& q);
/// Spacetime integral over {f_{t*} > eps} inside D^sigma_{t*} (axis ray). With
/// eps = 0 the edge on the null cone is graded with the supplied exponent.
QuadratureResult integrate_bulk(const ExteriorRegionSpec& exterior, int n, double eps,
                                const Integrand2& integrand, const QuadratureSpec& q,
                                double null_edge_exponent = 0.5);

/// Spatial integral over the ball {t} x {r < radius}.
QuadratureResult integrate_ball(double t, double radius, int n, const Integrand2& integrand,
                                const QuadratureSpec& q);

RadialDomain slab_domain(const SlabSpec& slab, int n);
RadialDomain exterior_domain(const ExteriorRegionSpec& exterior, int n, double eps);
/// {t_lo < t < t_hi, r < sigma t} for 0 <= t_lo.
RadialDomain cone_domain(double sigma, double t_lo, double t_hi, int n);

/// Surface integral over a boundary piece with its induced measure.
QuadratureResult integrate_surface(const BoundaryPiece& piece, int n, const Integrand2& integrand,
                                   const QuadratureSpec& q, EdgeGrading grading = {});
/// As above; the offsets are measured along the piece parameter from lo and hi.
QuadratureResult integrate_surface_offsets(const BoundaryPiece& piece, int n,
                                           const OffsetIntegrand2& integrand,
                                           const QuadratureSpec& q, EdgeGrading grading = {});
QuadratureResult integrate_surface(const LateralSlabSpec& lateral, int n,
                                   const Integrand2& integrand, const QuadratureSpec& q);

/// Neumaier-compensated running sum; deterministic in insertion order.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

}  // namespace conewave
