#pragma once

// Minkowski geometry in signature (-,+,...,+): the Lorentz square distance
// f = (r^2 - t^2)/4 and its shifted variants, the cone/annulus/slab regions,
// boundary pieces with their oriented unit normals, and induced measures.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace conewave {

/// A point (t, x) of R x R^n.
struct MinkowskiPoint {
  double t = 0.0;
  std::vector<double> x;

  MinkowskiPoint(double t, std::vector<double> x);

  std::size_t dimension() const noexcept { return x.size(); }
  double radius() const noexcept;
};

/// A point in the radial reduction: time and distance from the spatial axis.
struct RadialPoint {
  double t = 0.0;
  double r = 0.0;
};

/// Contravariant spacetime vector t*d_t + sum x^i d_{x^i}.
struct SpacetimeVector {
  double t = 0.0;
  std::vector<double> x;
};

/// Radial vector t*d_t + r*d_r (or the matching covector when used as one).
struct RadialVector {
  double t = 0.0;
  double r = 0.0;
};

/// g(v, v) = -v_t^2 + |v_x|^2.
double minkowski_norm_sq(const SpacetimeVector& v) noexcept;
double minkowski_norm_sq(RadialVector v) noexcept;

/// Area of the unit (n-1)-sphere; equals 2 for n = 1 (the two points +-1).
double unit_sphere_area(int n);
/// Volume of the unit ball in R^n.
double unit_ball_volume(int n);

/// Interior of the future time cone {0 < r < sigma t}.
struct ConeSpec {
  double sigma;
  explicit ConeSpec(double sigma);
};

/// Spatial annulus {sigma0 |t| < r < sigma1 |t|} at a fixed time t != 0.
struct AnnulusSpec {
  double sigma0;
  double sigma1;
  double t;
  AnnulusSpec(double sigma0, double sigma1, double t);

  double inner_radius() const noexcept;
  double outer_radius() const noexcept;
};

/// Time slab inside the cone. For t* > 0 it is {t*/gamma < t < gamma t*} in
/// the future cone; for t* < 0 the time-reflected set in the past cone.
struct SlabSpec {
  double sigma;
  double gamma;
  double t_star;
  SlabSpec(double sigma, double gamma, double t_star);

  double t_lower() const noexcept;
  double t_upper() const noexcept;
};

/// Lateral piece of the cone boundary, {r = sigma t, t*/eta < t < eta t*}.
struct LateralSlabSpec {
  double sigma;
  double eta;
  double t_star;
  LateralSlabSpec(double sigma, double eta, double t_star);

  double t_lower() const noexcept { return t_star / eta; }
  double t_upper() const noexcept { return eta * t_star; }
};

/// Timelike ray t -> (t, t v) from the origin. An empty velocity denotes the
/// time axis in any dimension.
struct RaySpec {
  std::vector<double> velocity;

  RaySpec() = default;
  explicit RaySpec(std::vector<double> velocity);
  static RaySpec axis(std::size_t n) { return RaySpec(std::vector<double>(n, 0.0)); }

  double speed() const noexcept;
  bool is_axis() const noexcept;
  /// Spatial position of the ray at time t, padded with zeros to dimension n.
  std::vector<double> position(double t, std::size_t n) const;
};

/// f_{t*,zeta} = (|x - x(zeta(t*))|^2 - (t - t*)^2) / 4. The default value is
/// the unshifted weight f.
struct ShiftedWeight {
  double t_star = 0.0;
  RaySpec ray;

  ShiftedWeight() = default;
  ShiftedWeight(double t_star, RaySpec ray);
  static ShiftedWeight axis(double t_star) { return ShiftedWeight(t_star, RaySpec{}); }

  bool is_radial() const noexcept { return ray.is_axis(); }
};

/// D^sigma_{t*,zeta}: outside the double null cone from zeta(t*), inside C^sigma.
struct ExteriorRegionSpec {
  double sigma;
  double t_star;
  RaySpec ray;
  ExteriorRegionSpec(double sigma, double t_star, RaySpec ray = {});

  ShiftedWeight weight() const { return ShiftedWeight(t_star, ray); }
  /// Time range of the cone piece G^sigma_{t*,zeta} for the axis ray.
  double lateral_t_lower() const;
  double lateral_t_upper() const;
};

using RegionSpec =
    std::variant<ConeSpec, AnnulusSpec, SlabSpec, LateralSlabSpec, ExteriorRegionSpec>;

double eval_weight(const ShiftedWeight& w, const MinkowskiPoint& p);
double eval_weight(const ShiftedWeight& w, RadialPoint p);

SpacetimeVector eval_weight_gradient(const ShiftedWeight& w, const MinkowskiPoint& p);
RadialVector eval_weight_gradient(const ShiftedWeight& w, RadialPoint p);

/// |x - x(zeta(t*))|.
double shifted_radius(const ShiftedWeight& w, const MinkowskiPoint& p);

/// theta with tan(theta) = (t - t*) / r_{t*,zeta}. Throws DomainError on the
/// shifted axis.
double angle_parameter(const ShiftedWeight& w, const MinkowskiPoint& p);
double angle_parameter(const ShiftedWeight& w, RadialPoint p);

/// Open-set membership; boundary points are outside. The lateral slab is a
/// hypersurface and uses a relative tolerance of 1e-12 on r = sigma t.
bool contains(const RegionSpec& region, const MinkowskiPoint& p);
/// Radial overload; exterior regions must use the axis ray.
bool contains(const RegionSpec& region, RadialPoint p);

enum class PieceKind { spacelike_plane, timelike_cylinder, timelike_cone, null_cone, level_set };
enum class CausalCharacter { spacelike, timelike, null };
/// Side of the piece on which the region lies. Planes use above/below (t larger
/// or smaller); cylinders and cones use inside/outside (r smaller or larger);
/// level sets use outside for {f > value} and inside for {f < value}.
enum class RegionSide { above, below, inside, outside };

/// One smooth piece of a region boundary in the radial reduction.
///
/// Planes are parametrized by r in [lo, hi]; every other piece by t in
/// [lo, hi], with the radius given by radius_at(t).
struct BoundaryPiece {
  PieceKind kind = PieceKind::spacelike_plane;
  double value = 0.0;
  RegionSide side = RegionSide::above;
  ShiftedWeight weight;
  double lo = 0.0;
  double hi = 0.0;

  static BoundaryPiece plane(double t, RegionSide side, double r_lo, double r_hi);
  static BoundaryPiece cylinder(double r, RegionSide side, double t_lo, double t_hi);
  static BoundaryPiece cone(double sigma, RegionSide side, double t_lo, double t_hi);
  static BoundaryPiece level_set(const ShiftedWeight& w, double eps, RegionSide side,
                                 double t_lo, double t_hi);
  static BoundaryPiece null_cone(const ShiftedWeight& w, RegionSide side, double t_lo,
                                 double t_hi);

  CausalCharacter causal_character() const noexcept;
  bool parametrized_by_time() const noexcept { return kind != PieceKind::spacelike_plane; }
  /// Radius of a side piece at time t (planes: throws).
  double radius_at(double t) const;
  /// Point of the piece at parameter s.
  RadialPoint point(double s) const;
};

/// Oriented unit normal: inward on spacelike pieces, outward on timelike ones,
/// |g(N, N)| = 1. Throws for null pieces or points off the piece.
RadialVector oriented_normal(const BoundaryPiece& piece, RadialPoint p);

/// Induced measure per unit piece parameter in the radial reduction:
/// plane w r^{n-1}, cylinder w c^{n-1}, cone w sqrt(1-sigma^2) (sigma t)^{n-1},
/// level set w r^{n-1} 2 sqrt(eps) / r, with w the unit sphere area.
double measure_density(const BoundaryPiece& piece, int n, RadialPoint p);
/// Bulk density w r^{n-1} of the radial reduction (the Cartesian density is 1).
double bulk_measure_density(int n, double r);

struct CoveringReport {
  bool covered = true;
  std::optional<MinkowskiPoint> witness;
  bool boundary_contained = true;
  std::optional<MinkowskiPoint> boundary_witness;
  /// min over slab samples of max(f_{t*,zeta0}, f_{t*,zeta1}) / t*^2, with each
  /// weight taken as zero outside its exterior region.
  double min_weight = 0.0;
  std::size_t samples = 0;

  bool ok() const noexcept { return covered && boundary_contained; }
};

/// Samples R^sigma_gamma(t*) on a deterministic lattice (including points on
/// both rays) plus seeded random points and checks it lies in
/// D^sigma_{t*,zeta0} u D^sigma_{t*,zeta1}. With eta, additionally checks that
/// both cone pieces G^sigma_{t*,zeta_i} lie in K^sigma_eta(t*).
CoveringReport covering_check(double sigma, double gamma, double t_star, const RaySpec& ray0,
                              const RaySpec& ray1, std::size_t sample_count,
                              std::optional<double> eta = std::nullopt,
                              std::uint64_t seed = 0x5eedULL);

}  // namespace conewave
