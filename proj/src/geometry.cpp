#include "conewave/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "conewave/error.hpp"
#include "conewave/random.hpp"

namespace conewave {

namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

double norm(const std::vector<double>& v) {
  double sum = 0.0;
  for (double c : v) sum += c * c;
  return std::sqrt(sum);
}

void require(bool condition, const char* message) {
  if (!condition) throw InvalidArgument(message);
}

bool near(double a, double b, double scale) {
  return std::abs(a - b) <= 1e-9 * std::max(1.0, scale);
}

}  // namespace

MinkowskiPoint::MinkowskiPoint(double t_, std::vector<double> x_) : t(t_), x(std::move(x_)) {
  require(!x.empty(), "MinkowskiPoint: spatial dimension must be at least 1");
}

double MinkowskiPoint::radius() const noexcept { return norm(x); }

double minkowski_norm_sq(const SpacetimeVector& v) noexcept {
  double spatial = 0.0;
  for (double c : v.x) spatial += c * c;
  return -v.t * v.t + spatial;
}

double minkowski_norm_sq(RadialVector v) noexcept { return -v.t * v.t + v.r * v.r; }

double unit_sphere_area(int n) {
  require(n >= 1, "unit_sphere_area: n must be >= 1");
  const double half = 0.5 * n;
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

double unit_ball_volume(int n) {
  require(n >= 1, "unit_ball_volume: n must be >= 1");
  return unit_sphere_area(n) / n;
}

ConeSpec::ConeSpec(double sigma_) : sigma(sigma_) {
  require(sigma > 0.0 && sigma < 1.0, "ConeSpec: aperture must satisfy 0 < sigma < 1");
}

AnnulusSpec::AnnulusSpec(double s0, double s1, double t_) : sigma0(s0), sigma1(s1), t(t_) {
  require(s0 > 0.0 && s0 < s1 && s1 < 1.0, "AnnulusSpec: need 0 < sigma0 < sigma1 < 1");
  require(t != 0.0, "AnnulusSpec: time level must be nonzero");
}

double AnnulusSpec::inner_radius() const noexcept { return sigma0 * std::abs(t); }
double AnnulusSpec::outer_radius() const noexcept { return sigma1 * std::abs(t); }

SlabSpec::SlabSpec(double s, double g, double ts) : sigma(s), gamma(g), t_star(ts) {
  require(s > 0.0 && s < 1.0, "SlabSpec: aperture must satisfy 0 < sigma < 1");
  require(g > 1.0, "SlabSpec: gamma must exceed 1");
  require(ts != 0.0, "SlabSpec: t_star must be nonzero");
}

double SlabSpec::t_lower() const noexcept { return t_star > 0 ? t_star / gamma : gamma * t_star; }
double SlabSpec::t_upper() const noexcept { return t_star > 0 ? gamma * t_star : t_star / gamma; }

LateralSlabSpec::LateralSlabSpec(double s, double e, double ts) : sigma(s), eta(e), t_star(ts) {
  require(s > 0.0 && s < 1.0, "LateralSlabSpec: aperture must satisfy 0 < sigma < 1");
  require(e > 1.0, "LateralSlabSpec: eta must exceed 1");
  require(ts > 0.0, "LateralSlabSpec: t_star must be positive");
}

RaySpec::RaySpec(std::vector<double> v) : velocity(std::move(v)) {
  require(speed() < 1.0, "RaySpec: ray must be timelike (|v| < 1)");
}

double RaySpec::speed() const noexcept { return norm(velocity); }

bool RaySpec::is_axis() const noexcept {
  return std::all_of(velocity.begin(), velocity.end(), [](double c) { return c == 0.0; });
}

std::vector<double> RaySpec::position(double t, std::size_t n) const {
  if (!velocity.empty() && velocity.size() != n)
    throw InvalidArgument("RaySpec: velocity dimension does not match the point dimension");
  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < velocity.size(); ++i) x[i] = t * velocity[i];
  return x;
}

ShiftedWeight::ShiftedWeight(double ts, RaySpec r) : t_star(ts), ray(std::move(r)) {}

ExteriorRegionSpec::ExteriorRegionSpec(double s, double ts, RaySpec r)
    : sigma(s), t_star(ts), ray(std::move(r)) {
  require(s > 0.0 && s < 1.0, "ExteriorRegionSpec: aperture must satisfy 0 < sigma < 1");
  require(ts > 0.0, "ExteriorRegionSpec: t_star must be positive");
  require(ray.speed() < s, "ExteriorRegionSpec: ray must lie inside the cone (|v| < sigma)");
}

double ExteriorRegionSpec::lateral_t_lower() const {
  if (!ray.is_axis()) throw InvalidArgument("lateral_t_lower: axis ray only");
  return t_star / (1.0 + sigma);
}

double ExteriorRegionSpec::lateral_t_upper() const {
  if (!ray.is_axis()) throw InvalidArgument("lateral_t_upper: axis ray only");
  return t_star / (1.0 - sigma);
}

double shifted_radius(const ShiftedWeight& w, const MinkowskiPoint& p) {
  return std::sqrt(squared_distance(p.x, w.ray.position(w.t_star, p.dimension())));
}

double eval_weight(const ShiftedWeight& w, const MinkowskiPoint& p) {
  const double dt = p.t - w.t_star;
  const double rs2 = squared_distance(p.x, w.ray.position(w.t_star, p.dimension()));
  return 0.25 * (rs2 - dt * dt);
}

double eval_weight(const ShiftedWeight& w, RadialPoint p) {
  if (!w.is_radial()) throw InvalidArgument("eval_weight: radial points need an axis ray");
  const double dt = p.t - w.t_star;
  return 0.25 * (p.r * p.r - dt * dt);
}

SpacetimeVector eval_weight_gradient(const ShiftedWeight& w, const MinkowskiPoint& p) {
  const auto center = w.ray.position(w.t_star, p.dimension());
  SpacetimeVector grad{0.5 * (p.t - w.t_star), std::vector<double>(p.dimension())};
  for (std::size_t i = 0; i < p.dimension(); ++i) grad.x[i] = 0.5 * (p.x[i] - center[i]);
  return grad;
}

RadialVector eval_weight_gradient(const ShiftedWeight& w, RadialPoint p) {
  if (!w.is_radial()) throw InvalidArgument("eval_weight_gradient: radial points need an axis ray");
  return {0.5 * (p.t - w.t_star), 0.5 * p.r};
}

double angle_parameter(const ShiftedWeight& w, const MinkowskiPoint& p) {
  const double rs = shifted_radius(w, p);
  if (rs == 0.0) throw DomainError("angle_parameter: undefined on the shifted axis");
  return std::atan((p.t - w.t_star) / rs);
}

double angle_parameter(const ShiftedWeight& w, RadialPoint p) {
  if (!w.is_radial()) throw InvalidArgument("angle_parameter: radial points need an axis ray");
  if (p.r == 0.0) throw DomainError("angle_parameter: undefined on the shifted axis");
  return std::atan((p.t - w.t_star) / p.r);
}

namespace {

bool in_cone(double sigma, double t, double r) { return 0.0 < r && r < sigma * t; }

bool in_slab(const SlabSpec& s, double t, double r) {
  return s.t_lower() < t && t < s.t_upper() && 0.0 < r && r < s.sigma * std::abs(t);
}

bool on_lateral(const LateralSlabSpec& k, double t, double r) {
  return k.t_lower() < t && t < k.t_upper() &&
         std::abs(r - k.sigma * t) <= 1e-12 * std::max(1.0, std::abs(t));
}

bool in_annulus(const AnnulusSpec& a, double t, double r) {
  return t == a.t && a.inner_radius() < r && r < a.outer_radius();
}

}  // namespace

bool contains(const RegionSpec& region, const MinkowskiPoint& p) {
  const double r = p.radius();
  return std::visit(
      [&](const auto& spec) -> bool {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, ConeSpec>) {
          return in_cone(spec.sigma, p.t, r);
        } else if constexpr (std::is_same_v<T, AnnulusSpec>) {
          return in_annulus(spec, p.t, r);
        } else if constexpr (std::is_same_v<T, SlabSpec>) {
          return in_slab(spec, p.t, r);
        } else if constexpr (std::is_same_v<T, LateralSlabSpec>) {
          return on_lateral(spec, p.t, r);
        } else {
          const double rs = shifted_radius(spec.weight(), p);
          return std::abs(p.t - spec.t_star) < rs && r < spec.sigma * p.t;
        }
      },
      region);
}

bool contains(const RegionSpec& region, RadialPoint p) {
  if (const auto* ext = std::get_if<ExteriorRegionSpec>(&region)) {
    if (!ext->ray.is_axis()) throw InvalidArgument("contains: radial points need an axis ray");
    return std::abs(p.t - ext->t_star) < p.r && p.r < ext->sigma * p.t;
  }
  return contains(region, MinkowskiPoint(p.t, {p.r}));
}

BoundaryPiece BoundaryPiece::plane(double t, RegionSide side, double r_lo, double r_hi) {
  require(side == RegionSide::above || side == RegionSide::below,
          "BoundaryPiece::plane: side must be above or below");
  require(0.0 <= r_lo && r_lo <= r_hi, "BoundaryPiece::plane: need 0 <= r_lo <= r_hi");
  return {PieceKind::spacelike_plane, t, side, {}, r_lo, r_hi};
}

BoundaryPiece BoundaryPiece::cylinder(double r, RegionSide side, double t_lo, double t_hi) {
  require(side == RegionSide::inside || side == RegionSide::outside,
          "BoundaryPiece::cylinder: side must be inside or outside");
  require(r > 0.0 && t_lo <= t_hi, "BoundaryPiece::cylinder: need r > 0 and t_lo <= t_hi");
  return {PieceKind::timelike_cylinder, r, side, {}, t_lo, t_hi};
}

BoundaryPiece BoundaryPiece::cone(double sigma, RegionSide side, double t_lo, double t_hi) {
  require(side == RegionSide::inside || side == RegionSide::outside,
          "BoundaryPiece::cone: side must be inside or outside");
  require(sigma > 0.0 && sigma < 1.0, "BoundaryPiece::cone: need 0 < sigma < 1");
  require(0.0 <= t_lo && t_lo <= t_hi, "BoundaryPiece::cone: need 0 <= t_lo <= t_hi");
  return {PieceKind::timelike_cone, sigma, side, {}, t_lo, t_hi};
}

BoundaryPiece BoundaryPiece::level_set(const ShiftedWeight& w, double eps, RegionSide side,
                                       double t_lo, double t_hi) {
  require(side == RegionSide::inside || side == RegionSide::outside,
          "BoundaryPiece::level_set: side must be inside or outside");
  require(eps > 0.0, "BoundaryPiece::level_set: level must be positive");
  require(w.is_radial(), "BoundaryPiece::level_set: axis ray only");
  require(t_lo <= t_hi, "BoundaryPiece::level_set: need t_lo <= t_hi");
  return {PieceKind::level_set, eps, side, w, t_lo, t_hi};
}

BoundaryPiece BoundaryPiece::null_cone(const ShiftedWeight& w, RegionSide side, double t_lo,
                                       double t_hi) {
  require(w.is_radial(), "BoundaryPiece::null_cone: axis ray only");
  return {PieceKind::null_cone, 0.0, side, w, t_lo, t_hi};
}

CausalCharacter BoundaryPiece::causal_character() const noexcept {
  switch (kind) {
    case PieceKind::spacelike_plane: return CausalCharacter::spacelike;
    case PieceKind::null_cone: return CausalCharacter::null;
    default: return CausalCharacter::timelike;
  }
}

double BoundaryPiece::radius_at(double t) const {
  switch (kind) {
    case PieceKind::timelike_cylinder: return value;
    case PieceKind::timelike_cone: return value * t;
    case PieceKind::level_set: {
      const double dt = t - weight.t_star;
      return std::sqrt(4.0 * value + dt * dt);
    }
    case PieceKind::null_cone: return std::abs(t - weight.t_star);
    case PieceKind::spacelike_plane: break;
  }
  throw InvalidArgument("BoundaryPiece::radius_at: planes are parametrized by r");
}

RadialPoint BoundaryPiece::point(double s) const {
  if (kind == PieceKind::spacelike_plane) return {value, s};
  return {s, radius_at(s)};
}

namespace {

void require_on_piece(const BoundaryPiece& piece, RadialPoint p) {
  const double scale = std::abs(p.t) + p.r;
  bool on = false;
  switch (piece.kind) {
    case PieceKind::spacelike_plane: on = near(p.t, piece.value, scale); break;
    case PieceKind::timelike_cylinder: on = near(p.r, piece.value, scale); break;
    case PieceKind::timelike_cone: on = near(p.r, piece.value * p.t, scale); break;
    case PieceKind::level_set:
      on = near(eval_weight(piece.weight, p), piece.value, scale * scale);
      break;
    case PieceKind::null_cone: on = near(eval_weight(piece.weight, p), 0.0, scale * scale); break;
  }
  if (!on) throw InvalidArgument("boundary piece: point does not lie on the piece");
}

}  // namespace

RadialVector oriented_normal(const BoundaryPiece& piece, RadialPoint p) {
  if (piece.causal_character() == CausalCharacter::null)
    throw InvalidArgument("oriented_normal: null pieces have no unit normal");
  require_on_piece(piece, p);
  switch (piece.kind) {
    case PieceKind::spacelike_plane:
      return {piece.side == RegionSide::above ? 1.0 : -1.0, 0.0};
    case PieceKind::timelike_cylinder:
      return {0.0, piece.side == RegionSide::inside ? 1.0 : -1.0};
    case PieceKind::timelike_cone: {
      const double sign = piece.side == RegionSide::inside ? 1.0 : -1.0;
      const double scale = sign / std::sqrt(1.0 - piece.value * piece.value);
      return {scale * piece.value, scale};
    }
    case PieceKind::level_set: {
      // Outward from {f > eps} is towards decreasing f.
      // |grad f|^2 = f = eps on the piece; dividing by the level rather than
      // the recomputed weight keeps N a unit vector for small eps.
      const RadialVector grad = eval_weight_gradient(piece.weight, p);
      const double sign = piece.side == RegionSide::outside ? -1.0 : 1.0;
      const double scale = sign / std::sqrt(piece.value);
      return {scale * grad.t, scale * grad.r};
    }
    case PieceKind::null_cone: break;
  }
  throw InvalidArgument("oriented_normal: unsupported piece");
}

double bulk_measure_density(int n, double r) {
  return unit_sphere_area(n) * std::pow(r, n - 1);
}

double measure_density(const BoundaryPiece& piece, int n, RadialPoint p) {
  const double area = unit_sphere_area(n);
  switch (piece.kind) {
    case PieceKind::spacelike_plane: return area * std::pow(p.r, n - 1);
    case PieceKind::timelike_cylinder: return area * std::pow(piece.value, n - 1);
    case PieceKind::timelike_cone: {
      const double s = piece.value;
      return area * std::sqrt(1.0 - s * s) * std::pow(s * p.t, n - 1);
    }
    case PieceKind::level_set: {
      const double r = piece.radius_at(p.t);
      return area * std::pow(r, n - 1) * 2.0 * std::sqrt(piece.value) / r;
    }
    case PieceKind::null_cone: break;
  }
  throw InvalidArgument("measure_density: null pieces carry no induced measure");
}

namespace {

struct ExteriorTest {
  double sigma;
  double t_star;
  std::vector<double> center;

  bool contains(double t, const std::vector<double>& x) const {
    return std::abs(t - t_star) < std::sqrt(squared_distance(x, center)) && norm(x) < sigma * t;
  }
  double weight(double t, const std::vector<double>& x) const {
    if (!contains(t, x)) return 0.0;
    const double dt = t - t_star;
    return 0.25 * (squared_distance(x, center) - dt * dt);
  }
  bool on_lateral_piece(double t, const std::vector<double>& x) const {
    return std::abs(t - t_star) <= std::sqrt(squared_distance(x, center));
  }
};

std::vector<std::vector<double>> lattice_directions(std::size_t n, std::size_t extra, Rng& rng) {
  std::vector<std::vector<double>> dirs;
  for (std::size_t i = 0; i < n; ++i) {
    for (double sign : {1.0, -1.0}) {
      std::vector<double> d(n, 0.0);
      d[i] = sign;
      dirs.push_back(std::move(d));
    }
  }
  if (n == 1) return dirs;
  for (std::size_t k = 0; k < extra; ++k) {
    std::vector<double> d(n);
    for (auto& c : d) c = rng.normal();
    const double len = norm(d);
    for (auto& c : d) c /= len;
    dirs.push_back(std::move(d));
  }
  return dirs;
}

}  // namespace

CoveringReport covering_check(double sigma, double gamma, double t_star, const RaySpec& ray0,
                              const RaySpec& ray1, std::size_t sample_count,
                              std::optional<double> eta, std::uint64_t seed) {
  require(sigma > 0.0 && sigma < 1.0, "covering_check: need 0 < sigma < 1");
  require(gamma > 1.0, "covering_check: gamma must exceed 1");
  require(t_star > 0.0, "covering_check: t_star must be positive");
  require(sample_count >= 16, "covering_check: need at least 16 samples");
  require(ray0.speed() < sigma && ray1.speed() < sigma,
          "covering_check: rays must lie inside the cone");
  std::size_t n = std::max(ray0.velocity.size(), ray1.velocity.size());
  if (n == 0) n = 1;

  const ExteriorTest d0{sigma, t_star, ray0.position(t_star, n)};
  const ExteriorTest d1{sigma, t_star, ray1.position(t_star, n)};
  Rng rng(seed);
  CoveringReport report;
  report.min_weight = std::numeric_limits<double>::infinity();

  const SlabSpec slab(sigma, gamma, t_star);
  auto test_sample = [&](double t, const std::vector<double>& x) {
    if (!in_slab(slab, t, norm(x))) return;
    ++report.samples;
    const double fbar = std::max(d0.weight(t, x), d1.weight(t, x));
    report.min_weight = std::min(report.min_weight, fbar / (t_star * t_star));
    if (report.covered && !d0.contains(t, x) && !d1.contains(t, x)) {
      report.covered = false;
      report.witness = MinkowskiPoint(t, x);
    }
  };

  const auto dirs = lattice_directions(n, 2 * n, rng);
  const std::size_t lattice_budget = sample_count / 2;
  const std::size_t per_time = 4 + dirs.size();
  const auto time_count = std::max<std::size_t>(
      4, static_cast<std::size_t>(std::sqrt(static_cast<double>(lattice_budget) / per_time) * 2));
  const auto radius_count = std::max<std::size_t>(
      2, lattice_budget / (time_count * std::max<std::size_t>(1, dirs.size())));
  const double t_lo = slab.t_lower();
  const double t_hi = slab.t_upper();
  for (std::size_t i = 0; i < time_count; ++i) {
    const double t = t_lo + (t_hi - t_lo) * (i + 0.5) / time_count;
    for (const RaySpec* ray : {&ray0, &ray1}) {
      auto x = ray->position(t, n);
      test_sample(t, x);
      x[0] += 1e-6 * sigma * t;
      test_sample(t, x);
    }
    for (const auto& d : dirs) {
      for (std::size_t j = 0; j < radius_count; ++j) {
        const double rho = sigma * t * (j + 0.5) / radius_count;
        std::vector<double> x(n);
        for (std::size_t k = 0; k < n; ++k) x[k] = rho * d[k];
        test_sample(t, x);
      }
    }
  }
  while (report.samples < sample_count) {
    const double t = rng.uniform(t_lo, t_hi);
    std::vector<double> x(n);
    for (auto& c : x) c = rng.normal();
    const double len = norm(x);
    const double rho = sigma * t * std::pow(rng.uniform(), 1.0 / n);
    for (auto& c : x) c *= rho / len;
    test_sample(t, x);
  }
  if (report.samples == 0) report.min_weight = 0.0;

  if (eta) {
    require(*eta > 1.0, "covering_check: eta must exceed 1");
    const LateralSlabSpec lateral(sigma, *eta, t_star);
    const double vmax = std::max(ray0.speed(), ray1.speed());
    const double scan_lo = 0.5 * t_star * (1.0 - vmax) / (1.0 + sigma);
    const double scan_hi = 2.0 * t_star * (1.0 + vmax) / (1.0 - sigma);
    const std::size_t scan_count = std::max<std::size_t>(64, sample_count / dirs.size());
    for (const ExteriorTest* d : {&d0, &d1}) {
      for (std::size_t i = 0; i <= scan_count && report.boundary_contained; ++i) {
        const double t = scan_lo + (scan_hi - scan_lo) * i / scan_count;
        for (const auto& dir : dirs) {
          std::vector<double> x(n);
          for (std::size_t k = 0; k < n; ++k) x[k] = sigma * t * dir[k];
          if (!d->on_lateral_piece(t, x)) continue;
          if (!(lateral.t_lower() < t && t < lateral.t_upper())) {
            report.boundary_contained = false;
            report.boundary_witness = MinkowskiPoint(t, x);
            break;
          }
        }
      }
    }
  }
  return report;
}

}  // namespace conewave
