#include "conewave/carleman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "conewave/format.hpp"
#include "conewave/parallel.hpp"
#include "conewave/random.hpp"

namespace conewave {

namespace {

// (r - |s|)(r + |s|) / 4 with s = t - t*; exact zero on the null cone and
// never negative through cancellation when r >= |s|.
double weight_at(double t_star, RadialPoint p) {
  const double s = std::abs(p.t - t_star);
  return 0.25 * (p.r - s) * (p.r + s);
}

double conformal_gap(const CarlemanParams& c) { return c.n - 1 + 4 * c.a; }

}  // namespace

void CarlemanParams::validate() const {
  if (n < 1) throw InvalidArgument("carleman: dimension must be >= 1");
  if (!(a > 0.0) || !std::isfinite(a)) throw InvalidArgument("carleman: need a > 0");
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidArgument("carleman: need p >= 1");
  if (!shift.is_radial()) throw InvalidArgument("carleman: only the axis shift is supported");
}

void CarlemanParams::validate_subconformal() const {
  validate();
  if (!(p - 1.0 < 4.0 / conformal_gap(*this)))
    throw InvalidArgument("carleman: need p - 1 < 4 / (n - 1 + 4a), got p = " + format_real(p) +
                          ", a = " + format_real(a));
}

double bulk_gamma(const CarlemanParams& params, RadialPoint p) {
  const double v = params.V.value(p.t, p.r);
  if (!(v > 0.0)) throw DomainError("bulk_gamma: potential must be positive");
  const RadialVector grad_f = eval_weight_gradient(params.shift, p);
  const RadialVector dv = params.V.gradient(p.t, p.r);
  const double m = conformal_gap(params);
  return (grad_f.t * dv.t + grad_f.r * dv.r) / v - m / 4.0 * (params.p - 1.0 - 4.0 / m);
}

RadialVector flux_vector(const CarlemanParams& params, const FieldSample& phi, RadialPoint p) {
  const double f = weight_at(params.shift.t_star, p);
  if (!(f > 0.0)) throw DomainError("flux_vector: weight must be positive");
  const double s = p.t - params.shift.t_star;
  // grad f has contravariant components (s/2, r/2) and covariant (-s/2, r/2).
  const double df_t = -0.5 * s;
  const double df_r = 0.5 * p.r;
  const double x_phi = 0.5 * s * phi.phi_t + 0.5 * p.r * phi.phi_r;
  const double grad_sq = -phi.phi_t * phi.phi_t + phi.phi_r * phi.phi_r;
  const double w = std::pow(f, 2 * params.a);
  const double c = (params.n - 1) / 4.0 + params.a;
  const double potential =
      params.V.value(p.t, p.r) * std::pow(std::abs(phi.phi), params.p + 1) / (params.p + 1);
  const double zeroth = potential + params.a * c * phi.phi * phi.phi / f;
  return {w * (x_phi * phi.phi_t - 0.5 * df_t * grad_sq + df_t * zeroth + c * phi.phi * phi.phi_t),
          w * (x_phi * phi.phi_r - 0.5 * df_r * grad_sq + df_r * zeroth + c * phi.phi * phi.phi_r)};
}

RadialVector flux_vector(const CarlemanParams& params, const Field& field, RadialPoint p) {
  return flux_vector(params, field.sample(p.t, p.r), p);
}

BulkDensities bulk_densities(const CarlemanParams& params, const FieldJet& jet, RadialPoint p) {
  const double f = std::max(0.0, weight_at(params.shift.t_star, p));
  const double v = params.V.value(p.t, p.r);
  const double w = std::pow(f, 2 * params.a);
  const double lhs =
      w * v * bulk_gamma(params, p) * std::pow(std::abs(jet.phi), params.p + 1) / (params.p + 1);
  const double laplace = p.r > 0.0 ? jet.phi_rr + (params.n - 1) * jet.phi_r / p.r
                                   : params.n * jet.phi_rr;
  const double box_v = -jet.phi_tt + laplace + v * signed_pow(jet.phi, params.p);
  return {lhs, w * f * box_v * box_v / (8 * params.a)};
}

// ---------------------------------------------------------------------------
// Regions

namespace {

// Times where {4 eps + (t - t*)^2 = sigma^2 t^2}; nullopt when the level set
// misses the cone.
std::optional<std::pair<double, double>> level_cone_times(double sigma, double t_star,
                                                          double eps) {
  const double a = 1.0 - sigma * sigma;
  const double disc = sigma * sigma * t_star * t_star - 4.0 * eps * a;
  if (!(disc > 0.0)) return std::nullopt;
  const double root = std::sqrt(disc);
  return std::pair{(t_star - root) / a, (t_star + root) / a};
}

void require_shape(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(std::string("AdmissibleRegion: ") + what);
}

// Level-set pieces between t_lo and t_hi, split where the hyperbola turns.
void append_level_set(std::vector<BoundaryPiece>& out, double t_star, double eps, double t_lo,
                      double t_hi) {
  const ShiftedWeight w = ShiftedWeight::axis(t_star);
  if (t_lo < t_star && t_star < t_hi) {
    out.push_back(BoundaryPiece::level_set(w, eps, RegionSide::outside, t_lo, t_star));
    out.push_back(BoundaryPiece::level_set(w, eps, RegionSide::outside, t_star, t_hi));
  } else {
    out.push_back(BoundaryPiece::level_set(w, eps, RegionSide::outside, t_lo, t_hi));
  }
}

}  // namespace

AdmissibleRegion AdmissibleRegion::box(double t_lo, double t_hi, double r_lo, double r_hi,
                                       double t_star) {
  require_shape(t_lo < t_hi, "box needs t_lo < t_hi");
  require_shape(0.0 < r_lo && r_lo < r_hi, "box needs 0 < r_lo < r_hi");
  require_shape(std::isfinite(t_star) && std::isfinite(r_hi) && std::isfinite(t_lo) &&
                    std::isfinite(t_hi),
                "box parameters must be finite");
  AdmissibleRegion g;
  g.kind_ = Kind::box;
  g.t_lo_ = t_lo;
  g.t_hi_ = t_hi;
  g.r_lo_ = r_lo;
  g.r_hi_ = r_hi;
  g.t_star_ = t_star;
  return g;
}

AdmissibleRegion AdmissibleRegion::frustum(double sigma, double t_lo, double t_hi, double r_lo,
                                           double t_star) {
  require_shape(0.0 < sigma && sigma < 1.0, "frustum needs 0 < sigma < 1");
  require_shape(0.0 <= t_lo && t_lo < t_hi && std::isfinite(t_hi), "frustum needs 0 <= t_lo < t_hi");
  require_shape(r_lo > 0.0 && std::isfinite(t_star), "frustum needs r_lo > 0");
  AdmissibleRegion g;
  g.kind_ = Kind::frustum;
  g.sigma_ = sigma;
  g.t_lo_ = t_lo;
  g.t_hi_ = t_hi;
  g.r_lo_ = r_lo;
  g.t_star_ = t_star;
  return g;
}

AdmissibleRegion AdmissibleRegion::exterior(double sigma, double t_star, double eps) {
  require_shape(0.0 < sigma && sigma < 1.0, "exterior needs 0 < sigma < 1");
  require_shape(t_star > 0.0 && std::isfinite(t_star), "exterior needs t* > 0");
  require_shape(eps >= 0.0 && std::isfinite(eps), "exterior needs eps >= 0");
  AdmissibleRegion g;
  g.kind_ = Kind::exterior;
  g.sigma_ = sigma;
  g.t_star_ = t_star;
  g.eps_ = eps;
  if (const auto times = level_cone_times(sigma, t_star, eps)) {
    g.t_lo_ = times->first;
    g.t_hi_ = times->second;
  }
  return g;
}

AdmissibleRegion AdmissibleRegion::clipped_exterior(double sigma, double t_star, double eps,
                                                    double t_lo, double t_hi) {
  AdmissibleRegion g = exterior(sigma, t_star, eps);
  require_shape(t_lo < t_hi, "clipped exterior needs t_lo < t_hi");
  g.kind_ = Kind::clipped_exterior;
  g.t_lo_ = t_lo;
  g.t_hi_ = t_hi;
  return g;
}

std::optional<AdmissibilityWitness> AdmissibleRegion::witness() const {
  auto inside_weight = [&](double t, double r) -> std::optional<AdmissibilityWitness> {
    if (!(r > std::abs(t - t_star_)))
      return AdmissibilityWitness{"closure meets the null cone of the weight", {t, r}};
    return std::nullopt;
  };
  switch (kind_) {
    case Kind::box:
      if (auto w = inside_weight(t_lo_, r_lo_)) return w;
      return inside_weight(t_hi_, r_lo_);
    case Kind::frustum:
      if (!(r_lo_ < sigma_ * t_lo_))
        return AdmissibilityWitness{"inner cylinder is not inside the time cone", {t_lo_, r_lo_}};
      if (auto w = inside_weight(t_lo_, r_lo_)) return w;
      return inside_weight(t_hi_, r_lo_);
    case Kind::exterior:
    case Kind::clipped_exterior: {
      if (eps_ == 0.0)
        return AdmissibilityWitness{"level set f = 0 is a null hypersurface", {t_star_, 0.0}};
      const auto times = level_cone_times(sigma_, t_star_, eps_);
      if (!times)
        return AdmissibilityWitness{"{f > eps} misses the time cone", {t_star_, sigma_ * t_star_}};
      if (kind_ == Kind::clipped_exterior && !(times->first < t_lo_ && t_hi_ < times->second))
        return AdmissibilityWitness{"clipping planes must cut the exterior region",
                                    {t_lo_, sigma_ * std::max(t_lo_, 0.0)}};
      return std::nullopt;
    }
  }
  return std::nullopt;
}

double AdmissibleRegion::lower_radius(double t) const {
  if (kind_ == Kind::box || kind_ == Kind::frustum) return r_lo_;
  const double s = t - t_star_;
  return std::sqrt(4.0 * eps_ + s * s);
}

double AdmissibleRegion::upper_radius(double t) const {
  return kind_ == Kind::box ? r_hi_ : sigma_ * t;
}

std::vector<BoundaryPiece> AdmissibleRegion::pieces() const {
  if (auto w = witness()) throw InadmissibleRegion(*w);
  std::vector<BoundaryPiece> out;
  switch (kind_) {
    case Kind::box:
    case Kind::frustum:
      out.push_back(BoundaryPiece::plane(t_lo_, RegionSide::above, r_lo_, upper_radius(t_lo_)));
      out.push_back(BoundaryPiece::plane(t_hi_, RegionSide::below, r_lo_, upper_radius(t_hi_)));
      out.push_back(BoundaryPiece::cylinder(r_lo_, RegionSide::outside, t_lo_, t_hi_));
      if (kind_ == Kind::box)
        out.push_back(BoundaryPiece::cylinder(r_hi_, RegionSide::inside, t_lo_, t_hi_));
      else
        out.push_back(BoundaryPiece::cone(sigma_, RegionSide::inside, t_lo_, t_hi_));
      break;
    case Kind::exterior:
      append_level_set(out, t_star_, eps_, t_lo_, t_hi_);
      out.push_back(BoundaryPiece::cone(sigma_, RegionSide::inside, t_lo_, t_hi_));
      break;
    case Kind::clipped_exterior:
      out.push_back(
          BoundaryPiece::plane(t_lo_, RegionSide::above, lower_radius(t_lo_), upper_radius(t_lo_)));
      out.push_back(
          BoundaryPiece::plane(t_hi_, RegionSide::below, lower_radius(t_hi_), upper_radius(t_hi_)));
      append_level_set(out, t_star_, eps_, t_lo_, t_hi_);
      out.push_back(BoundaryPiece::cone(sigma_, RegionSide::inside, t_lo_, t_hi_));
      break;
  }
  return out;
}

RadialDomain AdmissibleRegion::domain(int n) const {
  if (auto w = witness()) throw InadmissibleRegion(*w);
  RadialDomain d;
  d.dimension = n;
  d.t_lo = t_lo_;
  d.t_hi = t_hi_;
  const AdmissibleRegion self = *this;
  d.r_lower = [self](double t) { return self.lower_radius(t); };
  d.r_upper = [self](double t) { return self.upper_radius(t); };
  if ((kind_ == Kind::exterior || kind_ == Kind::clipped_exterior) && t_lo_ < t_star_ &&
      t_star_ < t_hi_)
    d.t_breaks = {t_star_};
  return d;
}

bool AdmissibleRegion::contains(RadialPoint p) const {
  if (!(t_lo_ < p.t && p.t < t_hi_)) return false;
  if (kind_ == Kind::exterior || kind_ == Kind::clipped_exterior) {
    if (!(weight_at(t_star_, p) > eps_)) return false;
    return p.r < upper_radius(p.t);
  }
  return lower_radius(p.t) < p.r && p.r < upper_radius(p.t);
}

std::string AdmissibleRegion::describe() const {
  std::ostringstream out;
  switch (kind_) {
    case Kind::box:
      out << "box t=[" << format_real(t_lo_) << ", " << format_real(t_hi_) << "] r=["
          << format_real(r_lo_) << ", " << format_real(r_hi_) << "]";
      break;
    case Kind::frustum:
      out << "frustum sigma=" << format_real(sigma_) << " t=[" << format_real(t_lo_) << ", "
          << format_real(t_hi_) << "] r_lo=" << format_real(r_lo_);
      break;
    case Kind::exterior:
      out << "exterior sigma=" << format_real(sigma_) << " eps=" << format_real(eps_);
      break;
    case Kind::clipped_exterior:
      out << "clipped exterior sigma=" << format_real(sigma_) << " eps=" << format_real(eps_)
          << " t=[" << format_real(t_lo_) << ", " << format_real(t_hi_) << "]";
      break;
  }
  out << " t*=" << format_real(t_star_);
  return out.str();
}

AdmissibleRegion AdmissibleRegion::transformed(double lambda, double shift) const {
  if (!(lambda > 0.0)) throw InvalidArgument("AdmissibleRegion::transformed: need lambda > 0");
  if (kind_ != Kind::box && shift != 0.0)
    throw InvalidArgument("AdmissibleRegion::transformed: the time cone is not translation invariant");
  switch (kind_) {
    case Kind::box:
      return box(lambda * t_lo_ + shift, lambda * t_hi_ + shift, lambda * r_lo_, lambda * r_hi_,
                 lambda * t_star_ + shift);
    case Kind::frustum:
      return frustum(sigma_, lambda * t_lo_, lambda * t_hi_, lambda * r_lo_, lambda * t_star_);
    case Kind::exterior: return exterior(sigma_, lambda * t_star_, lambda * lambda * eps_);
    case Kind::clipped_exterior:
      return clipped_exterior(sigma_, lambda * t_star_, lambda * lambda * eps_, lambda * t_lo_,
                              lambda * t_hi_);
  }
  return *this;
}

// ---------------------------------------------------------------------------
// Verification

namespace {

double normal_flux(const CarlemanParams& params, const Field& field, const BoundaryPiece& piece,
                   RadialPoint p) {
  const RadialVector cov = flux_vector(params, field, p);
  const RadialVector normal = oriented_normal(piece, p);
  return cov.t * normal.t + cov.r * normal.r;
}

}  // namespace

CarlemanReport verify_global(const CarlemanParams& params, const ManufacturedField& field,
                             const AdmissibleRegion& region, const QuadratureSpec& q) {
  params.validate();
  q.validate();
  if (region.t_star() != params.shift.t_star)
    throw InvalidArgument("verify_global: region weight " + format_real(region.t_star()) +
                          " differs from the parameter shift " + format_real(params.shift.t_star));
  if (auto w = region.witness()) throw InadmissibleRegion(*w);

  CarlemanReport rep;
  const RadialDomain dom = region.domain(params.n);
  const auto lhs = integrate_bulk(
      dom, [&](double t, double r) { return bulk_densities(params, field.jet(t, r), {t, r}).lhs; },
      q);
  const auto rhs = integrate_bulk(
      dom, [&](double t, double r) { return bulk_densities(params, field.jet(t, r), {t, r}).rhs; },
      q);
  rep.lhs_bulk = lhs.value;
  rep.lhs_error = lhs.error_estimate;
  rep.rhs_bulk = rhs.value;
  rep.rhs_bulk_error = rhs.error_estimate;

  CompensatedSum boundary;
  for (const auto& piece : region.pieces()) {
    const auto flux = integrate_surface(
        piece, params.n,
        [&](double t, double r) { return normal_flux(params, field, piece, {t, r}); }, q);
    boundary.add(flux.value);
    rep.boundary_error += flux.error_estimate;
    rep.boundary.push_back({piece, flux});
  }
  rep.rhs_boundary = boundary.value();
  rep.slack = rep.rhs_bulk + rep.rhs_boundary - rep.lhs_bulk;
  rep.error_estimate = rep.lhs_error + rep.rhs_bulk_error + rep.boundary_error;
  rep.tolerance =
      1e-6 * (std::abs(rep.lhs_bulk) + std::abs(rep.rhs_bulk + rep.rhs_boundary)) +
      rep.error_estimate;
  rep.pass = rep.slack >= -rep.tolerance;
  return rep;
}

std::vector<double> flux_probe_levels(const ExteriorRegionSpec& exterior, double eps_floor) {
  if (!(eps_floor > 0.0)) throw InvalidArgument("flux_probe_levels: eps_floor must be positive");
  // Below sigma^2 t*^2 / 4 the level set still crosses the axis time t*.
  const double st = exterior.sigma * exterior.t_star;
  std::vector<double> levels;
  for (double eps = std::min(1e-2, st * st / 8); eps >= eps_floor * (1 - 1e-9); eps /= 10)
    levels.push_back(eps);
  return levels;
}

std::vector<FluxProbePoint> vanishing_flux_probe(const CarlemanParams& params, const Field& field,
                                                 const ExteriorRegionSpec& exterior,
                                                 const std::vector<double>& eps_values,
                                                 const QuadratureSpec& q) {
  params.validate();
  if (!exterior.ray.is_axis()) throw InvalidArgument("vanishing_flux_probe: axis ray only");
  if (params.shift.t_star != exterior.t_star)
    throw InvalidArgument("vanishing_flux_probe: shift differs from the exterior region");
  std::vector<FluxProbePoint> out;
  for (double eps : eps_values) {
    const auto region = AdmissibleRegion::exterior(exterior.sigma, exterior.t_star, eps);
    if (auto w = region.witness()) throw InadmissibleRegion(*w);
    FluxProbePoint pt{eps, 0.0, 0.0};
    for (const auto& piece : region.pieces()) {
      if (piece.kind != PieceKind::level_set) continue;
      // Grade towards t*, where the level set turns on the scale sqrt(eps).
      const EdgeGrading grading = piece.hi == exterior.t_star ? EdgeGrading::upper_edge()
                                  : piece.lo == exterior.t_star ? EdgeGrading::lower_edge()
                                                                : EdgeGrading::none();
      const auto res = integrate_surface(
          piece, params.n,
          [&](double t, double r) { return normal_flux(params, field, piece, {t, r}); }, q,
          grading);
      pt.flux += res.value;
      pt.error_estimate += res.error_estimate;
    }
    out.push_back(pt);
  }
  return out;
}

ShiftedReport verify_shifted(const CarlemanParams& params, const ManufacturedField& field,
                             const ExteriorRegionSpec& exterior, const QuadratureSpec& q,
                             double eps_floor) {
  params.validate_subconformal();
  q.validate();
  if (!exterior.ray.is_axis()) throw InvalidArgument("verify_shifted: axis ray only");
  if (!(exterior.t_star > 0.0)) throw InvalidArgument("verify_shifted: need t* > 0");
  if (params.shift.t_star != exterior.t_star)
    throw InvalidArgument("verify_shifted: shift differs from the exterior region");

  const double a = params.a;
  const double pw = params.p + 1;
  const double ts = exterior.t_star;
  ShiftedReport rep;

  RadialDomain dom = exterior_domain(exterior, params.n, 0.0);
  dom.r_grading = EdgeGrading::lower_edge(2 * a);
  dom.t_grading = EdgeGrading::both(1 + 2 * a);
  const auto lhs = integrate_bulk(
      dom,
      [&](double t, double r) {
        const double f = std::max(0.0, weight_at(ts, {t, r}));
        return std::pow(f, 2 * a) * std::pow(std::abs(field.sample(t, r).phi), pw);
      },
      q);
  rep.lhs = lhs.value;
  rep.lhs_error = lhs.error_estimate;

  const double sigma = exterior.sigma;
  const auto cone = BoundaryPiece::cone(sigma, RegionSide::inside, exterior.lateral_t_lower(),
                                        exterior.lateral_t_upper());
  const std::array<double, 4> weights{std::pow(ts, 1 + 4 * a), std::pow(ts, 1 + 4 * a),
                                      std::pow(ts, -1 + 4 * a), ts};
  std::array<QuadratureResult, 4> raw{};
  raw[0] = integrate_surface(cone, params.n, [&](double t, double r) {
    const auto s = field.sample(t, r);
    return s.phi_t * s.phi_t + s.phi_r * s.phi_r;
  }, q);
  raw[1] = integrate_surface(cone, params.n, [&](double t, double r) {
    return std::pow(std::abs(field.sample(t, r).phi), pw);
  }, q);
  raw[2] = integrate_surface(cone, params.n, [&](double t, double r) {
    const double v = field.sample(t, r).phi;
    return v * v;
  }, q);
  // On the cone f = (1 + sigma)(1 - sigma)(t - t_lo)(t_hi - t) / 4, which
  // vanishes at both ends of the piece.
  raw[3] = integrate_surface_offsets(
      cone, params.n,
      [&](double t, double r, double d_lo, double d_hi) {
        const double f = 0.25 * (1 + sigma) * (1 - sigma) * d_lo * d_hi;
        const double v = field.sample(t, r).phi;
        return std::pow(f, -1 + 2 * a) * v * v;
      },
      q, EdgeGrading::both(-1 + 2 * a));
  CompensatedSum rhs;
  for (std::size_t i = 0; i < 4; ++i) {
    rep.terms[i] = weights[i] * raw[i].value;
    rep.term_errors[i] = weights[i] * raw[i].error_estimate;
    rhs.add(rep.terms[i]);
  }
  rep.rhs = rhs.value();
  if (rep.lhs > 0.0)
    rep.ratio = rep.rhs / rep.lhs;
  else
    rep.ratio = rep.rhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;

  rep.flux_probe =
      vanishing_flux_probe(params, field, exterior, flux_probe_levels(exterior, eps_floor), q);
  rep.flux_vanishing = rep.flux_probe.size() >= 2;
  for (std::size_t i = 1; i < rep.flux_probe.size(); ++i)
    if (!(std::abs(rep.flux_probe[i].flux) < std::abs(rep.flux_probe[i - 1].flux)))
      rep.flux_vanishing = false;
  return rep;
}

// ---------------------------------------------------------------------------
// Randomized instances

namespace {

AdmissibleRegion random_region(Rng& rng, double& field_t, double& field_r) {
  const double pick = rng.uniform();
  if (pick < 0.4) {
    // Box, shifted half of the time.
    const double ts = rng.uniform() < 0.5 ? 0.0 : rng.uniform(-1.0, 1.0);
    const double s_lo = rng.uniform(-1.0, 0.8);
    const double s_hi = s_lo + rng.uniform(0.1, 1.0);
    const double r_lo = std::max(std::abs(s_lo), std::abs(s_hi)) + rng.uniform(0.05, 1.0);
    const double r_hi = r_lo + rng.uniform(0.2, 1.5);
    field_t = ts + 0.5 * (s_lo + s_hi);
    field_r = 0.5 * (r_lo + r_hi);
    return AdmissibleRegion::box(ts + s_lo, ts + s_hi, r_lo, r_hi, ts);
  }
  const double sigma = rng.uniform(0.4, 0.95);
  const double ts = rng.uniform(0.5, 2.0);
  if (pick < 0.6) {
    for (;;) {
      const double t_lo = ts * (1 - rng.uniform(0.02, 0.2));
      const double t_hi = ts * (1 + rng.uniform(0.02, 0.3));
      const double reach = std::max(ts - t_lo, t_hi - ts);
      const double r_lo = reach + rng.uniform(0.02, 0.5) * ts;
      if (r_lo < 0.95 * sigma * t_lo) {
        field_t = 0.5 * (t_lo + t_hi);
        field_r = 0.5 * (r_lo + sigma * field_t);
        return AdmissibleRegion::frustum(sigma, t_lo, t_hi, r_lo, ts);
      }
    }
  }
  const double s2 = sigma * sigma;
  const double eps_max = s2 * ts * ts / (4 * (1 - s2));
  const double eps = rng.uniform(0.05, 0.6) * std::min(eps_max, s2 * ts * ts / 4);
  auto region = AdmissibleRegion::exterior(sigma, ts, eps);
  field_t = ts;
  field_r = 0.5 * (2 * std::sqrt(eps) + sigma * ts);
  if (pick < 0.8) return region;
  const double span = region.t_upper() - region.t_lower();
  const double t_lo = region.t_lower() + rng.uniform(0.05, 0.4) * span;
  const double t_hi = region.t_upper() - rng.uniform(0.05, 0.4) * span;
  return AdmissibleRegion::clipped_exterior(sigma, ts, eps, t_lo, t_hi);
}

}  // namespace

std::vector<CarlemanCase> random_carleman_cases(std::size_t count, std::uint64_t seed,
                                                double a_lo, double a_hi) {
  if (!(0.0 < a_lo && a_lo <= a_hi)) throw InvalidArgument("random_carleman_cases: need 0 < a_lo <= a_hi");
  Rng rng(seed);
  std::vector<CarlemanCase> cases;
  cases.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    CarlemanCase c;
    c.id = i;
    c.params.n = rng.uniform_int(1, 3);
    c.params.a = rng.uniform(a_lo, a_hi);
    c.params.p = rng.uniform(1.0, 4.0);
    double ft = 0.0, fr = 0.0;
    c.region = random_region(rng, ft, fr);
    c.params.shift = c.region.weight();
    const double c0 = rng.uniform(0.5, 2.0);
    if (rng.uniform() < 0.5) {
      c.params.V = PotentialSpec::constant(c0);
    } else {
      // |eps b| <= c0 / 2 keeps V positive.
      const double width = rng.uniform(0.3, 1.5);
      const double eps = rng.uniform(-0.5, 0.5) * c0 / (width * std::sqrt(std::exp(1.0) / 2));
      c.params.V = PotentialSpec::perturbed(c0, eps, ft + rng.uniform(-0.5, 0.5), width);
    }
    const int bumps = rng.uniform_int(1, 3);
    std::vector<FieldPtr> terms;
    for (int b = 0; b < bumps; ++b) {
      const double tau = rng.uniform() < 0.3 ? std::numeric_limits<double>::infinity()
                                             : rng.uniform(0.3, 2.0);
      terms.push_back(gaussian_field(rng.uniform(-1.0, 1.0), ft + rng.uniform(-0.5, 0.5), tau,
                                     fr + rng.uniform(-0.5, 0.5), rng.uniform(0.3, 1.5)));
    }
    if (rng.uniform() < 0.3) terms.push_back(constant_field(rng.uniform(-0.5, 0.5)));
    c.field = sum_field(std::move(terms));
    cases.push_back(std::move(c));
  }
  return cases;
}

std::vector<FieldPtr> random_shifted_fields(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<FieldPtr> fields;
  fields.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int bumps = rng.uniform_int(1, 2);
    std::vector<FieldPtr> terms;
    for (int b = 0; b < bumps; ++b) {
      const double tc = rng.uniform(0.7, 1.5);
      const double tau = rng.uniform() < 0.3 ? std::numeric_limits<double>::infinity()
                                             : rng.uniform(0.4, 1.2);
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      terms.push_back(gaussian_field(sign * rng.uniform(0.3, 1.0), tc, tau,
                                     rng.uniform(0.0, 0.5 * tc), rng.uniform(0.2, 0.6)));
    }
    fields.push_back(sum_field(std::move(terms)));
  }
  return fields;
}

ShiftedScaling shifted_scaling_check(const CarlemanParams& params, const FieldPtr& field,
                                     double sigma, const std::vector<double>& t_stars,
                                     const QuadratureSpec& q, double eps_floor) {
  if (t_stars.empty()) throw InvalidArgument("shifted scaling: empty t* list");
  const double k = 2.0 / (params.p - 1.0);
  ShiftedScaling out;
  out.flux_vanishing = true;
  for (double ts : t_stars) {
    if (!(ts > 0.0)) throw InvalidArgument("shifted scaling: t* must be positive");
    CarlemanParams pr = params;
    pr.shift = ShiftedWeight::axis(ts);
    const auto rep = verify_shifted(pr, *rescaled_field(field, ts, k),
                                    ExteriorRegionSpec(sigma, ts), q, eps_floor);
    out.t_stars.push_back(ts);
    out.K.push_back(rep.rhs > 0.0 ? rep.lhs / rep.rhs : std::numeric_limits<double>::infinity());
    out.flux_vanishing = out.flux_vanishing && rep.flux_vanishing;
  }
  const auto [lo, hi] = std::minmax_element(out.K.begin(), out.K.end());
  out.spread = *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
  return out;
}

std::vector<CarlemanReport> verify_batch(const std::vector<CarlemanCase>& cases,
                                         const QuadratureSpec& q, unsigned threads) {
  std::vector<CarlemanReport> reports(cases.size());
  parallel_for(cases.size(), threads, [&](std::size_t i) {
    reports[i] = verify_global(cases[i].params, *cases[i].field, cases[i].region, q);
  });
  return reports;
}

void write_carleman_csv(std::ostream& out, const std::vector<CarlemanCase>& cases,
                        const std::vector<CarlemanReport>& reports) {
  if (cases.size() != reports.size())
    throw InvalidArgument("write_carleman_csv: one report per case required");
  out << "case_id,a,p,n,lhs,rhs_bulk,rhs_boundary,slack,err_est,pass\n";
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    const auto& r = reports[i];
    out << c.id << ',' << format_real(c.params.a) << ',' << format_real(c.params.p) << ','
        << c.params.n << ',' << format_real(r.lhs_bulk) << ',' << format_real(r.rhs_bulk) << ','
        << format_real(r.rhs_boundary) << ',' << format_real(r.slack) << ','
        << format_real(r.error_estimate) << ',' << (r.pass ? "true" : "false") << '\n';
  }
}

}  // namespace conewave
