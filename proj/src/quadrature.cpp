#include "conewave/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "conewave/error.hpp"

namespace conewave {

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

void QuadratureSpec::validate() const {
  if (base_order != 2 && base_order != 4 && base_order != 6)
    throw InvalidArgument("QuadratureSpec: base_order must be 2, 4 or 6");
  if (cells_t < 4 || cells_r < 4) throw InvalidArgument("QuadratureSpec: need at least 4 cells");
  if (!(grading_exponent >= 1.0)) throw InvalidArgument("QuadratureSpec: grading_exponent >= 1");
  if (refinement_levels < 1) throw InvalidArgument("QuadratureSpec: refinement_levels >= 1");
}

namespace {

struct GaussRule {
  std::array<double, 3> x{};
  std::array<double, 3> w{};
  int size = 0;
};

// Nodes on [0, 1].
GaussRule gauss_rule(int order) {
  switch (order) {
    case 2: return {{0.5, 0, 0}, {1.0, 0, 0}, 1};
    case 4: {
      const double d = 0.5 / std::sqrt(3.0);
      return {{0.5 - d, 0.5 + d, 0}, {0.5, 0.5, 0}, 2};
    }
    case 6: {
      const double d = 0.5 * std::sqrt(0.6);
      return {{0.5 - d, 0.5, 0.5 + d}, {5.0 / 18, 8.0 / 18, 5.0 / 18}, 3};
    }
    default: throw InvalidArgument("quadrature: base_order must be 2, 4 or 6");
  }
}

double effective_grading(const EdgeFlag& edge, double grading_exponent) {
  if (!edge.singular) return 1.0;
  if (!std::isfinite(edge.exponent)) return grading_exponent;
  const double lift = 1.0 + edge.exponent;
  if (lift <= 0.0) throw InvalidArgument("quadrature: edge singularity is not integrable");
  const double k = std::max(1.0, std::ceil(grading_exponent * lift - 1e-9));
  return k / lift;
}

// Graded map of [0, 1] onto itself, split at 1/2 so each half carries the
// grading of its own end.
struct GradedMap {
  double q_lo;
  double q_hi;

  double value(double xi) const {
    if (xi < 0.5) return 0.5 * std::pow(2.0 * xi, q_lo);
    return 1.0 - 0.5 * std::pow(2.0 * (1.0 - xi), q_hi);
  }
  /// 1 - value(xi) without cancellation.
  double complement(double xi) const {
    if (xi < 0.5) return 1.0 - 0.5 * std::pow(2.0 * xi, q_lo);
    return 0.5 * std::pow(2.0 * (1.0 - xi), q_hi);
  }
  double derivative(double xi) const {
    if (xi < 0.5) return q_lo * std::pow(2.0 * xi, q_lo - 1.0);
    return q_hi * std::pow(2.0 * (1.0 - xi), q_hi - 1.0);
  }
};

// Appends the rule for [lo, hi]; before and after are the distances from lo
// back to the global start and from hi on to the global end.
void append_rule(std::vector<QuadratureNode>& nodes, double lo, double hi, double before,
                 double after, int cells, const GaussRule& rule, const GradedMap& map) {
  cells += cells % 2;
  const double len = hi - lo;
  const double h = 1.0 / cells;
  for (int c = 0; c < cells; ++c) {
    const double xi0 = static_cast<double>(c) / cells;
    for (int k = 0; k < rule.size; ++k) {
      const double xi = xi0 + h * rule.x[k];
      const double d_lo = len * map.value(xi);
      const double d_hi = len * map.complement(xi);
      const double x = xi < 0.5 ? lo + d_lo : hi - d_hi;
      nodes.push_back({x, len * map.derivative(xi) * h * rule.w[k], before + d_lo, d_hi + after});
    }
  }
}

}  // namespace

std::vector<QuadratureNode> composite_rule(double a, double b, int cells, int order,
                                           double grading_exponent, EdgeGrading grading,
                                           std::span<const double> breaks) {
  const GaussRule rule = gauss_rule(order);
  std::vector<QuadratureNode> nodes;
  if (!(b > a)) return nodes;
  std::vector<double> edges{a};
  for (double br : breaks)
    if (br > a && br < b) edges.push_back(br);
  std::sort(edges.begin() + 1, edges.end());
  edges.push_back(b);
  const double total = b - a;
  const double q_lo = effective_grading(grading.lower, grading_exponent);
  const double q_hi = effective_grading(grading.upper, grading_exponent);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double lo = edges[i];
    const double hi = edges[i + 1];
    const int sub_cells =
        std::max(4, static_cast<int>(std::lround(cells * (hi - lo) / total)));
    const GradedMap map{i == 0 ? q_lo : 1.0, i + 2 == edges.size() ? q_hi : 1.0};
    append_rule(nodes, lo, hi, lo - a, b - hi, sub_cells, rule, map);
  }
  return nodes;
}

namespace {

double checked(double value, double t, double r) {
  if (!std::isfinite(value))
    throw QuadratureError("quadrature: non-finite integrand at t=" + std::to_string(t) +
                              ", r=" + std::to_string(r),
                          t, r);
  return value;
}

template <class LevelFn>
QuadratureResult refine(const QuadratureSpec& q, LevelFn&& level_value) {
  q.validate();
  QuadratureResult result;
  double previous = 0.0;
  for (int level = 0; level <= q.refinement_levels; ++level) {
    std::size_t nodes = 0;
    const double value = level_value(1 << level, nodes);
    result.nodes_used += nodes;
    if (level == q.refinement_levels) {
      result.value = value;
      result.error_estimate = std::abs(value - previous);
    }
    previous = value;
  }
  return result;
}

}  // namespace

QuadratureResult integrate_interval(double a, double b, const Integrand1& g,
                                    const QuadratureSpec& q, EdgeGrading grading,
                                    std::span<const double> breaks) {
  const int cells = std::max(q.cells_t, q.cells_r);
  return refine(q, [&](int factor, std::size_t& count) {
    const auto nodes =
        composite_rule(a, b, cells * factor, q.base_order, q.grading_exponent, grading, breaks);
    CompensatedSum sum;
    for (const auto& node : nodes) sum.add(node.w * checked(g(node.x), node.x, 0.0));
    count = nodes.size();
    return sum.value();
  });
}

QuadratureResult integrate_interval_offsets(double a, double b, const OffsetIntegrand1& g,
                                            const QuadratureSpec& q, EdgeGrading grading,
                                            std::span<const double> breaks) {
  const int cells = std::max(q.cells_t, q.cells_r);
  return refine(q, [&](int factor, std::size_t& count) {
    const auto nodes =
        composite_rule(a, b, cells * factor, q.base_order, q.grading_exponent, grading, breaks);
    CompensatedSum sum;
    for (const auto& node : nodes)
      sum.add(node.w * checked(g(node.x, node.from_lo, node.from_hi), node.x, 0.0));
    count = nodes.size();
    return sum.value();
  });
}

QuadratureResult integrate_bulk(const RadialDomain& domain, const Integrand2& integrand,
                                const QuadratureSpec& q) {
  if (domain.dimension < 1) throw InvalidArgument("integrate_bulk: dimension must be >= 1");
  const double area = unit_sphere_area(domain.dimension);
  const int power = domain.dimension - 1;
  return refine(q, [&](int factor, std::size_t& count) {
    const auto t_nodes = composite_rule(domain.t_lo, domain.t_hi, q.cells_t * factor,
                                        q.base_order, q.grading_exponent, domain.t_grading,
                                        domain.t_breaks);
    const auto s_nodes = composite_rule(0.0, 1.0, q.cells_r * factor, q.base_order,
                                        q.grading_exponent, domain.r_grading);
    CompensatedSum sum;
    count = 0;
    for (const auto& tn : t_nodes) {
      const double r_lo = domain.r_lower(tn.x);
      const double width = domain.r_upper(tn.x) - r_lo;
      if (!(width > 0.0)) continue;
      CompensatedSum inner;
      for (const auto& sn : s_nodes) {
        const double r = r_lo + sn.x * width;
        const double v = checked(integrand(tn.x, r), tn.x, r);
        inner.add(sn.w * v * std::pow(r, power));
      }
      count += s_nodes.size();
      sum.add(tn.w * width * inner.value());
    }
    return area * sum.value();
  });
}

QuadratureResult integrate_bulk(const AnnulusSpec& annulus, int n, const Integrand2& integrand,
                                const QuadratureSpec& q) {
  const double t = annulus.t;
  const double area = unit_sphere_area(n);
  return integrate_interval(
      annulus.inner_radius(), annulus.outer_radius(),
      [&](double r) { return checked(integrand(t, r), t, r) * area * std::pow(r, n - 1); }, q);
}

QuadratureResult integrate_ball(double t, double radius, int n, const Integrand2& integrand,
                                const QuadratureSpec& q) {
  if (!(radius >= 0.0)) throw InvalidArgument("integrate_ball: radius must be nonnegative");
  const double area = unit_sphere_area(n);
  return integrate_interval(
      0.0, radius,
      [&](double r) { return checked(integrand(t, r), t, r) * area * std::pow(r, n - 1); }, q);
}

RadialDomain slab_domain(const SlabSpec& slab, int n) {
  RadialDomain d;
  d.dimension = n;
  d.t_lo = slab.t_lower();
  d.t_hi = slab.t_upper();
  const double sigma = slab.sigma;
  d.r_lower = [](double) { return 0.0; };
  d.r_upper = [sigma](double t) { return sigma * std::abs(t); };
  return d;
}

RadialDomain cone_domain(double sigma, double t_lo, double t_hi, int n) {
  if (!(sigma > 0.0 && sigma < 1.0)) throw InvalidArgument("cone_domain: need 0 < sigma < 1");
  if (!(0.0 <= t_lo && t_lo <= t_hi)) throw InvalidArgument("cone_domain: need 0 <= t_lo <= t_hi");
  RadialDomain d;
  d.dimension = n;
  d.t_lo = t_lo;
  d.t_hi = t_hi;
  d.r_lower = [](double) { return 0.0; };
  d.r_upper = [sigma](double t) { return sigma * t; };
  return d;
}

RadialDomain exterior_domain(const ExteriorRegionSpec& exterior, int n, double eps) {
  if (!exterior.ray.is_axis()) throw InvalidArgument("exterior_domain: axis ray only");
  if (eps < 0.0) throw InvalidArgument("exterior_domain: eps must be nonnegative");
  const double sigma = exterior.sigma;
  const double ts = exterior.t_star;
  // Solve 4 eps + (t - t*)^2 = sigma^2 t^2 for the time range.
  const double a = 1.0 - sigma * sigma;
  const double disc = sigma * sigma * ts * ts - 4.0 * eps * a;
  if (disc <= 0.0) throw InvalidArgument("exterior_domain: {f > eps} misses the cone");
  RadialDomain d;
  d.dimension = n;
  d.t_lo = (ts - std::sqrt(disc)) / a;
  d.t_hi = (ts + std::sqrt(disc)) / a;
  if (d.t_lo < ts && ts < d.t_hi) d.t_breaks = {ts};
  d.r_lower = [eps, ts](double t) { return std::sqrt(4.0 * eps + (t - ts) * (t - ts)); };
  d.r_upper = [sigma](double t) { return sigma * t; };
  return d;
}

QuadratureResult integrate_bulk(const SlabSpec& slab, int n, const Integrand2& integrand,
                                const QuadratureSpec& q) {
  return integrate_bulk(slab_domain(slab, n), integrand, q);
}

QuadratureResult integrate_bulk(const ExteriorRegionSpec& exterior, int n, double eps,
                                const Integrand2& integrand, const QuadratureSpec& q,
                                double null_edge_exponent) {
  RadialDomain d = exterior_domain(exterior, n, eps);
  if (eps == 0.0) d.r_grading = EdgeGrading::lower_edge(null_edge_exponent);
  return integrate_bulk(d, integrand, q);
}

QuadratureResult integrate_surface(const BoundaryPiece& piece, int n, const Integrand2& integrand,
                                   const QuadratureSpec& q, EdgeGrading grading) {
  if (piece.causal_character() == CausalCharacter::null)
    throw InvalidArgument("integrate_surface: null pieces are not integrated");
  return integrate_interval(
      piece.lo, piece.hi,
      [&](double s) {
        const RadialPoint p = piece.point(s);
        return checked(integrand(p.t, p.r), p.t, p.r) * measure_density(piece, n, p);
      },
      q, grading);
}

QuadratureResult integrate_surface_offsets(const BoundaryPiece& piece, int n,
                                           const OffsetIntegrand2& integrand,
                                           const QuadratureSpec& q, EdgeGrading grading) {
  if (piece.causal_character() == CausalCharacter::null)
    throw InvalidArgument("integrate_surface: null pieces are not integrated");
  return integrate_interval_offsets(
      piece.lo, piece.hi,
      [&](double s, double d_lo, double d_hi) {
        const RadialPoint p = piece.point(s);
        return checked(integrand(p.t, p.r, d_lo, d_hi), p.t, p.r) * measure_density(piece, n, p);
      },
      q, grading);
}

QuadratureResult integrate_surface(const LateralSlabSpec& lateral, int n,
                                   const Integrand2& integrand, const QuadratureSpec& q) {
  return integrate_surface(
      BoundaryPiece::cone(lateral.sigma, RegionSide::inside, lateral.t_lower(), lateral.t_upper()),
      n, integrand, q);
}

}  // namespace conewave
