#include "conewave/energetics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "conewave/error.hpp"
#include "conewave/format.hpp"
#include "conewave/geometry.hpp"

namespace conewave {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double ode_rate(double p) {
  if (!(p > 1.0)) throw InvalidArgument("energetics: need p > 1 for the rate k = 2/(p-1)");
  return 2.0 / (p - 1.0);
}

void require_dimension(int n) {
  if (n < 1) throw InvalidArgument("energetics: dimension n must be at least 1");
}

// A discrete history must cover [t_a, t_b].
void require_coverage(const Field& field, double t_a, double t_b, const char* what) {
  const auto* history = dynamic_cast<const DiscreteField*>(&field);
  if (!history) return;
  if (history->levels() == 0) throw DomainError(std::string(what) + ": history has no levels");
  const double lo = history->times().front();
  const double hi = history->times().back();
  const double tol = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
  if (t_a < lo - tol || t_b > hi + tol) {
    std::ostringstream os;
    os << what << ": needs t in [" << format_real(t_a) << ", " << format_real(t_b)
       << "] but the history covers [" << format_real(lo) << ", " << format_real(hi) << "]";
    throw DomainError(os.str());
  }
}

QuadratureResult scaled(QuadratureResult r, double factor) {
  r.value *= factor;
  r.error_estimate *= std::abs(factor);
  return r;
}

QuadratureResult add(QuadratureResult a, const QuadratureResult& b) {
  a.value += b.value;
  a.error_estimate += b.error_estimate;
  a.nodes_used += b.nodes_used;
  return a;
}

}  // namespace

QuadratureResult annulus_quantity(const Field& field, double sigma0, double sigma1, double t,
                                  double p, int n, const QuadratureSpec& q) {
  require_dimension(n);
  const double k = ode_rate(p);
  const AnnulusSpec annulus(sigma0, sigma1, t);
  require_coverage(field, t, t, "annulus_quantity");
  const double at = std::abs(t);
  const double inv2 = 1.0 / (at * at);
  const QuadratureResult raw = integrate_bulk(
      annulus, n,
      [&](double tt, double r) {
        const FieldSample s = field.sample(tt, r);
        return s.phi_t * s.phi_t + s.phi_r * s.phi_r + inv2 * s.phi * s.phi;
      },
      q);
  return scaled(raw, std::pow(at, 2.0 - n + 2.0 * k));
}

QuadratureResult inner_ball_quantity(const Field& field, double sigma0, double t, double p, int n,
                                     const QuadratureSpec& q) {
  require_dimension(n);
  const double k = ode_rate(p);
  if (!(sigma0 > 0.0 && sigma0 < 1.0)) throw InvalidArgument("inner_ball_quantity: need 0 < sigma0 < 1");
  if (t == 0.0) throw InvalidArgument("inner_ball_quantity: time level must be nonzero");
  require_coverage(field, t, t, "inner_ball_quantity");
  const double at = std::abs(t);
  const double inv2 = 1.0 / (at * at);
  const QuadratureResult raw = integrate_ball(
      t, sigma0 * at, n,
      [&](double tt, double r) {
        const FieldSample s = field.sample(tt, r);
        return s.phi_t * s.phi_t + s.phi_r * s.phi_r + inv2 * s.phi * s.phi;
      },
      q);
  return scaled(raw, std::pow(at, 2.0 - n + 2.0 * k));
}

QuadratureResult slab_quantity(const Field& field, double sigma, double gamma, double t_star,
                               double p, int n, const QuadratureSpec& q) {
  require_dimension(n);
  const double k = ode_rate(p);
  const SlabSpec slab(sigma, gamma, t_star);
  require_coverage(field, slab.t_lower(), slab.t_upper(), "slab_quantity");
  const double at = std::abs(t_star);
  const double inv2 = 1.0 / (at * at);
  const QuadratureResult raw = integrate_bulk(
      slab, n,
      [&](double t, double r) {
        const FieldSample s = field.sample(t, r);
        return s.phi_t * s.phi_t + s.phi_r * s.phi_r + inv2 * s.phi * s.phi;
      },
      q);
  return scaled(raw, std::pow(at, 1.0 - n + 2.0 * k));
}

QuadratureResult mz_ball_quantity(const Field& field, double t, double p, int n, double sigma,
                                  const QuadratureSpec& q) {
  require_dimension(n);
  const double k = ode_rate(p);
  if (!(t < 0.0)) throw DomainError("mz_ball_quantity: needs t < 0");
  if (!(sigma > 0.0 && sigma <= 1.0)) throw InvalidArgument("mz_ball_quantity: need 0 < sigma <= 1");
  require_coverage(field, t, t, "mz_ball_quantity");
  const double mt = -t;
  const double radius = sigma * mt;
  auto norm = [&](auto component) {
    const QuadratureResult sq = integrate_ball(
        t, radius, n,
        [&](double tt, double r) {
          const double v = component(field.sample(tt, r));
          return v * v;
        },
        q);
    QuadratureResult out;
    out.value = std::sqrt(std::max(sq.value, 0.0));
    // d sqrt(x) = dx / (2 sqrt x); bounded by sqrt(dx) when x is tiny.
    out.error_estimate = out.value > 0.0 ? std::min(sq.error_estimate / (2.0 * out.value),
                                                    std::sqrt(sq.error_estimate))
                                         : std::sqrt(sq.error_estimate);
    out.nodes_used = sq.nodes_used;
    return out;
  };
  const double base = std::pow(mt, k - 0.5 * n);
  QuadratureResult total = scaled(norm([](const FieldSample& s) { return s.phi; }), base);
  total = add(total, scaled(norm([](const FieldSample& s) { return s.phi_t; }), base * mt));
  total = add(total, scaled(norm([](const FieldSample& s) { return s.phi_r; }), base * mt));
  return total;
}

QuadratureResult lp_slab_quantity(const Field& field, double sigma, double gamma, double t_star,
                                  double p, int n, const QuadratureSpec& q) {
  require_dimension(n);
  const SlabSpec slab(sigma, gamma, t_star);
  require_coverage(field, slab.t_lower(), slab.t_upper(), "lp_slab_quantity");
  return integrate_bulk(
      slab, n,
      [&](double t, double r) { return std::pow(std::abs(field.sample(t, r).phi), p + 1.0); }, q);
}

QuadratureResult lateral_quantity(const Field& field, double sigma, double eta, double t_star,
                                  double p, int n, const QuadratureSpec& q) {
  require_dimension(n);
  const LateralSlabSpec lateral(sigma, eta, t_star);
  require_coverage(field, lateral.t_lower(), lateral.t_upper(), "lateral_quantity");
  const double inv2 = 1.0 / (t_star * t_star);
  return integrate_surface(
      lateral, n,
      [&](double t, double r) {
        const FieldSample s = field.sample(t, r);
        return s.phi_t * s.phi_t + s.phi_r * s.phi_r + std::pow(std::abs(s.phi), p + 1.0) +
               inv2 * s.phi * s.phi;
      },
      q);
}

double timecone_exponent_limit(int n) {
  require_dimension(n);
  if (n == 1) return kInf;
  if (n == 2) return 5.0;
  const double nn = n;
  return 1.0 + 4.0 * nn / (nn * nn + nn - 4.0);
}

void LocalizedSpec::validate() const {
  require_dimension(n);
  if (!(gamma > 1.0)) throw InvalidArgument("localized estimate: gamma must exceed 1");
  if (!(eta > gamma)) throw InvalidArgument("localized estimate: need 1 < gamma < eta");
  if (t_star == 0.0 || !std::isfinite(t_star))
    throw InvalidArgument("localized estimate: t_star must be finite and nonzero");
  if (!(p >= 1.0)) throw InvalidArgument("localized estimate: p must be >= 1");
  if (kind == Kind::timecone) {
    if (!(sigma > 0.0 && sigma < 1.0)) throw InvalidArgument("localized estimate: need 0 < sigma < 1");
    if (!(t_star > 0.0)) throw InvalidArgument("localized estimate: the cone-boundary form needs t_star > 0");
    if (!(p < timecone_exponent_limit(n))) {
      std::ostringstream os;
      os << "localized estimate: the cone-boundary form needs p < " << timecone_exponent_limit(n)
         << " in dimension " << n;
      throw InvalidArgument(os.str());
    }
  } else {
    if (!(sigma0 > 0.0 && sigma0 < sigma1 && sigma1 < 1.0))
      throw InvalidArgument("localized estimate: need 0 < sigma0 < sigma1 < 1");
    if (n > 1 && !(p < 1.0 + 4.0 / (n - 1)))
      throw InvalidArgument("localized estimate: the annulus form needs a subconformal p");
  }
}

LocalizedReport localized_estimate_check(const Field& field, const LocalizedSpec& spec,
                                         std::span<const double> sup_times,
                                         const QuadratureSpec& q) {
  spec.validate();
  const int n = spec.n;
  const double p = spec.p;
  const double ts = spec.t_star;
  LocalizedReport rep;

  const double aperture = spec.kind == LocalizedSpec::Kind::timecone ? spec.sigma : spec.sigma0;
  const QuadratureResult lhs = lp_slab_quantity(field, aperture, spec.gamma, ts, p, n, q);
  rep.lhs = lhs.value;
  rep.lhs_error = lhs.error_estimate;

  if (spec.kind == LocalizedSpec::Kind::timecone) {
    const QuadratureResult lat = lateral_quantity(field, spec.sigma, spec.eta, ts, p, n, q);
    rep.rhs = ts * lat.value;
    rep.rhs_error = ts * lat.error_estimate;
  } else {
    const double lo = std::abs(ts) / spec.eta;
    const double hi = std::abs(ts) * spec.eta;
    const double inv2 = 1.0 / (ts * ts);
    const double tol = 1e-12 * hi;
    bool any = false;
    for (double tau : sup_times) {
      if (tau == 0.0 || (tau > 0.0) != (ts > 0.0)) continue;
      const double at = std::abs(tau);
      if (at < lo - tol || at > hi + tol) continue;
      require_coverage(field, tau, tau, "localized_estimate_check");
      const QuadratureResult v = integrate_bulk(
          AnnulusSpec(spec.sigma0, spec.sigma1, tau), n,
          [&](double t, double r) {
            const FieldSample s = field.sample(t, r);
            return s.phi_t * s.phi_t + s.phi_r * s.phi_r + std::pow(std::abs(s.phi), p + 1.0) +
                   inv2 * s.phi * s.phi;
          },
          q);
      ++rep.tau_count;
      if (!any || v.value > rep.rhs) {
        rep.rhs = v.value;
        rep.rhs_error = v.error_estimate;
        rep.tau_max = tau;
        any = true;
      }
    }
    if (!any)
      throw InvalidArgument("localized_estimate_check: no snapshot time inside the sup window |tau| in [" +
                            format_real(lo) + ", " + format_real(hi) + "]");
    const double w = std::abs(ts);
    rep.rhs *= w;
    rep.rhs_error *= w;
  }

  if (rep.lhs == 0.0) {
    rep.vacuous = rep.rhs == 0.0;
    rep.ratio = kInf;
  } else {
    rep.ratio = rep.rhs / rep.lhs;
  }
  return rep;
}

std::vector<double> log_spaced_times(double t_a, double t_b, int per_decade) {
  if (per_decade < 1) throw InvalidArgument("log_spaced_times: need at least one point per decade");
  if (t_a == 0.0 || t_b == 0.0 || (t_a > 0.0) != (t_b > 0.0))
    throw InvalidArgument("log_spaced_times: ends must be nonzero and of one sign");
  const double sign = t_a > 0.0 ? 1.0 : -1.0;
  const double la = std::log10(std::abs(t_a));
  const double lb = std::log10(std::abs(t_b));
  const int count = std::max(1, static_cast<int>(std::ceil(std::abs(lb - la) * per_decade - 1e-9)));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count) + 1);
  for (int i = 0; i <= count; ++i) {
    const double l = la + (lb - la) * static_cast<double>(i) / count;
    out.push_back(sign * std::pow(10.0, l));
  }
  out.front() = t_a;
  out.back() = t_b;
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> sup_time_grid(double t_star, double eta, int per_decade) {
  if (!(eta > 1.0)) throw InvalidArgument("sup_time_grid: eta must exceed 1");
  return log_spaced_times(t_star / eta, t_star * eta, per_decade);
}

std::vector<DecayPoint> decay_partials(const Field& field, double sigma,
                                       std::span<const double> T_values, double p, int n,
                                       const QuadratureSpec& q) {
  require_dimension(n);
  static_cast<void>(ConeSpec(sigma));  // aperture check
  if (T_values.empty()) throw InvalidArgument("decay_partials: no end times");
  for (std::size_t i = 0; i < T_values.size(); ++i) {
    if (!(T_values[i] > 1.0)) throw InvalidArgument("decay_partials: end times must exceed 1");
    if (i > 0 && !(T_values[i] > T_values[i - 1]))
      throw InvalidArgument("decay_partials: end times must increase");
  }
  require_coverage(field, 1.0, T_values.back(), "decay_partials");

  std::vector<DecayPoint> out;
  DecayPoint acc;
  double t_prev = 1.0;
  for (double T : T_values) {
    const RadialDomain dom = cone_domain(sigma, t_prev, T, n);
    const QuadratureResult d = integrate_bulk(
        dom, [&](double t, double r) { return std::pow(std::abs(field.sample(t, r).phi), p + 1.0) / t; },
        q);
    const QuadratureResult h = integrate_bulk(
        dom,
        [&](double t, double r) {
          const double v = field.sample(t, r).phi;
          return v * v / (t * t);
        },
        q);
    const QuadratureResult l = integrate_surface(
        BoundaryPiece::cone(sigma, RegionSide::inside, t_prev, T), n,
        [&](double t, double r) {
          const FieldSample s = field.sample(t, r);
          return s.phi_t * s.phi_t + s.phi_r * s.phi_r + std::pow(std::abs(s.phi), p + 1.0);
        },
        q);
    acc.T = T;
    acc.D += d.value;
    acc.H += h.value;
    acc.L += l.value;
    acc.D_increment = d.value;
    acc.L_increment = l.value;
    acc.error_estimate += d.error_estimate + h.error_estimate + l.error_estimate;
    out.push_back(acc);
    t_prev = T;
  }
  return out;
}

RateReport rate_fit(std::span<const double> t, std::span<const double> y, double window_lo,
                    double window_hi) {
  if (t.size() != y.size()) throw InvalidArgument("rate_fit: t and y differ in length");
  if (!(window_lo <= window_hi)) throw InvalidArgument("rate_fit: empty window");
  std::vector<double> lx, ly, ts, ys;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < window_lo || t[i] > window_hi) continue;
    if (t[i] == 0.0) throw InvalidArgument("rate_fit: sample at t = 0");
    if (!(y[i] > 0.0)) throw InvalidArgument("rate_fit: nonpositive sample y = " + format_real(y[i]) +
                                             " at t = " + format_real(t[i]));
    lx.push_back(std::log(std::abs(t[i])));
    ly.push_back(std::log(y[i]));
    ts.push_back(t[i]);
    ys.push_back(y[i]);
  }
  if (lx.size() < 3) throw InvalidArgument("rate_fit: need at least 3 samples in the window");

  RateReport rep;
  rep.window_lo = window_lo;
  rep.window_hi = window_hi;
  rep.samples = lx.size();
  const double m = static_cast<double>(lx.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  rep.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  rep.intercept = my - rep.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double e = ly[i] - (rep.intercept + rep.slope * lx[i]);
    ss += e * e;
  }
  rep.residual = std::sqrt(ss / m);
  rep.eps_hat = *std::min_element(ys.begin(), ys.end());
  rep.K_hat = *std::max_element(ys.begin(), ys.end());

  // Last decade: |t| within a factor 10 of the sample nearest 0 (negative
  // times) or of the latest sample (positive times).
  const bool backward = ts.front() < 0.0;
  double edge = backward ? kInf : 0.0;
  for (double v : ts) edge = backward ? std::min(edge, std::abs(v)) : std::max(edge, std::abs(v));
  rep.delta_hat = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double a = std::abs(ts[i]);
    const bool inside = backward ? a <= 10.0 * edge : a >= edge / 10.0;
    if (inside) rep.delta_hat = std::max(rep.delta_hat, ys[i]);
  }
  return rep;
}

std::vector<EnergyRow> energy_profile(const Field& field, const EnergyProfileSpec& spec,
                                      std::span<const double> times,
                                      std::span<const double> sup_times,
                                      const QuadratureSpec& q) {
  std::vector<EnergyRow> rows;
  rows.reserve(times.size());
  for (double t : times) {
    EnergyRow row;
    row.t = t;
    const QuadratureResult a = annulus_quantity(field, spec.sigma0, spec.sigma1, t, spec.p, spec.n, q);
    const QuadratureResult s = slab_quantity(field, spec.sigma0, spec.gamma, t, spec.p, spec.n, q);
    row.annulus = a.value;
    row.slab = s.value;
    row.error_estimate = a.error_estimate + s.error_estimate;
    if (t < 0.0) {
      const QuadratureResult mz = mz_ball_quantity(field, t, spec.p, spec.n, 1.0, q);
      row.mz = mz.value;
      row.error_estimate += mz.error_estimate;
    } else {
      row.mz = std::numeric_limits<double>::quiet_NaN();
    }
    LocalizedSpec ls;
    ls.kind = LocalizedSpec::Kind::annulus;
    ls.sigma0 = spec.sigma0;
    ls.sigma1 = spec.sigma1;
    ls.gamma = spec.gamma;
    ls.eta = spec.eta;
    ls.t_star = t;
    ls.p = spec.p;
    ls.n = spec.n;
    const LocalizedReport loc = localized_estimate_check(field, ls, sup_times, q);
    row.lhs = loc.lhs;
    row.rhs = loc.rhs;
    row.ratio = loc.ratio;
    row.error_estimate += loc.lhs_error + loc.rhs_error;
    rows.push_back(row);
  }
  return rows;
}

void write_energy_csv(std::ostream& out, const std::vector<EnergyRow>& rows) {
  out << "t,annulus_q,slab_q,mz_q,lhs_1_6,rhs_1_6,ratio,err_est\n";
  for (const EnergyRow& r : rows) {
    out << format_real(r.t) << ',' << format_real(r.annulus) << ',' << format_real(r.slab) << ','
        << format_real(r.mz) << ',' << format_real(r.lhs) << ',' << format_real(r.rhs) << ','
        << format_real(r.ratio) << ',' << format_real(r.error_estimate) << '\n';
  }
}

void write_decay_csv(std::ostream& out, const std::vector<DecayPoint>& points) {
  out << "T,D,L\n";
  for (const DecayPoint& d : points)
    out << format_real(d.T) << ',' << format_real(d.D) << ',' << format_real(d.L) << '\n';
}

SideMassReport side_mass_diagnostic(const Field& field, double sigma0, double sigma1,
                                    std::span<const double> times, double p, int n,
                                    const QuadratureSpec& q) {
  if (times.empty()) throw InvalidArgument("side_mass_diagnostic: no times");
  SideMassReport rep;
  rep.inner_min = kInf;
  rep.annulus_min = kInf;
  for (double t : times) {
    rep.inner_min = std::min(rep.inner_min, inner_ball_quantity(field, sigma0, t, p, n, q).value);
    const double a = annulus_quantity(field, sigma0, sigma1, t, p, n, q).value;
    rep.annulus_min = std::min(rep.annulus_min, a);
    rep.annulus_max = std::max(rep.annulus_max, a);
  }
  rep.ok = rep.inner_min > 0.0 && rep.annulus_min > 0.0;
  return rep;
}

SlabAnnulusReport slab_annulus_constant(const Field& field, double sigma0, double sigma1,
                                        double gamma, std::span<const double> times, double p,
                                        int n, const QuadratureSpec& q) {
  if (times.empty()) throw InvalidArgument("slab_annulus_constant: no times");
  SlabAnnulusReport rep;
  for (double t : times) {
    rep.slab_max = std::max(rep.slab_max, slab_quantity(field, sigma0, gamma, t, p, n, q).value);
    rep.annulus_max =
        std::max(rep.annulus_max, annulus_quantity(field, sigma0, sigma1, t, p, n, q).value);
  }
  rep.K = rep.annulus_max > 0.0 ? rep.slab_max / rep.annulus_max : (rep.slab_max > 0.0 ? kInf : 0.0);
  return rep;
}

std::vector<double> level_times_in(const DiscreteField& history, double t_a, double t_b) {
  std::vector<double> out;
  for (double t : history.times())
    if (t >= t_a && t <= t_b) out.push_back(t);
  return out;
}

}  // namespace conewave
