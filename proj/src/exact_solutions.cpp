#include "conewave/exact_solutions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <utility>

#include "conewave/error.hpp"
#include "conewave/format.hpp"

namespace conewave {

double conformal_exponent(int n) {
  if (n < 1) throw InvalidArgument("conformal_exponent: dimension must be >= 1");
  if (n == 1) return std::numeric_limits<double>::infinity();
  return 1.0 + 4.0 / (n - 1);
}

bool is_subconformal(double p, int n) { return p > 1.0 && p < conformal_exponent(n); }

OdeSolution::OdeSolution(double p_) : p(p_) {
  if (!(p > 1.0) || !std::isfinite(p)) throw InvalidArgument("OdeSolution: need p > 1");
  k = 2.0 / (p - 1.0);
  amplitude = std::pow(2.0 * (p + 1.0) / ((p - 1.0) * (p - 1.0)), 1.0 / (p - 1.0));
}

namespace {
void require_past(double t) {
  if (!(t < 0.0)) throw DomainError("ODE solution is defined only for t < 0, got t = " + format_real(t));
}
}  // namespace

double OdeSolution::value(double t) const {
  require_past(t);
  return amplitude * std::pow(-t, -k);
}

double OdeSolution::derivative(double t) const {
  require_past(t);
  return amplitude * k * std::pow(-t, -k - 1.0);
}

double OdeSolution::second_derivative(double t) const {
  require_past(t);
  return amplitude * k * (k + 1.0) * std::pow(-t, -k - 2.0);
}

OdeValue ode_value(double p, double t) {
  const OdeSolution ode(p);
  return {ode.value(t), ode.derivative(t)};
}

namespace {

class OdeField final : public ManufacturedField {
 public:
  explicit OdeField(double p) : ode_(p) {}
  FieldJet jet(double t, double) const override {
    return {ode_.value(t), ode_.derivative(t), 0.0, ode_.second_derivative(t), 0.0, 0.0};
  }

 private:
  OdeSolution ode_;
};

void require_subconformal(double p, int n, const char* who) {
  if (n < 1) throw InvalidArgument(std::string(who) + ": dimension must be >= 1");
  if (!is_subconformal(p, n))
    throw InvalidArgument(std::string(who) + ": p = " + format_real(p) +
                          " is not subconformal for n = " + std::to_string(n));
}

// int_{1/gamma}^{gamma} u^m du
double power_integral(double m, double gamma) {
  if (std::abs(m + 1.0) < 1e-14) return 2.0 * std::log(gamma);
  return (std::pow(gamma, m + 1.0) - std::pow(gamma, -m - 1.0)) / (m + 1.0);
}

}  // namespace

FieldPtr ode_field(double p) { return std::make_shared<OdeField>(p); }

ScalingConstants annulus_scaling_constant(double p, int n, double sigma0, double sigma1) {
  require_subconformal(p, n, "annulus_scaling_constant");
  if (!(0.0 < sigma0 && sigma0 <= sigma1 && sigma1 < 1.0))
    throw InvalidArgument("annulus_scaling_constant: need 0 < sigma0 <= sigma1 < 1");
  const OdeSolution ode(p);
  const double shell = unit_ball_volume(n) * (std::pow(sigma1, n) - std::pow(sigma0, n));
  const double c2 = ode.amplitude * ode.amplitude;
  return {c2 * ode.k * ode.k * shell, c2 * shell};
}

ScalingConstants slab_scaling_constant(double p, int n, double sigma, double gamma) {
  require_subconformal(p, n, "slab_scaling_constant");
  if (!(0.0 < sigma && sigma < 1.0)) throw InvalidArgument("slab_scaling_constant: need 0 < sigma < 1");
  if (!(gamma >= 1.0)) throw InvalidArgument("slab_scaling_constant: need gamma >= 1");
  const OdeSolution ode(p);
  const double base = ode.amplitude * ode.amplitude * unit_ball_volume(n) * std::pow(sigma, n);
  return {base * ode.k * ode.k * power_integral(n - 2.0 * ode.k - 2.0, gamma),
          base * power_integral(n - 2.0 * ode.k, gamma)};
}

double mz_quantity_ode(double p, int n, double t, double sigma) {
  require_past(t);
  if (n < 1) throw InvalidArgument("mz_quantity_ode: dimension must be >= 1");
  if (!(0.0 < sigma && sigma <= 1.0)) throw InvalidArgument("mz_quantity_ode: need 0 < sigma <= 1");
  const OdeSolution ode(p);
  return ode.amplitude * (1.0 + ode.k) * std::sqrt(unit_ball_volume(n) * std::pow(sigma, n));
}

double quintic_step(double x) {
  if (x <= 0.0) return 1.0;
  if (x >= 1.0) return 0.0;
  return 1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

InitialDataSpec InitialDataSpec::zero() { return {}; }

InitialDataSpec InitialDataSpec::truncated_ode(double cutoff, double ramp) {
  InitialDataSpec s;
  s.kind = Kind::truncated_ode;
  s.cutoff = cutoff;
  s.ramp = ramp;
  s.validate();
  return s;
}

InitialDataSpec InitialDataSpec::gaussian(double amplitude, double width) {
  InitialDataSpec s;
  s.kind = Kind::gaussian;
  s.amplitude = amplitude;
  s.width = width;
  s.validate();
  return s;
}

InitialDataSpec InitialDataSpec::file(std::string path) {
  InitialDataSpec s;
  s.kind = Kind::file;
  s.path = std::move(path);
  s.validate();
  return s;
}

InitialDataSpec InitialDataSpec::closed_form(FieldPtr field) {
  InitialDataSpec s;
  s.kind = Kind::closed_form;
  s.field = std::move(field);
  s.validate();
  return s;
}

void InitialDataSpec::validate() const {
  switch (kind) {
    case Kind::zero: return;
    case Kind::truncated_ode:
      if (!(cutoff > 0.0)) throw InvalidArgument("truncated_ode: cutoff M must be positive");
      if (!(ramp > 0.0)) throw InvalidArgument("truncated_ode: ramp width w must be positive");
      return;
    case Kind::gaussian:
      if (!std::isfinite(amplitude)) throw InvalidArgument("gaussian: amplitude must be finite");
      if (!(width > 0.0)) throw InvalidArgument("gaussian: width s must be positive");
      return;
    case Kind::file:
      if (path.empty()) throw InvalidArgument("file data: empty path");
      return;
    case Kind::closed_form:
      if (!field) throw InvalidArgument("closed-form data: null field");
      return;
  }
}

double InitialDataSpec::support_radius() const {
  switch (kind) {
    case Kind::zero: return 0.0;
    case Kind::truncated_ode: return cutoff + ramp;
    case Kind::gaussian: return 6.0 * width;
    case Kind::file: {
      const Snapshot snap = read_snapshot(path);
      double rad = 0.0;
      for (std::size_t j = 0; j < snap.r.size(); ++j)
        if (snap.phi[j] != 0.0 || snap.phi_t[j] != 0.0) rad = snap.r[j];
      return rad;
    }
    case Kind::closed_form: return std::numeric_limits<double>::infinity();
  }
  return std::numeric_limits<double>::infinity();
}

InitialData sample_initial_data(const InitialDataSpec& spec, int n, double p, double t0, double dr,
                                std::size_t nodes) {
  spec.validate();
  if (!(dr > 0.0)) throw InvalidArgument("initial data: dr must be positive");
  InitialData d{std::vector<double>(nodes, 0.0), std::vector<double>(nodes, 0.0)};
  switch (spec.kind) {
    case InitialDataSpec::Kind::zero: break;
    case InitialDataSpec::Kind::truncated_ode: {
      const OdeValue core = ode_value(p, t0);
      for (std::size_t j = 0; j < nodes; ++j) {
        const double chi = quintic_step((dr * static_cast<double>(j) - spec.cutoff) / spec.ramp);
        d.phi[j] = core.phi * chi;
        d.phi_t[j] = core.phi_t * chi;
      }
      break;
    }
    case InitialDataSpec::Kind::gaussian: {
      const double s2 = spec.width * spec.width;
      const double edge = 6.0 * spec.width;
      for (std::size_t j = 0; j < nodes; ++j) {
        const double r = dr * static_cast<double>(j);
        if (r < edge) d.phi[j] = spec.amplitude * std::exp(-r * r / s2);
      }
      break;
    }
    case InitialDataSpec::Kind::file: {
      const Snapshot snap = read_snapshot(spec.path);
      if (snap.n != n)
        throw InvalidArgument("file data: dimension " + std::to_string(snap.n) +
                              " does not match n = " + std::to_string(n));
      if (std::abs(snap.t - t0) > 1e-12 * std::max(1.0, std::abs(t0)))
        throw InvalidArgument("file data: snapshot time " + format_real(snap.t) +
                              " does not match t0 = " + format_real(t0));
      if (std::abs(snap.dr() - dr) <= 1e-12 * dr && snap.r.size() >= nodes) {
        std::copy_n(snap.phi.begin(), nodes, d.phi.begin());
        std::copy_n(snap.phi_t.begin(), nodes, d.phi_t.begin());
        break;
      }
      DiscreteField level(n, snap.dr(), snap.r.size());
      level.append_level(snap.t, snap.phi, snap.phi_t);
      for (std::size_t j = 0; j < nodes; ++j) {
        const FieldSample s = level.sample(snap.t, dr * static_cast<double>(j));
        d.phi[j] = s.phi;
        d.phi_t[j] = s.phi_t;
      }
      break;
    }
    case InitialDataSpec::Kind::closed_form:
      for (std::size_t j = 0; j < nodes; ++j) {
        const FieldSample s = spec.field->sample(t0, dr * static_cast<double>(j));
        d.phi[j] = s.phi;
        d.phi_t[j] = s.phi_t;
      }
      break;
  }
  return d;
}

}  // namespace conewave
