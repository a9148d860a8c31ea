#pragma once

// The spatially homogeneous blow-up solution phi*(t) = C (-t)^{-k}, the
// closed-form values of its weighted energies, and initial data for the solver.

#include <cstddef>
#include <string>
#include <vector>

#include "conewave/fields.hpp"

namespace conewave {

/// 1 + 4 / (n - 1); infinite for n = 1.
double conformal_exponent(int n);
/// 1 < p < conformal_exponent(n).
bool is_subconformal(double p, int n);

/// phi*(t) = amplitude (-t)^{-k} with k = 2 / (p - 1) and
/// amplitude^{p-1} = 2 (p + 1) / (p - 1)^2, which solves phi'' = |phi|^{p-1} phi.
struct OdeSolution {
  double p;
  double k;
  double amplitude;

  explicit OdeSolution(double p);

  double value(double t) const;
  double derivative(double t) const;
  double second_derivative(double t) const;
};

struct OdeValue {
  double phi;
  double phi_t;
};

/// (phi*(t), d_t phi*(t)); throws DomainError for t >= 0.
OdeValue ode_value(double p, double t);

/// phi* as a closed-form field (constant in r).
FieldPtr ode_field(double p);

struct ScalingConstants {
  double grad = 0.0;
  double phi = 0.0;
};

/// Time-independent values of (-t)^{2k+2-n} int_A |grad phi*|^2 and
/// (-t)^{2k-n} int_A |phi*|^2 over the annulus sigma0 |t| < r < sigma1 |t|.
ScalingConstants annulus_scaling_constant(double p, int n, double sigma0, double sigma1);

/// Time-independent values of |t*|^{2k+1-n} int_R |grad phi*|^2 and
/// |t*|^{2k-1-n} int_R |phi*|^2 over the slab of aperture sigma and ratio gamma.
ScalingConstants slab_scaling_constant(double p, int n, double sigma, double gamma);

/// The three-term ball quantity for phi* on B(0, -sigma t); the spatial
/// gradient term vanishes. Equals amplitude (1 + k) sqrt(|B^n|) sigma^{n/2}.
double mz_quantity_ode(double p, int n, double t, double sigma = 1.0);

/// C^2 step: 1 for x <= 0, 0 for x >= 1, quintic in between.
double quintic_step(double x);

struct InitialDataSpec {
  enum class Kind { zero, truncated_ode, gaussian, file, closed_form };

  Kind kind = Kind::zero;
  double cutoff = 0.0;     ///< truncated_ode: M
  double ramp = 0.0;       ///< truncated_ode: smoothing width w
  double amplitude = 0.0;  ///< gaussian: A
  double width = 0.0;      ///< gaussian: s
  std::string path;        ///< file
  FieldPtr field;          ///< closed_form

  static InitialDataSpec zero();
  static InitialDataSpec truncated_ode(double cutoff, double ramp);
  static InitialDataSpec gaussian(double amplitude, double width);
  static InitialDataSpec file(std::string path);
  static InitialDataSpec closed_form(FieldPtr field);

  void validate() const;
  /// Radius outside which the data vanish identically (infinite for closed forms).
  double support_radius() const;
};

struct InitialData {
  std::vector<double> phi;
  std::vector<double> phi_t;
};

/// Data (phi, d_t phi) at t0 on r_j = j dr, j = 0..nodes-1.
InitialData sample_initial_data(const InitialDataSpec& spec, int n, double p, double t0, double dr,
                                std::size_t nodes);

}  // namespace conewave
