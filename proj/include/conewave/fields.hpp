#pragma once

// Radial fields phi(t, r): closed forms with analytic derivative jets, and
// discrete histories on a uniform radial grid. Also the potential V and the
// wave operators built on them.

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "conewave/geometry.hpp"

namespace conewave {

/// sign(x) |x|^p, with the p > 1 convention |0|^{p-1} 0 = 0.
double signed_pow(double x, double p);

/// V = c0, or V = c0 + eps b with b a Gaussian bump centred at (t_center, 0)
/// normalized so that max |grad b| = 1 (Euclidean in (t, r)).
class PotentialSpec {
 public:
  static PotentialSpec constant(double c0 = 1.0);
  static PotentialSpec perturbed(double c0, double eps, double t_center, double width);

  bool is_constant() const noexcept { return eps_ == 0.0; }
  double value(double t, double r) const;
  /// (d_t V, d_r V).
  RadialVector gradient(double t, double r) const;

  /// Checks 1/bound <= V <= bound on the slab nodes and, for the perturbed
  /// kind, max |grad V| |t*| <= alpha. Throws InvalidArgument otherwise.
  void validate_on(const SlabSpec& slab, double bound, double alpha, int nodes = 64) const;

  double c0() const noexcept { return c0_; }
  double eps() const noexcept { return eps_; }
  double t_center() const noexcept { return t_center_; }
  double width() const noexcept { return width_; }

 private:
  double c0_ = 1.0;
  double eps_ = 0.0;
  double t_center_ = 0.0;
  double width_ = 1.0;
};

struct FieldSample {
  double phi = 0.0;
  double phi_t = 0.0;
  double phi_r = 0.0;
};

/// Value plus first and second derivatives.
struct FieldJet {
  double phi = 0.0;
  double phi_t = 0.0;
  double phi_r = 0.0;
  double phi_tt = 0.0;
  double phi_rr = 0.0;
  double phi_tr = 0.0;

  FieldSample first() const noexcept { return {phi, phi_t, phi_r}; }
};

class Field {
 public:
  virtual ~Field() = default;
  virtual FieldSample sample(double t, double r) const = 0;
};

/// Closed-form C^2 field with an analytic jet.
class ManufacturedField : public Field {
 public:
  virtual FieldJet jet(double t, double r) const = 0;
  FieldSample sample(double t, double r) const override { return jet(t, r).first(); }
};

using FieldPtr = std::shared_ptr<const ManufacturedField>;

FieldPtr zero_field();
FieldPtr constant_field(double c);
/// sum_{i,j} coeffs[i][j] t^i r^j.
FieldPtr polynomial_field(std::vector<std::vector<double>> coeffs);
/// amplitude exp(-(t - t_center)^2 / tau^2 - (r - r_center)^2 / s^2); tau may be
/// infinite for a time-independent profile.
FieldPtr gaussian_field(double amplitude, double t_center, double tau, double r_center, double s);
/// h(r - t) + h(-r - t) with h(x) = amplitude exp(-(x - x0)^2 / s^2): an even
/// solution of the one-dimensional linear wave equation.
FieldPtr traveling_bump(double amplitude, double x0, double s);
FieldPtr sum_field(std::vector<FieldPtr> terms);
FieldPtr product_field(FieldPtr a, FieldPtr b);
FieldPtr scaled_field(FieldPtr base, double factor);
/// lambda^{-k} phi(t / lambda, r / lambda).
FieldPtr rescaled_field(FieldPtr base, double lambda, double k);
/// phi(t - shift, r).
FieldPtr time_shifted_field(FieldPtr base, double shift);

/// Radial history on r_j = j dr, j = 0..J, at increasing times t_m.
class DiscreteField : public Field {
 public:
  DiscreteField(int n, double dr, std::size_t nodes);

  void append_level(double t, std::span<const double> phi, std::span<const double> phi_t);

  int dimension() const noexcept { return n_; }
  double dr() const noexcept { return dr_; }
  std::size_t nodes() const noexcept { return nodes_; }
  double radius() const noexcept { return dr_ * static_cast<double>(nodes_ - 1); }
  std::size_t levels() const noexcept { return times_.size(); }
  const std::vector<double>& times() const noexcept { return times_; }
  double time(std::size_t m) const { return times_.at(m); }
  std::span<const double> phi(std::size_t m) const;
  std::span<const double> phi_t(std::size_t m) const;

  /// Stored phi, phi_t and the second-order radial difference (parity at
  /// j = 0, one-sided at j = J).
  FieldSample node_sample(std::size_t m, std::size_t j) const;
  /// Radial box operator at a node from three consecutive levels.
  double node_box(std::size_t m, std::size_t j) const;

  /// Cubic Lagrange in r (parity ghosts near the axis), cubic Hermite in t
  /// from phi and phi_t. Throws DomainError outside the grid.
  FieldSample sample(double t, double r) const override;

  /// Index of the level nearest to t.
  std::size_t nearest_level(double t) const;

  static DiscreteField from_closed_form(const Field& field, int n, double dr, std::size_t nodes,
                                        std::span<const double> times);

 private:
  FieldSample sample_level(std::size_t m, double r) const;

  int n_;
  double dr_;
  std::size_t nodes_;
  std::vector<double> times_;
  std::vector<double> phi_;
  std::vector<double> phi_t_;
};

/// (d_t phi)^2 + (d_r phi)^2.
double gradient_norm_sq(const Field& field, double t, double r);
double gradient_norm_sq(const DiscreteField& field, std::size_t m, std::size_t j);

/// -phi_tt + phi_rr + (n - 1) phi_r / r, and -phi_tt + n phi_rr on the axis.
double box_operator(const ManufacturedField& field, int n, double t, double r);
double box_operator(const DiscreteField& field, std::size_t m, std::size_t j);

/// box phi + V |phi|^{p-1} phi.
double nonlinear_residual(const ManufacturedField& field, int n, const PotentialSpec& V, double p,
                          double t, double r);
double nonlinear_residual(const DiscreteField& field, const PotentialSpec& V, double p,
                          std::size_t m, std::size_t j);

/// One time level in the text snapshot format: "# n p t" then "r phi phit".
struct Snapshot {
  int n = 1;
  double p = 2.0;
  double t = 0.0;
  std::vector<double> r;
  std::vector<double> phi;
  std::vector<double> phi_t;

  double dr() const;
};

void write_snapshot(std::ostream& out, const Snapshot& snap);
void write_snapshot(const std::string& path, const Snapshot& snap);
Snapshot read_snapshot(std::istream& in);
Snapshot read_snapshot(const std::string& path);

}  // namespace conewave
