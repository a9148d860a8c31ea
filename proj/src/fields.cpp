#include "conewave/fields.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <utility>

#include "conewave/error.hpp"
#include "conewave/format.hpp"

namespace conewave {

double signed_pow(double x, double p) {
  if (x == 0.0) return 0.0;
  const double m = std::pow(std::abs(x), p);
  return x > 0.0 ? m : -m;
}

// ---------------------------------------------------------------------------
// Potential

PotentialSpec PotentialSpec::constant(double c0) {
  if (!(c0 > 0.0) || !std::isfinite(c0)) throw InvalidArgument("potential: c0 must be positive");
  PotentialSpec v;
  v.c0_ = c0;
  return v;
}

PotentialSpec PotentialSpec::perturbed(double c0, double eps, double t_center, double width) {
  PotentialSpec v = constant(c0);
  if (!std::isfinite(eps)) throw InvalidArgument("potential: eps must be finite");
  if (!(width > 0.0)) throw InvalidArgument("potential: bump width must be positive");
  v.eps_ = eps;
  v.t_center_ = t_center;
  v.width_ = width;
  return v;
}

namespace {
// b = w sqrt(e/2) exp(-rho^2 / w^2) has max |grad b| = 1 at rho = w / sqrt(2).
double bump_scale(double w) { return w * std::sqrt(std::exp(1.0) / 2.0); }
}  // namespace

double PotentialSpec::value(double t, double r) const {
  if (eps_ == 0.0) return c0_;
  const double dt = t - t_center_;
  const double rho2 = (dt * dt + r * r) / (width_ * width_);
  return c0_ + eps_ * bump_scale(width_) * std::exp(-rho2);
}

RadialVector PotentialSpec::gradient(double t, double r) const {
  if (eps_ == 0.0) return {0.0, 0.0};
  const double w2 = width_ * width_;
  const double dt = t - t_center_;
  const double b = bump_scale(width_) * std::exp(-(dt * dt + r * r) / w2);
  return {-2.0 * dt / w2 * eps_ * b, -2.0 * r / w2 * eps_ * b};
}

void PotentialSpec::validate_on(const SlabSpec& slab, double bound, double alpha, int nodes) const {
  if (!(bound >= 1.0)) throw InvalidArgument("potential: bound C must be >= 1");
  if (!(alpha >= 0.0)) throw InvalidArgument("potential: alpha must be nonnegative");
  if (nodes < 2) throw InvalidArgument("potential: need at least 2 validation nodes");
  const double t0 = slab.t_lower();
  const double t1 = slab.t_upper();
  for (int i = 0; i < nodes; ++i) {
    const double t = t0 + (t1 - t0) * i / (nodes - 1);
    for (int j = 0; j < nodes; ++j) {
      const double r = slab.sigma * std::abs(t) * j / (nodes - 1);
      const double v = value(t, r);
      if (v < 1.0 / bound || v > bound)
        throw InvalidArgument("potential: V = " + format_real(v) + " outside [1/C, C] at t=" +
                              format_real(t) + ", r=" + format_real(r));
      if (!is_constant()) {
        const RadialVector g = gradient(t, r);
        const double s = std::hypot(g.t, g.r) * std::abs(slab.t_star);
        if (s > alpha)
          throw InvalidArgument("potential: |grad V| t* = " + format_real(s) + " exceeds alpha = " +
                                format_real(alpha));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Closed-form fields

namespace {

double ipow(double x, int k) {
  double y = 1.0;
  for (int i = 0; i < k; ++i) y *= x;
  return y;
}

class ConstantField final : public ManufacturedField {
 public:
  explicit ConstantField(double c) : c_(c) {}
  FieldJet jet(double, double) const override { return {c_, 0, 0, 0, 0, 0}; }

 private:
  double c_;
};

class PolynomialField final : public ManufacturedField {
 public:
  explicit PolynomialField(std::vector<std::vector<double>> c) : c_(std::move(c)) {}

  FieldJet jet(double t, double r) const override {
    FieldJet out;
    for (std::size_t i = 0; i < c_.size(); ++i) {
      for (std::size_t j = 0; j < c_[i].size(); ++j) {
        const double c = c_[i][j];
        if (c == 0.0) continue;
        const int a = static_cast<int>(i);
        const int b = static_cast<int>(j);
        const double ti = ipow(t, a);
        const double rj = ipow(r, b);
        const double dti = a >= 1 ? a * ipow(t, a - 1) : 0.0;
        const double drj = b >= 1 ? b * ipow(r, b - 1) : 0.0;
        const double ddti = a >= 2 ? a * (a - 1) * ipow(t, a - 2) : 0.0;
        const double ddrj = b >= 2 ? b * (b - 1) * ipow(r, b - 2) : 0.0;
        out.phi += c * ti * rj;
        out.phi_t += c * dti * rj;
        out.phi_r += c * ti * drj;
        out.phi_tt += c * ddti * rj;
        out.phi_rr += c * ti * ddrj;
        out.phi_tr += c * dti * drj;
      }
    }
    return out;
  }

 private:
  std::vector<std::vector<double>> c_;
};

class GaussianField final : public ManufacturedField {
 public:
  GaussianField(double amp, double tc, double tau, double rc, double s)
      : amp_(amp), tc_(tc), inv_tau2_(std::isinf(tau) ? 0.0 : 1.0 / (tau * tau)), rc_(rc),
        inv_s2_(1.0 / (s * s)) {}

  FieldJet jet(double t, double r) const override {
    const double dt = t - tc_;
    const double dr = r - rc_;
    const double g = amp_ * std::exp(-dt * dt * inv_tau2_ - dr * dr * inv_s2_);
    const double at = -2.0 * dt * inv_tau2_;
    const double ar = -2.0 * dr * inv_s2_;
    return {g, at * g, ar * g, (at * at - 2.0 * inv_tau2_) * g, (ar * ar - 2.0 * inv_s2_) * g,
            at * ar * g};
  }

 private:
  double amp_, tc_, inv_tau2_, rc_, inv_s2_;
};

class TravelingBump final : public ManufacturedField {
 public:
  TravelingBump(double amp, double x0, double s) : amp_(amp), x0_(x0), inv_s2_(1.0 / (s * s)) {}

  FieldJet jet(double t, double r) const override {
    const auto [h1, d1, dd1] = profile(r - t);
    const auto [h2, d2, dd2] = profile(-r - t);
    return {h1 + h2, -d1 - d2, d1 - d2, dd1 + dd2, dd1 + dd2, -dd1 + dd2};
  }

 private:
  std::array<double, 3> profile(double x) const {
    const double y = x - x0_;
    const double h = amp_ * std::exp(-y * y * inv_s2_);
    const double d = -2.0 * y * inv_s2_;
    return {h, d * h, (d * d - 2.0 * inv_s2_) * h};
  }

  double amp_, x0_, inv_s2_;
};

class SumField final : public ManufacturedField {
 public:
  explicit SumField(std::vector<FieldPtr> terms) : terms_(std::move(terms)) {}

  FieldJet jet(double t, double r) const override {
    FieldJet out;
    for (const auto& f : terms_) {
      const FieldJet j = f->jet(t, r);
      out.phi += j.phi;
      out.phi_t += j.phi_t;
      out.phi_r += j.phi_r;
      out.phi_tt += j.phi_tt;
      out.phi_rr += j.phi_rr;
      out.phi_tr += j.phi_tr;
    }
    return out;
  }

 private:
  std::vector<FieldPtr> terms_;
};

class ProductField final : public ManufacturedField {
 public:
  ProductField(FieldPtr a, FieldPtr b) : a_(std::move(a)), b_(std::move(b)) {}

  FieldJet jet(double t, double r) const override {
    const FieldJet f = a_->jet(t, r);
    const FieldJet g = b_->jet(t, r);
    return {f.phi * g.phi,
            f.phi_t * g.phi + f.phi * g.phi_t,
            f.phi_r * g.phi + f.phi * g.phi_r,
            f.phi_tt * g.phi + 2.0 * f.phi_t * g.phi_t + f.phi * g.phi_tt,
            f.phi_rr * g.phi + 2.0 * f.phi_r * g.phi_r + f.phi * g.phi_rr,
            f.phi_tr * g.phi + f.phi_t * g.phi_r + f.phi_r * g.phi_t + f.phi * g.phi_tr};
  }

 private:
  FieldPtr a_, b_;
};

class RescaledField final : public ManufacturedField {
 public:
  RescaledField(FieldPtr base, double lambda, double k)
      : base_(std::move(base)), lambda_(lambda), k_(k) {}

  FieldJet jet(double t, double r) const override {
    const FieldJet j = base_->jet(t / lambda_, r / lambda_);
    const double s0 = std::pow(lambda_, -k_);
    const double s1 = s0 / lambda_;
    const double s2 = s1 / lambda_;
    return {s0 * j.phi, s1 * j.phi_t, s1 * j.phi_r, s2 * j.phi_tt, s2 * j.phi_rr, s2 * j.phi_tr};
  }

 private:
  FieldPtr base_;
  double lambda_, k_;
};

class ScaledField final : public ManufacturedField {
 public:
  ScaledField(FieldPtr base, double c) : base_(std::move(base)), c_(c) {}

  FieldJet jet(double t, double r) const override {
    const FieldJet j = base_->jet(t, r);
    return {c_ * j.phi, c_ * j.phi_t, c_ * j.phi_r, c_ * j.phi_tt, c_ * j.phi_rr, c_ * j.phi_tr};
  }

 private:
  FieldPtr base_;
  double c_;
};

class TimeShiftedField final : public ManufacturedField {
 public:
  TimeShiftedField(FieldPtr base, double shift) : base_(std::move(base)), shift_(shift) {}
  FieldJet jet(double t, double r) const override { return base_->jet(t - shift_, r); }

 private:
  FieldPtr base_;
  double shift_;
};

void require_field(const FieldPtr& f, const char* who) {
  if (!f) throw InvalidArgument(std::string(who) + ": null field");
}

}  // namespace

FieldPtr zero_field() { return std::make_shared<ConstantField>(0.0); }

FieldPtr constant_field(double c) {
  if (!std::isfinite(c)) throw InvalidArgument("constant_field: value must be finite");
  return std::make_shared<ConstantField>(c);
}

FieldPtr polynomial_field(std::vector<std::vector<double>> coeffs) {
  for (const auto& row : coeffs)
    for (double c : row)
      if (!std::isfinite(c)) throw InvalidArgument("polynomial_field: non-finite coefficient");
  return std::make_shared<PolynomialField>(std::move(coeffs));
}

FieldPtr gaussian_field(double amplitude, double t_center, double tau, double r_center, double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("gaussian_field: width s must be positive");
  if (!(tau > 0.0)) throw InvalidArgument("gaussian_field: tau must be positive");
  return std::make_shared<GaussianField>(amplitude, t_center, tau, r_center, s);
}

FieldPtr traveling_bump(double amplitude, double x0, double s) {
  if (!(s > 0.0)) throw InvalidArgument("traveling_bump: width must be positive");
  return std::make_shared<TravelingBump>(amplitude, x0, s);
}

FieldPtr sum_field(std::vector<FieldPtr> terms) {
  for (const auto& f : terms) require_field(f, "sum_field");
  return std::make_shared<SumField>(std::move(terms));
}

FieldPtr product_field(FieldPtr a, FieldPtr b) {
  require_field(a, "product_field");
  require_field(b, "product_field");
  return std::make_shared<ProductField>(std::move(a), std::move(b));
}

FieldPtr scaled_field(FieldPtr base, double factor) {
  require_field(base, "scaled_field");
  return std::make_shared<ScaledField>(std::move(base), factor);
}

FieldPtr rescaled_field(FieldPtr base, double lambda, double k) {
  require_field(base, "rescaled_field");
  if (!(lambda > 0.0)) throw InvalidArgument("rescaled_field: lambda must be positive");
  return std::make_shared<RescaledField>(std::move(base), lambda, k);
}

FieldPtr time_shifted_field(FieldPtr base, double shift) {
  require_field(base, "time_shifted_field");
  return std::make_shared<TimeShiftedField>(std::move(base), shift);
}

// ---------------------------------------------------------------------------
// Discrete fields

DiscreteField::DiscreteField(int n, double dr, std::size_t nodes) : n_(n), dr_(dr), nodes_(nodes) {
  if (n < 1) throw InvalidArgument("DiscreteField: dimension must be >= 1");
  if (!(dr > 0.0)) throw InvalidArgument("DiscreteField: dr must be positive");
  if (nodes < 4) throw InvalidArgument("DiscreteField: need at least 4 radial nodes");
}

void DiscreteField::append_level(double t, std::span<const double> phi,
                                 std::span<const double> phi_t) {
  if (phi.size() != nodes_ || phi_t.size() != nodes_)
    throw InvalidArgument("DiscreteField: level has the wrong number of nodes");
  if (!times_.empty() && !(t > times_.back()))
    throw InvalidArgument("DiscreteField: levels must have increasing times");
  times_.push_back(t);
  phi_.insert(phi_.end(), phi.begin(), phi.end());
  phi_t_.insert(phi_t_.end(), phi_t.begin(), phi_t.end());
}

std::span<const double> DiscreteField::phi(std::size_t m) const {
  if (m >= times_.size()) throw DomainError("DiscreteField: level index out of range");
  return {phi_.data() + m * nodes_, nodes_};
}

std::span<const double> DiscreteField::phi_t(std::size_t m) const {
  if (m >= times_.size()) throw DomainError("DiscreteField: level index out of range");
  return {phi_t_.data() + m * nodes_, nodes_};
}

FieldSample DiscreteField::node_sample(std::size_t m, std::size_t j) const {
  const auto u = phi(m);
  if (j >= nodes_) throw DomainError("DiscreteField: node index out of range");
  double ur = 0.0;
  if (j == 0) {
    ur = 0.0;
  } else if (j + 1 == nodes_) {
    ur = (3.0 * u[j] - 4.0 * u[j - 1] + u[j - 2]) / (2.0 * dr_);
  } else {
    ur = (u[j + 1] - u[j - 1]) / (2.0 * dr_);
  }
  return {u[j], phi_t(m)[j], ur};
}

double DiscreteField::node_box(std::size_t m, std::size_t j) const {
  if (m == 0 || m + 1 >= times_.size())
    throw DomainError("DiscreteField: box operator needs a level on each side");
  if (j + 1 >= nodes_) throw DomainError("DiscreteField: box operator has no stencil at r = R");
  const double h1 = times_[m] - times_[m - 1];
  const double h2 = times_[m + 1] - times_[m];
  const double um = phi(m - 1)[j];
  const double u0 = phi(m)[j];
  const double up = phi(m + 1)[j];
  const double utt = 2.0 * (h1 * up - (h1 + h2) * u0 + h2 * um) / (h1 * h2 * (h1 + h2));
  const auto u = phi(m);
  const double dr2 = dr_ * dr_;
  if (j == 0) return -utt + n_ * 2.0 * (u[1] - u[0]) / dr2;
  const double r = dr_ * static_cast<double>(j);
  const double urr = (u[j + 1] - 2.0 * u[j] + u[j - 1]) / dr2;
  const double ur = (u[j + 1] - u[j - 1]) / (2.0 * dr_);
  return -utt + urr + (n_ - 1) * ur / r;
}

namespace {

struct CubicWeights {
  std::array<double, 4> w;
  std::array<double, 4> dw;
};

// Lagrange basis on the nodes 0, 1, 2, 3 evaluated at x.
CubicWeights cubic_weights(double x) {
  const double a = x, b = x - 1.0, c = x - 2.0, d = x - 3.0;
  return {{-b * c * d / 6.0, a * c * d / 2.0, -a * b * d / 2.0, a * b * c / 6.0},
          {-(c * d + b * d + b * c) / 6.0, (c * d + a * d + a * c) / 2.0,
           -(b * d + a * d + a * b) / 2.0, (b * c + a * c + a * b) / 6.0}};
}

}  // namespace

FieldSample DiscreteField::sample_level(std::size_t m, double r) const {
  const auto u = phi(m);
  const auto v = phi_t(m);
  const long last = static_cast<long>(nodes_) - 1;
  long j0 = static_cast<long>(std::floor(r / dr_));
  j0 = std::clamp(j0, 0L, last - 1);
  const long base = std::min(j0 - 1, last - 3);
  const CubicWeights cw = cubic_weights(r / dr_ - static_cast<double>(base));
  FieldSample s;
  for (int k = 0; k < 4; ++k) {
    const auto idx = static_cast<std::size_t>(std::abs(base + k));
    s.phi += cw.w[k] * u[idx];
    s.phi_t += cw.w[k] * v[idx];
    s.phi_r += cw.dw[k] * u[idx];
  }
  s.phi_r /= dr_;
  return s;
}

std::size_t DiscreteField::nearest_level(double t) const {
  if (times_.empty()) throw DomainError("DiscreteField: no time levels");
  const auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 0;
  if (it == times_.end()) return times_.size() - 1;
  const auto hi = static_cast<std::size_t>(it - times_.begin());
  return (t - times_[hi - 1] <= times_[hi] - t) ? hi - 1 : hi;
}

FieldSample DiscreteField::sample(double t, double r) const {
  if (times_.empty()) throw DomainError("DiscreteField: no time levels");
  const double rmax = radius();
  const double rtol = 1e-12 * rmax;
  if (!(r >= -rtol && r <= rmax + rtol))
    throw DomainError("DiscreteField: r = " + format_real(r) + " outside [0, " + format_real(rmax) +
                      "]");
  r = std::clamp(r, 0.0, rmax);
  const double t0 = times_.front();
  const double t1 = times_.back();
  const double ttol = 1e-12 * std::max({1.0, std::abs(t0), std::abs(t1)});
  if (!(t >= t0 - ttol && t <= t1 + ttol))
    throw DomainError("DiscreteField: t = " + format_real(t) + " outside the recorded range [" +
                      format_real(t0) + ", " + format_real(t1) + "]");
  const std::size_t m = nearest_level(t);
  if (std::abs(t - times_[m]) <= ttol || times_.size() == 1) return sample_level(m, r);
  const std::size_t lo = times_[m] <= t ? m : m - 1;
  const FieldSample a = sample_level(lo, r);
  const FieldSample b = sample_level(lo + 1, r);
  const double h = times_[lo + 1] - times_[lo];
  const double s = (t - times_[lo]) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2,
               h11 = s3 - s2;
  const double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1, d01 = -6 * s2 + 6 * s,
               d11 = 3 * s2 - 2 * s;
  FieldSample out;
  out.phi = h00 * a.phi + h10 * h * a.phi_t + h01 * b.phi + h11 * h * b.phi_t;
  out.phi_t = (d00 * a.phi + d01 * b.phi) / h + d10 * a.phi_t + d11 * b.phi_t;
  out.phi_r = (1.0 - s) * a.phi_r + s * b.phi_r;
  return out;
}

DiscreteField DiscreteField::from_closed_form(const Field& field, int n, double dr,
                                              std::size_t nodes, std::span<const double> times) {
  DiscreteField out(n, dr, nodes);
  std::vector<double> u(nodes), v(nodes);
  for (double t : times) {
    for (std::size_t j = 0; j < nodes; ++j) {
      const FieldSample s = field.sample(t, dr * static_cast<double>(j));
      u[j] = s.phi;
      v[j] = s.phi_t;
    }
    out.append_level(t, u, v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Operators

double gradient_norm_sq(const Field& field, double t, double r) {
  const FieldSample s = field.sample(t, r);
  return s.phi_t * s.phi_t + s.phi_r * s.phi_r;
}

double gradient_norm_sq(const DiscreteField& field, std::size_t m, std::size_t j) {
  const FieldSample s = field.node_sample(m, j);
  return s.phi_t * s.phi_t + s.phi_r * s.phi_r;
}

double box_operator(const ManufacturedField& field, int n, double t, double r) {
  if (n < 1) throw InvalidArgument("box_operator: dimension must be >= 1");
  if (r < 0.0) throw DomainError("box_operator: negative radius");
  const FieldJet j = field.jet(t, r);
  if (r == 0.0) return -j.phi_tt + n * j.phi_rr;
  return -j.phi_tt + j.phi_rr + (n - 1) * j.phi_r / r;
}

double box_operator(const DiscreteField& field, std::size_t m, std::size_t j) {
  return field.node_box(m, j);
}

double nonlinear_residual(const ManufacturedField& field, int n, const PotentialSpec& V, double p,
                          double t, double r) {
  const double u = field.jet(t, r).phi;
  return box_operator(field, n, t, r) + V.value(t, r) * signed_pow(u, p);
}

double nonlinear_residual(const DiscreteField& field, const PotentialSpec& V, double p,
                          std::size_t m, std::size_t j) {
  const double u = field.phi(m)[j];
  const double r = field.dr() * static_cast<double>(j);
  return field.node_box(m, j) + V.value(field.time(m), r) * signed_pow(u, p);
}

// ---------------------------------------------------------------------------
// Snapshot files

double Snapshot::dr() const {
  if (r.size() < 2) throw InvalidArgument("snapshot: fewer than two rows");
  return r[1] - r[0];
}

void write_snapshot(std::ostream& out, const Snapshot& snap) {
  if (snap.r.size() != snap.phi.size() || snap.r.size() != snap.phi_t.size())
    throw InvalidArgument("snapshot: column lengths differ");
  out << "# " << snap.n << ' ' << format_real(snap.p) << ' ' << format_real(snap.t) << '\n';
  for (std::size_t j = 0; j < snap.r.size(); ++j)
    out << format_real(snap.r[j]) << ' ' << format_real(snap.phi[j]) << ' '
        << format_real(snap.phi_t[j]) << '\n';
  if (!out) throw IoError("snapshot: write failed");
}

void write_snapshot(const std::string& path, const Snapshot& snap) {
  std::ofstream out(path);
  if (!out) throw IoError("snapshot: cannot open " + path + " for writing");
  write_snapshot(out, snap);
}

Snapshot read_snapshot(std::istream& in) {
  Snapshot snap;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    if (!header) {
      char hash = 0;
      row >> hash >> snap.n >> snap.p >> snap.t;
      if (hash != '#' || row.fail())
        throw InvalidArgument("snapshot: first line must be '# n p t'");
      header = true;
      continue;
    }
    double r = 0, u = 0, v = 0;
    row >> r >> u >> v;
    if (row.fail()) throw InvalidArgument("snapshot: malformed row '" + line + "'");
    snap.r.push_back(r);
    snap.phi.push_back(u);
    snap.phi_t.push_back(v);
  }
  if (in.bad()) throw IoError("snapshot: read failed");
  if (!header) throw InvalidArgument("snapshot: missing header");
  if (snap.n < 1) throw InvalidArgument("snapshot: dimension must be >= 1");
  if (snap.r.size() < 4) throw InvalidArgument("snapshot: need at least 4 rows");
  const double dr = snap.dr();
  if (!(dr > 0.0) || std::abs(snap.r[0]) > 1e-12 * dr)
    throw InvalidArgument("snapshot: grid must start at r = 0 and increase");
  for (std::size_t j = 1; j < snap.r.size(); ++j)
    if (std::abs(snap.r[j] - dr * static_cast<double>(j)) > 1e-9 * dr * static_cast<double>(j))
      throw InvalidArgument("snapshot: radial grid is not uniform");
  return snap;
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("snapshot: cannot open " + path);
  return read_snapshot(in);
}

}  // namespace conewave
