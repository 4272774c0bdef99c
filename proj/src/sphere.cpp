#include "bubbleglue/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

namespace bubbleglue {

namespace {
double sq(double x) { return x * x; }
}  // namespace

Eigen::Vector3d embed(const SpherePoint& p) {
  const double r2 = std::norm(p.coord);
  const cplx horiz = 2.0 * p.coord / (1.0 + r2);
  const double vert = (1.0 - r2) / (1.0 + r2);
  if (p.chart == Chart::north) return {horiz.real(), horiz.imag(), vert};
  return {horiz.real(), horiz.imag(), -vert};
}

SpherePoint other_chart(const SpherePoint& p) {
  if (p.coord == 0.0) throw GeomError("pole");
  return {p.chart == Chart::north ? Chart::south : Chart::north,
          std::conj(1.0 / p.coord)};
}

cplx north_coordinate(const SpherePoint& p) {
  if (p.chart == Chart::north) return p.coord;
  if (p.coord == 0.0) throw GeomError("pole");
  return std::conj(1.0 / p.coord);
}

double sphere_chord(const SpherePoint& a, const SpherePoint& b) {
  return (embed(a) - embed(b)).norm();
}

cplx phi(cplx x, const SpherePoint& z) { return north_coordinate(z) - x; }

// ---------------------------------------------------------------------------
// Cutoffs.

namespace {
// bump primitive: exp(-1/s) for s > 0, 0 otherwise (smooth at 0)
double bump(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }
double bump_prime(double s) { return s > 0.0 ? std::exp(-1.0 / s) / (s * s) : 0.0; }
}  // namespace

double beta(double t) {
  if (t <= 1.0) return 0.0;
  if (t >= 2.0) return 1.0;
  const double a = bump(t - 1.0), b = bump(2.0 - t);
  return a / (a + b);
}

double beta_prime(double t) {
  if (t <= 1.0 || t >= 2.0) return 0.0;
  const double a = bump(t - 1.0), b = bump(2.0 - t);
  const double ap = bump_prime(t - 1.0), bp = -bump_prime(2.0 - t);
  return (ap * b - a * bp) / sq(a + b);
}

double beta_scaled(double r, double t) {
  if (!(r > 0.0)) throw GeomError("beta_scaled: r must be positive");
  return beta(t / std::sqrt(r));
}

double beta_scaled_prime(double r, double t) {
  if (!(r > 0.0)) throw GeomError("beta_scaled: r must be positive");
  const double s = std::sqrt(r);
  return beta_prime(t / s) / s;
}

double beta_c0_constant() {
  static const double c = [] {
    double m = 0.0;
    const int n = 200000;
    const double h = 1.0 / n;
    for (int k = 0; k <= n; ++k) {
      const double t = 1.0 + k * h;
      m = std::max(m, std::abs(beta_prime(t)));
      // second derivative via centered differences on beta'
      const double d2 = (beta_prime(t + 1e-5) - beta_prime(t - 1e-5)) / 2e-5;
      m = std::max(m, std::abs(d2));
    }
    return m;
  }();
  return c;
}

namespace {
// The rounded logarithmic ramp is defined through its radial log-derivative
// profile g'(s), s = ln r: a trapezoid supported on [-1/eps, 0] with linear
// ramps of width 2w at both ends (w = 0.01/eps) and plateau height
// eps' = eps / (1 - 2 eps w), so that the total rise is exactly 1.
struct RampProfile {
  double s0, w, plateau;
};
RampProfile ramp_profile(double eps) {
  if (!(eps > 0.0) || !(eps <= 0.5))
    throw GeomError("beta_log_ramp: eps must lie in (0, 0.5]");
  const double w = 0.01 / eps;
  return {-1.0 / eps, w, eps / (1.0 - 2.0 * eps * w)};
}
double ramp_gprime(const RampProfile& rp, double s) {
  const double s1 = 0.0;
  if (s <= rp.s0 || s >= s1) return 0.0;
  if (s < rp.s0 + 2.0 * rp.w) return rp.plateau * (s - rp.s0) / (2.0 * rp.w);
  if (s > s1 - 2.0 * rp.w) return rp.plateau * (s1 - s) / (2.0 * rp.w);
  return rp.plateau;
}
double ramp_g(const RampProfile& rp, double s) {
  const double s1 = 0.0;
  if (s <= rp.s0) return 0.0;
  if (s >= s1) return 1.0;
  const double tw = 2.0 * rp.w;
  double acc = 0.0;
  // up-ramp triangle contribution
  const double a = std::min(s - rp.s0, tw);
  acc += rp.plateau * a * a / (2.0 * tw);
  if (s > rp.s0 + tw) acc += rp.plateau * (std::min(s, s1 - tw) - (rp.s0 + tw));
  if (s > s1 - tw) {
    const double b = s1 - s;  // remaining down-ramp length
    acc += rp.plateau * (tw - b * b / tw) / 2.0;
  }
  return acc;
}
}  // namespace

double beta_log_ramp(double r, double eps) {
  if (!(r >= 0.0)) throw GeomError("beta_log_ramp: r must be nonnegative");
  if (r == 0.0) return 0.0;
  return ramp_g(ramp_profile(eps), std::log(r));
}

double beta_log_ramp_prime(double r, double eps) {
  if (!(r > 0.0)) return 0.0;
  return ramp_gprime(ramp_profile(eps), std::log(r)) / r;
}

double eval_cutoff(const CutoffSpec& spec, double t) {
  switch (spec.kind) {
    case CutoffSpec::Kind::beta: return beta(t);
    case CutoffSpec::Kind::beta_r: return beta_scaled(spec.r, t);
    case CutoffSpec::Kind::beta_ms: return beta_log_ramp(t, spec.eps);
  }
  throw GeomError("eval_cutoff: unknown kind");
}

double eval_cutoff_deriv(const CutoffSpec& spec, double t) {
  switch (spec.kind) {
    case CutoffSpec::Kind::beta: return beta_prime(t);
    case CutoffSpec::Kind::beta_r: return beta_scaled_prime(spec.r, t);
    case CutoffSpec::Kind::beta_ms: return beta_log_ramp_prime(t, spec.eps);
  }
  throw GeomError("eval_cutoff: unknown kind");
}

// ---------------------------------------------------------------------------
// Quadrature.

namespace {
// Gauss-Legendre nodes/weights on [-1,1] via the Jacobi-matrix eigenproblem.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  x.resize(n);
  w.resize(n);
  for (int k = 0; k < n; ++k) {
    x[k] = es.eigenvalues()(k);
    w[k] = 2.0 * sq(es.eigenvectors()(0, k));
  }
}

// Radial nodes and weights in s = ln r over [smin, smax].
void radial_rule(const QuadratureSpec& q, double smin, double smax,
                 std::vector<double>& s, std::vector<double>& w) {
  if (q.radial_nodes < 2 || q.angular_nodes < 1)
    throw GeomError("quadrature: too few nodes");
  const int n = q.radial_nodes;
  if (q.scheme == "gauss") {
    std::vector<double> x, gw;
    gauss_legendre(n, x, gw);
    s.resize(n);
    w.resize(n);
    for (int k = 0; k < n; ++k) {
      s[k] = 0.5 * (smin + smax) + 0.5 * (smax - smin) * x[k];
      w[k] = 0.5 * (smax - smin) * gw[k];
    }
  } else if (q.scheme == "trapezoid") {
    const double h = (smax - smin) / (n - 1);
    s.resize(n);
    w.assign(n, h);
    for (int k = 0; k < n; ++k) s[k] = smin + k * h;
    w.front() = w.back() = h / 2.0;
  } else {
    throw GeomError("quadrature: unknown scheme '" + q.scheme + "'");
  }
}
}  // namespace

cplx integrate_plane(const std::function<cplx(cplx)>& f, const QuadratureSpec& q,
                     double smin, double smax) {
  std::vector<double> s, w;
  radial_rule(q, smin, smax, s, w);
  const int m = q.angular_nodes;
  const double dth = 2.0 * M_PI / m;
  cplx acc = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double r = std::exp(s[j]);
    cplx ring = 0.0;
    for (int k = 0; k < m; ++k) {
      const double th = (k + 0.5) * dth;
      ring += f(cplx(r * std::cos(th), r * std::sin(th)));
    }
    // dx dy = r^2 ds dtheta in log-polar coordinates
    acc += ring * (w[j] * dth * r * r);
  }
  return acc;
}

double integrate_plane_real(const std::function<double(cplx)>& f, const QuadratureSpec& q,
                            double smin, double smax) {
  return integrate_plane([&](cplx z) { return cplx(f(z), 0.0); }, q, smin, smax).real();
}

double ms_cutoff_energy(double eps, const QuadratureSpec& q) {
  const RampProfile rp = ramp_profile(eps);
  // The integrand |d/dr beta|^2 r dr dtheta equals g'(s)^2 ds dtheta in
  // s = ln r, which stays well scaled even where r itself underflows.
  // Resolve the ramp corners with at least ~10 nodes per half-ramp.
  QuadratureSpec qs = q;
  const double smin = rp.s0 - 0.5, smax = 0.5;
  qs.radial_nodes = std::max<int>(
      q.radial_nodes, static_cast<int>(std::ceil((smax - smin) * 10.0 / rp.w)));
  std::vector<double> s, w;
  radial_rule(qs, smin, smax, s, w);
  double acc = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) acc += w[j] * sq(ramp_gprime(rp, s[j]));
  return 2.0 * M_PI * acc;
}

}  // namespace bubbleglue
