#pragma once
// Rational maps from the sphere to complex projective space, evaluated in the
// unit-vector model: a point of P^n is a unit vector in C^{n+1} up to phase,
// tangent vectors at P are Hermitian-orthogonal to P.  Includes Fubini-Study
// distance, exponential map, parallel transport, derivatives, and energy.

#include <Eigen/Dense>

#include "bubbleglue/sphere.hpp"

namespace bubbleglue {

using CVec = Eigen::VectorXcd;

// A degree-d holomorphic (rational) map S^2 -> P^n, stored as n+1 polynomial
// components in the north-chart coordinate: V_i(z) = sum_k coeffs(i,k) z^k.
// The tuple must have no common root ("gcd-free"), so [V(z)] is defined
// everywhere, including at infinity via the reversed coefficients.
struct RationalMap {
  int degree = 0;
  Eigen::MatrixXcd coeffs;  // (n+1) x (degree+1)

  int target_dim() const { return static_cast<int>(coeffs.rows()) - 1; }
  static RationalMap constant(const CVec& value);
  static RationalMap identity_p1();  // [z : 1]

  // Coefficients of w^d V(1/w): the same map near infinity in w = 1/z.
  RationalMap reversed() const;

  CVec raw(cplx z) const;        // V(z)
  CVec raw_deriv(cplx z) const;  // V'(z)

  // Throws GeomError on structural problems; checks for a common root at
  // desk scale (roots of one component tested against the others).
  void validate() const;
};

// Raw evaluation data at a point, in the numerically safe chart: for
// |z| <= 1 the map itself at z, otherwise the reversed map at w = 1/z.
// P = V/|V| is the smooth local gauge used for all internal geometry.
struct GaugedPoint {
  bool inverted = false;
  cplx w = 0.0;  // coordinate actually used (z or 1/z)
  CVec V;        // raw value in that chart
  CVec P;        // unit representative V/|V|
  double vnorm = 0.0;
};

GaugedPoint gauged_eval(const RationalMap& u, cplx z_north);
GaugedPoint gauged_eval(const RationalMap& u, const SpherePoint& z);

// Unit representative with the first significantly nonzero entry rotated to
// the positive real axis; used for I/O and cross-gauge comparisons only.
CVec phase_normalized(const CVec& v);

// Point of P^n at z, phase-normalized.
CVec eval_map(const RationalMap& u, const SpherePoint& z);

// Fubini-Study geometry in the unit-vector model.
double fs_distance(const CVec& p, const CVec& q);
CVec project_tangent(const CVec& P, const CVec& xi);
CVec fs_exp(const CVec& P, const CVec& xi);
// Parallel transport of w along the geodesic from P with unit initial
// velocity nu, for time t (closed form; unitary; inverse is t -> -t).
CVec fs_transport(const CVec& P, const CVec& nu, double t, const CVec& w);

// Holomorphic derivative of [V] as a tangent vector at P(z) in the chart the
// point was gauged in: pi_{P-perp}(V'(w))/|V(w)|.
CVec du_dz(const RationalMap& u, cplx z_north);

// Energy density e(z) with respect to dx dy in the north chart, normalized
// so that the total integral over the plane equals the degree.  Evaluated
// through the reversed map for |z| > 1 to avoid cancellation.
double energy_density(const RationalMap& u, cplx z_north);

// Total energy: integral of the density; equals the degree for valid maps.
double energy(const RationalMap& u, const QuadratureSpec& q);

// Roots of a complex polynomial sum_k c[k] z^k via the companion matrix;
// trailing near-zero coefficients are trimmed (those roots escape to
// infinity and are not reported).
std::vector<cplx> polynomial_roots(const Eigen::VectorXcd& c);

}  // namespace bubbleglue
