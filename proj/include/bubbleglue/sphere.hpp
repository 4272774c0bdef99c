#pragma once
// Charts and cutoff functions on the round sphere, plus the log-polar
// quadrature rule used for all plane/sphere integrals.

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace bubbleglue {

using cplx = std::complex<double>;

class GeomError : public std::runtime_error {
public:
  explicit GeomError(const std::string& m) : std::runtime_error(m) {}
};

// A point of the unit sphere, held as a stereographic-chart coordinate.
// The north chart sends 0 to the north pole, the south chart sends 0 to the
// south pole (written "infinity").  Both charts are centered projections;
// the same point has south coordinate conj(1/z) when its north coordinate
// is z != 0.
enum class Chart { north, south };

struct SpherePoint {
  Chart chart = Chart::north;
  cplx coord = 0.0;

  static SpherePoint north_coord(cplx z) { return {Chart::north, z}; }
  static SpherePoint south_coord(cplx w) { return {Chart::south, w}; }
  static SpherePoint infinity() { return {Chart::south, 0.0}; }
  bool is_infinity() const { return chart == Chart::south && coord == 0.0; }
};

// Embedding into R^3 (unit norm).
Eigen::Vector3d embed(const SpherePoint& p);

// Re-express in the other chart.  Throws GeomError("pole") when coord == 0,
// since the other chart's coordinate would be infinite there.
SpherePoint other_chart(const SpherePoint& p);

// Express in the north chart when possible (|north coord| finite).
cplx north_coordinate(const SpherePoint& p);  // throws GeomError("pole") at infinity

// Distance in R^3 between two sphere points (chart independent).
double sphere_chord(const SpherePoint& a, const SpherePoint& b);

// Translation chart: z - x in the north chart.  Throws GeomError("pole") at
// the point at infinity.
cplx phi(cplx x, const SpherePoint& z);

// ---------------------------------------------------------------------------
// Cutoffs.
//
// beta: smooth nondecreasing step, 0 for t<=1, 1 for t>=2, strictly
// increasing in between, built from exp(-1/s) bump primitives.
double beta(double t);
double beta_prime(double t);
// beta_r(t) = beta(t / sqrt(r)); derivative support is [sqrt r, 2 sqrt r].
double beta_scaled(double r, double t);
double beta_scaled_prime(double r, double t);
// Measured sup of |beta'| and |beta''| (dense sampling, cached).
double beta_c0_constant();

// Logarithmic-ramp cutoff: 0 for r <= exp(-1/eps), 1 for r >= 1,
// 1 + eps*ln r in between, with C^1 corner rounding that keeps the ramp
// inside [exp(-1/eps), 1].
double beta_log_ramp(double r, double eps);
double beta_log_ramp_prime(double r, double eps);

struct CutoffSpec {
  enum class Kind { beta, beta_r, beta_ms };
  Kind kind = Kind::beta;
  double r = 1.0;    // for beta_r
  double eps = 0.1;  // for beta_ms
};

double eval_cutoff(const CutoffSpec& spec, double t);
double eval_cutoff_deriv(const CutoffSpec& spec, double t);

// ---------------------------------------------------------------------------
// Quadrature.

struct QuadratureSpec {
  int radial_nodes = 512;
  int angular_nodes = 256;
  std::string scheme = "trapezoid";  // or "gauss"
};

// Integral over the plane of f(z) dx dy computed in (ln r, theta)
// coordinates over ln r in [smin, smax].  The rule is the trapezoid rule in
// both directions (spectrally accurate for smooth integrands decaying at the
// ends); "gauss" uses Gauss-Legendre nodes radially.
cplx integrate_plane(const std::function<cplx(cplx)>& f, const QuadratureSpec& q,
                     double smin = -18.0, double smax = 18.0);
double integrate_plane_real(const std::function<double(cplx)>& f, const QuadratureSpec& q,
                            double smin = -18.0, double smax = 18.0);

// Energy of the rounded logarithmic-ramp cutoff: integral over the plane of
// |d/dr beta_log_ramp|^2 r dr dtheta.  Closed-form reference available in
// tests; always <= 8*eps.
double ms_cutoff_energy(double eps, const QuadratureSpec& q);

}  // namespace bubbleglue
