#include "bubbleglue/projective.hpp"

#include <algorithm>
#include <cmath>

namespace bubbleglue {

namespace {
constexpr double kCoeffTol = 1e-9;
}  // namespace

std::vector<cplx> polynomial_roots(const Eigen::VectorXcd& c) {
  const double scale = c.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) return {};
  int m = static_cast<int>(c.size()) - 1;
  while (m > 0 && std::abs(c[m]) < kCoeffTol * scale) --m;
  if (m <= 0) return {};
  Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(m, m);
  for (int k = 0; k < m - 1; ++k) comp(k + 1, k) = 1.0;
  for (int k = 0; k < m; ++k) comp(k, m - 1) = -c[k] / c[m];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
  std::vector<cplx> roots(m);
  for (int k = 0; k < m; ++k) roots[k] = es.eigenvalues()(k);
  return roots;
}

RationalMap RationalMap::constant(const CVec& value) {
  RationalMap u;
  u.degree = 0;
  u.coeffs = value;
  return u;
}

RationalMap RationalMap::identity_p1() {
  RationalMap u;
  u.degree = 1;
  u.coeffs.resize(2, 2);
  u.coeffs << 0.0, 1.0,  // z
      1.0, 0.0;          // 1
  return u;
}

RationalMap RationalMap::reversed() const {
  RationalMap r = *this;
  r.coeffs = coeffs.rowwise().reverse();
  return r;
}

CVec RationalMap::raw(cplx z) const {
  CVec v = coeffs.col(degree);
  for (int k = degree - 1; k >= 0; --k) v = v * z + coeffs.col(k);
  return v;
}

CVec RationalMap::raw_deriv(cplx z) const {
  if (degree == 0) return CVec::Zero(coeffs.rows());
  CVec v = coeffs.col(degree) * double(degree);
  for (int k = degree - 1; k >= 1; --k) v = v * z + coeffs.col(k) * double(k);
  return v;
}

void RationalMap::validate() const {
  if (coeffs.rows() < 2) throw GeomError("rational map: target dimension < 1");
  if (coeffs.cols() != degree + 1) throw GeomError("rational map: coefficient count");
  const double scale = coeffs.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) throw GeomError("rational map: all components zero");
  if (degree > 0 && coeffs.col(degree).cwiseAbs().maxCoeff() < kCoeffTol * scale)
    throw GeomError("rational map: degree drop (leading coefficients vanish)");
  // common-root test: roots of the first non-trivial component against the rest
  for (int i = 0; i <= target_dim(); ++i) {
    if (coeffs.row(i).cwiseAbs().maxCoeff() < kCoeffTol * scale) continue;
    for (cplx r : polynomial_roots(coeffs.row(i).transpose())) {
      // evaluate all components at the root in the numerically safe chart
      CVec v = std::abs(r) <= 1.0 ? raw(r) : reversed().raw(1.0 / r);
      if (v.norm() < 1e-7 * scale)
        throw GeomError("rational map: common root (not gcd-free)");
    }
    break;
  }
}

GaugedPoint gauged_eval(const RationalMap& u, cplx z_north) {
  GaugedPoint g;
  if (std::abs(z_north) <= 1.0) {
    g.inverted = false;
    g.w = z_north;
    g.V = u.raw(z_north);
  } else {
    g.inverted = true;
    g.w = 1.0 / z_north;
    g.V = u.reversed().raw(g.w);
  }
  g.vnorm = g.V.norm();
  if (!(g.vnorm > 0.0)) throw GeomError("rational map: common zero at evaluation point");
  g.P = g.V / g.vnorm;
  return g;
}

GaugedPoint gauged_eval(const RationalMap& u, const SpherePoint& z) {
  if (z.is_infinity()) {
    GaugedPoint g;
    g.inverted = true;
    g.w = 0.0;
    g.V = u.reversed().raw(0.0);
    g.vnorm = g.V.norm();
    if (!(g.vnorm > 0.0)) throw GeomError("rational map: common zero at infinity");
    g.P = g.V / g.vnorm;
    return g;
  }
  return gauged_eval(u, north_coordinate(z));
}

CVec phase_normalized(const CVec& v) {
  const double nrm = v.norm();
  if (!(nrm > 0.0)) throw GeomError("phase_normalized: zero vector");
  CVec p = v / nrm;
  for (int i = 0; i < p.size(); ++i) {
    const double a = std::abs(p[i]);
    if (a > 1e-8) return p * (std::conj(p[i]) / a);
  }
  // fall back to the largest entry
  int imax = 0;
  p.cwiseAbs().maxCoeff(&imax);
  return p * (std::conj(p[imax]) / std::abs(p[imax]));
}

CVec eval_map(const RationalMap& u, const SpherePoint& z) {
  return phase_normalized(gauged_eval(u, z).P);
}

double fs_distance(const CVec& p, const CVec& q) {
  const cplx c = p.dot(q);
  const double ac = std::abs(c);
  // arccos loses half the digits near 1; use the orthogonal component there
  if (ac * ac > 0.5) return std::asin(std::min(1.0, (q - p * c).norm()));
  return std::acos(std::min(1.0, ac));
}

CVec project_tangent(const CVec& P, const CVec& xi) { return xi - P * P.dot(xi); }

CVec fs_exp(const CVec& P, const CVec& xi) {
  const double t = xi.norm();
  if (t < 1e-300) return P;
  return std::cos(t) * P + (std::sin(t) / t) * xi;
}

CVec fs_transport(const CVec& P, const CVec& nu, double t, const CVec& w) {
  const cplx pw = P.dot(w), nw = nu.dot(w);
  return w + (std::cos(t) - 1.0) * (P * pw + nu * nw) +
         std::sin(t) * (nu * pw - P * nw);
}

CVec du_dz(const RationalMap& u, cplx z_north) {
  GaugedPoint g = gauged_eval(u, z_north);
  const CVec vp = g.inverted ? u.reversed().raw_deriv(g.w) : u.raw_deriv(g.w);
  return project_tangent(g.P, vp) / g.vnorm;
}

namespace {
double density_raw(const RationalMap& u, cplx z) {
  const CVec v = u.raw(z), vp = u.raw_deriv(z);
  const double v2 = v.squaredNorm(), vp2 = vp.squaredNorm();
  const double cross = std::norm(v.dot(vp));
  return std::max(0.0, v2 * vp2 - cross) / (M_PI * v2 * v2);
}
}  // namespace

double energy_density(const RationalMap& u, cplx z_north) {
  if (std::abs(z_north) <= 1.0) return density_raw(u, z_north);
  const cplx w = 1.0 / z_north;
  const double w2 = std::norm(w);
  return density_raw(u.reversed(), w) * w2 * w2;
}

double energy(const RationalMap& u, const QuadratureSpec& q) {
  return integrate_plane_real([&](cplx z) { return energy_density(u, z); }, q);
}

}  // namespace bubbleglue
