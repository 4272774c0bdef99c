#include "bubbleglue/analysis.hpp"

#include <cmath>
#include <map>
#include <random>

namespace bubbleglue {

namespace {

struct Accum {
  double tp = 0;  // integral of |s|^p
  double t2 = 0;  // integral of rho^{-(p-2)/p} |s|^2
};

void check_p(double p) {
  if (!(p > 2.0)) throw GeomError("modified norm: p must exceed 2");
}

// per-component accumulation from pointwise magnitudes
double reduce_norm(const GluedGrid& grid, const std::vector<double>& mag,
                   SectionKind kind, double p) {
  const double alpha = (p - 2.0) / p;
  std::map<int, Accum> per;
  const auto& pts = grid.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const GridPoint& pt = pts[i];
    const double m = mag[i];
    Accum& a = per[pt.component];
    const double rw = std::pow(pt.rho, -alpha);
    if (kind == SectionKind::vector_field) {
      a.tp += std::pow(m, p) * pt.sigma * pt.sigma * pt.weight;
      a.t2 += rw * m * m * pt.sigma * pt.sigma * pt.weight;
    } else {
      a.tp += std::pow(m, p) * std::pow(pt.sigma, 2.0 - p) * pt.weight;
      a.t2 += rw * m * m * pt.weight;
    }
  }
  double total = 0;
  for (const auto& [comp, a] : per)
    total += 0.5 * (std::pow(a.tp, 1.0 / p) + std::sqrt(a.t2));
  return total;
}

std::vector<double> magnitudes(const DiscreteSection& s) {
  std::vector<double> m(s.samples.size());
  for (std::size_t i = 0; i < s.samples.size(); ++i) m[i] = s.samples[i].norm();
  return m;
}

// sample at nb re-expressed in the gauge of the representative P0
CVec align_gauge(const CVec& sample, const CVec& Pnb, const CVec& P0) {
  const cplx c = Pnb.dot(P0);
  const double a = std::abs(c);
  if (!(a > 0)) return sample;  // antipodal representatives: no alignment
  return (c / a) * sample;
}

}  // namespace

double modified_norm(const GluedGrid& grid, const DiscreteSection& s, double p) {
  check_p(p);
  if (s.samples.size() != grid.size())
    throw GeomError("modified norm: section and grid size mismatch");
  return reduce_norm(grid, magnitudes(s), s.kind, p);
}

std::vector<std::pair<CVec, CVec>> covariant_derivative(
    const GluedGrid& grid, const DiscreteSection& s) {
  if (s.kind != SectionKind::vector_field)
    throw GeomError("covariant derivative: vector fields only");
  const auto& pts = grid.points();
  std::vector<std::pair<CVec, CVec>> out(pts.size());
  auto diff = [&](int idx, int dj, int dk, double step) -> CVec {
    const CVec& P0 = pts[std::size_t(idx)].P;
    const int np = grid.neighbor(idx, dj, dk);
    const int nm = grid.neighbor(idx, -dj, -dk);
    CVec d;
    if (np >= 0 && nm >= 0) {
      d = (align_gauge(s.samples[std::size_t(np)], pts[std::size_t(np)].P, P0) -
           align_gauge(s.samples[std::size_t(nm)], pts[std::size_t(nm)].P, P0)) /
          (2.0 * step);
    } else if (np >= 0) {
      d = (align_gauge(s.samples[std::size_t(np)], pts[std::size_t(np)].P, P0) -
           s.samples[std::size_t(idx)]) /
          step;
    } else {
      d = (s.samples[std::size_t(idx)] -
           align_gauge(s.samples[std::size_t(nm)], pts[std::size_t(nm)].P, P0)) /
          step;
    }
    return project_tangent(P0, d);
  };
  for (int idx = 0; idx < int(pts.size()); ++idx) {
    out[std::size_t(idx)] = {diff(idx, 1, 0, grid.ds()),
                             diff(idx, 0, 1, grid.dt())};
  }
  return out;
}

double modified_norm_p1(const GluedGrid& grid, const DiscreteSection& s,
                        double p) {
  check_p(p);
  if (s.samples.size() != grid.size())
    throw GeomError("modified norm: section and grid size mismatch");
  const double base = reduce_norm(grid, magnitudes(s), s.kind, p);
  const auto grad = covariant_derivative(grid, s);
  const auto& pts = grid.points();
  std::vector<double> m(pts.size());
  for (int idx = 0; idx < int(pts.size()); ++idx) {
    // flat z-chart coefficient of the derivative one-form: the reducer
    // applies the conformal factors of the glued metric itself
    const double r = std::abs(pts[std::size_t(idx)].z - grid.chart_center(idx));
    m[std::size_t(idx)] = std::sqrt(grad[std::size_t(idx)].first.squaredNorm() +
                                    grad[std::size_t(idx)].second.squaredNorm()) /
                          r;
  }
  return base + reduce_norm(grid, m, SectionKind::form_01, p);
}

double c0_norm(const GluedGrid& grid, const DiscreteSection& s) {
  std::map<int, double> per;
  const auto& pts = grid.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double m = s.samples[i].norm();
    if (s.kind == SectionKind::form_01) m /= pts[i].sigma;
    double& v = per[pts[i].component];
    v = std::max(v, m);
  }
  double total = 0;
  for (const auto& [comp, v] : per) total += v;
  return total;
}

namespace {

struct MapDeriv {
  CVec dz, dzb;  // tangent-valued coefficients in the source north chart
};

MapDeriv glued_map_derivative(const GluingMap& g, int comp, cplx z) {
  const TrackedPoint t = g.forward(SurfacePoint::north(comp, z));
  const RationalMap& u = g.parameter().base.maps.at(t.pos.component);
  const RationalMap ur = t.pos.inv ? u.reversed() : u;
  const CVec V = ur.raw(t.pos.w);
  const double vn = V.norm();
  if (!(vn > 0)) throw GeomError("glued map: common zero at sample point");
  const CVec P = V / vn;
  const CVec dP = project_tangent(P, ur.raw_deriv(t.pos.w)) / vn;
  return {dP * t.jet.dz, dP * t.jet.dzb};
}

}  // namespace

DiscreteSection glued_dbar_section(const GluedGrid& grid) {
  return sample_section(grid, SectionKind::form_01, [&](const GridPoint& pt) {
    return glued_map_derivative(grid.gluing(), pt.component, pt.z).dzb;
  });
}

double glued_du_c0(const GluedGrid& grid) {
  std::map<int, double> per;
  for (const GridPoint& pt : grid.points()) {
    const MapDeriv d = glued_map_derivative(grid.gluing(), pt.component, pt.z);
    const double m = (d.dz.norm() + d.dzb.norm()) / pt.sigma;
    double& v = per[pt.component];
    v = std::max(v, m);
  }
  double total = 0;
  for (const auto& [comp, v] : per) total += v;
  return total;
}

PregluingReport check_pregluing_estimates(const GluedGrid& grid, double p) {
  check_p(p);
  PregluingReport rep;
  rep.total_v = grid.gluing().parameter().total();
  rep.du_c0 = glued_du_c0(grid);
  rep.dbar_norm = modified_norm(grid, glued_dbar_section(grid), p);
  rep.ratio =
      rep.total_v > 0 ? rep.dbar_norm / std::pow(rep.total_v, 1.0 / p) : 0.0;
  return rep;
}

DiscreteSection random_smooth_section(const GluedGrid& grid, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n1 = int(grid.points().front().P.size());
  // matrix coefficients act on the representative itself, so the section is
  // independent of the phase gauge of P and smooth across chart switches
  std::array<Eigen::MatrixXcd, 4> A;
  for (auto& M : A) {
    M.resize(n1, n1);
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n1; ++j) M(i, j) = cplx(gauss(rng), gauss(rng));
  }
  return sample_section(
      grid, SectionKind::vector_field, [&](const GridPoint& pt) {
        const Eigen::Vector3d e = embed(SpherePoint::north_coord(pt.z));
        const CVec w =
            A[0] * pt.P + e[0] * (A[1] * pt.P) + e[1] * (A[2] * pt.P) +
            e[2] * (A[3] * pt.P);
        return project_tangent(pt.P, w);
      });
}

SobolevReport check_sobolev_c0(const GluedGrid& grid, double p, int trials,
                               unsigned seed) {
  check_p(p);
  SobolevReport rep;
  rep.trials = trials;
  rep.seed = seed;
  for (int t = 0; t < trials; ++t) {
    DiscreteSection xi = random_smooth_section(grid, seed + unsigned(t));
    const double denom = modified_norm_p1(grid, xi, p);
    if (!(denom > 0)) continue;
    rep.max_ratio = std::max(rep.max_ratio, c0_norm(grid, xi) / denom);
  }
  return rep;
}

}  // namespace bubbleglue
