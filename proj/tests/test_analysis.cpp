#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "bubbleglue/analysis.hpp"

using namespace bubbleglue;
using doctest::Approx;

namespace {

RationalMap child_map(cplx x1) {
  RationalMap u;
  u.degree = 1;
  u.coeffs.resize(2, 2);
  u.coeffs << cplx(1, 0), x1, cplx(0, 0), cplx(1, 0);
  return u;
}

BubbleMap markless_chain(cplx x1) {
  BubbleMap b;
  b.curve.tree.tree = RootedTree::from_parent_map({{0, std::nullopt}, {1, 0}});
  b.curve.tree.node_pos = {{1, x1}};
  b.maps[0] = RationalMap::identity_p1();
  b.maps[1] = child_map(x1);
  return b;
}

BubbleMap single_sphere() {
  BubbleMap b;
  b.curve.tree.tree = RootedTree::from_parent_map({{0, std::nullopt}});
  b.maps[0] = RationalMap::identity_p1();
  return b;
}

// unit-length tangent field for a P^1 target
DiscreteSection unit_field(const GluedGrid& grid) {
  return sample_section(grid, SectionKind::vector_field,
                        [](const GridPoint& pt) {
                          CVec xi(2);
                          xi << std::conj(pt.P[1]), -std::conj(pt.P[0]);
                          return xi;
                        });
}

}  // namespace

TEST_CASE("weight field formulas") {
  BubbleMap b = markless_chain(cplx(0.5, 0.2));
  const cplx x(0.5, 0.2);
  const double dt = delta_blend(b.curve);
  CHECK(dt == Approx(0.25));
  // no necks: weight is 1 away from everything on the principal component
  GluingParameter p0{b, {}};
  CHECK(glued_rho(p0, dt, 0, x + cplx(2.0, 1.0)) == 1.0);
  CHECK(glued_lambda(p0, dt, 0, x + cplx(2.0, 1.0)) == 1.0);
  // surviving node: rho = r^2 inside delta_t, blended to 1 by 2 delta_t
  CHECK(glued_rho(p0, dt, 0, x + cplx(0.1, 0.0)) == Approx(0.01).epsilon(1e-14));
  const double rmid = 1.5 * dt;
  CHECK(glued_rho(p0, dt, 0, x + rmid) ==
        Approx(rmid * rmid + 0.5 * (1 - rmid * rmid)).epsilon(1e-14));
  CHECK(glued_rho(p0, dt, 0, x + 2.0 * dt) == 1.0);
  // kept non-root component: rho vanishes at its node at infinity
  CHECK(glued_rho(p0, dt, 1, cplx(100.0, 0.0)) == Approx(1e-4).epsilon(1e-12));
  CHECK(glued_rho(p0, dt, 1, cplx(0.05, 0.0)) == 1.0);
  // neck: rho = r^2 + |v|^2 / r^2 at the waist (exactly 2|v| at r = |v|^{1/2})
  const cplx v(1e-4, 0.0);
  GluingParameter pv{b, {{1, v}}};
  CHECK(glued_rho(pv, dt, 0, x + cplx(1e-2, 0.0)) ==
        Approx(2e-4).epsilon(1e-14));
  // rho >= |v| on the whole defect region
  for (double f : {0.5, 0.7, 1.0, 1.5, 2.0})
    CHECK(glued_rho(pv, dt, 0, x + std::polar(f * 1e-2, 0.3)) >= 1e-4);
  // continuity across every construction boundary
  auto jump = [&](double r) {
    const double lo = glued_rho(pv, dt, 0, x + std::polar(r * (1 - 1e-9), 0.9));
    const double hi = glued_rho(pv, dt, 0, x + std::polar(r * (1 + 1e-9), 0.9));
    return std::abs(hi - lo);
  };
  for (double r : {2.0 * 1e-4 / dt, 1e-4 / dt, dt, 2.0 * dt, 1e-2, 2e-2})
    CHECK(jump(r) < 1e-7);
}

TEST_CASE("metric factor formulas") {
  BubbleMap b = markless_chain(cplx(0.5, 0.2));
  const cplx x(0.5, 0.2);
  const double dt = delta_blend(b.curve);
  const cplx v(4e-4, 3e-4);
  GluingParameter pv{b, {{1, v}}};
  const double s = std::sqrt(std::abs(v));
  // identity outside the blend annulus
  CHECK(glued_lambda(pv, dt, 0, x + 2.0 * s) == 1.0);
  // pure pullback inside r <= s: lambda = (1+|z|^2) / ((1+|n|^2) |v|)
  const cplx z = x + std::polar(0.5 * s, 1.1);
  const cplx n = (z - x) / v;
  CHECK(glued_lambda(pv, dt, 0, z) ==
        Approx((1.0 + std::norm(z)) / ((1.0 + std::norm(n)) * std::abs(v)))
            .epsilon(1e-13));
  // value at the neck center
  CHECK(glued_lambda(pv, dt, 0, x) ==
        Approx((1.0 + std::norm(x)) / std::abs(v)).epsilon(1e-13));
  // continuity across the branch radii
  for (double r : {s, 2.0 * s}) {
    const double lo = glued_lambda(pv, dt, 0, x + std::polar(r * (1 - 1e-9), 0.4));
    const double hi = glued_lambda(pv, dt, 0, x + std::polar(r * (1 + 1e-9), 0.4));
    CHECK(std::abs(hi - lo) < 1e-6 * std::max(1.0, lo));
  }
  // positivity on a wide sample
  for (double f : {0.01, 0.3, 0.9, 1.1, 1.7, 2.5})
    CHECK(glued_lambda(pv, dt, 0, x + std::polar(f * s, 2.0)) > 0.0);
}

TEST_CASE("modified norms: oracles and homogeneity") {
  BubbleMap b = single_sphere();
  GluingMap g({b, {}});
  GluedGrid grid(g);
  // zero section
  DiscreteSection zero = sample_section(
      grid, SectionKind::vector_field,
      [](const GridPoint&) { return CVec::Zero(2).eval(); });
  CHECK(modified_norm(grid, zero, 3.0) == 0.0);
  CHECK(modified_norm_p1(grid, zero, 3.0) == 0.0);
  // constant-length-1 field on the round sphere with weight 1 away from
  // poles: both integrals are explicit up to the weight blend near infinity
  DiscreteSection one = unit_field(grid);
  const double area = 4.0 * M_PI;
  const double norm3 = modified_norm(grid, one, 3.0);
  // the weight is identically 1 on the principal sphere, so both integrals
  // are the round area
  const double expected = 0.5 * (std::pow(area, 1.0 / 3.0) + std::sqrt(area));
  CHECK(norm3 == Approx(expected).epsilon(2e-3));
  // homogeneity with c = 2.5
  DiscreteSection scaled = one;
  for (auto& v : scaled.samples) v *= 2.5;
  CHECK(modified_norm(grid, scaled, 3.0) ==
        Approx(2.5 * norm3).epsilon(1e-12));
  CHECK(modified_norm_p1(grid, scaled, 3.0) ==
        Approx(2.5 * modified_norm_p1(grid, one, 3.0)).epsilon(1e-12));
  // p <= 2 is rejected
  CHECK_THROWS_AS(modified_norm(grid, one, 2.0), GeomError);
  // c0 norm of the unit field
  CHECK(c0_norm(grid, one) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("norm monotonicity in the weight") {
  BubbleMap b = markless_chain(cplx(0.5, 0.2));
  GluingMap g({b, {{1, cplx(1e-4, 5e-5)}}});
  GluedGrid grid(g);
  MetricWeightField f = build_metric_and_weight(grid);
  DiscreteSection xi = random_smooth_section(grid, 42);
  // the rho-weighted term computed against the field, then against a
  // pointwise smaller field: the integral cannot decrease
  const double alpha = 1.0 / 3.0;
  double t2 = 0, t2small = 0;
  const auto& pts = grid.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double m2 = xi.samples[i].squaredNorm() * pts[i].sigma *
                      pts[i].sigma * pts[i].weight;
    t2 += std::pow(f.rho[i], -alpha) * m2;
    t2small += std::pow(0.5 * f.rho[i], -alpha) * m2;
  }
  CHECK(t2small > t2);
  CHECK(f.lambda.size() == grid.size());
}

TEST_CASE("quadrature stability under grid doubling") {
  BubbleMap b = markless_chain(cplx(0.5, 0.2));
  GluingMap g({b, {{1, cplx(1e-4, 0.0)}}});
  GridSpec coarse;
  GridSpec fine;
  fine.ds = coarse.ds / 2;
  fine.nt = coarse.nt * 2;
  GluedGrid g1(g, coarse), g2(g, fine);
  DiscreteSection a1 = random_smooth_section(g1, 7);
  DiscreteSection a2 = random_smooth_section(g2, 7);
  for (double p : {3.0, 4.0}) {
    const double n1 = modified_norm(g1, a1, p);
    const double n2 = modified_norm(g2, a2, p);
    CHECK(std::abs(n1 - n2) < 0.01 * n2);
    const double m1 = modified_norm_p1(g1, a1, p);
    const double m2 = modified_norm_p1(g2, a2, p);
    CHECK(std::abs(m1 - m2) < 0.01 * m2);
  }
  const PregluingReport r1 = check_pregluing_estimates(g1, 3.0);
  const PregluingReport r2 = check_pregluing_estimates(g2, 3.0);
  CHECK(std::abs(r1.dbar_norm - r2.dbar_norm) < 0.01 * r2.dbar_norm);
  CHECK(std::abs(r1.du_c0 - r2.du_c0) < 0.01 * r2.du_c0);
}

TEST_CASE("pregluing estimates: defect vanishes at zero and scales in p") {
  BubbleMap b = markless_chain(cplx(0.5, 0.2));
  GluingMap g0({b, {}});
  GluedGrid grid0(g0);
  const PregluingReport rep0 = check_pregluing_estimates(grid0, 3.0);
  CHECK(rep0.dbar_norm == 0.0);
  CHECK(rep0.ratio == 0.0);
  CHECK(rep0.du_c0 > 0.0);
}

TEST_CASE("pregluing estimates: neck sweep boundedness") {
  BubbleMap b = markless_chain(cplx(0.5, 0.2));
  double rmin = 1e300, rmax = 0, dmin = 1e300, dmax = 0;
  for (double vabs : {1e-4, 1e-5, 1e-6, 1e-7}) {
    GluingMap g({b, {{1, std::polar(vabs, 0.7)}}});
    GluedGrid grid(g);
    const PregluingReport rep = check_pregluing_estimates(grid, 3.0);
    CHECK(rep.dbar_norm > 0.0);
    rmin = std::min(rmin, rep.ratio);
    rmax = std::max(rmax, rep.ratio);
    dmin = std::min(dmin, rep.du_c0);
    dmax = std::max(dmax, rep.du_c0);
  }
  CHECK(rmax < 3.0 * rmin);
  CHECK(dmax < 1.5 * dmin);
}

TEST_CASE("sobolev c0 bound: ratio stays bounded as the neck shrinks") {
  BubbleMap b = markless_chain(cplx(0.5, 0.2));
  double first = 0;
  for (double vabs : {1e-4, 1e-5, 1e-6}) {
    GluingMap g({b, {{1, cplx(vabs, 0.0)}}});
    GluedGrid grid(g);
    const SobolevReport rep = check_sobolev_c0(grid, 3.0, 5, 2026);
    CHECK(rep.max_ratio > 0.0);
    if (first == 0)
      first = rep.max_ratio;
    else
      CHECK(rep.max_ratio < 3.0 * first);
  }
}
