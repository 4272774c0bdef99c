#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "bubbleglue/linearization.hpp"

using namespace bubbleglue;
using doctest::Approx;

namespace {

BubbleMap single_sphere(const RationalMap& u) {
  BubbleMap b;
  b.curve.tree.tree = RootedTree::from_parent_map({{0, std::nullopt}});
  b.maps[0] = u;
  return b;
}

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

// chain whose bubble carries degree 2 (total degree 3)
BubbleMap heavy_chain(cplx x1) {
  BubbleMap b;
  b.curve.tree.tree = RootedTree::from_parent_map({{0, std::nullopt}, {1, 0}});
  b.curve.tree.node_pos = {{1, x1}};
  b.maps[0] = RationalMap::identity_p1();
  RationalMap u1;
  u1.degree = 2;
  u1.coeffs.resize(2, 3);
  u1.coeffs << cplx(0.3, 0.0), cplx(1.0, 0.2), x1,  //
      cplx(-0.2, 0.1), cplx(0.1, -0.3), cplx(1.0, 0.0);
  return b.maps[1] = u1, b;
}

RationalMap random_map(int n, int d, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int attempt = 0; attempt < 50; ++attempt) {
    RationalMap u;
    u.degree = d;
    u.coeffs.resize(n + 1, d + 1);
    for (int i = 0; i <= n; ++i)
      for (int k = 0; k <= d; ++k) u.coeffs(i, k) = cplx(g(rng), g(rng));
    try {
      u.validate();
      // keep the density well resolved by the default quadrature: reject
      // near-degenerate tuples whose energy integral drifts off the degree
      if (std::abs(energy(u, QuadratureSpec{}) - d) < 1e-6) return u;
    } catch (const GeomError&) {
    }
  }
  throw std::runtime_error("random_map: no valid sample");
}

double simpson(const std::function<double(double)>& f, double a, double b,
               int n) {
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int k = 1; k < n; ++k) acc += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

DiscreteSection scaled(DiscreteSection s, double c) {
  for (auto& v : s.samples) v *= c;
  return s;
}

}  // namespace

TEST_CASE("balance functionals: symmetry, mass, and point terms") {
  BubbleMap b = single_sphere(RationalMap::identity_p1());
  const BalanceState st = balance_functionals(b, 0);
  // rotational antisymmetry of the first moment
  CHECK(std::abs(st.map_tilde) < 1e-12);
  // derivative mass equals the degree
  CHECK(st.du_l2 == Approx(1.0).epsilon(1e-9));
  // independent 1-d oracle for the cutoff-weighted mass: with u = r^2,
  // integral of beta(sqrt(u)) / (1+u)^2 du over [1,4] plus the mass beyond
  const double oracle =
      simpson([](double u) { return beta(std::sqrt(u)) / ((1 + u) * (1 + u)); },
              1.0, 4.0, 4000) +
      0.2;
  CHECK(st.map_psi3 + 0.5 == Approx(oracle).epsilon(1e-6));
  // a mark beyond the cutoff support shifts the second output by exactly 1
  BubbleMap bm = b;
  bm.curve.marks[1] = {0, cplx(3.0, 0.5)};
  const BalanceState stm = balance_functionals(bm, 0);
  CHECK(stm.full_psi3 == Approx(st.map_psi3 + 1.0).epsilon(1e-12));
  CHECK(std::abs(stm.full_tilde - (st.map_tilde + cplx(3.0, 0.5))) < 1e-12);
  CHECK(stm.point_weight == 1);
  // weighted child-node term on a chain
  const cplx x1(0.5, 0.2);
  const BalanceState stc = balance_functionals(markless_chain(x1), 0);
  CHECK(std::abs(stc.full_tilde - (stc.map_tilde + x1)) < 1e-12);
  CHECK(stc.point_weight == 1);
  CHECK_THROWS_AS(balance_functionals(b, 7), TreeError);
}

TEST_CASE("affine action identities for the balancing functionals") {
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + trial % 2;
    const int d = 1 + trial % 3;
    BubbleMap b = single_sphere(random_map(n, d, 100 + unsigned(trial)));
    const BalanceState st = balance_functionals(b, 0);
    const cplx c(0.7 * uni(rng), 0.7 * uni(rng));
    const double r = 0.6 * uni(rng);
    BubbleMap ba = group_action(b, {{0, {c, r, 0.0}}});
    const BalanceState sta = balance_functionals(ba, 0);
    const cplx expect = (1.0 + r) * (st.map_tilde + c * st.du_l2);
    CHECK(std::abs(sta.map_tilde - expect) < 1e-6 * (1.0 + std::abs(st.map_tilde)));
    // rotation: the moment turns by the same phase
    const double th = 0.9;
    const BalanceState str =
        balance_functionals(group_action(b, {{0, {0.0, 0.0, th}}}), 0);
    CHECK(std::abs(str.map_tilde - std::polar(1.0, th) * st.map_tilde) <
          1e-6 * (1.0 + std::abs(st.map_tilde)));
    CHECK(std::abs(std::abs(str.map_tilde) - std::abs(st.map_tilde)) <
          1e-6 * (1.0 + std::abs(st.map_tilde)));
  }
  // identity action is the identity
  BubbleMap b = single_sphere(random_map(1, 2, 7));
  BubbleMap b0 = group_action(b, {{0, {0.0, 0.0, 0.0}}});
  CHECK((b0.maps.at(0).coeffs - b.maps.at(0).coeffs).norm() < 1e-14);
}

TEST_CASE("dilation derivative of the cutoff-weighted mass") {
  for (unsigned seed : {0u, 5u}) {
    const RationalMap u =
        seed == 0 ? RationalMap::identity_p1() : random_map(1, 2, seed);
    BubbleMap b = single_sphere(u);
    const double h = 1e-3;
    const double psp =
        balance_functionals(group_action(b, {{0, {0.0, h, 0.0}}}), 0).map_psi3;
    const double psm =
        balance_functionals(group_action(b, {{0, {0.0, -h, 0.0}}}), 0).map_psi3;
    const double fd = (psp - psm) / (2.0 * h);
    QuadratureSpec dense;
    dense.radial_nodes = 2048;
    dense.angular_nodes = 512;
    const double oracle = integrate_plane_real(
        [&](cplx z) {
          return energy_density(u, z) * beta_prime(std::abs(z)) * std::abs(z);
        },
        dense);
    CHECK(fd == Approx(oracle).epsilon(1e-4));
  }
}

TEST_CASE("balancing solver: fixed point, round trip, jacobian") {
  BubbleMap b = single_sphere(random_map(1, 2, 21));
  const BalanceResult res1 = balance_solve(b, 1e-9);
  CHECK(res1.max_residual < 1e-6);
  CHECK(res1.iterations > 0);
  // already balanced: zero parameters and zero iterations
  const BalanceResult res2 = balance_solve(res1.balanced, 1e-6);
  CHECK(res2.iterations == 0);
  CHECK(std::abs(res2.params.at(0).c) == 0.0);
  CHECK(res2.params.at(0).r == 0.0);
  // round trip: solving after a known action recovers its inverse
  const cplx c(0.25, -0.1);
  const double r = 0.3;
  BubbleMap moved = group_action(res1.balanced, {{0, {c, r, 0.0}}});
  const BalanceResult back = balance_solve(moved, 1e-10);
  const double s1 = 1.0 + r, s2 = 1.0 + back.params.at(0).r;
  CHECK(std::abs(s1 * s2 - 1.0) < 1e-6);
  CHECK(std::abs(c + back.params.at(0).c / s1) < 1e-6);
  // translation jacobian of the first moment equals the derivative mass
  const BalanceState st = balance_functionals(b, 0);
  const double h = 1e-3;
  const cplx tp =
      balance_functionals(group_action(b, {{0, {cplx(h, 0), 0.0, 0.0}}}), 0)
          .map_tilde;
  const cplx tm =
      balance_functionals(group_action(b, {{0, {cplx(-h, 0), 0.0, 0.0}}}), 0)
          .map_tilde;
  CHECK(std::abs((tp - tm) / (2.0 * h) - st.du_l2) < 1e-5 * (1.0 + st.du_l2));
  // chain with a weighted node balances too
  const BalanceResult resc = balance_solve(markless_chain(cplx(0.5, 0.2)), 1e-9);
  CHECK(resc.max_residual < 1e-6);
}

TEST_CASE("action generators: vanishing, bounds, holomorphicity") {
  // constant map: all four generators vanish
  CVec v(2);
  v << cplx(1.0, 0.0), cplx(0.0, 0.4);
  const RationalMap uc = RationalMap::constant(v);
  for (int k = 1; k <= 4; ++k)
    for (cplx z : {cplx(0.3, 0.1), cplx(2.0, -1.0)})
      CHECK(generator_field(uc, k, z).norm() == 0.0);
  // identity map, rotation generator: |xi| = |z| / (1 + |z|^2)
  const RationalMap ui = RationalMap::identity_p1();
  CHECK(generator_field(ui, 4, cplx(1.0, 0.0)).norm() == Approx(0.5).epsilon(1e-12));
  CHECK(generator_field(ui, 4, cplx(1e-6, 0.0)).norm() < 2e-6);
  CHECK(generator_field(ui, 4, cplx(1e6, 0.0)).norm() < 2e-6);
  // decay toward infinity for a random degree-3 map
  const RationalMap u3 = random_map(2, 3, 33);
  for (int k = 1; k <= 4; ++k) {
    CHECK(generator_field(u3, k, std::polar(1e4, 0.3)).norm() < 1e-2);
    CHECK(generator_field(u3, k, std::polar(1e6, 0.3)).norm() < 1e-4);
  }
  // the generators of a holomorphic map are holomorphic sections
  const RationalMap u = random_map(1, 3, 17);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int k = 1; k <= 4; ++k) {
    for (int t = 0; t < 50; ++t) {
      const cplx z = std::polar(2.5 * uni(rng) + 0.01, 2 * M_PI * uni(rng));
      const CVec defect = section_dbar_fd(
          u, [&](cplx zz) { return generator_field(u, k, zz); }, z, 3e-5);
      CHECK(defect.norm() < 1e-6);
    }
  }
}

TEST_CASE("kernel bases: dimension table and holomorphicity") {
  for (int n : {1, 2})
    for (int d : {1, 2, 3}) {
      const RationalMap u = random_map(n, d, unsigned(10 * n + d));
      const KernelBasis kb = kernel_basis(u, n);
      CHECK(kb.dimension() == (n + 1) * (d + 1) - 1);
    }
  // degree zero: the kernel is the tangent space of the image point
  CVec v(3);
  v << cplx(1.0, 0.0), cplx(0.2, -0.1), cplx(0.0, 0.5);
  CHECK(kernel_basis(RationalMap::constant(v), 2).dimension() == 2);
  CHECK_THROWS_AS(kernel_basis(RationalMap::identity_p1(), 2), GeomError);
  // every basis element is a holomorphic section
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (auto [n, d, seed] : {std::tuple{1, 1, 11u}, std::tuple{2, 3, 23u}}) {
    const RationalMap u = n == 1 && d == 1 ? RationalMap::identity_p1()
                                           : random_map(n, d, seed);
    const KernelBasis kb = kernel_basis(u, n);
    int checked = 0;
    for (const auto& q : kb.elements) {
      for (int t = 0; t < 200 / kb.dimension() + 1; ++t) {
        const cplx z = std::polar(3.0 * uni(rng) + 0.01, 2 * M_PI * uni(rng));
        const CVec defect = section_dbar_fd(
            u, [&](cplx zz) { return kernel_section_eval(u, q, zz); }, z, 3e-5);
        CHECK(defect.norm() < 1e-6);
        ++checked;
      }
    }
    CHECK(checked >= 200);
  }
}

TEST_CASE("regularity: evaluation at infinity is onto") {
  // identity on the sphere
  const RegularityReport r1 =
      check_regularity(single_sphere(RationalMap::identity_p1()));
  CHECK(r1.all_surjective);
  REQUIRE(r1.components.size() == 1);
  CHECK(r1.components[0].surjective);
  // generic plane curve of degree 1
  const RegularityReport r2 = check_regularity(single_sphere(random_map(2, 1, 41)));
  CHECK(r2.all_surjective);
  // a constant component: constants evaluate onto the tangent space
  CVec v(3);
  v << cplx(0.6, 0.0), cplx(0.0, 0.8), cplx(0.1, 0.1);
  const RegularityReport r3 = check_regularity(single_sphere(RationalMap::constant(v)));
  CHECK(r3.all_surjective);
  // chain fixture: every component passes
  CHECK(check_regularity(markless_chain(cplx(0.5, 0.2))).all_surjective);
}

TEST_CASE("matched kernels: node constraints and index additivity") {
  const cplx x1(0.5, 0.2);
  const int n = 1;
  for (const BubbleMap& b : {markless_chain(x1), heavy_chain(x1)}) {
    const MatchedKernel mk = matched_kernel(b);
    const long long dtot = b.degree_total();
    // half-index of the glued map: matches the single-sphere kernel count
    CHECK(mk.dimension() == (n + 1) * int(dtot) + n);
    const RationalMap glued_degree_rep = random_map(n, int(dtot), 77);
    CHECK(mk.dimension() == kernel_basis(glued_degree_rep, n).dimension());
    // node matching: parent section at the node equals the bubble at infinity
    const GaugedPoint gp = gauged_eval(b.maps.at(0), x1);
    const GaugedPoint gh = gauged_eval(b.maps.at(1), SpherePoint::infinity());
    const cplx al = gh.P.dot(gp.P);
    const cplx phase = al / std::abs(al);
    for (const auto& elem : mk.elements) {
      const CVec vp = kernel_section_eval(b.maps.at(0), elem.at(0), x1);
      const CVec vh = kernel_section_eval(b.maps.at(1), elem.at(1),
                                          SpherePoint::infinity());
      CHECK((vp - phase * vh).norm() < 1e-8);
    }
  }
  // a single sphere has no constraints: full polynomial kernel
  const MatchedKernel ms = matched_kernel(single_sphere(RationalMap::identity_p1()));
  CHECK(ms.dimension() == 3);
}

TEST_CASE("discrete dbar operator: adjoint, kernel, least squares") {
  BubbleMap b = single_sphere(RationalMap::identity_p1());
  GluingMap g({b, {}});
  GridSpec spec;
  spec.ds = 0.2;
  spec.nt = 32;
  spec.smax = 10.0;
  GluedGrid grid(g, spec);
  const DbarDiscrete D(grid);
  // adjoint identity in the metric pairings
  DiscreteSection x = random_smooth_section(grid, 3);
  DiscreteSection a = random_smooth_section(grid, 4);
  a.kind = SectionKind::form_01;
  const DiscreteSection Dx = D.apply(x);
  const DiscreteSection Da = D.apply_adjoint(a);
  cplx lhs = 0, rhs = 0;
  const auto& pts = grid.points();
  for (std::size_t k = 0; k < pts.size(); ++k) {
    lhs += pts[k].weight * Dx.samples[k].dot(a.samples[k]);
    rhs += pts[k].sigma * pts[k].sigma * pts[k].weight *
           x.samples[k].dot(Da.samples[k]);
  }
  CHECK(std::abs(lhs - rhs) < 1e-10 * std::abs(lhs));
  // holomorphic sections are near the kernel
  const MatchedKernel mk = matched_kernel(b);
  for (const auto& elem : mk.elements) {
    const DiscreteSection xi = restrict_matched_element(grid, elem);
    const double base = modified_norm_p1(grid, xi, 3.0);
    CHECK(modified_norm(grid, D.apply(xi), 3.0) < 1e-2 * base);
  }
  // manufactured consistent system: the least-squares solve reproduces it
  const DiscreteSection eta = D.apply(x);
  LeastSquaresStats stats;
  const DiscreteSection sol =
      solve_dbar_least_squares(D, eta, {}, 3.0, 1e-8, 8000, &stats);
  DiscreteSection res = D.apply(sol);
  for (std::size_t k = 0; k < res.samples.size(); ++k)
    res.samples[k] -= eta.samples[k];
  CHECK(modified_norm(grid, res, 3.0) < 1e-3 * modified_norm(grid, eta, 3.0));
  CHECK(stats.relative_residual < 1e-7);
  CHECK(stats.iterations < 8000);
}

TEST_CASE("picard correction: zero necks need no correction") {
  BubbleMap b = markless_chain(cplx(0.5, 0.2));
  GluingMap g({b, {}});
  GridSpec spec;
  spec.ds = 0.2;
  spec.nt = 32;
  spec.smax = 10.0;
  GluedGrid grid(g, spec);
  const CorrectionState st = picard_correct(grid, 3.0, 1e-8, 10);
  CHECK(st.iterations == 0);
  CHECK(st.alpha_norm == 0.0);
  CHECK(st.final_defect_norm == 0.0);
  CHECK(st.eta_norm == 0.0);
}

TEST_CASE("picard correction removes the gluing defect") {
  BubbleMap b = markless_chain(cplx(0.5, 0.2));
  GluingMap g({b, {{1, std::polar(3e-5, 0.4)}}});
  GridSpec spec;
  spec.ds = 0.2;
  spec.nt = 32;
  spec.smax = 12.0;
  spec.margin = 6.0;
  GluedGrid grid(g, spec);
  const CorrectionState st = picard_correct(grid, 3.0, 1e-7, 10);
  CHECK(st.alpha_norm > 0.0);
  CHECK(st.iterations >= 1);
  // fixed-point bound on the corrected right-hand side
  CHECK(st.eta_norm <= 2.0 * st.alpha_norm);
  // the re-measured defect of the corrected map drops substantially
  CHECK(st.final_defect_norm < 0.5 * st.alpha_norm);
  // residuals decrease geometrically; late contraction is under 5/6 + slack
  REQUIRE(!st.residual_history.empty());
  for (std::size_t i = 1; i < st.residual_history.size(); ++i)
    CHECK(st.residual_history[i] < st.residual_history[i - 1]);
  if (!st.contraction.empty())
    CHECK(st.contraction.back() <= 5.0 / 6.0 + 0.1);
}

TEST_CASE("quadratic remainder: vanishing, quartering, stability") {
  BubbleMap b = markless_chain(cplx(0.5, 0.2));
  double first_c = 0;
  for (double vabs : {1e-5, 1e-6}) {
    GluingMap g({b, {{1, std::polar(vabs, 0.4)}}});
    GridSpec spec;
    spec.smax = 12.0;
    GluedGrid grid(g, spec);
    DiscreteSection base = random_smooth_section(grid, 11);
    const double amp = c0_norm(grid, base);
    DiscreteSection xi1 = scaled(base, 0.06 / amp);
    DiscreteSection xi2 = scaled(base, 0.03 / amp);
    // equal inputs give zero
    CHECK(quadratic_term_value(grid, xi1, xi1, 3.0) == 0.0);
    const double c1 = quadratic_term_value(grid, xi1, scaled(base, 0.0), 3.0);
    const double c2 = quadratic_term_value(grid, xi2, scaled(base, 0.0), 3.0);
    CHECK(c1 > 0.0);
    // halving the amplitude quarters the remainder: the normalized constant
    // stays put within the allowed slack
    CHECK(c1 / c2 < 1.2);
    CHECK(c2 / c1 < 1.2);
    if (first_c == 0)
      first_c = c1;
    else {
      CHECK(c1 < 2.0 * first_c);
      CHECK(first_c < 2.0 * c1);
    }
  }
}
