#include "bubbleglue/bubble.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bubbleglue {

namespace {
bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }
double cap100(double x) { return std::min(100.0, x); }
double inv_dist(cplx x) {
  const double m = std::abs(x);
  return m > 0.0 ? cap100(1.0 / m) : 100.0;
}
}  // namespace

void GeometricBubbleTree::validate() const {
  std::vector<int> hat = tree.hat();
  if (node_pos.size() != hat.size())
    throw TreeError("bubble tree: node position count mismatch");
  for (int h : hat) {
    auto it = node_pos.find(h);
    if (it == node_pos.end()) throw TreeError("bubble tree: missing node position");
    if (!finite(it->second)) throw TreeError("bubble tree: non-finite node position");
    for (int l : hat)
      if (l != h && tree.attach(l) == tree.attach(h) &&
          node_pos.at(l) == it->second)
        throw TreeError("bubble tree: coincident sibling nodes");
  }
}

void MarkedCurve::validate() const {
  tree.validate();
  for (const auto& [label, m] : marks) {
    if (!tree.tree.contains(m.component))
      throw TreeError("marked curve: mark on unknown component");
    if (!finite(m.y)) throw TreeError("marked curve: non-finite mark");
    for (int h : tree.tree.hat())
      if (tree.tree.attach(h) == m.component && tree.node_pos.at(h) == m.y)
        throw TreeError("marked curve: mark coincides with a node");
    for (const auto& [label2, m2] : marks)
      if (label2 != label && m2.component == m.component && m2.y == m.y)
        throw TreeError("marked curve: coincident marks");
  }
}

int MarkedCurve::special_count(int i) const {
  int count = i == tree.tree.root ? 0 : 1;
  for (int h : tree.tree.hat())
    if (tree.tree.attach(h) == i) ++count;
  for (const auto& [label, m] : marks)
    if (m.component == i) ++count;
  return count;
}

int BubbleMap::target_dim() const {
  if (maps.empty()) throw TreeError("bubble map: no component maps");
  return maps.begin()->second.target_dim();
}

long long BubbleMap::degree_total() const {
  long long d = 0;
  for (const auto& [i, u] : maps) d += u.degree;
  return d;
}

BubbleType BubbleMap::type() const {
  BubbleType t;
  t.tree = curve.tree.tree;
  for (const auto& [label, m] : curve.marks) t.mark_node[label] = m.component;
  for (const auto& [i, u] : maps) t.degree[i] = u.degree;
  return t;
}

void BubbleMap::validate(double node_tol) const {
  curve.validate();
  for (int i : curve.tree.tree.elements)
    if (!maps.count(i)) throw TreeError("bubble map: component without a map");
  BubbleMapReport rep = check_bubble_map(*this, node_tol);
  if (!rep.all_ok()) {
    std::ostringstream os;
    os << "bubble map invalid:";
    for (const auto& f : rep.failures) os << " [" << f << "]";
    throw TreeError(os.str());
  }
}

double injectivity_radius_tree(const GeometricBubbleTree& t) {
  double r = 100.0;
  const std::vector<int> hat = t.tree.hat();
  for (int h : hat) {
    const cplx x = t.node_pos.at(h);
    r = std::min(r, inv_dist(x));
    for (int l : hat)
      if (l != h && t.tree.attach(l) == t.tree.attach(h))
        r = std::min(r, std::abs(t.node_pos.at(l) - x));
  }
  return r;
}

double injectivity_radius_curve(const MarkedCurve& c) {
  double r = injectivity_radius_tree(c.tree);
  for (const auto& [label, m] : c.marks) {
    r = std::min(r, inv_dist(m.y));
    for (int h : c.tree.tree.hat())
      if (c.tree.tree.attach(h) == m.component)
        r = std::min(r, std::abs(c.tree.node_pos.at(h) - m.y));
    for (const auto& [label2, m2] : c.marks)
      if (label2 != label && m2.component == m.component)
        r = std::min(r, std::abs(m2.y - m.y));
  }
  return r;
}

double max_admissible_delta(const MarkedCurve& c) {
  const double rc = injectivity_radius_curve(c);
  const double count =
      double(c.tree.tree.size()) + double(c.marks.size());
  const double s = rc / (16.0 * count);
  return s * s;
}

double delta_blend(const MarkedCurve& c) {
  return std::min(0.25, injectivity_radius_curve(c) / 5.0);
}

BubbleMapReport check_bubble_map(const BubbleMap& b, double tol) {
  BubbleMapReport rep;
  const RootedTree& tree = b.curve.tree.tree;
  for (int i : tree.elements) {
    auto it = b.maps.find(i);
    if (it == b.maps.end()) {
      rep.degrees_ok = false;
      rep.failures.push_back("missing map on a component");
      continue;
    }
    try {
      it->second.validate();
    } catch (const GeomError& e) {
      rep.degrees_ok = false;
      rep.failures.push_back(e.what());
    }
    if (it->second.target_dim() != b.target_dim()) {
      rep.degrees_ok = false;
      rep.failures.push_back("inconsistent target dimension");
    }
  }
  if (!rep.degrees_ok) return rep;
  for (int h : tree.hat()) {
    const CVec at_inf = gauged_eval(b.maps.at(h), SpherePoint::infinity()).P;
    const CVec at_node =
        gauged_eval(b.maps.at(tree.attach(h)), b.curve.tree.node_pos.at(h)).P;
    rep.max_node_defect = std::max(rep.max_node_defect, fs_distance(at_inf, at_node));
  }
  if (rep.max_node_defect > tol) {
    rep.nodes_ok = false;
    std::ostringstream os;
    os << "node mismatch, defect " << rep.max_node_defect;
    rep.failures.push_back(os.str());
  }
  for (int i : tree.elements)
    if (b.curve.special_count(i) < 2 && b.maps.at(i).degree == 0) {
      rep.stability_ok = false;
      rep.failures.push_back("unstable component (degree 0, < 2 special points)");
    }
  return rep;
}

RationalMap compose_affine(const RationalMap& u, cplx a, cplx b) {
  if (a == 0.0) throw GeomError("compose_affine: degenerate affine map");
  const int d = u.degree;
  const int rows = static_cast<int>(u.coeffs.rows());
  RationalMap out = u;
  out.coeffs = Eigen::MatrixXcd::Zero(rows, d + 1);
  // pw = coefficients of (a z + b)^k, built incrementally
  Eigen::VectorXcd pw = Eigen::VectorXcd::Zero(d + 1);
  pw[0] = 1.0;
  for (int k = 0; k <= d; ++k) {
    for (int j = 0; j <= k; ++j) out.coeffs.col(j) += u.coeffs.col(k) * pw[j];
    if (k < d) {
      for (int j = k + 1; j >= 1; --j) pw[j] = b * pw[j] + a * pw[j - 1];
      pw[0] *= b;
    }
  }
  return out;
}

BubbleMap group_action(const BubbleMap& b, const std::map<int, ComponentAction>& params) {
  BubbleMap out = b;
  for (const auto& [i, act] : params) {
    if (!b.curve.tree.tree.contains(i))
      throw TreeError("group_action: unknown component");
    if (!(1.0 + act.r > 0.0)) throw GeomError("group_action: 1 + r must be positive");
    const cplx g_scale = std::polar(1.0 + act.r, act.theta);
    auto g = [&](cplx w) { return g_scale * (w + act.c); };
    out.maps[i] = compose_affine(b.maps.at(i), 1.0 / g_scale, -act.c);
    for (int h : b.curve.tree.tree.hat())
      if (b.curve.tree.tree.attach(h) == i)
        out.curve.tree.node_pos[h] = g(b.curve.tree.node_pos.at(h));
    for (const auto& [label, m] : b.curve.marks)
      if (m.component == i) out.curve.marks[label].y = g(m.y);
  }
  out.curve.validate();
  return out;
}

namespace {

struct AffineCandidate {
  cplx a, b;
};

// max over special-point pairs and map samples of the matching defect
double component_residual(const RationalMap& u, const RationalMap& up,
                          const std::vector<std::pair<cplx, cplx>>& pairs, cplx a,
                          cplx b) {
  double res = 0.0;
  for (const auto& [p, q] : pairs) res = std::max(res, std::abs(a * p + b - q));
  for (double rad : {0.5, 2.0})
    for (int k = 0; k < 16; ++k) {
      const cplx z = std::polar(rad, 2.0 * M_PI * (k + 0.3) / 16.0);
      res = std::max(res, fs_distance(gauged_eval(u, z).P,
                                      gauged_eval(up, a * z + b).P));
    }
  // attaching point at infinity must also match
  res = std::max(res, fs_distance(gauged_eval(u, SpherePoint::infinity()).P,
                                  gauged_eval(up, SpherePoint::infinity()).P));
  return res;
}

std::vector<cplx> all_roots(const RationalMap& u) {
  std::vector<cplx> roots;
  for (int i = 0; i <= u.target_dim(); ++i)
    for (cplx r : polynomial_roots(u.coeffs.row(i).transpose())) {
      bool dup = false;
      for (cplx s : roots)
        if (std::abs(s - r) < 1e-8) dup = true;
      if (!dup) roots.push_back(r);
    }
  std::sort(roots.begin(), roots.end(), [](cplx x, cplx y) {
    return std::make_pair(x.real(), x.imag()) < std::make_pair(y.real(), y.imag());
  });
  return roots;
}

// Gauss-Newton polish of (a, b) on sampled map-matching residuals.
AffineCandidate polish(const RationalMap& u, const RationalMap& up,
                       const std::vector<std::pair<cplx, cplx>>& pairs,
                       AffineCandidate c0) {
  auto objective = [&](const AffineCandidate& c) {
    return component_residual(u, up, pairs, c.a, c.b);
  };
  AffineCandidate best = c0;
  double fbest = objective(best);
  double step = 0.1;
  // coordinate descent on the 4 real parameters; robust for small defects
  for (int iter = 0; iter < 200 && step > 1e-14; ++iter) {
    bool improved = false;
    for (int dim = 0; dim < 4; ++dim)
      for (double sgn : {1.0, -1.0}) {
        AffineCandidate trial = best;
        cplx delta(dim % 2 == 0 ? sgn * step : 0.0, dim % 2 == 1 ? sgn * step : 0.0);
        if (dim < 2)
          trial.a += delta;
        else
          trial.b += delta;
        if (trial.a == 0.0) continue;
        const double f = objective(trial);
        if (f < fbest) {
          fbest = f;
          best = trial;
          improved = true;
        }
      }
    if (!improved) step /= 2.0;
  }
  return best;
}

}  // namespace

std::optional<BubbleIsomorphism> isomorphic_maps(const BubbleMap& b1,
                                                 const BubbleMap& b2, double tol) {
  if (b1.target_dim() != b2.target_dim()) return std::nullopt;
  const BubbleType t1 = b1.type(), t2 = b2.type();
  std::vector<std::map<int, int>> tree_isos;
  try {
    tree_isos = t1.isomorphisms_to(t2);
  } catch (const TreeError&) {
    return std::nullopt;  // incompatible mark label sets
  }
  const RootedTree& tree1 = b1.curve.tree.tree;
  for (const auto& phi : tree_isos) {
    BubbleIsomorphism iso;
    iso.node_map = phi;
    bool ok = true;
    for (int i : tree1.elements) {
      const int ip = phi.at(i);
      const RationalMap& u = b1.maps.at(i);
      const RationalMap& up = b2.maps.at(ip);
      // special-point correspondences on this component
      std::vector<std::pair<cplx, cplx>> pairs;
      for (int h : tree1.hat())
        if (tree1.attach(h) == i)
          pairs.push_back({b1.curve.tree.node_pos.at(h),
                           b2.curve.tree.node_pos.at(phi.at(h))});
      for (const auto& [label, m] : b1.curve.marks)
        if (m.component == i) pairs.push_back({m.y, b2.curve.marks.at(label).y});

      std::vector<AffineCandidate> cands;
      for (std::size_t s = 0; s + 1 < pairs.size(); ++s)
        for (std::size_t t = s + 1; t < pairs.size(); ++t)
          if (pairs[s].first != pairs[t].first) {
            const cplx a = (pairs[t].second - pairs[s].second) /
                           (pairs[t].first - pairs[s].first);
            if (a != 0.0) cands.push_back({a, pairs[s].second - a * pairs[s].first});
          }
      // root-matching candidates (roots of component polynomials correspond)
      const std::vector<cplx> r1 = all_roots(u), r2 = all_roots(up);
      if (r1.size() >= 2 && r2.size() >= 2) {
        for (std::size_t s = 0; s < r2.size(); ++s)
          for (std::size_t t = 0; t < r2.size(); ++t)
            if (s != t) {
              const cplx a = (r2[t] - r2[s]) / (r1[1] - r1[0]);
              if (a != 0.0) cands.push_back({a, r2[s] - a * r1[0]});
            }
      }
      if (pairs.size() == 1 && !r1.empty() && !r2.empty()) {
        for (cplx ra : r1)
          for (cplx rb : r2)
            if (pairs[0].first != ra) {
              const cplx a = (pairs[0].second - rb) / (pairs[0].first - ra);
              if (a != 0.0) cands.push_back({a, pairs[0].second - a * pairs[0].first});
            }
      }
      cands.push_back({1.0, 0.0});  // identity fallback, polished below

      double best = 1e300;
      AffineCandidate bestc{1.0, 0.0};
      for (const auto& c : cands) {
        if (!finite(c.a) || !finite(c.b)) continue;
        const double res = component_residual(u, up, pairs, c.a, c.b);
        if (res < best) {
          best = res;
          bestc = c;
        }
      }
      if (best > tol) {
        bestc = polish(u, up, pairs, bestc);
        best = component_residual(u, up, pairs, bestc.a, bestc.b);
      }
      if (best > tol) {
        ok = false;
        break;
      }
      iso.affine[i] = {bestc.a, bestc.b};
      iso.residual = std::max(iso.residual, best);
    }
    if (ok) return iso;
  }
  return std::nullopt;
}

}  // namespace bubbleglue
