#include "bubbleglue/gluing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bubbleglue {

SpherePoint to_sphere(const SurfacePoint& p) {
  if (p.inv) return SpherePoint::south_coord(std::conj(p.w));
  return SpherePoint::north_coord(p.w);
}

TrackedPoint convert_chart(const TrackedPoint& t, bool inv) {
  if (t.pos.inv == inv) return t;
  if (t.pos.w == 0.0) throw GeomError("pole");
  const cplx wp = 1.0 / t.pos.w;
  TrackedPoint out;
  out.pos = {t.pos.component, inv, wp};
  out.jet = jet_compose(-wp * wp, 0.0, t.jet);
  return out;
}

double GluingParameter::total() const {
  double s = 0.0;
  for (const auto& [h, vh] : v) s += std::abs(vh);
  return s;
}

cplx GluingParameter::neck(int h) const {
  auto it = v.find(h);
  return it == v.end() ? cplx(0.0) : it->second;
}

GluingMap::GluingMap(GluingParameter upsilon) : p_(std::move(upsilon)) {
  p_.base.validate();
  const RootedTree& tree = p_.base.curve.tree.tree;
  for (const auto& [h, vh] : p_.v) {
    if (!tree.contains(h) || h == tree.root)
      throw TreeError("gluing: neck parameter on a non-node");
    if (!(std::isfinite(vh.real()) && std::isfinite(vh.imag())))
      throw GeomError("gluing: non-finite neck parameter");
  }
  const double dt = delta_blend(p_.base.curve);
  delta_bound_ =
      std::min(max_admissible_delta(p_.base.curve), (dt / 2.0) * (dt / 2.0));
  if (p_.total() > 0.0 && p_.total() >= delta_bound_)
    throw GeomError(
        "gluing: inadmissible neck size; 16 (|I|+|M|) sqrt(delta) must stay "
        "below the curve injectivity radius");

  // kept components and affine identification of collapsed charts
  std::vector<int> by_depth = tree.elements;
  std::sort(by_depth.begin(), by_depth.end(), [&](int a, int b) {
    return std::make_pair(tree.depth(a), a) < std::make_pair(tree.depth(b), b);
  });
  for (int i : by_depth) {
    if (i == tree.root || p_.neck(i) == 0.0) {
      kept_.push_back(i);
      affine_[i] = {1.0, 0.0};
      carrier_[i] = i;
    } else {
      const int parent = tree.attach(i);
      const auto [sl, of] = affine_.at(parent);
      const cplx x = p_.base.curve.tree.node_pos.at(i);
      affine_[i] = {sl * p_.neck(i), of + sl * x};
      carrier_[i] = carrier_.at(parent);
    }
  }
  std::sort(kept_.begin(), kept_.end());
  for (int h : tree.hat())
    if (p_.neck(h) != 0.0) {
      const int parent = tree.attach(h);
      const auto [sl, of] = affine_.at(parent);
      NeckInfo n;
      n.h = h;
      n.surface_component = carrier_.at(parent);
      n.center = of + sl * p_.base.curve.tree.node_pos.at(h);
      n.slope = sl;
      n.v = p_.neck(h);
      necks_.push_back(n);
    }
}

std::vector<int> GluingMap::default_order() const {
  const RootedTree& tree = p_.base.curve.tree.tree;
  std::vector<int> order;
  for (int h : tree.hat())
    if (p_.neck(h) != 0.0) order.push_back(h);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::make_pair(tree.depth(a), a) < std::make_pair(tree.depth(b), b);
  });
  return order;
}

void GluingMap::apply_stretch(int h, TrackedPoint& t) const {
  const cplx x = p_.base.curve.tree.node_pos.at(h);
  const cplx v = p_.neck(h);
  const double s = std::sqrt(std::abs(v));
  cplx z;
  WJet jz;
  if (t.pos.inv) {
    if (t.pos.w == 0.0) return;  // the point at infinity is far from every node
    z = 1.0 / t.pos.w;
    if (std::abs(z - x) >= 2.0 * s) return;
    jz = jet_compose(-z * z, 0.0, t.jet);  // d(1/w)/dw at w with z = 1/w
  } else {
    z = t.pos.w;
    if (std::abs(z - x) >= 2.0 * s) return;
    jz = t.jet;
  }
  const cplx zeta = z - x;
  const double r = std::abs(zeta);
  if (r >= s) {
    // middle branch: contracts the annulus onto the parent disk
    const double tt = r / s, b = beta(tt), bp = beta_prime(tt);
    t.pos = SurfacePoint::north(t.pos.component, x + b * zeta);
    t.jet = jet_compose(b + bp * r / (2.0 * s),
                        bp * zeta * zeta / (2.0 * r * s), jz);
    return;
  }
  // deep branch: moves onto the bubble sphere, n = zeta / (v (1 - beta(2r/s)))
  if (r == 0.0) {
    t.pos = SurfacePoint::north(h, 0.0);
    t.jet = jet_compose(1.0 / v, 0.0, jz);
    return;
  }
  const double u = 2.0 * r / s;
  const double g = 1.0 - beta(u), gp = beta_prime(u);
  const double nmag = r / (std::abs(v) * g);
  if (nmag <= 1.0) {
    t.pos = SurfacePoint::north(h, zeta / (v * g));
    t.jet = jet_compose((g + gp * r / s) / (v * g * g),
                        gp * zeta * zeta / (s * r * v * g * g), jz);
  } else {
    // inverted bubble coordinate 1/n = v (1 - beta(2r/s)) / zeta
    t.pos = SurfacePoint::inverted(h, v * g / zeta);
    t.jet = jet_compose(
        v * (-gp * std::conj(zeta) / (s * r * zeta) - g / (zeta * zeta)),
        -gp * v / (s * r), jz);
  }
}

TrackedPoint GluingMap::forward_with_order(const SurfacePoint& src,
                                           const std::vector<int>& order) const {
  if (carrier_.at(src.component) != src.component)
    throw TreeError("gluing: source point must lie on a kept component");
  const RootedTree& tree = p_.base.curve.tree.tree;
  TrackedPoint t{src, WJet{}};
  for (int h : order)
    if (tree.attach(h) == t.pos.component) apply_stretch(h, t);
  return t;
}

TrackedPoint GluingMap::forward(const SurfacePoint& src) const {
  return forward_with_order(src, default_order());
}

namespace {

// radius with r / (|v| (1 - beta(2r/s))) = nmag, on (0, s); monotone
double solve_deep_radius(double nmag, double vabs) {
  const double s = std::sqrt(vabs);
  if (nmag * vabs <= s / 2.0) return nmag * vabs;  // exactly linear region
  double lo = s / 2.0, hi = s;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double g = 1.0 - beta(2.0 * mid / s);
    const double val = g > 0.0 ? mid / (vabs * g) : std::numeric_limits<double>::infinity();
    (val < nmag ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// radius with beta(r/s) r = d, on (s, 2s]; monotone
double solve_middle_radius(double d, double s) {
  double lo = s, hi = 2.0 * s;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (beta(mid / s) * mid < d ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

void GluingMap::invert_stretch(int h, SurfacePoint& p) const {
  const cplx x = p_.base.curve.tree.node_pos.at(h);
  const cplx v = p_.neck(h);
  const double s = std::sqrt(std::abs(v));
  const RootedTree& tree = p_.base.curve.tree.tree;
  if (p.component == h) {
    // bubble side: the whole bubble minus its infinity came from the deep disk
    if (p.inv && p.w == 0.0) throw GeomError("seam");
    const cplx n = p.inv ? 1.0 / p.w : p.w;
    if (n == 0.0) {
      p = SurfacePoint::north(tree.attach(h), x);
      return;
    }
    const double r = solve_deep_radius(std::abs(n), std::abs(v));
    const double g = 1.0 - beta(2.0 * r / s);
    p = SurfacePoint::north(tree.attach(h), x + n * v * g);
    return;
  }
  if (p.component == tree.attach(h)) {
    cplx z;
    if (p.inv) {
      if (p.w == 0.0) return;
      z = 1.0 / p.w;
    } else {
      z = p.w;
    }
    const double d = std::abs(z - x);
    if (d >= 2.0 * s) return;  // identity branch
    if (d == 0.0) throw GeomError("seam");
    const double r = solve_middle_radius(d, s);
    p = SurfacePoint::north(p.component, x + (z - x) * (r / d));
  }
}

SurfacePoint GluingMap::inverse(const SurfacePoint& target) const {
  SurfacePoint p = target;
  std::vector<int> order = default_order();
  std::reverse(order.begin(), order.end());
  for (int h : order) invert_stretch(h, p);
  if (carrier_.at(p.component) != p.component)
    throw GeomError("gluing: inverse did not reach a kept component");
  return p;
}

MarkedCurve GluingMap::glued_curve() const {
  const RootedTree& tree = p_.base.curve.tree.tree;
  MarkedCurve c;
  c.tree.tree = tree.induced(kept_);
  for (int h : kept_)
    if (h != tree.root) {
      SurfacePoint sp = inverse(
          SurfacePoint::north(tree.attach(h), p_.base.curve.tree.node_pos.at(h)));
      c.tree.node_pos[h] = sp.w;
    }
  for (const auto& [label, m] : p_.base.curve.marks) {
    SurfacePoint sp = inverse(SurfacePoint::north(m.component, m.y));
    c.marks[label] = {sp.component, sp.w};
  }
  return c;
}

std::pair<AnnulusClass, const NeckInfo*> GluingMap::annulus_class(int comp,
                                                                  cplx z) const {
  for (const NeckInfo& n : necks_) {
    if (n.surface_component != comp) continue;
    const double r = std::abs(z - n.center) / std::abs(n.slope);
    const double s = n.sqrt_v();
    if (r >= s / 2.0 && r < s) return {AnnulusClass::inner, &n};
    if (r >= s && r < 2.0 * s) return {AnnulusClass::outer, &n};
  }
  return {AnnulusClass::none, nullptr};
}

double GluingMap::dq_operator_norm(int comp, cplx z) const {
  const TrackedPoint t = forward(SurfacePoint::north(comp, z));
  const double src = 1.0 + std::norm(z);
  const double dst = 1.0 + std::norm(t.pos.w);
  return (src / dst) * (std::abs(t.jet.dz) + std::abs(t.jet.dzb));
}

DbarSample dbar_qupsilon(const GluingMap& g, int comp, cplx z, double h_fd) {
  if (!(h_fd > 0.0)) throw GeomError("resolution");
  for (const NeckInfo& n : g.necks())
    if (n.surface_component == comp) {
      const double r = std::abs(z - n.center) / std::abs(n.slope);
      if (r < 4.0 * n.sqrt_v() && h_fd > 0.05 * n.sqrt_v() * std::abs(n.slope))
        throw GeomError("resolution");
    }
  DbarSample out;
  out.at = g.forward(SurfacePoint::north(comp, z));
  out.closed_form = out.at.jet.dzb;
  out.annulus = g.annulus_class(comp, z).first;
  auto value = [&](cplx zz) {
    TrackedPoint t = g.forward(SurfacePoint::north(comp, zz));
    if (t.pos.component != out.at.pos.component)
      throw GeomError("resolution");  // stencil straddles a gluing circle
    return convert_chart(t, out.at.pos.inv).pos.w;
  };
  const cplx fp = value(z + h_fd), fm = value(z - h_fd);
  const cplx gp = value(z + cplx(0.0, h_fd)), gm = value(z - cplx(0.0, h_fd));
  out.finite_difference = (fp - fm) / (4.0 * h_fd) +
                          cplx(0.0, 1.0) * (gp - gm) / (4.0 * h_fd);
  return out;
}

GaugedPoint preglue_eval(const GluingMap& g, const SurfacePoint& src) {
  const TrackedPoint t = g.forward(src);
  return gauged_eval(g.parameter().base.maps.at(t.pos.component), to_sphere(t.pos));
}

}  // namespace bubbleglue
