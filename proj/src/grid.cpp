#include "bubbleglue/grid.hpp"

#include <cmath>

namespace bubbleglue {

namespace {

// first child neck of component i whose blend disk contains z, if any
struct NeckHit {
  int h = -1;
  cplx v;
  cplx zeta;
  double r = 0;
};

NeckHit find_child_disk(const GluingParameter& p, int i, cplx z, double radius_of) {
  const RootedTree& tree = p.base.curve.tree.tree;
  for (int h : tree.children(i)) {
    const cplx x = p.base.curve.tree.node_pos.at(h);
    const cplx zeta = z - x;
    const double r = std::abs(zeta);
    double lim = radius_of;
    if (lim < 0) lim = 2.0 * std::sqrt(std::abs(p.neck(h)));  // metric blend disk
    if (r < lim) return {h, p.neck(h), zeta, r};
  }
  return {};
}

}  // namespace

double glued_lambda(const GluingParameter& p, double delta_t, int i, cplx z) {
  (void)delta_t;
  NeckHit hit = find_child_disk(p, i, z, -1.0);
  if (hit.h < 0 || hit.v == 0.0) return 1.0;
  const double s = std::sqrt(std::abs(hit.v));
  const cplx n = hit.zeta / hit.v;
  const double pull = glued_lambda(p, delta_t, hit.h, n) *
                      (1.0 + std::norm(z)) /
                      ((1.0 + std::norm(n)) * std::abs(hit.v));
  if (hit.r <= s) return pull;
  const double b = beta(hit.r / s);
  return pull + b * (1.0 - pull);
}

namespace {

double rho_rec(const GluingParameter& p, double dt, int i, cplx z, bool core) {
  NeckHit hit = find_child_disk(p, i, z, 2.0 * dt);
  if (hit.h >= 0) {
    const double r = hit.r;
    if (hit.v == 0.0) return r * r + beta(r / dt) * (1.0 - r * r);
    const double X = r > 0 ? r * r + std::norm(hit.v) / (r * r) : 0.0;
    if (r >= dt) return X + beta(r / dt) * (1.0 - X);
    const double barg = r > 0 ? dt * r / std::abs(hit.v) : 0.0;
    if (barg >= 2.0) return X;
    // this deep, the neck map is exactly linear: z -> zeta / v
    const double rh = rho_rec(p, dt, hit.h, hit.zeta / hit.v, true);
    return rh + beta(barg) * (X - rh);
  }
  // away from every child disk: 1 on the principal component and on
  // collapsed bubbles, |z|^{-2} blended to 1 near the surviving node at
  // infinity of a kept non-root component
  if (core) return 1.0;
  const double a = std::abs(z);
  if (a == 0.0) return 1.0;
  const double s2 = 1.0 / (a * a);
  return s2 + beta(dt / a) * (1.0 - s2);
}

}  // namespace

double glued_rho(const GluingParameter& p, double delta_t, int i, cplx z) {
  const bool core =
      i == p.base.curve.tree.tree.root || p.neck(i) != 0.0;
  return rho_rec(p, delta_t, i, z, core);
}

GluedGrid::GluedGrid(const GluingMap& g, const GridSpec& spec)
    : g_(&g), spec_(spec) {
  delta_t_ = delta_blend(g.parameter().base.curve);
  dt_ = 2.0 * M_PI / spec_.nt;
  // chart centers: one per neck on the component, or the chart origin
  for (int comp : g.kept()) {
    std::vector<std::pair<cplx, double>> centers;  // center, smin
    for (const NeckInfo& n : g.necks())
      if (n.surface_component == comp)
        centers.push_back(
            {n.center, std::log(std::abs(n.v)) - spec_.margin});
    if (centers.empty()) centers.push_back({cplx(0.0), -spec_.smax});
    for (auto [c, smin] : centers) {
      Chart ch;
      ch.component = comp;
      ch.center = c;
      ch.smin = smin;
      ch.ns = std::max(8, int(std::ceil((spec_.smax - smin) / spec_.ds)));
      ch.first = int(points_.size());
      points_.resize(points_.size() + std::size_t(ch.ns) * spec_.nt);
      charts_.push_back(ch);
    }
  }
  chart_of_.resize(points_.size());
  const GluingParameter& p = g.parameter();
  for (std::size_t c = 0; c < charts_.size(); ++c) {
    const Chart& ch = charts_[c];
    // all chart centers on this component, for the partition of unity
    std::vector<cplx> others;
    for (const Chart& o : charts_)
      if (o.component == ch.component) others.push_back(o.center);
    for (int j = 0; j < ch.ns; ++j) {
      const double s = ch.smin + (j + 0.5) * spec_.ds;
      const double r = std::exp(s);
      for (int k = 0; k < spec_.nt; ++k) {
        const double t = (k + 0.5) * dt_;
        GridPoint pt;
        pt.component = ch.component;
        pt.z = ch.center + std::polar(r, t);
        double denom = 0.0, mine = 0.0;
        for (cplx o : others) {
          const double d2 = std::norm(pt.z - o);
          const double inv = d2 > 0 ? 1.0 / d2 : 1e300;
          denom += inv;
          if (o == ch.center) mine = inv;
        }
        const double chi = others.size() == 1 ? 1.0 : mine / denom;
        pt.weight = chi * r * r * spec_.ds * dt_;
        pt.lambda = glued_lambda(p, delta_t_, ch.component, pt.z);
        pt.rho = glued_rho(p, delta_t_, ch.component, pt.z);
        pt.sigma = pt.lambda * 2.0 / (1.0 + std::norm(pt.z));
        pt.P = preglue_eval(g, SurfacePoint::north(ch.component, pt.z)).P;
        const int idx = ch.first + j * spec_.nt + k;
        points_[std::size_t(idx)] = std::move(pt);
        chart_of_[std::size_t(idx)] = int(c);
      }
    }
  }
}

int GluedGrid::neighbor(int idx, int dj, int dk) const {
  const Chart& ch = charts_[std::size_t(chart_of_[std::size_t(idx)])];
  const int local = idx - ch.first;
  const int j = local / spec_.nt + dj;
  if (j < 0 || j >= ch.ns) return -1;
  int k = (local % spec_.nt + dk) % spec_.nt;
  if (k < 0) k += spec_.nt;
  return ch.first + j * spec_.nt + k;
}

cplx GluedGrid::chart_center(int idx) const {
  return charts_[std::size_t(chart_of_[std::size_t(idx)])].center;
}

MetricWeightField build_metric_and_weight(const GluedGrid& grid) {
  MetricWeightField f;
  f.lambda.reserve(grid.size());
  f.rho.reserve(grid.size());
  for (const GridPoint& pt : grid.points()) {
    f.lambda.push_back(pt.lambda);
    f.rho.push_back(pt.rho);
  }
  return f;
}

}  // namespace bubbleglue
