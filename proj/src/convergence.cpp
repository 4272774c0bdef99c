#include "bubbleglue/convergence.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace bubbleglue {

namespace {

// angular distance between two marked points of the glued surface
double domain_angle(const MarkPoint& a, const MarkPoint& b) {
  if (a.component != b.component) return M_PI;
  const Eigen::Vector3d ea = embed(SpherePoint::north_coord(a.y));
  const Eigen::Vector3d eb = embed(SpherePoint::north_coord(b.y));
  return std::acos(std::clamp(ea.dot(eb), -1.0, 1.0));
}

CVec entry_value_at_infinity(const SequenceEntry& e, int root) {
  if (e.eval) return e.eval(SurfacePoint::inverted(root, 0.0));
  double best = -1.0;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < e.sample_points.size(); ++i) {
    const SurfacePoint& sp = e.sample_points[i];
    if (sp.component != root) continue;
    const double a = std::abs(sp.w);
    const double mag = sp.inv ? (a > 0 ? 1.0 / a : 1e300) : a;
    if (mag > best) {
      best = mag;
      arg = i;
    }
  }
  if (best < 0)
    throw GeomError("converge_check: no samples on the root component");
  return e.sample_values[arg];
}

double sup_distance_fixed(const GluingMap& g, const SequenceEntry& e) {
  if (e.sample_values.size() != e.sample_points.size())
    throw GeomError("converge_check: sample points and values disagree");
  double sup = 0;
  for (std::size_t i = 0; i < e.sample_points.size(); ++i) {
    const GaugedPoint gp = preglue_eval(g, e.sample_points[i]);
    sup = std::max(sup, fs_distance(gp.P, e.sample_values[i]));
  }
  return sup;
}

double sup_distance_refined(const GluingMap& g, const SequenceEntry& e,
                            const GridSpec& spec) {
  double prev = -1.0;
  for (int level = 0; level < 3; ++level) {
    GridSpec gs = spec;
    gs.ds = spec.ds / double(1 << level);
    gs.nt = spec.nt * (1 << level);
    const GluedGrid grid(g, gs);
    double sup = 0;
    for (const GridPoint& pt : grid.points())
      sup = std::max(
          sup,
          fs_distance(pt.P, e.eval(SurfacePoint::north(pt.component, pt.z))));
    if (prev >= 0 && std::abs(sup - prev) <= 0.01 * std::max(sup, 1e-14))
      return sup;
    prev = sup;
  }
  return prev;
}

}  // namespace

SequenceEntry sequence_entry(const BubbleMap& b, const std::map<int, cplx>& v) {
  SequenceEntry e;
  e.v = v;
  e.marks = b.curve.marks;
  e.eval = [b](const SurfacePoint& p) {
    auto it = b.maps.find(p.component);
    if (it == b.maps.end()) {
      if (b.maps.size() != 1)
        throw GeomError("sequence entry: no map for the requested component");
      it = b.maps.begin();
    }
    return gauged_eval(it->second, to_sphere(p)).P;
  };
  return e;
}

SequenceEntry corrected_entry(const BubbleMap& base,
                              const std::map<int, cplx>& v, double p,
                              const GridSpec& spec, CorrectionState* state) {
  const GluingMap g({base, v});
  const GluedGrid grid(g, spec);
  const CorrectionState cs = picard_correct(grid, p, 1e-7, 12);
  SequenceEntry e;
  e.v = v;
  e.marks = g.glued_curve().marks;
  const auto& pts = grid.points();
  e.sample_points.reserve(pts.size());
  e.sample_values.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    e.sample_points.push_back(
        SurfacePoint::north(pts[i].component, pts[i].z));
    e.sample_values.push_back(fs_exp(pts[i].P, cs.xi.samples[i]));
  }
  if (state) *state = cs;
  return e;
}

ConvergenceCertificate converge_check(const BubbleMap& b_star,
                                      const std::vector<SequenceEntry>& seq,
                                      const GridSpec& spec) {
  b_star.validate();
  ConvergenceCertificate cert;
  const int root = b_star.curve.tree.tree.root;
  const CVec p_infty = gauged_eval(b_star.maps.at(root), SpherePoint::infinity()).P;
  for (const SequenceEntry& e : seq) {
    const GluingMap g({b_star, e.v});
    const MarkedCurve glued = g.glued_curve();
    ConvergenceEntryResult res;
    res.v_total = g.parameter().total();
    const double r = injectivity_radius_curve(glued);
    if (16.0 * res.v_total >= r * r)
      throw GeomError(
          "converge_check: inadmissible witness: 16 |upsilon| reaches the "
          "squared injectivity radius of the glued curve");
    res.sup_distance = e.sample_points.empty()
                           ? sup_distance_refined(g, e, spec)
                           : sup_distance_fixed(g, e);
    for (const auto& [label, mp] : glued.marks) {
      const auto it = e.marks.find(label);
      res.mark_error = std::max(
          res.mark_error, it == e.marks.end() ? M_PI : domain_angle(mp, it->second));
    }
    res.ev_distance = fs_distance(p_infty, entry_value_at_infinity(e, root));
    cert.entries.push_back(res);
  }
  for (std::size_t k = 1; k < cert.entries.size(); ++k)
    if (cert.entries[k].sup_distance >
        cert.entries[k - 1].sup_distance + 1e-12)
      cert.distances_decreasing = false;
  if (cert.entries.size() >= 2) {
    const double mfirst = cert.entries.front().mark_error;
    const double mlast = cert.entries.back().mark_error;
    cert.marks_converge = mlast <= 0.5 * mfirst + 1e-12;
    const double dfirst = cert.entries.front().sup_distance;
    const double dlast = cert.entries.back().sup_distance;
    cert.converged = cert.distances_decreasing && cert.marks_converge &&
                     (dfirst < 1e-12 || dlast <= 0.5 * dfirst + 1e-12);
  } else {
    cert.converged = !cert.entries.empty();
  }
  return cert;
}

ConvergenceCertificate converge_check(
    const BubbleMap& b_star, const std::vector<BubbleMap>& seq,
    const std::vector<std::map<int, cplx>>& witnesses, const GridSpec& spec) {
  if (seq.size() != witnesses.size())
    throw GeomError("converge_check: one witness is required per entry");
  std::vector<SequenceEntry> entries;
  entries.reserve(seq.size());
  for (std::size_t k = 0; k < seq.size(); ++k)
    entries.push_back(sequence_entry(seq[k], witnesses[k]));
  return converge_check(b_star, entries, spec);
}

SweepResult neck_sweep(const BubbleMap& b, const std::vector<double>& schedule,
                       double p, const GridSpec& spec) {
  SweepResult out;
  out.p = p;
  const std::vector<int> hat = b.curve.tree.tree.hat();
  for (const double vab : schedule) {
    SweepRow row;
    row.v_abs = vab;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      std::map<int, cplx> v;
      for (const int h : hat)
        v[h] = std::polar(vab / double(hat.size()), 0.4);
      const GluingMap g({b, v});
      const GluedGrid grid(g, spec);
      const PregluingReport rep = check_pregluing_estimates(grid, p);
      row.total_v = rep.total_v;
      row.dbar_norm = rep.dbar_norm;
      row.du_c0 = rep.du_c0;
      const double scale =
          row.total_v > 0 ? std::pow(row.total_v, 1.0 / p) : 0.0;
      row.dbar_ratio = scale > 0 ? row.dbar_norm / scale : 0.0;
      const CorrectionState cs = picard_correct(grid, p, 1e-7, 12);
      row.eta_norm = cs.eta_norm;
      row.eta_ratio = scale > 0 ? row.eta_norm / scale : 0.0;
      row.final_defect = cs.final_defect_norm;
      row.contraction = cs.contraction.empty() ? 0.0 : cs.contraction.back();
      row.picard_iterations = cs.iterations;
      row.ok = true;
    } catch (const std::exception& ex) {
      row.error = ex.what();
    }
    row.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace bubbleglue
