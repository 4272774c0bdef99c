#pragma once
// The pregluing construction: local stretching maps around nodes, their
// composition into the map from the glued surface to the bubble tree, exact
// Wirtinger jets (the d/dz, d/dzbar derivative pair) along the way, neck
// annulus descriptors, inverses, and the preglued map sampler.

#include <vector>

#include "bubbleglue/bubble.hpp"

namespace bubbleglue {

// Derivatives of a chart coordinate with respect to the source coordinate.
struct WJet {
  cplx dz = 1.0;
  cplx dzb = 0.0;
};

// Chain rule for g(f(z)) given the derivatives (gz, gzb) of g at f(z).
inline WJet jet_compose(cplx gz, cplx gzb, const WJet& f) {
  return {gz * f.dz + gzb * std::conj(f.dzb), gz * f.dzb + gzb * std::conj(f.dz)};
}

// A point on a component sphere in the holomorphic atlas {z, 1/z}: the
// inverted chart coordinate w corresponds to north coordinate 1/w.
struct SurfacePoint {
  int component = 0;
  bool inv = false;
  cplx w = 0.0;

  static SurfacePoint north(int c, cplx z) { return {c, false, z}; }
  static SurfacePoint inverted(int c, cplx w) { return {c, true, w}; }
};

SpherePoint to_sphere(const SurfacePoint& p);

struct TrackedPoint {
  SurfacePoint pos;
  WJet jet;  // derivative of pos.w with respect to the source coordinate
};

// Re-express a tracked point in the requested chart of its component.
TrackedPoint convert_chart(const TrackedPoint& t, bool inv);

struct GluingParameter {
  BubbleMap base;
  std::map<int, cplx> v;  // node -> neck parameter; missing entries mean 0

  double total() const;  // |upsilon| = sum of |v_h|
  cplx neck(int h) const;
};

// Location of a collapsed node's neck on the glued surface: in the
// deep-linear region the original component charts identify affinely with
// the carrying kept component, z = offset + slope * w.
struct NeckInfo {
  int h = 0;
  int surface_component = 0;
  cplx center;  // image of the node position on the carrying component
  cplx slope;   // derivative of the identification (product of ancestor v's)
  cplx v;       // the neck parameter itself

  double sqrt_v() const { return std::sqrt(std::abs(v)); }
};

enum class AnnulusClass { none, inner, outer };
// inner: local radius in [sqrt|v|/2, sqrt|v|) — maps onto the bubble, the
// region carrying the antiholomorphic defect of the deep branch;
// outer: [sqrt|v|, 2 sqrt|v|) — stays on the parent, middle-branch defect.

class GluingMap {
 public:
  explicit GluingMap(GluingParameter upsilon);

  const GluingParameter& parameter() const { return p_; }
  const std::vector<int>& kept() const { return kept_; }
  const std::vector<NeckInfo>& necks() const { return necks_; }
  double delta_bound() const { return delta_bound_; }

  // Map a point of the glued surface (on kept component comp) into the
  // bubble tree, carrying exact first derivatives.  The stretch order must
  // be a linear extension of the tree order on collapsed nodes; the default
  // is (depth, id)-sorted.  The result is order independent.
  TrackedPoint forward(const SurfacePoint& src) const;
  TrackedPoint forward_with_order(const SurfacePoint& src,
                                  const std::vector<int>& order) const;

  // Inverse: a point of the bubble tree pulled back to the glued surface.
  // Throws GeomError("seam") exactly on the measure-zero gluing circles.
  SurfacePoint inverse(const SurfacePoint& target) const;

  // The glued marked curve: the kept subtree with node positions and marks
  // pulled back through the inverse.
  MarkedCurve glued_curve() const;

  // Which defect annulus (if any) of which neck contains the point; the
  // point is given in north coordinates of a kept component.
  std::pair<AnnulusClass, const NeckInfo*> annulus_class(int comp, cplx z) const;

  // Operator norm of the derivative at z with respect to the round metrics
  // on source and target spheres.
  double dq_operator_norm(int comp, cplx z) const;

  std::vector<int> default_order() const;

 private:
  GluingParameter p_;
  std::vector<int> kept_;
  std::vector<NeckInfo> necks_;
  std::map<int, std::pair<cplx, cplx>> affine_;  // component -> (slope, offset)
  std::map<int, int> carrier_;                   // component -> kept component
  double delta_bound_ = 0.0;

  void apply_stretch(int h, TrackedPoint& t) const;
  void invert_stretch(int h, SurfacePoint& p) const;
};

// Antiholomorphic defect of the glued map at a source point: the analytic
// value from the jets and a finite-difference cross-check computed in the
// target chart coordinate.  Throws GeomError("resolution") when the step is
// too coarse for the local neck scale or the stencil straddles a seam.
struct DbarSample {
  TrackedPoint at;
  cplx closed_form;
  cplx finite_difference;
  AnnulusClass annulus = AnnulusClass::none;
};

DbarSample dbar_qupsilon(const GluingMap& g, int comp, cplx z, double h_fd);

// The preglued map: the base bubble map evaluated through the gluing map.
GaugedPoint preglue_eval(const GluingMap& g, const SurfacePoint& src);

}  // namespace bubbleglue
