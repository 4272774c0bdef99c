#pragma once
// Bubble trees with geometric node data, marked curves, and bubble maps into
// P^n: validation, injectivity radii, the per-component affine group action,
// and isomorphism search.

#include <optional>

#include "bubbleglue/projective.hpp"
#include "bubbleglue/tree.hpp"

namespace bubbleglue {

// A rooted tree of spheres: each non-root node h is a sphere attached to its
// parent component at the finite point x_h of the parent's affine chart.
struct GeometricBubbleTree {
  RootedTree tree;
  std::map<int, cplx> node_pos;  // h in hat() -> x_h

  // finite positions for every non-root node; siblings on a shared component
  // sit at distinct points
  void validate() const;
};

struct MarkPoint {
  int component = 0;
  cplx y = 0.0;
};

struct MarkedCurve {
  GeometricBubbleTree tree;
  std::map<int, MarkPoint> marks;  // mark label -> position

  void validate() const;
  // children-node count + mark count + 1 for the attaching point of a
  // non-root component
  int special_count(int i) const;
};

// A bubble map: one rational map per component, agreeing at nodes
// (u_h at infinity equals the parent map at x_h).
struct BubbleMap {
  MarkedCurve curve;
  std::map<int, RationalMap> maps;

  int target_dim() const;
  long long degree_total() const;
  // The combinatorial skeleton with degree labels read off the maps.
  BubbleType type() const;
  void validate(double node_tol = 1e-9) const;
};

// Minimum over non-root nodes of (distance of x_h to infinity, distance to
// sibling nodes on the same component); distances to infinity are 1/|x|
// capped at 100 (the off-component convention).  100 when there are no nodes.
double injectivity_radius_tree(const GeometricBubbleTree& t);
// Additionally minimizes over mark-to-infinity, mark-to-node, and
// mark-to-mark separations on shared components.
double injectivity_radius_curve(const MarkedCurve& c);
// Largest total neck size delta with 16 (|I|+|M|) sqrt(delta) < r_C.
double max_admissible_delta(const MarkedCurve& c);
// Blend radius for glued metrics/weights: min(1/4, r_C / 5).
double delta_blend(const MarkedCurve& c);

struct BubbleMapReport {
  bool nodes_ok = true;
  bool degrees_ok = true;
  bool stability_ok = true;
  double max_node_defect = 0.0;
  std::vector<std::string> failures;
  bool all_ok() const { return nodes_ok && degrees_ok && stability_ok; }
};

BubbleMapReport check_bubble_map(const BubbleMap& b, double tol = 1e-9);

// Composition u(a z + b) as polynomial data; a must be nonzero.
RationalMap compose_affine(const RationalMap& u, cplx a, cplx b);

// Per-component affine action: with g(w) = (1+r) e^{i theta} (w + c), the
// component map becomes u o g^{-1} and special points on the component move
// by g.  Values at nodes and marked points are unchanged.
struct ComponentAction {
  cplx c = 0.0;
  double r = 0.0;
  double theta = 0.0;
};

BubbleMap group_action(const BubbleMap& b, const std::map<int, ComponentAction>& params);

struct BubbleIsomorphism {
  std::map<int, int> node_map;                   // component relabeling
  std::map<int, std::pair<cplx, cplx>> affine;   // per source component (a, b)
  double residual = 0.0;
};

// Searches tree isomorphisms combined with per-component affine maps
// carrying b1 to b2 (special points and maps within tol); returns the first
// isomorphism found, or nullopt.
std::optional<BubbleIsomorphism> isomorphic_maps(const BubbleMap& b1,
                                                 const BubbleMap& b2, double tol);

}  // namespace bubbleglue
