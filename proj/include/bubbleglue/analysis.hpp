#pragma once
// Weighted Sobolev norms on the glued surface: sections sampled on a
// GluedGrid, the modified L^p and L^p_1 norms with the rho-weighted L^2
// term, C^0 norms, covariant derivatives by gauge-aligned finite
// differences, and the neck-stability reports.

#include "bubbleglue/grid.hpp"

namespace bubbleglue {

enum class SectionKind { vector_field, form_01 };

// A section sampled at the grid points.  Vector-field samples are tangent
// vectors at the grid's base representative P (Hermitian-orthogonal to P).
// Form samples are the tangent-valued coefficient of dzbar in the
// component's north chart.
struct DiscreteSection {
  SectionKind kind = SectionKind::vector_field;
  std::vector<CVec> samples;
};

template <typename F>
DiscreteSection sample_section(const GluedGrid& grid, SectionKind kind, F f) {
  DiscreteSection s;
  s.kind = kind;
  s.samples.reserve(grid.size());
  for (const GridPoint& pt : grid.points()) s.samples.push_back(f(pt));
  return s;
}

// 2 ||s||_i = (int |s|^p)^{1/p} + (int rho^{-(p-2)/p} |s|^2)^{1/2} per kept
// component, with the glued metric on the surface and the target metric on
// values; the total is the sum over components.  Requires p > 2.
double modified_norm(const GluedGrid& grid, const DiscreteSection& s, double p);

// Adds the same norm of the covariant derivative (vector fields only).
double modified_norm_p1(const GluedGrid& grid, const DiscreteSection& s, double p);

// Sum over components of the pointwise sup (forms measured against the
// glued metric, fields against the target metric alone).
double c0_norm(const GluedGrid& grid, const DiscreteSection& s);

// Covariant derivative of a vector field by centered differences in the
// grid coordinates, phase-aligned to the center point's representative and
// projected onto its tangent space.  Returns per point the pair
// (d/ds, d/dt) of tangent vectors in the log-polar chart.
std::vector<std::pair<CVec, CVec>> covariant_derivative(
    const GluedGrid& grid, const DiscreteSection& s);

// The antiholomorphic defect of the glued map as a form section, together
// with the derivative bound used alongside it.
struct PregluingReport {
  double du_c0 = 0;        // sup of the glued-map differential, glued metrics
  double dbar_norm = 0;    // modified p-norm of the defect form
  double ratio = 0;        // dbar_norm / |upsilon|^{1/p}
  double total_v = 0;
};

PregluingReport check_pregluing_estimates(const GluedGrid& grid, double p);

// The defect of the glued map as a discrete form section (for reuse).
DiscreteSection glued_dbar_section(const GluedGrid& grid);
// The full derivative sup norm of the glued map.
double glued_du_c0(const GluedGrid& grid);

struct SobolevReport {
  double max_ratio = 0;  // max over trials of ||xi||_C0 / ||xi||_{p,1}
  int trials = 0;
  unsigned seed = 0;
};

SobolevReport check_sobolev_c0(const GluedGrid& grid, double p, int trials,
                               unsigned seed);

// One reproducible smooth test field: tangent projection of a random
// complex combination of the constant and the three sphere coordinates.
DiscreteSection random_smooth_section(const GluedGrid& grid, unsigned seed);

}  // namespace bubbleglue
