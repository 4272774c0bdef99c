#pragma once
// Quadrature grids on the glued surface, the glued conformal metric factors,
// and the nonnegative weight fields entering the modified Sobolev norms.
//
// Each kept component is covered by one log-polar chart per neck on it (one
// chart centered at the origin when the component has no necks), tied
// together by a smooth partition of unity chi_c = d_c^{-2} / sum_j d_j^{-2}.
// Radial nodes are uniform in s = ln|z - center| so the neck scales are
// always resolved; angular nodes are midpoint-shifted.

#include <vector>

#include "bubbleglue/gluing.hpp"

namespace bubbleglue {

// Conformal factor of the glued metric against the round metric of the
// component sphere, evaluated at the north coordinate z of base component i.
// Inside a neck of parameter v the metric is the pullback of the (recursively
// glued) bubble metric under z -> (z - x) / v, blended back to round across
// the annulus [|v|^{1/2}, 2|v|^{1/2}].
double glued_lambda(const GluingParameter& p, double delta_t, int i, cplx z);

// Nonnegative weight: ~ r^2 + |v|^2 / r^2 across a neck of radius r (so it
// never drops below |v| on the neck annuli), ~ squared distance near a
// surviving node, blended to 1 at scale delta_t, and 1 far from everything.
double glued_rho(const GluingParameter& p, double delta_t, int i, cplx z);

struct GridSpec {
  double ds = 0.1;      // radial log step
  int nt = 64;          // angular nodes
  double smax = 18.0;   // outer log radius
  double margin = 8.0;  // log depth below each neck scale
};

struct GridPoint {
  int component = 0;
  cplx z;              // north coordinate on the kept component
  double weight = 0;   // chi * r^2 * ds * dt: the flat dx dy measure share
  double lambda = 1;   // glued / round conformal factor
  double rho = 1;      // weight field
  double sigma = 1;    // glued conformal factor against the flat chart, at z
  CVec P;              // unit representative of the preglued map value
};

class GluedGrid {
 public:
  GluedGrid(const GluingMap& g, const GridSpec& spec = {});

  const GluingMap& gluing() const { return *g_; }
  const GridSpec& spec() const { return spec_; }
  double delta_t() const { return delta_t_; }
  const std::vector<GridPoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }

  // Index of the lattice neighbor of point idx (radial offset dj, angular
  // offset dk; the angular direction wraps), or -1 outside the chart.
  int neighbor(int idx, int dj, int dk) const;
  // Log-polar cell size of the chart containing idx.
  double ds() const { return spec_.ds; }
  double dt() const { return dt_; }
  // Center of the log-polar chart containing point idx.
  cplx chart_center(int idx) const;

 private:
  struct Chart {
    int component = 0;
    cplx center;
    double smin = 0;
    int ns = 0;
    int first = 0;  // index of point (j = 0, k = 0)
  };

  const GluingMap* g_;
  GridSpec spec_;
  double delta_t_ = 0.25;
  double dt_ = 0;
  std::vector<Chart> charts_;
  std::vector<int> chart_of_;  // per point
  std::vector<GridPoint> points_;
};

// The metric and weight fields sampled on the grid.
struct MetricWeightField {
  std::vector<double> lambda;
  std::vector<double> rho;
};

MetricWeightField build_metric_and_weight(const GluedGrid& grid);

}  // namespace bubbleglue
