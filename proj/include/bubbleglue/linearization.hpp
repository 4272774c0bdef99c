#pragma once
// Balancing functionals with the per-component affine action and an exact-
// plus-Newton balancing solver; explicit polynomial kernel bases of the
// linearized Cauchy-Riemann operator for rational maps into P^n with
// regularity rank checks; and the discretized correction loop that removes
// the antiholomorphic defect of a glued map by a Picard iteration around a
// matrix-free least-squares inverse of the discrete dbar operator.

#include <functional>

#include "bubbleglue/analysis.hpp"

namespace bubbleglue {

// ----------------------------------------------------------------- balancing
//
// Per-component balancing data.  The map integrals use the energy density
// normalized so that its plane integral equals the degree: map_tilde is the
// z-weighted first moment of the density, map_psi3 the cutoff-weighted mass
// minus 1/2.  The "full" values add the weighted child-node and mark terms.
struct BalanceState {
  cplx map_tilde = 0.0;      // integral of density(z) * z
  double map_psi3 = 0.0;     // integral of density(z) * beta(|z|) - 1/2
  double du_l2 = 0.0;        // integral of density (squared-derivative mass)
  cplx full_tilde = 0.0;     // map_tilde + sum_h d_h x_h + sum_l y_l
  double full_psi3 = 0.0;    // map_psi3 + sum_h d_h beta(|x_h|) + sum_l beta(|y_l|)
  long long point_weight = 0;  // sum_h d_h + number of marks on the component
};

BalanceState balance_functionals(const BubbleMap& b, int i,
                                 const QuadratureSpec& q = {});

struct BalanceResult {
  BubbleMap balanced;
  std::map<int, ComponentAction> params;
  int iterations = 0;      // total Newton steps over all components
  double max_residual = 0; // max over components of |full_tilde| + |full_psi3|
};

// Drive full_tilde and full_psi3 to zero on every component with a
// translation-dilation action (theta = 0).  The translation is exact (the
// first functional is affine in c with slope du_l2 + point_weight); the
// dilation is a bracketed Newton iteration on the monotone second
// functional.  Throws GeomError when max_iter is exhausted.
BalanceResult balance_solve(const BubbleMap& b, double tol = 1e-10,
                            int max_iter = 80, const QuadratureSpec& q = {});

// --------------------------------------------------------------- generators
//
// The four infinitesimal generators of the affine action: the derivative of
// u against the coordinate fields 1, i, z, iz, negated.  Returned as a
// tangent vector at gauged_eval(u, z).P; k runs over 1..4.  All four decay
// to zero toward infinity.
CVec generator_field(const RationalMap& u, int k, cplx z_north);

// ------------------------------------------------------------- kernel bases
//
// Holomorphic sections of the pulled-back tangent bundle, presented as
// (n+1)-tuples of degree-<= d polynomials modulo the span of the map's own
// numerator tuple; the section of a tuple Q is proj_{P(z)} Q(z) / |V(z)|.
// The complex dimension is (n+1)(d+1) - 1.
struct KernelBasis {
  RationalMap u;
  std::vector<Eigen::MatrixXcd> elements;  // (n+1) x (degree+1) each
  int dimension() const { return static_cast<int>(elements.size()); }
};

KernelBasis kernel_basis(const RationalMap& u, int n);

// Section value of a numerator tuple, evaluated in the same chart and phase
// gauge that gauged_eval picks at that point (so values can be compared
// directly with tangent vectors at gauged_eval(...).P).
CVec kernel_section_eval(const RationalMap& u, const Eigen::MatrixXcd& q,
                         const SpherePoint& z);
CVec kernel_section_eval(const RationalMap& u, const Eigen::MatrixXcd& q,
                         cplx z_north);

// Gauge-aligned finite-difference antiholomorphic derivative of a section
// along u at z (flat dzbar coefficient at gauged_eval(u, z).P); vanishes to
// stencil accuracy for holomorphic sections.  xi(z) must return the tangent
// vector in the gauge of gauged_eval(u, z).P.
CVec section_dbar_fd(const RationalMap& u, const std::function<CVec(cplx)>& xi,
                     cplx z, double h);

struct RegularityComponent {
  int id = 0;
  bool surjective = false;
  std::vector<double> singular_values;  // of the evaluation-at-infinity map
};

struct RegularityReport {
  std::vector<RegularityComponent> components;
  bool all_surjective = true;
};

// Rank of the evaluation-at-infinity map from each component's kernel basis
// to the tangent space of the target at the image of infinity.
RegularityReport check_regularity(const BubbleMap& b, double rank_tol = 1e-8);

// Kernel of the linearization at the whole bubble map: tuples of
// per-component kernel elements whose section values agree at every node.
struct MatchedKernel {
  std::vector<std::map<int, Eigen::MatrixXcd>> elements;  // component -> tuple
  int dimension() const { return static_cast<int>(elements.size()); }
};

MatchedKernel matched_kernel(const BubbleMap& b, double tol = 1e-8);

// A matched kernel element carried to the glued surface: evaluated through
// the forward gluing map at every grid point, in the grid's gauge.
DiscreteSection restrict_matched_element(
    const GluedGrid& grid, const std::map<int, Eigen::MatrixXcd>& elem);

// ------------------------------------------------------- discretized solver
//
// Matrix-free discrete dbar operator on grid vector fields: gauge-aligned
// finite differences in the log-polar chart, tangent projection at the base
// representative, and conversion to the flat dzbar coefficient.  Linear in
// the samples; the adjoint is taken against the discrete L^2 pairings
// (sigma^2 * weight on fields, weight on forms).
class DbarDiscrete {
 public:
  explicit DbarDiscrete(const GluedGrid& grid);

  DiscreteSection apply(const DiscreteSection& xi) const;
  DiscreteSection apply_adjoint(const DiscreteSection& a) const;

  // Diagonal of the weighted normal operator in the field metric, for
  // per-sample residual weights fw: d_j = sum_k fw_k w_k |scale_k c_kj|^2
  // / (sigma_j^2 w_j).  Used as a Jacobi preconditioner.
  std::vector<double> normal_diagonal(const std::vector<double>& fw) const;

  const GluedGrid& grid() const { return *grid_; }

 private:
  struct Entry {
    int from = 0;  // source sample index
    cplx c;        // complex stencil coefficient (phase included)
  };
  const GluedGrid* grid_;
  std::vector<cplx> scale_;           // 1 / (2 conj(z - center)) per point
  std::vector<int> first_;            // entry range per point
  std::vector<Entry> entries_;
};

// dbar defect of the pointwise-exponentiated map z -> exp_{P(z)} xi(z),
// computed by the same gauge-aligned stencil and parallel-transported back
// to the base representative's tangent space.
DiscreteSection dbar_of_exponential(const GluedGrid& grid,
                                    const DiscreteSection& xi);

struct LeastSquaresStats {
  int iterations = 0;
  double relative_residual = 1.0;  // on the normal-equations residual
};

// Least-squares solve D xi = eta over fields L^2-orthogonal to the given
// deflation subspace.  The residual is minimized in the quadratic part of
// the modified norm at exponent p (rho-weighted pairing), by Jacobi-
// preconditioned conjugate gradients on the slightly shifted normal
// equations.
DiscreteSection solve_dbar_least_squares(
    const DbarDiscrete& D, const DiscreteSection& eta,
    const std::vector<DiscreteSection>& deflate, double p, double rel_tol,
    int max_iter, LeastSquaresStats* stats = nullptr);

struct CorrectionState {
  DiscreteSection xi;                     // final corrected field
  DiscreteSection eta;                    // final right-hand side
  std::vector<double> residual_history;   // |eta_{k+1} - eta_k| in the p-norm
  std::vector<double> contraction;        // successive residual ratios
  double alpha_norm = 0;                  // |dbar of the glued map| p-norm
  double eta_norm = 0;
  double final_defect_norm = 0;  // |dbar exp(xi)| re-measured at the end
  int iterations = 0;
};

// Picard iteration eta <- alpha - N(P eta) with alpha the negated defect of
// the glued map, P the deflated least-squares inverse of the discrete dbar
// operator, and N the full expansion remainder measured by three
// evaluations.  Throws GeomError when the measured contraction stays >= 1.
CorrectionState picard_correct(const GluedGrid& grid, double p, double tol,
                               int max_iter);

// |N xi1 - N xi2|_p / ((|xi1|_{p,1} + |xi2|_{p,1}) |xi1 - xi2|_{p,1}); the
// empirical constant of the quadratic remainder.
double quadratic_term_value(const GluedGrid& grid, const DiscreteSection& xi1,
                            const DiscreteSection& xi2, double p);

}  // namespace bubbleglue
