#pragma once
// Convergence certification for sequences of maps against a bubble-map
// limit, and the neck-sweep experiment driver that measures how the defect,
// the correction, and the contraction factors scale as the necks shrink.

#include <string>

#include "bubbleglue/linearization.hpp"

namespace bubbleglue {

// One member of a sequence approaching a bubble map: a map defined on the
// glued surface built from the limit's curve with the witness neck vectors
// v, together with its marked points on that surface.  The map is given
// either as an arbitrary-point evaluator (unit target representatives;
// gauge-independent quantities only are measured) or as a fixed sample set
// with precomputed values.
struct SequenceEntry {
  std::map<int, cplx> v;                          // witness neck vectors
  std::function<CVec(const SurfacePoint&)> eval;  // arbitrary-point evaluator
  std::vector<SurfacePoint> sample_points;        // used when nonempty
  std::vector<CVec> sample_values;
  std::map<int, MarkPoint> marks;                 // on the glued surface
};

// Entry evaluating the bubble map b component-wise on the glued surface;
// when b has a single component its map is used on every kept component.
SequenceEntry sequence_entry(const BubbleMap& b, const std::map<int, cplx>& v);

// Entry produced by gluing the base map with neck vectors v and removing the
// antiholomorphic defect by the Picard correction; sampled on the
// correction grid, marks carried through the gluing exactly.
SequenceEntry corrected_entry(const BubbleMap& base,
                              const std::map<int, cplx>& v, double p,
                              const GridSpec& spec = {},
                              CorrectionState* state = nullptr);

struct ConvergenceEntryResult {
  double v_total = 0;       // |upsilon_k|
  double sup_distance = 0;  // sup over the surface of the target distance
  double mark_error = 0;    // max angular mark-position error on the domain
  double ev_distance = 0;   // target distance at the root point at infinity
};

struct ConvergenceCertificate {
  std::vector<ConvergenceEntryResult> entries;
  bool distances_decreasing = true;  // nonincreasing sup distances
  bool marks_converge = true;        // mark errors decay (or none present)
  bool converged = false;            // decay verdict over all conditions
};

// Verify a supplied sequence-with-witnesses against the limit b_star: for
// every entry, measure sup_z d(u_{b*}(q_v(z)), u_k(z)) over a dense sample
// of the glued surface (refined until stable to 1% for evaluator-backed
// entries), the mark-position errors, and the value distance at the root's
// point at infinity.  Throws GeomError on inadmissible witnesses
// (16 |upsilon| must stay below the squared injectivity radius of the glued
// curve, and the gluing itself must be admissible).
ConvergenceCertificate converge_check(const BubbleMap& b_star,
                                      const std::vector<SequenceEntry>& seq,
                                      const GridSpec& spec = {});

// Convenience overload matching sequences given as bubble maps.
ConvergenceCertificate converge_check(
    const BubbleMap& b_star, const std::vector<BubbleMap>& seq,
    const std::vector<std::map<int, cplx>>& witnesses,
    const GridSpec& spec = {});

// ------------------------------------------------------------------- sweeps

struct SweepRow {
  double v_abs = 0;            // scheduled total neck size
  double total_v = 0;          // realized |upsilon|
  double dbar_norm = 0;        // defect norm of the glued map
  double du_c0 = 0;            // sup derivative of the glued map
  double dbar_ratio = 0;       // dbar_norm / |upsilon|^{1/p}
  double eta_norm = 0;         // corrected right-hand-side norm
  double eta_ratio = 0;        // eta_norm / |upsilon|^{1/p}
  double final_defect = 0;     // defect norm after correction
  double contraction = 0;      // last measured Picard contraction factor
  int picard_iterations = 0;
  double runtime_seconds = 0;
  bool ok = false;
  std::string error;           // per-row failure isolation
};

struct SweepResult {
  double p = 3.0;
  std::vector<SweepRow> rows;  // ordered by schedule index
};

// For each scheduled total neck size, distribute it evenly over all nodes
// (fixed phase), glue, measure the pregluing estimates, and run the Picard
// correction.  A failing row records its error and the sweep continues.
SweepResult neck_sweep(const BubbleMap& b, const std::vector<double>& schedule,
                       double p, const GridSpec& spec = {});

}  // namespace bubbleglue
