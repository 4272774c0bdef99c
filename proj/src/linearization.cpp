#include "bubbleglue/linearization.hpp"

#include <algorithm>
#include <cmath>

namespace bubbleglue {

namespace {

// Log-polar plane quadrature nodes matching the trapezoid rule of
// integrate_plane: uniform radial nodes in s with halved end weights,
// midpoint angular nodes, measure r^2 ds dtheta.
struct PlaneNode {
  cplx z;
  double w = 0;
};

std::vector<PlaneNode> plane_nodes(const QuadratureSpec& q, double smin = -18.0,
                                   double smax = 18.0) {
  if (q.radial_nodes < 2 || q.angular_nodes < 1)
    throw GeomError("quadrature: too few nodes");
  // The cutoff profile has large high-order derivatives on its ramp, so the
  // balancing integrals need a denser radial rule than the energy integrals;
  // boost the requested rule to a floor that resolves the ramp to ~1e-7.
  const int n = std::max(q.radial_nodes, 2048), m = std::max(q.angular_nodes, 512);
  const double h = (smax - smin) / (n - 1);
  const double dth = 2.0 * M_PI / m;
  std::vector<PlaneNode> out;
  out.reserve(std::size_t(n) * m);
  for (int j = 0; j < n; ++j) {
    const double s = smin + j * h;
    const double r = std::exp(s);
    const double ws = (j == 0 || j == n - 1) ? h / 2.0 : h;
    for (int k = 0; k < m; ++k) {
      const double th = (k + 0.5) * dth;
      out.push_back({std::polar(r, th), ws * dth * r * r});
    }
  }
  return out;
}

struct PointTerm {
  double weight = 0;
  cplx pos;
};

// Weighted child-node and mark positions on component i.
std::vector<PointTerm> point_terms(const BubbleMap& b, int i) {
  std::vector<PointTerm> out;
  const auto wts = b.type().weights();
  for (int h : b.curve.tree.tree.children(i))
    out.push_back({double(wts.at(h)), b.curve.tree.node_pos.at(h)});
  for (const auto& [label, m] : b.curve.marks)
    if (m.component == i) out.push_back({1.0, m.y});
  return out;
}

}  // namespace

BalanceState balance_functionals(const BubbleMap& b, int i,
                                 const QuadratureSpec& q) {
  if (!b.curve.tree.tree.contains(i))
    throw TreeError("balance_functionals: unknown component");
  const RationalMap& u = b.maps.at(i);
  BalanceState st;
  double psi3 = 0;
  for (const PlaneNode& nd : plane_nodes(q)) {
    const double dens = energy_density(u, nd.z) * nd.w;
    st.map_tilde += dens * nd.z;
    psi3 += dens * beta(std::abs(nd.z));
    st.du_l2 += dens;
  }
  st.map_psi3 = psi3 - 0.5;
  st.full_tilde = st.map_tilde;
  st.full_psi3 = st.map_psi3;
  for (const PointTerm& t : point_terms(b, i)) {
    st.full_tilde += t.weight * t.pos;
    st.full_psi3 += t.weight * beta(std::abs(t.pos));
    st.point_weight += (long long)std::llround(t.weight);
  }
  return st;
}

BalanceResult balance_solve(const BubbleMap& b, double tol, int max_iter,
                            const QuadratureSpec& q) {
  BalanceResult res;
  std::map<int, ComponentAction> params;
  const std::vector<PlaneNode> nodes = plane_nodes(q);
  for (int i : b.curve.tree.tree.elements) {
    const BalanceState st = balance_functionals(b, i, q);
    if (std::abs(st.full_tilde) < tol && std::abs(st.full_psi3) < tol) {
      params[i] = ComponentAction{};
      continue;
    }
    const double W = st.du_l2 + double(st.point_weight);
    if (!(W > 0))
      throw GeomError("balance_solve: component carries no derivative or point mass");
    const cplx c = -st.full_tilde / W;
    // cache the density mass at each quadrature node; acting by the
    // translation-dilation substitutes inside the cutoff only
    const RationalMap& u = b.maps.at(i);
    std::vector<double> dens(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k)
      dens[k] = energy_density(u, nodes[k].z) * nodes[k].w;
    const std::vector<PointTerm> pts = point_terms(b, i);
    auto f = [&](double r) {
      const double s = 1.0 + r;
      double acc = -0.5;
      for (std::size_t k = 0; k < nodes.size(); ++k)
        acc += dens[k] * beta(s * std::abs(nodes[k].z + c));
      for (const PointTerm& t : pts)
        acc += t.weight * beta(s * std::abs(t.pos + c));
      return acc;
    };
    auto fp = [&](double r) {
      const double s = 1.0 + r;
      double acc = 0;
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double a = std::abs(nodes[k].z + c);
        acc += dens[k] * beta_prime(s * a) * a;
      }
      for (const PointTerm& t : pts) {
        const double a = std::abs(t.pos + c);
        acc += t.weight * beta_prime(s * a) * a;
      }
      return acc;
    };
    // bracket the monotone equation f(r) = 0
    double lo = -1.0 + 1e-9, hi = 1.0;
    if (f(lo) > 0) throw GeomError("balance_solve: no dilation can shrink the mass");
    int expand = 0;
    while (f(hi) < 0) {
      hi = 2.0 * (1.0 + hi) - 1.0;
      if (++expand > 60) throw GeomError("balance_solve: no dilation bracket found");
    }
    double r = std::clamp(0.0, lo, hi);
    int it = 0;
    double fr = f(r);
    while (std::abs(fr) >= tol) {
      if (++it > max_iter) throw GeomError("balance_solve: max_iter exceeded");
      if (fr < 0) lo = r; else hi = r;
      const double d = fp(r);
      double next = d > 0 ? r - fr / d : 0.5 * (lo + hi);
      if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
      r = next;
      fr = f(r);
      ++res.iterations;
    }
    params[i] = ComponentAction{c, r, 0.0};
  }
  res.params = params;
  res.balanced = group_action(b, params);
  for (int i : b.curve.tree.tree.elements) {
    const BalanceState st = balance_functionals(res.balanced, i, q);
    res.max_residual = std::max(
        res.max_residual, std::abs(st.full_tilde) + std::abs(st.full_psi3));
  }
  return res;
}

CVec generator_field(const RationalMap& u, int k, cplx z_north) {
  if (k < 1 || k > 4) throw GeomError("generator_field: k must be 1..4");
  const GaugedPoint g = gauged_eval(u, z_north);
  CVec base;
  cplx chart = 1.0;
  if (!g.inverted) {
    base = project_tangent(g.P, u.raw_deriv(g.w)) / g.vnorm;
  } else {
    base = project_tangent(g.P, u.reversed().raw_deriv(g.w)) / g.vnorm;
    chart = -g.w * g.w;  // d/dz through w = 1/z
  }
  cplx dir;
  switch (k) {
    case 1: dir = 1.0; break;
    case 2: dir = cplx(0.0, 1.0); break;
    case 3: dir = z_north; break;
    default: dir = cplx(0.0, 1.0) * z_north; break;
  }
  return (-(chart * dir)) * base;
}

namespace {

// column-major flatten of an (n+1) x (d+1) coefficient matrix
Eigen::VectorXcd flatten(const Eigen::MatrixXcd& m) {
  return Eigen::Map<const Eigen::VectorXcd>(m.data(), m.size());
}

Eigen::MatrixXcd unflatten(const Eigen::VectorXcd& v, int rows, int cols) {
  return Eigen::Map<const Eigen::MatrixXcd>(v.data(), rows, cols);
}

CVec eval_tuple(const Eigen::MatrixXcd& q, cplx w, bool reversed) {
  const int cols = int(q.cols());
  CVec acc = CVec::Zero(q.rows());
  if (!reversed) {
    for (int k = cols - 1; k >= 0; --k) acc = acc * w + q.col(k);
  } else {
    for (int k = 0; k < cols; ++k) acc = acc * w + q.col(k);
  }
  return acc;
}

CVec section_from_gauged(const GaugedPoint& g, const Eigen::MatrixXcd& q) {
  return project_tangent(g.P, eval_tuple(q, g.w, g.inverted)) / g.vnorm;
}

}  // namespace

KernelBasis kernel_basis(const RationalMap& u, int n) {
  u.validate();
  if (n != u.target_dim())
    throw GeomError("kernel_basis: target dimension mismatch");
  const int rows = n + 1, cols = u.degree + 1, N = rows * cols;
  Eigen::MatrixXcd v(N, 1);
  v.col(0) = flatten(u.coeffs).normalized();
  const Eigen::MatrixXcd Q =
      Eigen::HouseholderQR<Eigen::MatrixXcd>(v).householderQ() *
      Eigen::MatrixXcd::Identity(N, N);
  KernelBasis kb;
  kb.u = u;
  kb.elements.reserve(std::size_t(N - 1));
  for (int j = 1; j < N; ++j)
    kb.elements.push_back(unflatten(Q.col(j), rows, cols));
  return kb;
}

CVec kernel_section_eval(const RationalMap& u, const Eigen::MatrixXcd& q,
                         const SpherePoint& z) {
  return section_from_gauged(gauged_eval(u, z), q);
}

CVec kernel_section_eval(const RationalMap& u, const Eigen::MatrixXcd& q,
                         cplx z_north) {
  return section_from_gauged(gauged_eval(u, z_north), q);
}

CVec section_dbar_fd(const RationalMap& u, const std::function<CVec(cplx)>& xi,
                     cplx z, double h) {
  const CVec P0 = gauged_eval(u, z).P;
  auto samp = [&](cplx zz) {
    CVec s = xi(zz);
    const cplx c = gauged_eval(u, zz).P.dot(P0);
    const double a = std::abs(c);
    if (a > 0) s *= c / a;
    return s;
  };
  const cplx ih(0.0, h);
  CVec a = (samp(z + h) - samp(z - h)) / (4.0 * h) +
           cplx(0.0, 1.0) * (samp(z + ih) - samp(z - ih)) / (4.0 * h);
  return project_tangent(P0, a);
}

RegularityReport check_regularity(const BubbleMap& b, double rank_tol) {
  RegularityReport rep;
  const int n = b.target_dim();
  for (int i : b.curve.tree.tree.elements) {
    const RationalMap& u = b.maps.at(i);
    const KernelBasis kb = kernel_basis(u, n);
    Eigen::MatrixXcd M(n + 1, kb.dimension());
    for (int j = 0; j < kb.dimension(); ++j)
      M.col(j) = kernel_section_eval(u, kb.elements[std::size_t(j)],
                                     SpherePoint::infinity());
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
    const auto& sv = svd.singularValues();
    RegularityComponent rc;
    rc.id = i;
    for (int j = 0; j < sv.size(); ++j)
      rc.singular_values.push_back(sv[j]);
    int rank = 0;
    if (sv.size() > 0 && sv[0] > 0)
      for (int j = 0; j < sv.size(); ++j)
        if (sv[j] > rank_tol * sv[0]) ++rank;
    rc.surjective = rank >= n;
    rep.all_surjective = rep.all_surjective && rc.surjective;
    rep.components.push_back(std::move(rc));
  }
  return rep;
}

MatchedKernel matched_kernel(const BubbleMap& b, double tol) {
  const int n = b.target_dim();
  const RootedTree& tree = b.curve.tree.tree;
  std::map<int, KernelBasis> bases;
  std::map<int, int> offset;
  int total = 0;
  for (int i : tree.elements) {
    bases.emplace(i, kernel_basis(b.maps.at(i), n));
    offset[i] = total;
    total += bases.at(i).dimension();
  }
  const std::vector<int> hat = tree.hat();
  MatchedKernel mk;
  Eigen::MatrixXcd null;
  if (hat.empty()) {
    null = Eigen::MatrixXcd::Identity(total, total);
  } else {
    Eigen::MatrixXcd C =
        Eigen::MatrixXcd::Zero(int(hat.size()) * (n + 1), total);
    for (std::size_t hi = 0; hi < hat.size(); ++hi) {
      const int h = hat[hi];
      const int p = tree.attach(h);
      const cplx x = b.curve.tree.node_pos.at(h);
      const GaugedPoint gp = gauged_eval(b.maps.at(p), x);
      const GaugedPoint gh =
          gauged_eval(b.maps.at(h), SpherePoint::infinity());
      const cplx al = gh.P.dot(gp.P);
      if (!(std::abs(al) > 0.5))
        throw GeomError("matched_kernel: node values disagree");
      const cplx phase = al / std::abs(al);
      const int row = int(hi) * (n + 1);
      const KernelBasis& kp = bases.at(p);
      for (int j = 0; j < kp.dimension(); ++j)
        C.block(row, offset.at(p) + j, n + 1, 1) =
            section_from_gauged(gp, kp.elements[std::size_t(j)]);
      const KernelBasis& kh = bases.at(h);
      for (int j = 0; j < kh.dimension(); ++j)
        C.block(row, offset.at(h) + j, n + 1, 1) =
            -phase * section_from_gauged(gh, kh.elements[std::size_t(j)]);
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(C, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    if (sv.size() > 0 && sv[0] > 0)
      for (int j = 0; j < sv.size(); ++j)
        if (sv[j] > tol * sv[0]) ++rank;
    null = svd.matrixV().rightCols(total - rank);
  }
  for (int j = 0; j < null.cols(); ++j) {
    std::map<int, Eigen::MatrixXcd> elem;
    for (int i : tree.elements) {
      const KernelBasis& kb = bases.at(i);
      Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(
          b.maps.at(i).coeffs.rows(), b.maps.at(i).coeffs.cols());
      for (int e = 0; e < kb.dimension(); ++e)
        acc += null(offset.at(i) + e, j) * kb.elements[std::size_t(e)];
      elem[i] = std::move(acc);
    }
    mk.elements.push_back(std::move(elem));
  }
  return mk;
}

DiscreteSection restrict_matched_element(
    const GluedGrid& grid, const std::map<int, Eigen::MatrixXcd>& elem) {
  const GluingMap& g = grid.gluing();
  const BubbleMap& b = g.parameter().base;
  return sample_section(grid, SectionKind::vector_field,
                        [&](const GridPoint& pt) {
                          const TrackedPoint t = g.forward(
                              SurfacePoint::north(pt.component, pt.z));
                          return kernel_section_eval(
                              b.maps.at(t.pos.component),
                              elem.at(t.pos.component), to_sphere(t.pos));
                        });
}

// ------------------------------------------------------- discretized solver

namespace {

cplx phase_between(const CVec& Pfrom, const CVec& Pto) {
  const cplx c = Pfrom.dot(Pto);
  const double a = std::abs(c);
  return a > 0 ? c / a : cplx(1.0, 0.0);
}

}  // namespace

DbarDiscrete::DbarDiscrete(const GluedGrid& grid) : grid_(&grid) {
  const auto& pts = grid.points();
  scale_.resize(pts.size());
  first_.resize(pts.size() + 1, 0);
  entries_.reserve(pts.size() * 4);
  for (int k = 0; k < int(pts.size()); ++k) {
    first_[std::size_t(k)] = int(entries_.size());
    const CVec& Pk = pts[std::size_t(k)].P;
    scale_[std::size_t(k)] =
        1.0 / (2.0 * std::conj(pts[std::size_t(k)].z - grid.chart_center(k)));
    auto push_pair = [&](int np, int nm, cplx unit, double h) {
      if (np >= 0 && nm >= 0) {
        entries_.push_back(
            {np, unit * phase_between(pts[std::size_t(np)].P, Pk) / (2.0 * h)});
        entries_.push_back(
            {nm, -unit * phase_between(pts[std::size_t(nm)].P, Pk) / (2.0 * h)});
      } else if (np >= 0) {
        entries_.push_back(
            {np, unit * phase_between(pts[std::size_t(np)].P, Pk) / h});
        entries_.push_back({k, -unit / h});
      } else {
        entries_.push_back({k, unit / h});
        entries_.push_back(
            {nm, -unit * phase_between(pts[std::size_t(nm)].P, Pk) / h});
      }
    };
    push_pair(grid.neighbor(k, 1, 0), grid.neighbor(k, -1, 0), 1.0, grid.ds());
    push_pair(grid.neighbor(k, 0, 1), grid.neighbor(k, 0, -1), cplx(0.0, 1.0),
              grid.dt());
  }
  first_[pts.size()] = int(entries_.size());
}

DiscreteSection DbarDiscrete::apply(const DiscreteSection& xi) const {
  if (xi.kind != SectionKind::vector_field || xi.samples.size() != grid_->size())
    throw GeomError("dbar operator: expected a grid vector field");
  const auto& pts = grid_->points();
  DiscreteSection out;
  out.kind = SectionKind::form_01;
  out.samples.resize(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    CVec tmp = CVec::Zero(pts[k].P.size());
    for (int e = first_[k]; e < first_[k + 1]; ++e)
      tmp += entries_[std::size_t(e)].c * xi.samples[std::size_t(entries_[std::size_t(e)].from)];
    out.samples[k] = scale_[k] * project_tangent(pts[k].P, tmp);
  }
  return out;
}

DiscreteSection DbarDiscrete::apply_adjoint(const DiscreteSection& a) const {
  if (a.kind != SectionKind::form_01 || a.samples.size() != grid_->size())
    throw GeomError("dbar adjoint: expected a grid form");
  const auto& pts = grid_->points();
  DiscreteSection out;
  out.kind = SectionKind::vector_field;
  out.samples.assign(pts.size(), CVec::Zero(pts.front().P.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const CVec bk = std::conj(scale_[k]) * pts[k].weight *
                    project_tangent(pts[k].P, a.samples[k]);
    for (int e = first_[k]; e < first_[k + 1]; ++e)
      out.samples[std::size_t(entries_[std::size_t(e)].from)] +=
          std::conj(entries_[std::size_t(e)].c) * bk;
  }
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const double s2w = pts[j].sigma * pts[j].sigma * pts[j].weight;
    out.samples[j] = project_tangent(pts[j].P, out.samples[j]) / s2w;
  }
  return out;
}

std::vector<double> DbarDiscrete::normal_diagonal(
    const std::vector<double>& fw) const {
  const auto& pts = grid_->points();
  std::vector<double> d(pts.size(), 0.0);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double rowf = fw[k] * pts[k].weight * std::norm(scale_[k]);
    for (int e = first_[k]; e < first_[k + 1]; ++e)
      d[std::size_t(entries_[std::size_t(e)].from)] +=
          rowf * std::norm(entries_[std::size_t(e)].c);
  }
  for (std::size_t j = 0; j < pts.size(); ++j)
    d[j] /= pts[j].sigma * pts[j].sigma * pts[j].weight;
  return d;
}

DiscreteSection dbar_of_exponential(const GluedGrid& grid,
                                    const DiscreteSection& xi) {
  if (xi.kind != SectionKind::vector_field || xi.samples.size() != grid.size())
    throw GeomError("dbar of exponential: expected a grid vector field");
  const auto& pts = grid.points();
  std::vector<CVec> U(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k)
    U[k] = fs_exp(pts[k].P, xi.samples[k]);
  DiscreteSection out;
  out.kind = SectionKind::form_01;
  out.samples.resize(pts.size());
  for (int k = 0; k < int(pts.size()); ++k) {
    const CVec& Pk = pts[std::size_t(k)].P;
    // neighbor samples are re-expressed in the gauge of the base
    // representative, so the stencil matches the linear operator's
    auto aligned = [&](int j) {
      return (phase_between(pts[std::size_t(j)].P, Pk) * U[std::size_t(j)]).eval();
    };
    auto diff = [&](int np, int nm, double h) -> CVec {
      if (np >= 0 && nm >= 0) return (aligned(np) - aligned(nm)) / (2.0 * h);
      if (np >= 0) return (aligned(np) - U[std::size_t(k)]) / h;
      return (U[std::size_t(k)] - aligned(nm)) / h;
    };
    const CVec ds = diff(grid.neighbor(k, 1, 0), grid.neighbor(k, -1, 0), grid.ds());
    const CVec dt = diff(grid.neighbor(k, 0, 1), grid.neighbor(k, 0, -1), grid.dt());
    const cplx scale =
        1.0 / (2.0 * std::conj(pts[std::size_t(k)].z - grid.chart_center(k)));
    CVec a = scale * project_tangent(U[std::size_t(k)], ds + cplx(0.0, 1.0) * dt);
    const double m = xi.samples[std::size_t(k)].norm();
    if (m > 1e-300)
      a = fs_transport(Pk, xi.samples[std::size_t(k)] / m, -m, a);
    out.samples[std::size_t(k)] = project_tangent(Pk, a);
  }
  return out;
}

namespace {

cplx dot_field(const GluedGrid& grid, const DiscreteSection& x,
               const DiscreteSection& y) {
  cplx acc = 0;
  const auto& pts = grid.points();
  for (std::size_t k = 0; k < pts.size(); ++k)
    acc += pts[k].sigma * pts[k].sigma * pts[k].weight *
           x.samples[k].dot(y.samples[k]);
  return acc;
}

void axpy(DiscreteSection& y, cplx a, const DiscreteSection& x) {
  for (std::size_t k = 0; k < y.samples.size(); ++k)
    y.samples[k] += a * x.samples[k];
}

DiscreteSection zeros_like(const GluedGrid& grid, SectionKind kind) {
  DiscreteSection s;
  s.kind = kind;
  s.samples.assign(grid.size(), CVec::Zero(grid.points().front().P.size()));
  return s;
}

// Orthonormalize the deflation sections in the field inner product.
std::vector<DiscreteSection> orthonormalize(const GluedGrid& grid,
                                            std::vector<DiscreteSection> v) {
  std::vector<DiscreteSection> out;
  for (DiscreteSection& s : v) {
    const double n0 = std::sqrt(std::abs(dot_field(grid, s, s)));
    for (int pass = 0; pass < 2; ++pass)
      for (const DiscreteSection& q : out)
        axpy(s, -dot_field(grid, q, s), q);
    const double n1 = std::sqrt(std::abs(dot_field(grid, s, s)));
    if (n1 > 1e-10 * std::max(1.0, n0)) {
      for (auto& smp : s.samples) smp /= n1;
      out.push_back(std::move(s));
    }
  }
  return out;
}

void project_out(const GluedGrid& grid, DiscreteSection& s,
                 const std::vector<DiscreteSection>& basis) {
  for (const DiscreteSection& q : basis) axpy(s, -dot_field(grid, q, s), q);
}

}  // namespace

DiscreteSection solve_dbar_least_squares(
    const DbarDiscrete& D, const DiscreteSection& eta,
    const std::vector<DiscreteSection>& deflate, double p, double rel_tol,
    int max_iter, LeastSquaresStats* stats) {
  const GluedGrid& grid = D.grid();
  const auto& pts = grid.points();
  const std::vector<DiscreteSection> defl =
      orthonormalize(grid, std::vector<DiscreteSection>(deflate));
  // Residual weighting: minimize the quadratic (rho-weighted) part of the
  // modified norm of the residual, so regions the norm emphasizes (the neck
  // annuli through rho, the far field through the flat measure) are the
  // regions the solver actually fits.  The solution of a consistent system
  // is unaffected by the weighting.
  const double apow = (p - 2.0) / p;
  std::vector<double> fw(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k)
    fw[k] = std::pow(pts[k].rho, -apow);
  auto adjointw = [&](const DiscreteSection& r) {
    DiscreteSection t = r;
    for (std::size_t k = 0; k < t.samples.size(); ++k) t.samples[k] *= fw[k];
    return D.apply_adjoint(t);
  };
  auto normal_op = [&](const DiscreteSection& y) {
    return adjointw(D.apply(y));
  };
  // Jacobi-preconditioned conjugate gradients on the normal equations in
  // the metric pairings, restricted to the complement of the deflation
  // subspace.  The preconditioner absorbs the exponential spread of the
  // 1/|zeta| stencil scales across the log-polar charts.  A small shift
  // proportional to the diagonal (a uniform relative Tikhonov term in the
  // preconditioned variables) caps the 1/sigma amplification of near-null
  // directions the deflation subspace misses, while perturbing the
  // well-conditioned part of the solution only at the 1e-6 level.
  const double shift = 1e-6;
  std::vector<double> dprec = D.normal_diagonal(fw);
  for (double& dj : dprec) dj = dj > 0 ? dj : 1.0;
  auto apply_m = [&](const DiscreteSection& y) {
    DiscreteSection z = normal_op(y);
    for (std::size_t k = 0; k < z.samples.size(); ++k)
      z.samples[k] += shift * dprec[k] * y.samples[k];
    project_out(grid, z, defl);
    return z;
  };
  auto precondition = [&](const DiscreteSection& r) {
    DiscreteSection z = r;
    for (std::size_t k = 0; k < z.samples.size(); ++k)
      z.samples[k] /= (1.0 + shift) * dprec[k];
    return z;
  };
  {
    const DiscreteSection b0 = adjointw(eta);
    if (!(std::abs(dot_field(grid, b0, b0)) > 0)) {
      if (stats) *stats = {0, 0.0};
      return zeros_like(grid, SectionKind::vector_field);
    }
  }
  DiscreteSection b = adjointw(eta);
  project_out(grid, b, defl);
  DiscreteSection x = zeros_like(grid, SectionKind::vector_field);
  DiscreteSection r = b;
  DiscreteSection z = precondition(r);
  DiscreteSection pdir = z;
  double gamma = std::real(dot_field(grid, r, z));
  const double gamma0 = gamma;
  int it = 0;
  while (gamma > rel_tol * rel_tol * gamma0 && it < max_iter && gamma > 0) {
    ++it;
    const DiscreteSection q = apply_m(pdir);
    const double delta = std::real(dot_field(grid, pdir, q));
    if (!(delta > 0)) break;
    const double alpha = gamma / delta;
    axpy(x, alpha, pdir);
    axpy(r, -alpha, q);
    z = precondition(r);
    const double gnew = std::real(dot_field(grid, r, z));
    const double betacg = gnew / gamma;
    gamma = gnew;
    for (std::size_t k = 0; k < pdir.samples.size(); ++k)
      pdir.samples[k] = z.samples[k] + betacg * pdir.samples[k];
  }
  if (stats) {
    stats->iterations = it;
    stats->relative_residual =
        gamma0 > 0 ? std::sqrt(gamma / gamma0) : 0.0;
  }
  project_out(grid, x, defl);
  return x;
}

CorrectionState picard_correct(const GluedGrid& grid, double p, double tol,
                               int max_iter) {
  CorrectionState st;
  const DiscreteSection dbar_u = glued_dbar_section(grid);
  DiscreteSection alpha = dbar_u;
  for (auto& s : alpha.samples) s = -s;
  st.alpha_norm = modified_norm(grid, alpha, p);
  st.eta = alpha;
  st.xi = zeros_like(grid, SectionKind::vector_field);
  if (st.alpha_norm == 0.0) return st;

  const DbarDiscrete D(grid);
  const MatchedKernel mk = matched_kernel(grid.gluing().parameter().base);
  std::vector<DiscreteSection> defl;
  defl.reserve(mk.elements.size());
  for (const auto& elem : mk.elements)
    defl.push_back(restrict_matched_element(grid, elem));

  DiscreteSection eta = alpha;
  DiscreteSection xi;
  double prev_diff = -1.0;
  int rising = 0;
  for (int it = 1; it <= max_iter; ++it) {
    xi = solve_dbar_least_squares(D, eta, defl, p, 1e-8, 20000);
    const DiscreteSection dbexp = dbar_of_exponential(grid, xi);
    const DiscreteSection dxi = D.apply(xi);
    // eta_next = alpha - N(xi) simplifies to D xi - dbar(exp xi)
    DiscreteSection eta_next = dxi;
    for (std::size_t k = 0; k < eta_next.samples.size(); ++k)
      eta_next.samples[k] -= dbexp.samples[k];
    DiscreteSection delta = eta_next;
    for (std::size_t k = 0; k < delta.samples.size(); ++k)
      delta.samples[k] -= eta.samples[k];
    const double diff = modified_norm(grid, delta, p);
    st.residual_history.push_back(diff);
    if (prev_diff > 0) {
      const double ratio = diff / prev_diff;
      st.contraction.push_back(ratio);
      rising = ratio >= 1.0 ? rising + 1 : 0;
      if (rising >= 2)
        throw GeomError("picard_correct: contraction factor >= 1 (measured " +
                        std::to_string(ratio) + ")");
    }
    prev_diff = diff;
    eta = std::move(eta_next);
    st.iterations = it;
    if (diff <= tol * (1.0 + st.alpha_norm)) break;
  }
  st.xi = solve_dbar_least_squares(D, eta, defl, p, 1e-8, 20000);
  st.eta = eta;
  st.eta_norm = modified_norm(grid, eta, p);
  st.final_defect_norm =
      modified_norm(grid, dbar_of_exponential(grid, st.xi), p);
  return st;
}

double quadratic_term_value(const GluedGrid& grid, const DiscreteSection& xi1,
                            const DiscreteSection& xi2, double p) {
  const DbarDiscrete D(grid);
  const DiscreteSection dbar_u = glued_dbar_section(grid);
  auto N = [&](const DiscreteSection& xi) {
    DiscreteSection out = dbar_of_exponential(grid, xi);
    const DiscreteSection dxi = D.apply(xi);
    for (std::size_t k = 0; k < out.samples.size(); ++k)
      out.samples[k] -= dbar_u.samples[k] + dxi.samples[k];
    return out;
  };
  DiscreteSection num = N(xi1);
  const DiscreteSection n2 = N(xi2);
  for (std::size_t k = 0; k < num.samples.size(); ++k)
    num.samples[k] -= n2.samples[k];
  DiscreteSection dif = xi1;
  for (std::size_t k = 0; k < dif.samples.size(); ++k)
    dif.samples[k] -= xi2.samples[k];
  const double den = (modified_norm_p1(grid, xi1, p) +
                      modified_norm_p1(grid, xi2, p)) *
                     modified_norm_p1(grid, dif, p);
  return den > 0 ? modified_norm(grid, num, p) / den : 0.0;
}

}  // namespace bubbleglue
