#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "assembly.hpp"

namespace hdgmax {

struct ErrorReport {
  int level = 0;
  double h = 0;
  int dof_all = 0, dof_solved = 0;
  double err_r = 0, err_u = 0, err_p = 0;
  double sem_curl = 0, sem_div = 0, sem_p = 0;
  int solver_iters = 0;
  double solver_relres = 0;
  double t_assemble = 0, t_condense = 0, t_solve = 0, t_error = 0;

  double norm_U() const { return std::hypot(sem_curl, sem_div); }
};

namespace detail {

// coefficient slices of one element in the [r|u|p] interior layout
struct ElemCoef {
  Eigen::Map<const Eigen::MatrixXd> r, u;
  Eigen::Map<const Eigen::VectorXd> p;
  ElemCoef(const Eigen::VectorXd &xi, int Nm, int Nk)
      : r(xi.data(), Nm, 3), u(xi.data() + 3 * Nm, Nk, 3),
        p(xi.data() + 3 * Nm + 3 * Nk, Nk) {}
};

} // namespace detail

// L2 errors of r, u, p; on elements touching the singular axis the u term is
// split into |u|^2 - 2 u.u_h + |u_h|^2 with graded rules matched to the data
// exponent of each product
inline ErrorReport l2_errors(const MeshTopology &mesh, const DiscreteSpec &spec,
                             const ManufacturedCase &cs, const FieldSolution &sol) {
  ErrorReport rep;
  const int deg = 2 * spec.k + 4 + spec.quad_inc;
  const BasisSet bk = make_basis(Domain::tet, spec.k);
  const BasisSet bm = make_basis(Domain::tet, spec.m);
  const QuadratureRule vol = make_quadrature(Domain::tet, deg);
  const Eigen::MatrixXd Vk = bk.eval_all(vol.points);
  const Eigen::MatrixXd Vm = bm.eval_all(vol.points);

  double e2r = 0, e2u = 0, e2p = 0;
  for (int e = 0; e < mesh.n_cells(); e++) {
    const ElementMap map = element_map(mesh, e);
    const detail::ElemCoef cf(sol.interior[e], bm.N, bk.N);
    const bool graded = cs.singular && tet_axis_info(mesh, e).kind != AxisTouch::none;
    for (int q = 0; q < vol.npts(); q++) {
      const double w = vol.weights(q) * map.detJ;
      const Vec3 x = map.to_phys(vol.points.row(q).transpose());
      const Vec3 rh = cf.r.transpose() * Vm.col(q);
      const Vec3 uh = cf.u.transpose() * Vk.col(q);
      const double ph = cf.p.dot(Vk.col(q));
      e2r += w * (cs.r(x) - rh).squaredNorm();
      e2p += w * std::pow(cs.p(x) - ph, 2);
      if (graded)
        e2u += w * uh.squaredNorm();  // |u_h|^2 part of the split
      else
        e2u += w * (cs.u(x) - uh).squaredNorm();
    }
    if (graded) {
      const PhysRule g1 = tet_rule_graded(mesh, e, deg, 2.0 * cs.t - 2.0);
      for (int q = 0; q < g1.npts(); q++)
        e2u += g1.w(q) * cs.u(g1.x.row(q).transpose()).squaredNorm();
      const PhysRule g2 = tet_rule_graded(mesh, e, deg, cs.t - 1.0);
      Eigen::MatrixXd ref(g2.npts(), 3);
      for (int q = 0; q < g2.npts(); q++)
        ref.row(q) = map.to_ref(g2.x.row(q).transpose()).transpose();
      const Eigen::MatrixXd Vg = bk.eval_all(ref);
      for (int q = 0; q < g2.npts(); q++) {
        const Vec3 uh = cf.u.transpose() * Vg.col(q);
        e2u -= 2.0 * g2.w(q) * cs.u(g2.x.row(q).transpose()).dot(uh);
      }
    }
  }
  rep.err_r = std::sqrt(std::max(e2r, 0.0));
  rep.err_u = std::sqrt(std::max(e2u, 0.0));
  rep.err_p = std::sqrt(std::max(e2p, 0.0));
  rep.h = *std::max_element(mesh.h_T.begin(), mesh.h_T.end());
  const int nf = poly_dim(spec.k, 2);
  rep.dof_all = mesh.n_faces() * 3 * nf;
  rep.dof_solved =
      (mesh.n_faces() - static_cast<int>(mesh.boundary_faces.size())) * 3 * nf;
  return rep;
}

// energy seminorms of the discrete error pair; exact traces drop out of every
// face term, so all integrands are either analytic fields or polynomials and
// plain rules suffice even in the singular case
inline void energy_seminorms(const MeshTopology &mesh, const DiscreteSpec &spec,
                             const ManufacturedCase &cs, const FieldSolution &sol,
                             ErrorReport &rep) {
  const int deg = 2 * spec.k + 4 + spec.quad_inc;
  const BasisSet bk = make_basis(Domain::tet, spec.k);
  const BasisSet bm = make_basis(Domain::tet, spec.m);
  const BasisSet fb = make_basis(Domain::tri, spec.k);
  const QuadratureRule vol = make_quadrature(Domain::tet, deg);
  std::array<Eigen::MatrixXd, 3> Gref;
  for (int d = 0; d < 3; d++) Gref[d] = bk.grad_all(vol.points, d);
  const QuadratureRule frule = make_quadrature(Domain::tri, 2 * spec.k + 2 + spec.quad_inc);
  const Eigen::MatrixXd psi = fb.eval_all(frule.points);

  double s2curl = 0, s2div = 0, s2p = 0;
  for (int e = 0; e < mesh.n_cells(); e++) {
    const ElementMap map = element_map(mesh, e);
    const detail::ElemCoef cf(sol.interior[e], bm.N, bk.N);
    const double hT = mesh.h_T[e];
    std::array<Eigen::MatrixXd, 3> G;
    for (int d = 0; d < 3; d++)
      G[d] = map.Jinv(0, d) * Gref[0] + map.Jinv(1, d) * Gref[1] +
             map.Jinv(2, d) * Gref[2];
    for (int q = 0; q < vol.npts(); q++) {
      const double w = vol.weights(q) * map.detJ;
      const Vec3 x = map.to_phys(vol.points.row(q).transpose());
      Eigen::Matrix3d Ju;  // Ju(c,d) = d u_c / d x_d
      for (int c = 0; c < 3; c++)
        for (int d = 0; d < 3; d++) Ju(c, d) = G[d].col(q).dot(cf.u.col(c));
      const Vec3 curlh(Ju(2, 1) - Ju(1, 2), Ju(0, 2) - Ju(2, 0), Ju(1, 0) - Ju(0, 1));
      const double divh = Ju.trace();
      Vec3 gradph;
      for (int d = 0; d < 3; d++) gradph(d) = G[d].col(q).dot(cf.p);
      s2curl += w * (cs.r(x) - curlh).squaredNorm();
      s2div += w * std::pow(hT, 1 - spec.alpha) * std::pow(cs.g(x) - divh, 2);
      s2p += w * std::pow(hT, 1 + spec.alpha) * (cs.grad_p(x) - gradph).squaredNorm();
    }

    for (int fl = 0; fl < 4; fl++) {
      const int fi = mesh.tet_faces[e][fl];
      const Face &fc = mesh.faces[fi];
      const Vec3 nT = (fc.owner == e ? 1.0 : -1.0) * fc.n;
      Eigen::MatrixXd ref(frule.npts(), 3);
      for (int q = 0; q < frule.npts(); q++) {
        const Vec3 x = fc.p0 + frule.points(q, 0) * fc.e1 + frule.points(q, 1) * fc.e2;
        ref.row(q) = map.to_ref(x).transpose();
      }
      const Eigen::MatrixXd Fk = bk.eval_all(ref);
      const int pf = 3 * sol.nf;
      const auto tr = sol.trace.segment(fi * pf, pf);
      for (int q = 0; q < frule.npts(); q++) {
        const double w = frule.weights(q) * 2.0 * fc.area;
        Vec3 uh;
        for (int c = 0; c < 3; c++) uh(c) = Fk.col(q).dot(cf.u.col(c));
        const double ph = Fk.col(q).dot(cf.p);
        const Vec3 uhat = tr.head(sol.nf).dot(psi.col(q)) * fc.t1 +
                          tr.segment(sol.nf, sol.nf).dot(psi.col(q)) * fc.t2;
        const double phat = tr.tail(sol.nf).dot(psi.col(q));
        s2curl += w / fc.h * nT.cross(uh - uhat).squaredNorm();
        s2p += w * std::pow(fc.h, spec.alpha) * std::pow(ph - phat, 2);
      }
    }
  }

  // normal jump of u_h over interior faces
  for (int fi = 0; fi < mesh.n_faces(); fi++) {
    const Face &fc = mesh.faces[fi];
    if (fc.boundary()) continue;
    const ElementMap mo = element_map(mesh, fc.owner);
    const ElementMap mn = element_map(mesh, fc.neighbor);
    const detail::ElemCoef co(sol.interior[fc.owner], bm.N, bk.N);
    const detail::ElemCoef cn(sol.interior[fc.neighbor], bm.N, bk.N);
    Eigen::MatrixXd ro(frule.npts(), 3), rn(frule.npts(), 3);
    for (int q = 0; q < frule.npts(); q++) {
      const Vec3 x = fc.p0 + frule.points(q, 0) * fc.e1 + frule.points(q, 1) * fc.e2;
      ro.row(q) = mo.to_ref(x).transpose();
      rn.row(q) = mn.to_ref(x).transpose();
    }
    const Eigen::MatrixXd Fo = bk.eval_all(ro);
    const Eigen::MatrixXd Fn = bk.eval_all(rn);
    for (int q = 0; q < frule.npts(); q++) {
      const double w = frule.weights(q) * 2.0 * fc.area;
      Vec3 jump;
      for (int c = 0; c < 3; c++)
        jump(c) = Fo.col(q).dot(co.u.col(c)) - Fn.col(q).dot(cn.u.col(c));
      s2div += w * std::pow(fc.h, -spec.alpha) * std::pow(fc.n.dot(jump), 2);
    }
  }

  rep.sem_curl = std::sqrt(s2curl);
  rep.sem_div = std::sqrt(s2div);
  rep.sem_p = std::sqrt(s2p);
}

inline ErrorReport compute_errors(const MeshTopology &mesh, const DiscreteSpec &spec,
                                  const ManufacturedCase &cs,
                                  const FieldSolution &sol) {
  ErrorReport rep = l2_errors(mesh, spec, cs, sol);
  energy_seminorms(mesh, spec, cs, sol, rep);
  return rep;
}

struct RateTable {
  std::vector<double> rate_r, rate_u, rate_p;  // NaN where undefined
};

inline double pair_rate(double coarse, double fine) {
  if (!(coarse > 0.0) || !(fine > 0.0))
    return std::numeric_limits<double>::quiet_NaN();
  return std::log2(coarse / fine);
}

inline RateTable convergence_rates(const std::vector<ErrorReport> &reports) {
  RateTable t;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < reports.size(); i++) {
    if (i == 0) {
      t.rate_r.push_back(nan);
      t.rate_u.push_back(nan);
      t.rate_p.push_back(nan);
    } else {
      t.rate_r.push_back(pair_rate(reports[i - 1].err_r, reports[i].err_r));
      t.rate_u.push_back(pair_rate(reports[i - 1].err_u, reports[i].err_u));
      t.rate_p.push_back(pair_rate(reports[i - 1].err_p, reports[i].err_p));
    }
  }
  return t;
}

namespace detail {

inline std::string fmt(const char *f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

inline std::string fmt_rate(double v) {
  return std::isnan(v) ? std::string("--") : fmt("%.2f", v);
}

} // namespace detail

// one row per level; rate cells empty on the first row, timing columns last
inline std::string to_csv(const std::vector<ErrorReport> &reports,
                          const RateTable &rates) {
  std::ostringstream os;
  os << "level,h,dof_all,dof_solved,err_r,rate_r,err_u,rate_u,err_p,rate_p,"
        "sem_curl,sem_div,sem_p,solver_iters,solver_relres,"
        "t_assemble,t_condense,t_solve,t_error\n";
  for (std::size_t i = 0; i < reports.size(); i++) {
    const ErrorReport &r = reports[i];
    auto rate = [&](double v) {
      return std::isnan(v) ? std::string() : detail::fmt("%.3f", v);
    };
    os << r.level << ',' << detail::fmt("%.6e", r.h) << ',' << r.dof_all << ','
       << r.dof_solved << ',' << detail::fmt("%.6e", r.err_r) << ','
       << rate(rates.rate_r[i]) << ',' << detail::fmt("%.6e", r.err_u) << ','
       << rate(rates.rate_u[i]) << ',' << detail::fmt("%.6e", r.err_p) << ','
       << rate(rates.rate_p[i]) << ',' << detail::fmt("%.6e", r.sem_curl) << ','
       << detail::fmt("%.6e", r.sem_div) << ',' << detail::fmt("%.6e", r.sem_p)
       << ',' << r.solver_iters << ',' << detail::fmt("%.3e", r.solver_relres)
       << ',' << detail::fmt("%.3f", r.t_assemble) << ','
       << detail::fmt("%.3f", r.t_condense) << ','
       << detail::fmt("%.3f", r.t_solve) << ',' << detail::fmt("%.3f", r.t_error)
       << '\n';
  }
  return os.str();
}

inline std::string to_markdown(const std::vector<ErrorReport> &reports,
                               const RateTable &rates) {
  std::ostringstream os;
  os << "| 1/h | dof | err_r | rate | err_u | rate | err_p | rate |\n";
  os << "|----:|----:|------:|-----:|------:|-----:|------:|-----:|\n";
  for (std::size_t i = 0; i < reports.size(); i++) {
    const ErrorReport &r = reports[i];
    os << "| " << r.level << " | " << r.dof_all << " | "
       << detail::fmt("%.3e", r.err_r) << " | " << detail::fmt_rate(rates.rate_r[i])
       << " | " << detail::fmt("%.3e", r.err_u) << " | "
       << detail::fmt_rate(rates.rate_u[i]) << " | " << detail::fmt("%.3e", r.err_p)
       << " | " << detail::fmt_rate(rates.rate_p[i]) << " |\n";
  }
  return os.str();
}

} // namespace hdgmax
