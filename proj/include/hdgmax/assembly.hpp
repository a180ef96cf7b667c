#pragma once

#include <Eigen/Sparse>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include "manufactured.hpp"
#include "projections.hpp"

namespace hdgmax {

struct DiscreteSpec {
  int k = 1;
  int m = 0;
  int alpha = -1;
  TraceProjection projection = TraceProjection::l2;
  int quad_inc = 0;

  void validate() const {
    if (k < 1 || k > 4) throw config_error("k must be in 1..4");
    if (m != k - 1 && m != k) throw config_error("m must be k-1 or k");
    if (alpha != -1 && alpha != 1) throw config_error("alpha must be -1 or +1");
  }
};

// dense local blocks of the saddle system on one element; interior layout
// [r (3 dim P_m) | u (3 dim P_k) | p (dim P_k)], trace layout per local face
// [u-hat_1 | u-hat_2 | p-hat] with dim P_k(F) modes each, in the face's global
// tangent frame
struct ElementMatrices {
  int n_r = 0, n_u = 0, n_p = 0, n_I = 0;
  int nf = 0, n_G = 0;
  Eigen::MatrixXd K_II, K_IG, K_GI, K_GG;
  Eigen::VectorXd b_I;
};

namespace detail {

inline double levi_civita(int i, int j, int k) {
  if (i == j || j == k || i == k) return 0.0;
  return ((j - i + 3) % 3 == 1) ? 1.0 : -1.0;
}

} // namespace detail

inline ElementMatrices local_element_matrices(const MeshTopology &mesh, int e,
                                              const DiscreteSpec &spec,
                                              const ManufacturedCase &cs) {
  const int k = spec.k, m = spec.m;
  const BasisSet bk = make_basis(Domain::tet, k);
  const BasisSet bm = make_basis(Domain::tet, m);
  const BasisSet fb = make_basis(Domain::tri, k);
  ElementMatrices em;
  em.nf = fb.N;
  em.n_r = 3 * bm.N;
  em.n_u = 3 * bk.N;
  em.n_p = bk.N;
  em.n_I = em.n_r + em.n_u + em.n_p;
  em.n_G = 4 * 3 * fb.N;
  const int Nm = bm.N, Nk = bk.N, nf = fb.N;
  const int off_u = em.n_r, off_p = em.n_r + em.n_u;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(em.n_I + em.n_G, em.n_I + em.n_G);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(em.n_I);
  const auto map = element_map(mesh, e);

  const QuadratureRule vol = make_quadrature(Domain::tet, 2 * k + 2 + spec.quad_inc);
  const Eigen::MatrixXd Vk = bk.eval_all(vol.points);
  const Eigen::MatrixXd Vm = bm.eval_all(vol.points);
  std::array<Eigen::MatrixXd, 3> Gm, Gk;
  {
    std::array<Eigen::MatrixXd, 3> rm, rk;
    for (int d = 0; d < 3; d++) {
      rm[d] = bm.grad_all(vol.points, d);
      rk[d] = bk.grad_all(vol.points, d);
    }
    for (int d = 0; d < 3; d++) {
      Gm[d] = map.Jinv(0, d) * rm[0] + map.Jinv(1, d) * rm[1] + map.Jinv(2, d) * rm[2];
      Gk[d] = map.Jinv(0, d) * rk[0] + map.Jinv(1, d) * rk[1] + map.Jinv(2, d) * rk[2];
    }
  }
  Eigen::VectorXd wq = vol.weights * map.detJ;

  // (r,s) mass
  const Eigen::MatrixXd Mm = Vm * wq.asDiagonal() * Vm.transpose();
  for (int c = 0; c < 3; c++)
    A.block(c * Nm, c * Nm, Nm, Nm) += Mm;

  // -(u, curl s) and its v-row mirror -(v, curl r)
  for (int cs = 0; cs < 3; cs++)
    for (int cu = 0; cu < 3; cu++)
      for (int bdir = 0; bdir < 3; bdir++) {
        const double eps = detail::levi_civita(cu, bdir, cs);
        if (eps == 0.0) continue;
        const Eigen::MatrixXd blk =
            eps * (Gm[bdir] * wq.asDiagonal() * Vk.transpose());  // (i,j) = grad_i phi_j
        A.block(cs * Nm, off_u + cu * Nk, Nm, Nk) -= blk;
        A.block(off_u + cu * Nk, cs * Nm, Nk, Nm) -= blk.transpose();
      }

  // (div v, p) and (div u, q)
  for (int c = 0; c < 3; c++) {
    const Eigen::MatrixXd blk = Gk[c] * wq.asDiagonal() * Vk.transpose();
    A.block(off_u + c * Nk, off_p, Nk, Nk) += blk;
    A.block(off_p, off_u + c * Nk, Nk, Nk) += blk.transpose();
  }

  // loads -(f, v) and (g, q)
  if (!cs.zero_data) {
    for (int q = 0; q < vol.npts(); q++) {
      const Vec3 x = map.to_phys(vol.points.row(q).transpose());
      const Vec3 fv = cs.f(x);
      const double gv = cs.g(x);
      for (int c = 0; c < 3; c++)
        b.segment(off_u + c * Nk, Nk) -= wq(q) * fv(c) * Vk.col(q);
      b.segment(off_p, Nk) += wq(q) * gv * Vk.col(q);
    }
  }

  // face terms
  const QuadratureRule frule = make_quadrature(Domain::tri, 2 * k + 2 + spec.quad_inc);
  for (int fl = 0; fl < 4; fl++) {
    const int fi = mesh.tet_faces[e][fl];
    const Face &fc = mesh.faces[fi];
    const double sgn = (fc.owner == e) ? 1.0 : -1.0;
    const Vec3 nT = sgn * fc.n;
    const double hF = fc.h;
    const double ha = spec.alpha == 1 ? hF : 1.0 / hF;
    const int tro = em.n_I + fl * 3 * nf;

    Eigen::MatrixXd refpts(frule.npts(), 3);
    for (int q = 0; q < frule.npts(); q++) {
      const Vec3 x = fc.p0 + frule.points(q, 0) * fc.e1 + frule.points(q, 1) * fc.e2;
      refpts.row(q) = map.to_ref(x).transpose();
    }
    const Eigen::MatrixXd Fk = bk.eval_all(refpts);
    const Eigen::MatrixXd Fm = bm.eval_all(refpts);
    const Eigen::MatrixXd psi = fb.eval_all(frule.points);
    const Eigen::VectorXd wf = frule.weights * 2.0 * fc.area;

    const Eigen::MatrixXd Mkk = Fk * wf.asDiagonal() * Fk.transpose();
    const Eigen::MatrixXd Mkpsi = Fk * wf.asDiagonal() * psi.transpose();
    const Eigen::MatrixXd Mmpsi = Fm * wf.asDiagonal() * psi.transpose();
    const Eigen::MatrixXd Mpp = psi * wf.asDiagonal() * psi.transpose();

    const Vec3 ca[2] = {nT.cross(fc.t1), nT.cross(fc.t2)};
    Vec3 dc[3];
    for (int c = 0; c < 3; c++) dc[c] = nT.cross(Vec3::Unit(c));

    // -<n x u-hat, s> and mirror -<n x v-hat, r>
    for (int c = 0; c < 3; c++)
      for (int a = 0; a < 2; a++) {
        A.block(c * Nm, tro + a * nf, Nm, nf) -= ca[a](c) * Mmpsi;
        A.block(tro + a * nf, c * Nm, nf, Nm) -= ca[a](c) * Mmpsi.transpose();
      }

    // -<n.v, p-hat> and mirror -<n.u, q-hat>
    for (int c = 0; c < 3; c++) {
      A.block(off_u + c * Nk, tro + 2 * nf, Nk, nf) -= nT(c) * Mkpsi;
      A.block(tro + 2 * nf, off_u + c * Nk, nf, Nk) -= nT(c) * Mkpsi.transpose();
    }

    // tangential penalty  -<h^-1 n x (u - u-hat), n x (v - v-hat)>
    for (int cv = 0; cv < 3; cv++) {
      for (int cu = 0; cu < 3; cu++) {
        const double g = dc[cu].dot(dc[cv]);
        if (g != 0.0)
          A.block(off_u + cv * Nk, off_u + cu * Nk, Nk, Nk) -= g / hF * Mkk;
      }
      for (int a = 0; a < 2; a++) {
        const double g = ca[a].dot(dc[cv]);
        if (g != 0.0) {
          A.block(off_u + cv * Nk, tro + a * nf, Nk, nf) += g / hF * Mkpsi;
          A.block(tro + a * nf, off_u + cv * Nk, nf, Nk) += g / hF * Mkpsi.transpose();
        }
      }
    }
    for (int a = 0; a < 2; a++)
      for (int a2 = 0; a2 < 2; a2++) {
        const double g = ca[a2].dot(ca[a]);
        if (g != 0.0)
          A.block(tro + a * nf, tro + a2 * nf, nf, nf) -= g / hF * Mpp;
      }

    // multiplier penalty  <h^alpha (p - p-hat), q - q-hat>
    A.block(off_p, off_p, Nk, Nk) += ha * Mkk;
    A.block(off_p, tro + 2 * nf, Nk, nf) -= ha * Mkpsi;
    A.block(tro + 2 * nf, off_p, nf, Nk) -= ha * Mkpsi.transpose();
    A.block(tro + 2 * nf, tro + 2 * nf, nf, nf) += ha * Mpp;
  }

  em.K_II = A.topLeftCorner(em.n_I, em.n_I);
  em.K_IG = A.topRightCorner(em.n_I, em.n_G);
  em.K_GI = A.bottomLeftCorner(em.n_G, em.n_I);
  em.K_GG = A.bottomRightCorner(em.n_G, em.n_G);
  em.b_I = b;
  return em;
}

struct CondensedElement {
  Eigen::FullPivLU<Eigen::MatrixXd> lu;  // of K_II
  Eigen::MatrixXd K_IG;
  Eigen::VectorXd b_I;
  Eigen::MatrixXd S;   // Schur complement, as computed (not symmetrized)
  Eigen::VectorXd g;   // reduced load
};

inline CondensedElement condense(const ElementMatrices &em, int e = -1) {
  CondensedElement ce;
  ce.lu.compute(em.K_II);
  if (!ce.lu.isInvertible())
    throw solver_error("singular interior block on element " + std::to_string(e));
  ce.K_IG = em.K_IG;
  ce.b_I = em.b_I;
  ce.S = em.K_GG - em.K_GI * ce.lu.solve(em.K_IG);
  ce.g = -em.K_GI * ce.lu.solve(em.b_I);
  return ce;
}

struct TraceSystem {
  int nf = 0;        // scalar modes per face
  int per_face = 0;  // 3 * nf
  int dof_all = 0, dof_solved = 0;
  std::vector<int> solve_offset;  // per face, -1 on boundary
  Eigen::SparseMatrix<double> A;  // full symmetric storage
  Eigen::VectorXd b;
  Eigen::VectorXd fixed;  // all-face trace values, nonzero on boundary faces
};

struct AssembledSystem {
  TraceSystem sys;
  std::vector<CondensedElement> elems;
  // threaded runs report per-element times summed over threads
  double t_local = 0, t_condense = 0, t_scatter = 0, t_boundary = 0;
};

namespace detail {

template <typename F>
inline void parallel_over(int n, int threads, F &&body) {
  if (threads <= 1) {
    for (int i = 0; i < n; i++) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int t = 0; t < threads; t++)
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        body(i);
      }
    });
  for (auto &th : pool) th.join();
}

} // namespace detail

// boundary trace values: u-hat from the projected rotated datum, p-hat = 0
inline Eigen::VectorXd boundary_trace_values(const MeshTopology &mesh,
                                             const DiscreteSpec &spec,
                                             const ManufacturedCase &cs) {
  const int nf = poly_dim(spec.k, 2);
  Eigen::VectorXd fixed = Eigen::VectorXd::Zero(mesh.n_faces() * 3 * nf);
  for (int fi : mesh.boundary_faces) {
    const FaceTangentialField w =
        project_boundary_datum(cs, mesh, fi, spec.k, spec.projection, spec.quad_inc);
    const FaceTangentialField uhat = trace_from_rotated_data(w);
    fixed.segment(fi * 3 * nf, 2 * nf) = uhat.c;
  }
  return fixed;
}

inline AssembledSystem assemble(const MeshTopology &mesh, const DiscreteSpec &spec,
                                const ManufacturedCase &cs, int threads = 1) {
  spec.validate();
  const int nf = poly_dim(spec.k, 2);
  const int pf = 3 * nf;
  AssembledSystem out;
  TraceSystem &sys = out.sys;
  sys.nf = nf;
  sys.per_face = pf;
  sys.dof_all = mesh.n_faces() * pf;
  sys.solve_offset.assign(mesh.n_faces(), -1);
  int cursor = 0;
  for (int fi = 0; fi < mesh.n_faces(); fi++)
    if (!mesh.faces[fi].boundary()) {
      sys.solve_offset[fi] = cursor;
      cursor += pf;
    }
  sys.dof_solved = cursor;

  auto tic = [] { return std::chrono::steady_clock::now(); };
  auto sec = [](auto a, auto b) {
    return std::chrono::duration<double>(b - a).count();
  };

  auto t0 = tic();
  sys.fixed = boundary_trace_values(mesh, spec, cs);
  out.t_boundary = sec(t0, tic());

  out.elems.resize(mesh.n_cells());
  std::mutex timing_mutex;
  detail::parallel_over(mesh.n_cells(), threads, [&](int e) {
    const auto ta = tic();
    const ElementMatrices em = local_element_matrices(mesh, e, spec, cs);
    const auto tb = tic();
    out.elems[e] = condense(em, e);
    const auto tc = tic();
    const std::lock_guard<std::mutex> lock(timing_mutex);
    out.t_local += sec(ta, tb);
    out.t_condense += sec(tb, tc);
  });

  t0 = tic();
  // sparsity: a face couples with every face sharing one of its elements
  std::vector<std::vector<int>> adj(mesh.n_faces());
  for (int e = 0; e < mesh.n_cells(); e++)
    for (int i = 0; i < 4; i++) {
      const int fi = mesh.tet_faces[e][i];
      if (sys.solve_offset[fi] < 0) continue;
      for (int j = 0; j < 4; j++) {
        const int fj = mesh.tet_faces[e][j];
        if (sys.solve_offset[fj] >= 0) adj[fi].push_back(fj);
      }
    }
  Eigen::VectorXi reserve = Eigen::VectorXi::Zero(sys.dof_solved);
  for (int fi = 0; fi < mesh.n_faces(); fi++) {
    if (sys.solve_offset[fi] < 0) continue;
    auto &a = adj[fi];
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    for (int c = 0; c < pf; c++)
      reserve(sys.solve_offset[fi] + c) = static_cast<int>(a.size()) * pf;
  }
  sys.A.resize(sys.dof_solved, sys.dof_solved);
  sys.A.reserve(reserve);
  sys.b = Eigen::VectorXd::Zero(sys.dof_solved);

  for (int e = 0; e < mesh.n_cells(); e++) {
    CondensedElement &ce = out.elems[e];
    const Eigen::MatrixXd S = 0.5 * (ce.S + ce.S.transpose());
    const int nG = static_cast<int>(S.rows());
    // global solved index per local trace dof, -1 if fixed
    std::vector<int> gidx(nG);
    Eigen::VectorXd xfix = Eigen::VectorXd::Zero(nG);
    for (int fl = 0; fl < 4; fl++) {
      const int fi = mesh.tet_faces[e][fl];
      for (int c = 0; c < pf; c++) {
        const int loc = fl * pf + c;
        if (sys.solve_offset[fi] >= 0) {
          gidx[loc] = sys.solve_offset[fi] + c;
        } else {
          gidx[loc] = -1;
          xfix(loc) = sys.fixed(fi * pf + c);
        }
      }
    }
    const Eigen::VectorXd rhs = ce.g - S * xfix;
    for (int i = 0; i < nG; i++) {
      if (gidx[i] < 0) continue;
      sys.b(gidx[i]) += rhs(i);
      for (int j = 0; j < nG; j++)
        if (gidx[j] >= 0) sys.A.coeffRef(gidx[i], gidx[j]) += S(i, j);
    }
    ce.S.resize(0, 0);
    ce.g.resize(0);
  }
  sys.A.makeCompressed();
  out.t_scatter = sec(t0, tic());
  return out;
}

struct FieldSolution {
  DiscreteSpec spec;
  int n_r = 0, n_u = 0, n_p = 0;
  std::vector<Eigen::VectorXd> interior;  // per element [r|u|p]
  Eigen::VectorXd trace;                  // all faces, boundary rows hold data
  int nf = 0;
};

inline FieldSolution recover_interior(const MeshTopology &mesh,
                                      const DiscreteSpec &spec,
                                      const AssembledSystem &asys,
                                      const Eigen::VectorXd &y) {
  const TraceSystem &sys = asys.sys;
  FieldSolution sol;
  sol.spec = spec;
  sol.nf = sys.nf;
  sol.n_r = 3 * poly_dim(spec.m, 3);
  sol.n_u = 3 * poly_dim(spec.k, 3);
  sol.n_p = poly_dim(spec.k, 3);
  sol.trace = sys.fixed;
  for (int fi = 0; fi < mesh.n_faces(); fi++)
    if (sys.solve_offset[fi] >= 0)
      sol.trace.segment(fi * sys.per_face, sys.per_face) =
          y.segment(sys.solve_offset[fi], sys.per_face);
  sol.interior.resize(mesh.n_cells());
  for (int e = 0; e < mesh.n_cells(); e++) {
    const CondensedElement &ce = asys.elems[e];
    const int nG = static_cast<int>(ce.K_IG.cols());
    Eigen::VectorXd yloc(nG);
    for (int fl = 0; fl < 4; fl++)
      yloc.segment(fl * sys.per_face, sys.per_face) =
          sol.trace.segment(mesh.tet_faces[e][fl] * sys.per_face, sys.per_face);
    sol.interior[e] = ce.lu.solve(ce.b_I - ce.K_IG * yloc);
  }
  return sol;
}

} // namespace hdgmax
