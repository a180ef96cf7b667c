#pragma once

#include <functional>

#include "mesh.hpp"
#include "polyquad.hpp"

namespace hdgmax {

// tangential vector polynomial on a face, coefficients [t1 block; t2 block]
// w.r.t. the orthonormal reference-triangle basis of P_k(F)
struct FaceTangentialField {
  int face = -1;
  Eigen::VectorXd c;

  int modes() const { return static_cast<int>(c.size()) / 2; }
};

using ScalarFn = std::function<double(const Vec3 &)>;
using VectorFn = std::function<Vec3(const Vec3 &)>;

// physical values of a tangential field at reference face points (3 x npts)
inline Eigen::MatrixXd eval_tangential(const MeshTopology &mesh,
                                       const FaceTangentialField &w,
                                       const BasisSet &fb,
                                       const Eigen::MatrixXd &ref_pts) {
  const Face &f = mesh.faces[w.face];
  const Eigen::MatrixXd V = fb.eval_all(ref_pts);
  const Eigen::VectorXd a1 = V.transpose() * w.c.head(fb.N);
  const Eigen::VectorXd a2 = V.transpose() * w.c.tail(fb.N);
  Eigen::MatrixXd out(3, ref_pts.rows());
  for (int q = 0; q < ref_pts.rows(); q++)
    out.col(q) = a1(q) * f.t1 + a2(q) * f.t2;
  return out;
}

inline Eigen::VectorXd l2_project_element(const MeshTopology &mesh, int e,
                                          int j, const ScalarFn &f,
                                          int quad_deg = -1) {
  const BasisSet basis = make_basis(Domain::tet, j);
  const QuadratureRule rule =
      make_quadrature(Domain::tet, quad_deg < 0 ? 2 * j + 2 : quad_deg);
  const ElementMap map = element_map(mesh, e);
  const Eigen::MatrixXd V = basis.eval_all(rule.points);
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(basis.N, basis.N);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(basis.N);
  for (int q = 0; q < rule.npts(); q++) {
    const double w = rule.weights(q) * map.detJ;
    mass += w * V.col(q) * V.col(q).transpose();
    rhs += w * f(map.to_phys(rule.points.row(q).transpose())) * V.col(q);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(mass);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("element mass matrix not SPD");
  return llt.solve(rhs);
}

// componentwise projection of a vector field; columns are x,y,z components
inline Eigen::MatrixXd l2_project_element_vec(const MeshTopology &mesh, int e,
                                              int j, const VectorFn &f,
                                              int quad_deg = -1) {
  Eigen::MatrixXd out;
  for (int comp = 0; comp < 3; comp++) {
    const Eigen::VectorXd c = l2_project_element(
        mesh, e, j, [&](const Vec3 &x) { return f(x)(comp); }, quad_deg);
    if (out.size() == 0) out.resize(c.size(), 3);
    out.col(comp) = c;
  }
  return out;
}

inline Eigen::VectorXd l2_project_face(const MeshTopology &mesh, int fi, int j,
                                       const ScalarFn &f, int quad_deg = -1) {
  const Face &fc = mesh.faces[fi];
  const BasisSet basis = make_basis(Domain::tri, j);
  const QuadratureRule rule =
      make_quadrature(Domain::tri, quad_deg < 0 ? 2 * j + 2 : quad_deg);
  const Eigen::MatrixXd V = basis.eval_all(rule.points);
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(basis.N, basis.N);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(basis.N);
  for (int q = 0; q < rule.npts(); q++) {
    const double w = rule.weights(q) * 2.0 * fc.area;
    const Vec3 x = fc.p0 + rule.points(q, 0) * fc.e1 + rule.points(q, 1) * fc.e2;
    mass += w * V.col(q) * V.col(q).transpose();
    rhs += w * f(x) * V.col(q);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(mass);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("face mass matrix not SPD");
  return llt.solve(rhs);
}

// L2 moments of a tangential target: rows (a=1,2) hold int_F (w.t_a) phi_i dA
inline FaceTangentialField l2_project_face_tangential_from_moments(
    const MeshTopology &mesh, int fi, int j, const Eigen::MatrixXd &moments) {
  const Face &fc = mesh.faces[fi];
  const BasisSet basis = make_basis(Domain::tri, j);
  assert(moments.rows() == 2 && moments.cols() == basis.N);
  const QuadratureRule rule = make_quadrature(Domain::tri, 2 * j);
  const Eigen::MatrixXd V = basis.eval_all(rule.points);
  const Eigen::MatrixXd mass =
      2.0 * fc.area * (V * rule.weights.asDiagonal() * V.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(mass);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("face mass matrix not SPD");
  FaceTangentialField out;
  out.face = fi;
  out.c.resize(2 * basis.N);
  out.c.head(basis.N) = llt.solve(moments.row(0).transpose());
  out.c.tail(basis.N) = llt.solve(moments.row(1).transpose());
  return out;
}

inline FaceTangentialField l2_project_face_tangential(const MeshTopology &mesh,
                                                      int fi, int j,
                                                      const VectorFn &w,
                                                      int quad_deg = -1) {
  const Face &fc = mesh.faces[fi];
  const BasisSet basis = make_basis(Domain::tri, j);
  const QuadratureRule rule =
      make_quadrature(Domain::tri, quad_deg < 0 ? 2 * j + 2 : quad_deg);
  const Eigen::MatrixXd V = basis.eval_all(rule.points);
  Eigen::MatrixXd moments = Eigen::MatrixXd::Zero(2, basis.N);
  for (int q = 0; q < rule.npts(); q++) {
    const double wq = rule.weights(q) * 2.0 * fc.area;
    const Vec3 x = fc.p0 + rule.points(q, 0) * fc.e1 + rule.points(q, 1) * fc.e2;
    const Vec3 val = w(x);
    moments.row(0) += wq * val.dot(fc.t1) * V.col(q).transpose();
    moments.row(1) += wq * val.dot(fc.t2) * V.col(q).transpose();
  }
  return l2_project_face_tangential_from_moments(mesh, fi, j, moments);
}

namespace detail {

// reference coordinates of the face's vertices in its own parametrization
inline Vec2 face_ref_vertex(int local) {
  switch (local) {
    case 0: return {0.0, 0.0};
    case 1: return {1.0, 0.0};
    default: return {0.0, 1.0};
  }
}

// local endpoint indices of stored boundary edge ei (matches mesh.hpp order)
inline std::array<int, 2> face_edge_locals(int ei) {
  static constexpr int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  return {pairs[ei][0], pairs[ei][1]};
}

} // namespace detail

// The moment matrix of the boundary-surface H(div)-type projection on one
// face: rows are the 3(k+1) edge-normal moments against P_k(E), then (k>=2)
// the k^2-1 interior moments against n_F x D_{k-1}(F); columns the 2 dim P_k(F)
// coefficients of the unknown tangential field.  Edge moments include the
// arclength measure, face moments the area measure.
inline Eigen::MatrixXd hdiv_moment_matrix(const MeshTopology &mesh, int fi,
                                          int k) {
  const Face &fc = mesh.faces[fi];
  assert(fc.boundary());
  const BasisSet fb = make_basis(Domain::tri, k);
  const BasisSet eb = make_basis(Domain::seg, k);
  const int nf = fb.N;
  const int rows = 3 * (k + 1) + (k * k - 1);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rows, 2 * nf);

  const QuadratureRule seg = make_quadrature(Domain::seg, 2 * k + 2);
  for (int ei = 0; ei < 3; ei++) {
    const FaceEdge &ed = fc.edges[ei];
    const auto loc = detail::face_edge_locals(ei);
    const Vec2 ra = detail::face_ref_vertex(loc[0]);
    const Vec2 rb = detail::face_ref_vertex(loc[1]);
    const double tn1 = fc.t1.dot(ed.n_FE), tn2 = fc.t2.dot(ed.n_FE);
    for (int q = 0; q < seg.npts(); q++) {
      const double s = seg.points(q, 0);
      const double w = seg.weights(q) * ed.len;
      Eigen::MatrixXd rp(1, 2);
      rp.row(0) = (ra + s * (rb - ra)).transpose();
      const Eigen::VectorXd phi = fb.eval_all(rp).col(0);
      Eigen::MatrixXd sp(1, 1);
      sp(0, 0) = s;
      const Eigen::VectorXd qv = eb.eval_all(sp).col(0);
      for (int j = 0; j <= k; j++)
        for (int i = 0; i < nf; i++) {
          M(ei * (k + 1) + j, i) += w * tn1 * phi(i) * qv(j);
          M(ei * (k + 1) + j, nf + i) += w * tn2 * phi(i) * qv(j);
        }
    }
  }

  if (k >= 2) {
    const DkFaceSpace dk = make_dk_face_space(k - 1);
    const QuadratureRule tri = make_quadrature(Domain::tri, 2 * k + 2);
    const Eigen::MatrixXd phi = fb.eval_all(tri.points);
    const Eigen::MatrixXd d1 = dk.eval_comp(tri.points, 0);
    const Eigen::MatrixXd d2 = dk.eval_comp(tri.points, 1);
    // physical member field D = d1 e1 + d2 e2; moments of p against n_F x D
    const double cr[2][2] = {{fc.t1.dot(fc.n.cross(fc.e1)), fc.t1.dot(fc.n.cross(fc.e2))},
                             {fc.t2.dot(fc.n.cross(fc.e1)), fc.t2.dot(fc.n.cross(fc.e2))}};
    for (int q = 0; q < tri.npts(); q++) {
      const double w = tri.weights(q) * 2.0 * fc.area;
      for (int j = 0; j < dk.dim; j++) {
        const double g1 = cr[0][0] * d1(j, q) + cr[0][1] * d2(j, q);
        const double g2 = cr[1][0] * d1(j, q) + cr[1][1] * d2(j, q);
        for (int i = 0; i < nf; i++) {
          M(3 * (k + 1) + j, i) += w * phi(i, q) * g1;
          M(3 * (k + 1) + j, nf + i) += w * phi(i, q) * g2;
        }
      }
    }
  }
  return M;
}

inline FaceTangentialField hdiv_project_from_moments(
    const MeshTopology &mesh, int fi, int k, const Eigen::MatrixXd &edge_moments,
    const Eigen::VectorXd &face_moments) {
  assert(edge_moments.rows() == 3 && edge_moments.cols() == k + 1);
  assert(face_moments.size() == (k >= 2 ? k * k - 1 : 0));
  const Eigen::MatrixXd M = hdiv_moment_matrix(mesh, fi, k);
  Eigen::VectorXd rhs(M.rows());
  for (int ei = 0; ei < 3; ei++)
    rhs.segment(ei * (k + 1), k + 1) = edge_moments.row(ei).transpose();
  if (k >= 2) rhs.tail(k * k - 1) = face_moments;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible())
    throw std::runtime_error("singular H(div) moment system on face " +
                             std::to_string(fi));
  FaceTangentialField out;
  out.face = fi;
  out.c = lu.solve(rhs);
  return out;
}

inline FaceTangentialField hdiv_project_boundary_face(const MeshTopology &mesh,
                                                      int fi, int k,
                                                      const VectorFn &w,
                                                      int quad_deg = -1) {
  const Face &fc = mesh.faces[fi];
  assert(fc.boundary());
  const int deg = quad_deg < 0 ? 2 * k + 4 : quad_deg;
  const BasisSet eb = make_basis(Domain::seg, k);
  Eigen::MatrixXd edge_moments = Eigen::MatrixXd::Zero(3, k + 1);
  const QuadratureRule seg = make_quadrature(Domain::seg, deg);
  for (int ei = 0; ei < 3; ei++) {
    const FaceEdge &ed = fc.edges[ei];
    const Vec3 pa = mesh.vertices[ed.a], pb = mesh.vertices[ed.b];
    for (int q = 0; q < seg.npts(); q++) {
      const double s = seg.points(q, 0);
      const Vec3 x = pa + s * (pb - pa);
      Eigen::MatrixXd sp(1, 1);
      sp(0, 0) = s;
      const Eigen::VectorXd qv = eb.eval_all(sp).col(0);
      edge_moments.row(ei) +=
          seg.weights(q) * ed.len * w(x).dot(ed.n_FE) * qv.transpose();
    }
  }
  Eigen::VectorXd face_moments(k >= 2 ? k * k - 1 : 0);
  if (k >= 2) {
    const DkFaceSpace dk = make_dk_face_space(k - 1);
    const QuadratureRule tri = make_quadrature(Domain::tri, deg);
    const Eigen::MatrixXd d1 = dk.eval_comp(tri.points, 0);
    const Eigen::MatrixXd d2 = dk.eval_comp(tri.points, 1);
    const Vec3 ne1 = fc.n.cross(fc.e1), ne2 = fc.n.cross(fc.e2);
    face_moments.setZero();
    for (int q = 0; q < tri.npts(); q++) {
      const double wq = tri.weights(q) * 2.0 * fc.area;
      const Vec3 x = fc.p0 + tri.points(q, 0) * fc.e1 + tri.points(q, 1) * fc.e2;
      const Vec3 val = w(x);
      for (int j = 0; j < dk.dim; j++)
        face_moments(j) += wq * val.dot(d1(j, q) * ne1 + d2(j, q) * ne2);
    }
  }
  return hdiv_project_from_moments(mesh, fi, k, edge_moments, face_moments);
}

// u-hat coefficients from the target w of n x u-hat: u-hat = w x n
inline FaceTangentialField trace_from_rotated_data(const FaceTangentialField &w) {
  const int nf = w.modes();
  FaceTangentialField out;
  out.face = w.face;
  out.c.resize(2 * nf);
  out.c.head(nf) = w.c.tail(nf);
  out.c.tail(nf) = -w.c.head(nf);
  return out;
}

} // namespace hdgmax
