#pragma once

#include <functional>
#include <string>

#include "mesh.hpp"
#include "polyquad.hpp"
#include "projections.hpp"

namespace hdgmax {

struct ManufacturedCase {
  std::string name;
  bool singular = false;
  double t = 0.0;
  bool zero_data = false;  // f == 0 and g == 0 identically
  VectorFn u, r, f, grad_p;
  ScalarFn p, g;

  Vec3 g_T(const Vec3 &x, const Vec3 &n) const { return n.cross(u(x)); }
};

// u = (s,s,s), s = sin(pi y) sin(pi z); p = sin(pi x) sin(pi y) sin(pi z)/pi^2
inline ManufacturedCase smooth_case() {
  const double pi = M_PI;
  ManufacturedCase c;
  c.name = "smooth";
  c.u = [pi](const Vec3 &x) {
    const double s = std::sin(pi * x(1)) * std::sin(pi * x(2));
    return Vec3(s, s, s);
  };
  c.r = [pi](const Vec3 &x) {
    const double sy = std::sin(pi * x(1)), cy = std::cos(pi * x(1));
    const double sz = std::sin(pi * x(2)), cz = std::cos(pi * x(2));
    return Vec3(pi * (cy * sz - sy * cz), pi * sy * cz, -pi * cy * sz);
  };
  c.p = [pi](const Vec3 &x) {
    return std::sin(pi * x(0)) * std::sin(pi * x(1)) * std::sin(pi * x(2)) /
           (pi * pi);
  };
  c.grad_p = [pi](const Vec3 &x) {
    const double sx = std::sin(pi * x(0)), cx = std::cos(pi * x(0));
    const double sy = std::sin(pi * x(1)), cy = std::cos(pi * x(1));
    const double sz = std::sin(pi * x(2)), cz = std::cos(pi * x(2));
    return Vec3(cx * sy * sz / pi, sx * cy * sz / pi, sx * sy * cz / pi);
  };
  c.g = [pi](const Vec3 &x) { return pi * std::sin(pi * (x(1) + x(2))); };
  c.f = [pi](const Vec3 &x) {
    const double sx = std::sin(pi * x(0)), cx = std::cos(pi * x(0));
    const double sy = std::sin(pi * x(1)), cy = std::cos(pi * x(1));
    const double sz = std::sin(pi * x(2)), cz = std::cos(pi * x(2));
    const double cymz = std::cos(pi * (x(1) - x(2)));
    return Vec3(2 * pi * pi * sy * sz + cx * sy * sz / pi,
                pi * pi * cymz + sx * cy * sz / pi,
                pi * pi * cymz + sx * sy * cz / pi);
  };
  return c;
}

// gradient of the harmonic potential rho^t sin(t theta) about the axis x=y=0,
// theta measured from +x with the branch cut inside the removed quadrant
// (atan2 gives exactly that branch on the L-domain)
inline ManufacturedCase singular_case(double t) {
  if (t <= 0.0) throw config_error("singular case needs t > 0");
  ManufacturedCase c;
  c.name = "singular";
  c.singular = true;
  c.t = t;
  c.zero_data = true;
  c.u = [t](const Vec3 &x) {
    const double rho = std::hypot(x(0), x(1));
    if (rho == 0.0) {
      if (t < 1.0) throw std::domain_error("singular solution evaluated on the axis");
      if (t == 1.0) return Vec3(0, 1, 0);
      return Vec3(0, 0, 0);
    }
    const double theta = std::atan2(x(1), x(0));
    const double a = t * std::pow(rho, t - 1.0);
    return Vec3(a * std::sin((t - 1.0) * theta), a * std::cos((t - 1.0) * theta), 0.0);
  };
  c.r = [](const Vec3 &) { return Vec3(0, 0, 0); };
  c.f = [](const Vec3 &) { return Vec3(0, 0, 0); };
  c.grad_p = [](const Vec3 &) { return Vec3(0, 0, 0); };
  c.p = [](const Vec3 &) { return 0.0; };
  c.g = [](const Vec3 &) { return 0.0; };
  return c;
}

// ---------------------------------------------------------------------------
// quadrature on entities touching the singular axis x = y = 0
// ---------------------------------------------------------------------------

struct PhysRule {
  Eigen::MatrixXd x;  // npts x 3
  Eigen::VectorXd w;

  int npts() const { return static_cast<int>(w.size()); }
};

namespace detail {

inline bool on_axis(const Vec3 &p) { return p.x() == 0.0 && p.y() == 0.0; }

inline double axis_dist(const Vec3 &p) { return std::hypot(p.x(), p.y()); }

} // namespace detail

enum class AxisTouch { none, vertex, edge };

struct AxisInfo {
  AxisTouch kind = AxisTouch::none;
  int a = -1, b = -1;  // local vertex indices on the axis (a only for vertex)
};

inline AxisInfo face_axis_info(const MeshTopology &mesh, int fi) {
  AxisInfo info;
  const auto &f = mesh.faces[fi];
  for (int i = 0; i < 3; i++)
    if (detail::on_axis(mesh.vertices[f.v[i]])) {
      if (info.a < 0)
        info.a = i;
      else
        info.b = i;
    }
  info.kind = info.b >= 0 ? AxisTouch::edge
                          : (info.a >= 0 ? AxisTouch::vertex : AxisTouch::none);
  return info;
}

inline AxisInfo tet_axis_info(const MeshTopology &mesh, int e) {
  AxisInfo info;
  for (int i = 0; i < 4; i++)
    if (detail::on_axis(mesh.tet_vertex(e, i))) {
      if (info.a < 0)
        info.a = i;
      else
        info.b = i;
    }
  info.kind = info.b >= 0 ? AxisTouch::edge
                          : (info.a >= 0 ? AxisTouch::vertex : AxisTouch::none);
  return info;
}

inline PhysRule face_rule_plain(const MeshTopology &mesh, int fi, int degree) {
  const Face &f = mesh.faces[fi];
  const QuadratureRule tri = make_quadrature(Domain::tri, degree);
  PhysRule r;
  r.x.resize(tri.npts(), 3);
  r.w.resize(tri.npts());
  for (int q = 0; q < tri.npts(); q++) {
    r.x.row(q) = (f.p0 + tri.points(q, 0) * f.e1 + tri.points(q, 1) * f.e2).transpose();
    r.w(q) = tri.weights(q) * 2.0 * f.area;
  }
  return r;
}

inline PhysRule tet_rule_plain(const MeshTopology &mesh, int e, int degree) {
  const QuadratureRule tet = make_quadrature(Domain::tet, degree);
  const ElementMap map = element_map(mesh, e);
  PhysRule r;
  r.x.resize(tet.npts(), 3);
  r.w.resize(tet.npts());
  for (int q = 0; q < tet.npts(); q++) {
    r.x.row(q) = map.to_phys(tet.points.row(q).transpose()).transpose();
    r.w(q) = tet.weights(q) * map.detJ;
  }
  return r;
}

// Rule for face integrands behaving like (distance to axis)^mu * (analytic):
// collapsed toward the touching edge or vertex, with a graded radial rule that
// absorbs the power exactly (the radial factor of the integrand is a pure
// power times a polynomial along the collapse rays).  Falls back to the plain
// rule away from the axis.
inline PhysRule face_rule_graded(const MeshTopology &mesh, int fi, int degree,
                                 double mu, int levels = 12) {
  const Face &f = mesh.faces[fi];
  const AxisInfo info = face_axis_info(mesh, fi);
  if (info.kind == AxisTouch::none) return face_rule_plain(mesh, fi, degree);
  const QuadratureRule gl = make_quadrature(Domain::seg, degree);
  PhysRule r;
  if (info.kind == AxisTouch::edge) {
    const QuadratureRule rad = graded_rule_01(degree, mu, levels);
    const Vec3 A = mesh.vertices[f.v[info.a]], B = mesh.vertices[f.v[info.b]];
    const int cl = 3 - info.a - info.b;
    const Vec3 C = mesh.vertices[f.v[cl]];
    r.x.resize(rad.npts() * gl.npts(), 3);
    r.w.resize(rad.npts() * gl.npts());
    int q = 0;
    for (int i = 0; i < rad.npts(); i++) {
      const double eta = rad.points(i, 0);
      for (int j = 0; j < gl.npts(); j++, q++) {
        const double xi = gl.points(j, 0);
        r.x.row(q) = ((1.0 - eta) * (A + xi * (B - A)) + eta * C).transpose();
        r.w(q) = rad.weights(i) * gl.weights(j) * (1.0 - eta) * 2.0 * f.area;
      }
    }
  } else {
    // jacobian rho contributes one power to the radial direction
    const QuadratureRule rad = graded_rule_01(degree, mu + 1.0, levels);
    const Vec3 V = mesh.vertices[f.v[info.a]];
    const Vec3 W1 = mesh.vertices[f.v[(info.a + 1) % 3]];
    const Vec3 W2 = mesh.vertices[f.v[(info.a + 2) % 3]];
    r.x.resize(rad.npts() * gl.npts(), 3);
    r.w.resize(rad.npts() * gl.npts());
    int q = 0;
    for (int i = 0; i < rad.npts(); i++) {
      const double rho = rad.points(i, 0);
      for (int j = 0; j < gl.npts(); j++, q++) {
        const double sg = gl.points(j, 0);
        r.x.row(q) = ((1.0 - rho) * V + rho * (W1 + sg * (W2 - W1))).transpose();
        r.w(q) = rad.weights(i) * rho * gl.weights(j) * 2.0 * f.area;
      }
    }
  }
  return r;
}

// volume analogue of face_rule_graded
inline PhysRule tet_rule_graded(const MeshTopology &mesh, int e, int degree,
                                double mu, int levels = 12) {
  const AxisInfo info = tet_axis_info(mesh, e);
  if (info.kind == AxisTouch::none) return tet_rule_plain(mesh, e, degree);
  const double vol6 = element_map(mesh, e).detJ;  // 6 x element volume
  const QuadratureRule gl = make_quadrature(Domain::seg, degree);
  PhysRule r;
  if (info.kind == AxisTouch::edge) {
    const QuadratureRule rad = graded_rule_01(degree, mu + 1.0, levels);
    const Vec3 A = mesh.tet_vertex(e, info.a), B = mesh.tet_vertex(e, info.b);
    std::array<Vec3, 2> off;
    for (int i = 0, w = 0; i < 4; i++)
      if (i != info.a && i != info.b) off[w++] = mesh.tet_vertex(e, i);
    r.x.resize(rad.npts() * gl.npts() * gl.npts(), 3);
    r.w.resize(r.x.rows());
    int q = 0;
    for (int i = 0; i < rad.npts(); i++) {
      const double eta = rad.points(i, 0);
      for (int j = 0; j < gl.npts(); j++) {
        const double tau = gl.points(j, 0);
        const Vec3 axis_pt = A + tau * (B - A);
        for (int l = 0; l < gl.npts(); l++, q++) {
          const double m = gl.points(l, 0);
          const Vec3 opp = off[0] + m * (off[1] - off[0]);
          r.x.row(q) = ((1.0 - eta) * axis_pt + eta * opp).transpose();
          r.w(q) = rad.weights(i) * eta * (1.0 - eta) * gl.weights(j) *
                   gl.weights(l) * vol6;
        }
      }
    }
  } else {
    const QuadratureRule rad = graded_rule_01(degree, mu + 2.0, levels);
    const QuadratureRule tri = make_quadrature(Domain::tri, degree);
    const Vec3 V = mesh.tet_vertex(e, info.a);
    std::array<Vec3, 3> W;
    for (int i = 0, w = 0; i < 4; i++)
      if (i != info.a) W[w++] = mesh.tet_vertex(e, i);
    r.x.resize(rad.npts() * tri.npts(), 3);
    r.w.resize(r.x.rows());
    int q = 0;
    for (int i = 0; i < rad.npts(); i++) {
      const double rho = rad.points(i, 0);
      for (int j = 0; j < tri.npts(); j++, q++) {
        const Vec3 opp =
            W[0] + tri.points(j, 0) * (W[1] - W[0]) + tri.points(j, 1) * (W[2] - W[0]);
        r.x.row(q) = ((1.0 - rho) * V + rho * opp).transpose();
        r.w(q) = rad.weights(i) * rho * rho * tri.weights(j) * vol6;
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// boundary data moments
// ---------------------------------------------------------------------------

struct BoundaryMoments {
  Eigen::MatrixXd edge;  // 3 x (k+1), edge-normal moments of g_T
  Eigen::VectorXd dk;    // k^2-1 interior moments (k >= 2)
  Eigen::MatrixXd l2;    // 2 x dim P_k(F), tangential-frame L2 moments
};

// All moments of the boundary datum g_T = n x u on one boundary face.  On the
// smooth case these are plain Gauss integrals.  On the singular case: edges on
// the axis have identically-zero normal moments (g_T is parallel to the axis
// on the reentrant faces, so (g_T . n_FE) == 0 there); edges with one axis
// endpoint and axis-touching faces use the graded rules above with the data
// exponent t-1.
inline BoundaryMoments boundary_face_moments(const ManufacturedCase &cs,
                                             const MeshTopology &mesh, int fi,
                                             int k, int quad_inc = 0) {
  const Face &fc = mesh.faces[fi];
  if (!fc.boundary()) throw std::invalid_argument("moments need a boundary face");
  const int deg = 2 * k + 4 + quad_inc;
  const BasisSet fb = make_basis(Domain::tri, k);
  const BasisSet eb = make_basis(Domain::seg, k);
  BoundaryMoments out;
  out.edge = Eigen::MatrixXd::Zero(3, k + 1);
  out.dk = Eigen::VectorXd::Zero(k >= 2 ? k * k - 1 : 0);
  out.l2 = Eigen::MatrixXd::Zero(2, fb.N);
  const double mu = cs.singular ? cs.t - 1.0 : 0.0;

  for (int ei = 0; ei < 3; ei++) {
    const FaceEdge &ed = fc.edges[ei];
    const Vec3 pa = mesh.vertices[ed.a], pb = mesh.vertices[ed.b];
    const bool a_axis = cs.singular && detail::on_axis(pa);
    const bool b_axis = cs.singular && detail::on_axis(pb);
    if (a_axis && b_axis) continue;  // structurally zero
    QuadratureRule rule;
    bool flip = false;
    if (a_axis || b_axis) {
      rule = graded_rule_01(deg, mu);
      flip = b_axis;  // grade toward the singular endpoint
    } else {
      rule = make_quadrature(Domain::seg, deg);
    }
    for (int q = 0; q < rule.npts(); q++) {
      const double s = flip ? 1.0 - rule.points(q, 0) : rule.points(q, 0);
      const Vec3 x = pa + s * (pb - pa);
      Eigen::MatrixXd sp(1, 1);
      sp(0, 0) = s;
      const Eigen::VectorXd qv = eb.eval_all(sp).col(0);
      out.edge.row(ei) += rule.weights(q) * ed.len *
                          cs.g_T(x, fc.n).dot(ed.n_FE) * qv.transpose();
    }
  }

  const PhysRule area_rule = cs.singular ? face_rule_graded(mesh, fi, deg, mu)
                                         : face_rule_plain(mesh, fi, deg);
  Eigen::MatrixXd ref(area_rule.npts(), 2);
  for (int q = 0; q < area_rule.npts(); q++)
    ref.row(q) = face_ref_point(fc, area_rule.x.row(q).transpose()).transpose();
  const Eigen::MatrixXd phi = fb.eval_all(ref);
  for (int q = 0; q < area_rule.npts(); q++) {
    const Vec3 val = cs.g_T(area_rule.x.row(q).transpose(), fc.n);
    out.l2.row(0) += area_rule.w(q) * val.dot(fc.t1) * phi.col(q).transpose();
    out.l2.row(1) += area_rule.w(q) * val.dot(fc.t2) * phi.col(q).transpose();
  }
  if (k >= 2) {
    const DkFaceSpace dk = make_dk_face_space(k - 1);
    const Eigen::MatrixXd d1 = dk.eval_comp(ref, 0);
    const Eigen::MatrixXd d2 = dk.eval_comp(ref, 1);
    const Vec3 ne1 = fc.n.cross(fc.e1), ne2 = fc.n.cross(fc.e2);
    for (int q = 0; q < area_rule.npts(); q++) {
      const Vec3 val = cs.g_T(area_rule.x.row(q).transpose(), fc.n);
      for (int j = 0; j < dk.dim; j++)
        out.dk(j) += area_rule.w(q) * val.dot(d1(j, q) * ne1 + d2(j, q) * ne2);
    }
  }
  return out;
}

inline double boundary_edge_moment(const ManufacturedCase &cs,
                                   const MeshTopology &mesh, int fi, int ei,
                                   int j, int k, int quad_inc = 0) {
  return boundary_face_moments(cs, mesh, fi, k, quad_inc).edge(ei, j);
}

// T_{Gamma,k} g_T on one boundary face: the target w of n x u-hat
enum class TraceProjection { l2, hdiv };

inline FaceTangentialField project_boundary_datum(const ManufacturedCase &cs,
                                                  const MeshTopology &mesh,
                                                  int fi, int k,
                                                  TraceProjection proj,
                                                  int quad_inc = 0) {
  const BoundaryMoments m = boundary_face_moments(cs, mesh, fi, k, quad_inc);
  if (proj == TraceProjection::hdiv)
    return hdiv_project_from_moments(mesh, fi, k, m.edge, m.dk);
  return l2_project_face_tangential_from_moments(mesh, fi, k, m.l2);
}

} // namespace hdgmax
