#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <map>
#include <ostream>
#include <vector>

#include "core.hpp"

namespace hdgmax {

struct FaceEdge {
  int a = -1, b = -1;  // global vertex indices, a < b
  Vec3 t_E = Vec3::Zero();   // unit tangent, from a to b
  Vec3 n_FE = Vec3::Zero();  // in-plane edge normal, outward from the face
  double len = 0.0;
};

struct Face {
  std::array<int, 3> v{};  // global vertex indices, ascending
  int owner = -1, neighbor = -1;
  int owner_local = -1, neighbor_local = -1;
  Vec3 n = Vec3::Zero();   // owner -> neighbor, outward on boundary
  Vec3 t1 = Vec3::Zero(), t2 = Vec3::Zero();  // t1 x t2 = n
  Vec3 p0 = Vec3::Zero(), e1 = Vec3::Zero(), e2 = Vec3::Zero();  // x = p0 + xi e1 + eta e2
  double area = 0.0;
  double h = 0.0;
  std::array<FaceEdge, 3> edges{};  // filled on boundary faces only

  bool boundary() const { return neighbor < 0; }
};

struct MeshTopology {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 4>> tets;
  std::vector<Face> faces;
  std::vector<std::array<int, 4>> tet_faces;  // local face i is opposite vertex i
  std::vector<double> h_T;
  std::vector<int> boundary_faces;
  double volume = 0.0;

  int n_cells() const { return static_cast<int>(tets.size()); }
  int n_faces() const { return static_cast<int>(faces.size()); }
  int n_interior_faces() const {
    return n_faces() - static_cast<int>(boundary_faces.size());
  }
  Vec3 tet_vertex(int e, int i) const { return vertices[tets[e][i]]; }
};

// (xi, eta) with x = p0 + xi e1 + eta e2, for x in the face plane
inline Vec2 face_ref_point(const Face &f, const Vec3 &x) {
  Eigen::Matrix2d G;
  G << f.e1.dot(f.e1), f.e1.dot(f.e2), f.e2.dot(f.e1), f.e2.dot(f.e2);
  const Vec3 d = x - f.p0;
  return G.inverse() * Vec2(d.dot(f.e1), d.dot(f.e2));
}

struct ElementMap {
  Vec3 v0;
  Eigen::Matrix3d J, Jinv;
  double detJ = 0.0;  // |det|, tets are positively oriented

  Vec3 to_phys(const Eigen::Vector3d &xi) const { return v0 + J * xi; }
  Vec3 to_ref(const Vec3 &x) const { return Jinv * (x - v0); }
};

inline ElementMap element_map(const MeshTopology &mesh, int e) {
  ElementMap m;
  m.v0 = mesh.tet_vertex(e, 0);
  for (int i = 0; i < 3; i++) m.J.col(i) = mesh.tet_vertex(e, i + 1) - m.v0;
  m.detJ = m.J.determinant();
  assert(m.detJ > 0.0);
  m.Jinv = m.J.inverse();
  return m;
}

namespace detail {

inline double signed_volume(const Vec3 &a, const Vec3 &b, const Vec3 &c,
                            const Vec3 &d) {
  return (b - a).cross(c - a).dot(d - a) / 6.0;
}

// split one cell (given its 8 corner vertex ids, bit order x|y<<1|z<<2) into
// the 6 Kuhn tetrahedra sharing the main diagonal 0-7
inline void kuhn_split(const std::array<int, 8> &c,
                       std::vector<std::array<int, 4>> &tets,
                       const std::vector<Vec3> &pts) {
  static constexpr int perms[6][3] = {{1, 2, 4}, {1, 4, 2}, {2, 1, 4},
                                      {2, 4, 1}, {4, 1, 2}, {4, 2, 1}};
  for (const auto &p : perms) {
    std::array<int, 4> t = {c[0], c[p[0]], c[p[0] + p[1]], c[7]};
    if (signed_volume(pts[t[0]], pts[t[1]], pts[t[2]], pts[t[3]]) < 0.0)
      std::swap(t[2], t[3]);
    tets.push_back(t);
  }
}

inline void build_connectivity(MeshTopology &mesh) {
  const auto &pts = mesh.vertices;
  std::map<std::array<int, 3>, int> index;
  mesh.tet_faces.resize(mesh.tets.size());
  for (int e = 0; e < mesh.n_cells(); e++) {
    const auto &t = mesh.tets[e];
    for (int i = 0; i < 4; i++) {
      std::array<int, 3> key;
      for (int j = 0, w = 0; j < 4; j++)
        if (j != i) key[w++] = t[j];
      std::sort(key.begin(), key.end());
      auto it = index.find(key);
      if (it == index.end()) {
        Face f;
        f.v = key;
        f.owner = e;
        f.owner_local = i;
        index.emplace(key, mesh.n_faces());
        mesh.tet_faces[e][i] = mesh.n_faces();
        mesh.faces.push_back(f);
      } else {
        Face &f = mesh.faces[it->second];
        assert(f.neighbor < 0);
        f.neighbor = e;
        f.neighbor_local = i;
        mesh.tet_faces[e][i] = it->second;
      }
    }
  }

  for (int fi = 0; fi < mesh.n_faces(); fi++) {
    Face &f = mesh.faces[fi];
    const Vec3 p0 = pts[f.v[0]], p1 = pts[f.v[1]], p2 = pts[f.v[2]];
    f.p0 = p0;
    f.e1 = p1 - p0;
    f.e2 = p2 - p0;
    Vec3 raw = f.e1.cross(f.e2);
    const double a2 = raw.norm();
    if (a2 <= 0.0) throw std::runtime_error("degenerate face");
    f.area = 0.5 * a2;
    f.n = raw / a2;
    const Vec3 centroid = (p0 + p1 + p2) / 3.0;
    const Vec3 opp = pts[mesh.tets[f.owner][f.owner_local]];
    if (f.n.dot(centroid - opp) < 0.0) f.n = -f.n;
    f.t1 = f.e1.normalized();
    f.t2 = f.n.cross(f.t1);
    f.h = std::max({(p1 - p0).norm(), (p2 - p0).norm(), (p2 - p1).norm()});
    if (f.boundary()) {
      mesh.boundary_faces.push_back(fi);
      static constexpr int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
      for (int ei = 0; ei < 3; ei++) {
        FaceEdge &ed = f.edges[ei];
        ed.a = f.v[pairs[ei][0]];
        ed.b = f.v[pairs[ei][1]];
        const Vec3 pa = pts[ed.a], pb = pts[ed.b];
        ed.len = (pb - pa).norm();
        ed.t_E = (pb - pa) / ed.len;
        Vec3 w = ed.t_E.cross(f.n);
        if (w.dot(0.5 * (pa + pb) - centroid) < 0.0) w = -w;
        ed.n_FE = w;
      }
    }
  }

  mesh.h_T.resize(mesh.tets.size());
  mesh.volume = 0.0;
  for (int e = 0; e < mesh.n_cells(); e++) {
    const auto &t = mesh.tets[e];
    double h = 0.0;
    for (int i = 0; i < 4; i++)
      for (int j = i + 1; j < 4; j++)
        h = std::max(h, (pts[t[i]] - pts[t[j]]).norm());
    mesh.h_T[e] = h;
    const double v = signed_volume(pts[t[0]], pts[t[1]], pts[t[2]], pts[t[3]]);
    assert(v > 0.0);
    mesh.volume += v;
  }
}

} // namespace detail

// n^3 cells of the unit cube, each split into 6 Kuhn tetrahedra; h^-1 = n
inline MeshTopology build_box_mesh(int n) {
  if (n < 1) throw config_error("box mesh needs n >= 1");
  MeshTopology mesh;
  const int s = n + 1;
  mesh.vertices.reserve(s * s * s);
  for (int iz = 0; iz < s; iz++)
    for (int iy = 0; iy < s; iy++)
      for (int ix = 0; ix < s; ix++)
        mesh.vertices.emplace_back(double(ix) / n, double(iy) / n,
                                   double(iz) / n);
  auto vid = [s](int ix, int iy, int iz) { return ix + s * (iy + s * iz); };
  for (int iz = 0; iz < n; iz++)
    for (int iy = 0; iy < n; iy++)
      for (int ix = 0; ix < n; ix++) {
        std::array<int, 8> c;
        for (int b = 0; b < 8; b++)
          c[b] = vid(ix + (b & 1), iy + ((b >> 1) & 1), iz + ((b >> 2) & 1));
        detail::kuhn_split(c, mesh.tets, mesh.vertices);
      }
  detail::build_connectivity(mesh);
  return mesh;
}

// [-1,1]^3 minus the quadrant x<0, y<0, with n (even) cells across the full
// width; the reentrant edge x=y=0 lies exactly on mesh lines
inline MeshTopology build_lshape_mesh(int n) {
  if (n < 2 || n % 2 != 0) throw config_error("L-shape mesh needs even n >= 2");
  MeshTopology mesh;
  const int s = n + 1;
  std::vector<int> compact(s * s * s, -1);
  auto gid = [s](int ix, int iy, int iz) { return ix + s * (iy + s * iz); };
  auto coord = [n](int i) { return -1.0 + 2.0 * double(i) / n; };
  auto used_cell = [n](int ix, int iy) { return !(ix < n / 2 && iy < n / 2); };
  for (int iz = 0; iz < n; iz++)
    for (int iy = 0; iy < n; iy++)
      for (int ix = 0; ix < n; ix++) {
        if (!used_cell(ix, iy)) continue;
        for (int b = 0; b < 8; b++) {
          const int g = gid(ix + (b & 1), iy + ((b >> 1) & 1), iz + ((b >> 2) & 1));
          if (compact[g] < 0) {
            compact[g] = static_cast<int>(mesh.vertices.size());
            mesh.vertices.emplace_back(coord(ix + (b & 1)), coord(iy + ((b >> 1) & 1)),
                                       coord(iz + ((b >> 2) & 1)));
          }
        }
      }
  for (int iz = 0; iz < n; iz++)
    for (int iy = 0; iy < n; iy++)
      for (int ix = 0; ix < n; ix++) {
        if (!used_cell(ix, iy)) continue;
        std::array<int, 8> c;
        for (int b = 0; b < 8; b++)
          c[b] = compact[gid(ix + (b & 1), iy + ((b >> 1) & 1), iz + ((b >> 2) & 1))];
        detail::kuhn_split(c, mesh.tets, mesh.vertices);
      }
  detail::build_connectivity(mesh);
  return mesh;
}

inline void dump_mesh(const MeshTopology &mesh, std::ostream &os) {
  os << "vertices " << mesh.vertices.size() << "\n";
  for (const auto &p : mesh.vertices)
    os << p.x() << " " << p.y() << " " << p.z() << "\n";
  os << "tets " << mesh.tets.size() << "\n";
  for (const auto &t : mesh.tets)
    os << t[0] << " " << t[1] << " " << t[2] << " " << t[3] << "\n";
  os << "faces " << mesh.faces.size() << "\n";
  for (const auto &f : mesh.faces)
    os << f.v[0] << " " << f.v[1] << " " << f.v[2] << " " << f.owner << " "
       << f.neighbor << " " << f.n.x() << " " << f.n.y() << " " << f.n.z()
       << "\n";
}

} // namespace hdgmax
