#include <catch2/catch_amalgamated.hpp>

#include <Eigen/SparseLU>

#include <cstring>

#include <hdgmax/assembly.hpp>

#include "cases.hpp"
#include "oracles.hpp"

using namespace hdgmax;
using cases::case_constant;
using cases::case_linear;
using cases::case_quadratic;
using cases::exact_interior;
using cases::exact_trace;
using cases::solve_condensed;
using cases::DenseReference;
using cases::solve_uncondensed;

namespace {

double field_error(const MeshTopology &mesh, const FieldSolution &sol,
                   const ManufacturedCase &cs) {
  const BasisSet bk = make_basis(Domain::tet, sol.spec.k);
  const BasisSet bm = make_basis(Domain::tet, sol.spec.m);
  const QuadratureRule rule = make_quadrature(Domain::tet, 2 * sol.spec.k + 4);
  const Eigen::MatrixXd Vk = bk.eval_all(rule.points);
  const Eigen::MatrixXd Vm = bm.eval_all(rule.points);
  double err2 = 0, nrm2 = 0;
  for (int e = 0; e < mesh.n_cells(); e++) {
    const ElementMap map = element_map(mesh, e);
    const Eigen::VectorXd &xi = sol.interior[e];
    for (int q = 0; q < rule.npts(); q++) {
      const double w = rule.weights(q) * map.detJ;
      const Vec3 x = map.to_phys(rule.points.row(q).transpose());
      const Vec3 ue = cs.u(x), re = cs.r(x);
      const double pe = cs.p(x);
      Vec3 uh, rh;
      for (int c = 0; c < 3; c++) {
        rh(c) = Vm.col(q).dot(xi.segment(c * bm.N, bm.N));
        uh(c) = Vk.col(q).dot(xi.segment(3 * bm.N + c * bk.N, bk.N));
      }
      const double ph = Vk.col(q).dot(xi.tail(bk.N));
      err2 += w * ((uh - ue).squaredNorm() + (rh - re).squaredNorm() +
                   (ph - pe) * (ph - pe));
      nrm2 += w * (ue.squaredNorm() + re.squaredNorm() + pe * pe + 1.0);
    }
  }
  return std::sqrt(err2 / nrm2);
}

} // namespace

TEST_CASE("local matrix dimensions", "[assembly]") {
  const MeshTopology mesh = build_box_mesh(1);
  const ManufacturedCase cs = case_constant();

  DiscreteSpec s1{1, 0, -1, TraceProjection::l2, 0};
  const ElementMatrices em1 = local_element_matrices(mesh, 0, s1, cs);
  CHECK(em1.n_r == 3);
  CHECK(em1.n_u == 12);
  CHECK(em1.n_p == 4);
  CHECK(em1.n_I == 19);
  CHECK(em1.nf == 3);
  CHECK(em1.n_G == 36);
  CHECK(em1.K_II.rows() == 19);
  CHECK(em1.K_IG.cols() == 36);

  DiscreteSpec s2{2, 2, -1, TraceProjection::l2, 0};
  const ElementMatrices em2 = local_element_matrices(mesh, 0, s2, cs);
  CHECK(em2.n_I == 30 + 30 + 10);
  CHECK(em2.n_G == 72);
}

TEST_CASE("r block is the component mass matrix", "[assembly]") {
  const MeshTopology mesh = build_box_mesh(2);
  const DiscreteSpec spec{1, 1, -1, TraceProjection::l2, 0};
  const ElementMatrices em = local_element_matrices(mesh, 3, spec, case_constant());
  const int Nm = poly_dim(1, 3);
  const Eigen::MatrixXd Mr = em.K_II.topLeftCorner(Nm, Nm);
  // orthonormal basis scaled by the affine Jacobian
  const double detJ = element_map(mesh, 3).detJ;
  CHECK((Mr - detJ * Eigen::MatrixXd::Identity(Nm, Nm)).norm() < 1e-12);
  for (int c = 1; c < 3; c++)
    CHECK((em.K_II.block(c * Nm, c * Nm, Nm, Nm) - Mr).norm() < 1e-13);
}

TEST_CASE("local blocks are symmetric", "[assembly]") {
  const MeshTopology mesh = build_lshape_mesh(2);
  const ManufacturedCase cs = smooth_case();
  for (const int alpha : {-1, 1}) {
    const DiscreteSpec spec{2, 1, alpha, TraceProjection::l2, 0};
    for (const int e : {0, 7, 20}) {
      const ElementMatrices em = local_element_matrices(mesh, e, spec, cs);
      const double scale = em.K_II.cwiseAbs().maxCoeff();
      CHECK((em.K_II - em.K_II.transpose()).cwiseAbs().maxCoeff() < 1e-12 * scale);
      CHECK((em.K_GG - em.K_GG.transpose()).cwiseAbs().maxCoeff() < 1e-12 * scale);
      CHECK((em.K_GI - em.K_IG.transpose()).cwiseAbs().maxCoeff() < 1e-12 * scale);
    }
  }
}

TEST_CASE("zero data gives zero interior load", "[assembly]") {
  const MeshTopology mesh = build_lshape_mesh(2);
  const DiscreteSpec spec{1, 1, -1, TraceProjection::hdiv, 0};
  const ManufacturedCase cs = singular_case(2.0 / 3.0);
  const ElementMatrices em = local_element_matrices(mesh, 5, spec, cs);
  CHECK(em.b_I.norm() == 0.0);
}

TEST_CASE("interior equations hold for the exact polynomial tuple", "[assembly]") {
  const MeshTopology mesh = build_box_mesh(1);
  struct Probe {
    DiscreteSpec spec;
    ManufacturedCase cs;
  };
  const std::vector<Probe> probes = {
      {{1, 0, -1, TraceProjection::l2, 0}, case_constant()},
      {{1, 1, 1, TraceProjection::l2, 0}, case_linear()},
      {{2, 2, -1, TraceProjection::l2, 0}, case_quadratic()},
  };
  for (const auto &pr : probes) {
    const Eigen::VectorXd yall = exact_trace(mesh, pr.spec, pr.cs);
    for (int e = 0; e < mesh.n_cells(); e++) {
      const ElementMatrices em = local_element_matrices(mesh, e, pr.spec, pr.cs);
      const Eigen::VectorXd xi = exact_interior(mesh, e, pr.spec, pr.cs);
      Eigen::VectorXd yloc(em.n_G);
      const int pf = 3 * em.nf;
      for (int fl = 0; fl < 4; fl++)
        yloc.segment(fl * pf, pf) =
            yall.segment(mesh.tet_faces[e][fl] * pf, pf);
      const Eigen::VectorXd res = em.K_II * xi + em.K_IG * yloc - em.b_I;
      const double scale = em.K_II.norm() * (1.0 + xi.norm());
      INFO(pr.cs.name << " element " << e);
      CHECK(res.norm() < 1e-12 * scale);
    }
  }
}

TEST_CASE("schur complement is symmetric as computed", "[assembly]") {
  const MeshTopology mesh = build_lshape_mesh(2);
  const ManufacturedCase cs = smooth_case();
  for (const int alpha : {-1, 1}) {
    const DiscreteSpec spec{1, 0, alpha, TraceProjection::l2, 0};
    for (int e = 0; e < mesh.n_cells(); e += 5) {
      const CondensedElement ce = condense(local_element_matrices(mesh, e, spec, cs), e);
      const double scale = ce.S.cwiseAbs().maxCoeff();
      CHECK((ce.S - ce.S.transpose()).cwiseAbs().maxCoeff() < 1e-11 * scale);
    }
  }
}

TEST_CASE("trace dof counts", "[assembly]") {
  const ManufacturedCase cs = case_constant();
  {
    const MeshTopology mesh = build_box_mesh(2);
    const DiscreteSpec spec{1, 0, -1, TraceProjection::l2, 0};
    const AssembledSystem asys = assemble(mesh, spec, cs);
    CHECK(asys.sys.dof_all == 1080);
    CHECK(asys.sys.dof_solved == 9 * (mesh.n_faces() - static_cast<int>(mesh.boundary_faces.size())));
    CHECK(asys.sys.dof_solved == 648);
    CHECK(asys.sys.A.rows() == 648);
  }
  {
    const MeshTopology mesh = build_box_mesh(2);
    const DiscreteSpec spec{2, 2, -1, TraceProjection::l2, 0};
    const AssembledSystem asys = assemble(mesh, spec, cs);
    CHECK(asys.sys.dof_all == 2160);
  }
  {
    const MeshTopology mesh = build_lshape_mesh(2);
    const DiscreteSpec spec{1, 0, -1, TraceProjection::l2, 0};
    const AssembledSystem asys = assemble(mesh, spec, cs);
    CHECK(asys.sys.dof_all == 846);
  }
}

TEST_CASE("assembled trace matrix is symmetric", "[assembly]") {
  const MeshTopology mesh = build_box_mesh(2);
  const DiscreteSpec spec{1, 0, -1, TraceProjection::l2, 0};
  const AssembledSystem asys = assemble(mesh, spec, smooth_case());
  const Eigen::SparseMatrix<double> At = asys.sys.A.transpose();
  const Eigen::SparseMatrix<double> diff = asys.sys.A - At;
  double amax = 0;
  for (int j = 0; j < asys.sys.A.outerSize(); j++)
    for (Eigen::SparseMatrix<double>::InnerIterator it(asys.sys.A, j); it; ++it)
      amax = std::max(amax, std::abs(it.value()));
  double dmax = 0;
  for (int j = 0; j < diff.outerSize(); j++)
    for (Eigen::SparseMatrix<double>::InnerIterator it(diff, j); it; ++it)
      dmax = std::max(dmax, std::abs(it.value()));
  CHECK(dmax <= 1e-12 * amax);
}

TEST_CASE("assembly is bitwise reproducible", "[assembly]") {
  const MeshTopology mesh = build_lshape_mesh(2);
  const DiscreteSpec spec{1, 1, -1, TraceProjection::hdiv, 0};
  const ManufacturedCase cs = singular_case(2.0 / 3.0);
  const AssembledSystem a1 = assemble(mesh, spec, cs);
  const AssembledSystem a2 = assemble(mesh, spec, cs, 1);
  REQUIRE(a1.sys.A.nonZeros() == a2.sys.A.nonZeros());
  const std::size_t nnz = static_cast<std::size_t>(a1.sys.A.nonZeros());
  CHECK(std::memcmp(a1.sys.A.valuePtr(), a2.sys.A.valuePtr(), nnz * sizeof(double)) == 0);
  CHECK(a1.sys.b == a2.sys.b);
  CHECK(a1.sys.fixed == a2.sys.fixed);
}

TEST_CASE("threaded assembly matches serial", "[assembly]") {
  const MeshTopology mesh = build_box_mesh(2);
  const DiscreteSpec spec{1, 0, -1, TraceProjection::l2, 0};
  const ManufacturedCase cs = smooth_case();
  const AssembledSystem a1 = assemble(mesh, spec, cs, 1);
  const AssembledSystem a2 = assemble(mesh, spec, cs, 4);
  REQUIRE(a1.sys.A.nonZeros() == a2.sys.A.nonZeros());
  const std::size_t nnz = static_cast<std::size_t>(a1.sys.A.nonZeros());
  CHECK(std::memcmp(a1.sys.A.valuePtr(), a2.sys.A.valuePtr(), nnz * sizeof(double)) == 0);
  CHECK(a1.sys.b == a2.sys.b);
}

TEST_CASE("polynomial solutions are reproduced exactly", "[assembly]") {
  const MeshTopology mesh = build_box_mesh(2);
  struct Probe {
    DiscreteSpec spec;
    ManufacturedCase cs;
  };
  const std::vector<Probe> probes = {
      {{1, 0, -1, TraceProjection::l2, 0}, case_constant()},
      {{1, 1, 1, TraceProjection::l2, 0}, case_linear()},
      {{2, 2, -1, TraceProjection::l2, 0}, case_quadratic()},
      {{1, 1, 1, TraceProjection::hdiv, 0}, case_linear()},
  };
  for (const auto &pr : probes) {
    const FieldSolution sol = solve_condensed(mesh, pr.spec, pr.cs);
    INFO(pr.cs.name << " k=" << pr.spec.k << " m=" << pr.spec.m
                    << " alpha=" << pr.spec.alpha);
    CHECK(field_error(mesh, sol, pr.cs) < 1e-9);
  }
}

TEST_CASE("condensed solve matches the uncondensed system", "[assembly][equivalence]") {
  struct Setup {
    MeshTopology mesh;
    int expect_total;
  };
  const ManufacturedCase cs = smooth_case();
  const DiscreteSpec spec{1, 0, -1, TraceProjection::l2, 0};
  std::vector<Setup> setups;
  setups.push_back({build_box_mesh(1), 276});
  setups.push_back({build_box_mesh(2), 1992});
  setups.push_back({build_lshape_mesh(2), 1530});
  for (const auto &st : setups) {
    const DenseReference ref = solve_uncondensed(st.mesh, spec, cs);
    REQUIRE(ref.n_total == st.expect_total);
    const FieldSolution sol = solve_condensed(st.mesh, spec, cs);
    double err = 0, nrm = 0;
    for (int e = 0; e < st.mesh.n_cells(); e++) {
      err += (sol.interior[e] - ref.x.segment(e * ref.n_I, ref.n_I)).squaredNorm();
      nrm += ref.x.segment(e * ref.n_I, ref.n_I).squaredNorm();
    }
    const int tr0 = st.mesh.n_cells() * ref.n_I;
    err += (sol.trace - ref.x.tail(ref.x.size() - tr0)).squaredNorm();
    nrm += ref.x.tail(ref.x.size() - tr0).squaredNorm();
    INFO("n_total=" << st.expect_total);
    CHECK(std::sqrt(err / nrm) < 1e-9);
  }
}

TEST_CASE("spec validation rejects bad parameters", "[assembly]") {
  CHECK_THROWS_AS((DiscreteSpec{0, 0, -1, TraceProjection::l2, 0}).validate(), config_error);
  CHECK_THROWS_AS((DiscreteSpec{1, 2, -1, TraceProjection::l2, 0}).validate(), config_error);
  CHECK_THROWS_AS((DiscreteSpec{2, 0, -1, TraceProjection::l2, 0}).validate(), config_error);
  CHECK_THROWS_AS((DiscreteSpec{1, 1, 0, TraceProjection::l2, 0}).validate(), config_error);
  CHECK_NOTHROW((DiscreteSpec{3, 2, 1, TraceProjection::l2, 0}).validate());
}
