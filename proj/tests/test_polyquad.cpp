#include <catch2/catch_amalgamated.hpp>

#include <hdgmax/polyquad.hpp>

#include "oracles.hpp"

using namespace hdgmax;

namespace {

double integrate_monomial(const QuadratureRule &rule, int a, int b, int c) {
  double s = 0;
  for (int q = 0; q < rule.npts(); q++) {
    double v = 1.0;
    for (int i = 0; i < a; i++) v *= rule.points(q, 0);
    if (rule.points.cols() > 1)
      for (int i = 0; i < b; i++) v *= rule.points(q, 1);
    if (rule.points.cols() > 2)
      for (int i = 0; i < c; i++) v *= rule.points(q, 2);
    s += rule.weights(q) * v;
  }
  return s;
}

} // namespace

TEST_CASE("quadrature weights sum to reference measures", "[polyquad]") {
  CHECK(make_quadrature(Domain::tet, 7).weights.sum() == Catch::Approx(1.0 / 6).epsilon(1e-14));
  CHECK(make_quadrature(Domain::tri, 7).weights.sum() == Catch::Approx(0.5).epsilon(1e-14));
  CHECK(make_quadrature(Domain::seg, 7).weights.sum() == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("quadrature integrates monomials exactly", "[polyquad]") {
  for (int d = 0; d <= 14; d += 2) {
    const auto seg = make_quadrature(Domain::seg, d);
    for (int a = 0; a <= d; a++)
      CHECK(integrate_monomial(seg, a, 0, 0) ==
            Catch::Approx(oracle::seg_monomial(a)).epsilon(1e-13));
    const auto tri = make_quadrature(Domain::tri, d);
    for (int a = 0; a <= d; a++)
      for (int b = 0; a + b <= d; b++)
        CHECK(integrate_monomial(tri, a, b, 0) ==
              Catch::Approx(oracle::tri_monomial(a, b)).epsilon(1e-13));
    const auto tet = make_quadrature(Domain::tet, d);
    for (int a = 0; a <= d; a++)
      for (int b = 0; a + b <= d; b++)
        for (int c = 0; a + b + c <= d; c++)
          CHECK(integrate_monomial(tet, a, b, c) ==
                Catch::Approx(oracle::tet_monomial(a, b, c)).epsilon(1e-13));
  }
}

TEST_CASE("quadrature spot values", "[polyquad]") {
  CHECK(integrate_monomial(make_quadrature(Domain::tri, 2), 1, 1, 0) ==
        Catch::Approx(1.0 / 24).epsilon(1e-14));
  CHECK(integrate_monomial(make_quadrature(Domain::seg, 3), 3, 0, 0) ==
        Catch::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("quadrature degree cap enforced", "[polyquad]") {
  CHECK_THROWS_AS(make_quadrature(Domain::tet, quad_degree_max + 1), config_error);
  CHECK_THROWS_AS(make_quadrature(Domain::seg, -1), config_error);
}

TEST_CASE("basis dimensions", "[polyquad]") {
  CHECK(make_basis(Domain::tet, 1).N == 4);
  CHECK(make_basis(Domain::tri, 2).N == 6);
  CHECK(make_basis(Domain::seg, 3).N == 4);
  CHECK(make_basis(Domain::tet, 4).N == 35);
}

TEST_CASE("basis is orthonormal under exact quadrature", "[polyquad]") {
  for (auto dom : {Domain::seg, Domain::tri, Domain::tet})
    for (int k = 0; k <= 4; k++) {
      const auto b = make_basis(dom, k);
      const auto rule = make_quadrature(dom, std::max(2 * k, 1));
      const Eigen::MatrixXd V = b.eval_all(rule.points);
      const Eigen::MatrixXd G = V * rule.weights.asDiagonal() * V.transpose();
      CHECK((G - Eigen::MatrixXd::Identity(b.N, b.N)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("basis gradients match finite differences", "[polyquad]") {
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> unif(0.05, 0.25);
  for (auto dom : {Domain::seg, Domain::tri, Domain::tet}) {
    const auto b = make_basis(dom, 3);
    for (int trial = 0; trial < 10; trial++) {
      Eigen::VectorXd xi(b.dim);
      for (int d = 0; d < b.dim; d++) xi(d) = unif(gen);
      const Eigen::MatrixXd g = b.grad(xi);
      for (int d = 0; d < b.dim; d++) {
        Eigen::VectorXd xp = xi, xm = xi;
        xp(d) += 1e-5;
        xm(d) -= 1e-5;
        const Eigen::VectorXd fd = (b.eval(xp) - b.eval(xm)) / 2e-5;
        CHECK((g.col(d) - fd).cwiseAbs().maxCoeff() < 1e-7);
      }
    }
  }
}

TEST_CASE("mass matrix saturates at exact degree", "[polyquad]") {
  for (int k = 1; k <= 4; k++) {
    const auto b = make_basis(Domain::tet, k);
    auto mass = [&](int deg) {
      const auto rule = make_quadrature(Domain::tet, deg);
      const Eigen::MatrixXd V = b.eval_all(rule.points);
      return Eigen::MatrixXd(V * rule.weights.asDiagonal() * V.transpose());
    };
    CHECK((mass(2 * k) - mass(2 * k + 2)).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("affine image integrals scale by det J", "[polyquad]") {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const auto rule = make_quadrature(Domain::tet, 6);
  for (int trial = 0; trial < 5; trial++) {
    Eigen::Matrix3d J;
    do {
      for (int i = 0; i < 9; i++) J(i / 3, i % 3) = unif(gen);
    } while (std::abs(J.determinant()) < 0.1);
    const Vec3 shift(unif(gen), unif(gen), unif(gen));
    // integrate phi(x) = x0^2 x1 over the image of the reference tet
    double s = 0;
    for (int q = 0; q < rule.npts(); q++) {
      const Vec3 x = J * rule.points.row(q).transpose() + shift;
      s += rule.weights(q) * std::abs(J.determinant()) * x(0) * x(0) * x(1);
    }
    // reference value: expand (J xi + shift) symbolically via quadrature of
    // the same polynomial on a second, higher-degree rule
    const auto check = make_quadrature(Domain::tet, 10);
    double s2 = 0;
    for (int q = 0; q < check.npts(); q++) {
      const Vec3 x = J * check.points.row(q).transpose() + shift;
      s2 += check.weights(q) * std::abs(J.determinant()) * x(0) * x(0) * x(1);
    }
    CHECK(s == Catch::Approx(s2).margin(1e-13 * std::abs(J.determinant())));
  }
}

TEST_CASE("graded rule handles power singularities", "[polyquad]") {
  // exact: int_0^1 s^(-1/3) ds = 3/2
  const double mu = -1.0 / 3.0;
  auto apply = [](const QuadratureRule &r, auto f) {
    double s = 0;
    for (int q = 0; q < r.npts(); q++) s += r.weights(q) * f(r.points(q, 0));
    return s;
  };
  const auto rule = graded_rule_01(8, mu);
  CHECK(apply(rule, [&](double s) { return std::pow(s, mu); }) ==
        Catch::Approx(1.5).epsilon(1e-10));

  // stability under one extra grading level for a non-polynomial smooth factor
  const auto rule13 = graded_rule_01(8, mu, 13);
  auto f = [&](double s) { return std::pow(s, mu) * std::cos(1.7 * s); };
  CHECK(std::abs(apply(rule, f) - apply(rule13, f)) < 1e-8);

  // polynomial integrands are exact too
  CHECK(apply(graded_rule_01(6, -0.45), [](double s) { return s * s; }) ==
        Catch::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("D_k face space dimensions and rank", "[polyquad]") {
  CHECK(make_dk_face_space(1).dim == 3);
  CHECK(make_dk_face_space(2).dim == 8);
  CHECK(make_dk_face_space(3).dim == 15);
  for (int k = 1; k <= 3; k++) {
    const auto s = make_dk_face_space(k);
    const auto rule = make_quadrature(Domain::tri, 2 * k + 2);
    const Eigen::MatrixXd d1 = s.eval_comp(rule.points, 0);
    const Eigen::MatrixXd d2 = s.eval_comp(rule.points, 1);
    const Eigen::MatrixXd G = d1 * rule.weights.asDiagonal() * d1.transpose() +
                              d2 * rule.weights.asDiagonal() * d2.transpose();
    CHECK(Eigen::FullPivLU<Eigen::MatrixXd>(G).rank() == s.dim);
  }
}

TEST_CASE("D_k members have the stated structure", "[polyquad]") {
  // every member of D_k is degree <= k, and x~ P*_{k-1} members satisfy
  // d(x) parallel to x
  const auto s = make_dk_face_space(2);
  const int nlow = 2 * poly_dim(1, 2);
  Eigen::MatrixXd pts(3, 2);
  pts << 0.3, 0.2, 0.7, 0.1, 0.25, 0.6;
  const Eigen::MatrixXd d1 = s.eval_comp(pts, 0);
  const Eigen::MatrixXd d2 = s.eval_comp(pts, 1);
  for (int j = nlow; j < s.dim; j++)
    for (int q = 0; q < 3; q++) {
      // cross product x ^ d(x) = 0 for the homogeneous tail
      const double cross = pts(q, 0) * d2(j, q) - pts(q, 1) * d1(j, q);
      CHECK(std::abs(cross) < 1e-14);
    }
}
