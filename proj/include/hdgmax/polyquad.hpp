#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <vector>

#include "core.hpp"

namespace hdgmax {

static constexpr int quad_degree_max = 20;

struct QuadratureRule {
  Domain domain;
  int degree = 0;
  Eigen::MatrixXd points;  // npts x dim, reference coordinates
  Eigen::VectorXd weights;

  int npts() const { return static_cast<int>(weights.size()); }
};

namespace detail {

inline double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; i++) r *= x;
  return r;
}

// Golub-Welsch nodes/weights for the Jacobi weight (1-x)^a (1+x)^b on [-1,1]
inline void gauss_jacobi_m11(int n, double a, double b, Eigen::VectorXd &x,
                             Eigen::VectorXd &w) {
  assert(n >= 1 && a > -1.0 && b > -1.0);
  const double apb = a + b;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  J(0, 0) = (b - a) / (apb + 2.0);
  for (int i = 1; i < n; i++) {
    const double d = 2.0 * i + apb;
    J(i, i) = (b * b - a * a) / (d * (d + 2.0));
  }
  if (n > 1) {
    double s = std::sqrt(4.0 * (1.0 + a) * (1.0 + b) /
                         ((2.0 + apb) * (2.0 + apb) * (3.0 + apb)));
    J(0, 1) = J(1, 0) = s;
    for (int i = 2; i < n; i++) {
      const double d = 2.0 * i + apb;
      s = std::sqrt(4.0 * i * (i + a) * (i + b) * (i + apb) /
                    (d * d * (d + 1.0) * (d - 1.0)));
      J(i - 1, i) = J(i, i - 1) = s;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  x = es.eigenvalues();
  const double mu0 = std::exp(std::lgamma(a + 1.0) + std::lgamma(b + 1.0) -
                              std::lgamma(apb + 2.0)) *
                     std::pow(2.0, apb + 1.0);
  w.resize(n);
  for (int i = 0; i < n; i++)
    w(i) = mu0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
}

// n-point rule on [0,1] for the weight (1-x)^a x^b; exact for integrands in P_{2n-1}
inline void gauss_jacobi_01(int n, double a, double b, Eigen::VectorXd &x,
                            Eigen::VectorXd &w) {
  gauss_jacobi_m11(n, a, b, x, w);
  const double scale = std::pow(2.0, -(a + b + 1.0));
  for (int i = 0; i < n; i++) {
    x(i) = 0.5 * (x(i) + 1.0);
    w(i) *= scale;
  }
}

inline int gauss_npts(int degree) { return degree / 2 + 1; }

} // namespace detail

// Rule of prescribed polynomial exactness on a reference simplex.
// Triangle and tetrahedron rules are collapsed tensor products with Jacobi
// weights absorbing the Duffy Jacobian, so exactness holds for any degree.
inline QuadratureRule make_quadrature(Domain dom, int degree) {
  if (degree < 0 || degree > quad_degree_max)
    throw config_error("quadrature degree out of range: " + std::to_string(degree));
  const int n = detail::gauss_npts(degree);
  QuadratureRule rule;
  rule.domain = dom;
  rule.degree = degree;
  if (dom == Domain::seg) {
    Eigen::VectorXd x, w;
    detail::gauss_jacobi_01(n, 0.0, 0.0, x, w);
    rule.points = x;
    rule.weights = w;
    return rule;
  }
  if (dom == Domain::tri) {
    Eigen::VectorXd x1, w1, x2, w2;
    detail::gauss_jacobi_01(n, 0.0, 0.0, x1, w1);
    detail::gauss_jacobi_01(n, 1.0, 0.0, x2, w2);
    rule.points.resize(n * n, 2);
    rule.weights.resize(n * n);
    int q = 0;
    for (int i = 0; i < n; i++)
      for (int j = 0; j < n; j++, q++) {
        rule.points(q, 0) = x1(j) * (1.0 - x2(i));
        rule.points(q, 1) = x2(i);
        rule.weights(q) = w1(j) * w2(i);
      }
    return rule;
  }
  Eigen::VectorXd x1, w1, x2, w2, x3, w3;
  detail::gauss_jacobi_01(n, 0.0, 0.0, x1, w1);
  detail::gauss_jacobi_01(n, 1.0, 0.0, x2, w2);
  detail::gauss_jacobi_01(n, 2.0, 0.0, x3, w3);
  rule.points.resize(n * n * n, 3);
  rule.weights.resize(n * n * n);
  int q = 0;
  for (int i = 0; i < n; i++)
    for (int j = 0; j < n; j++)
      for (int l = 0; l < n; l++, q++) {
        rule.points(q, 0) = x1(l) * (1.0 - x2(j)) * (1.0 - x3(i));
        rule.points(q, 1) = x2(j) * (1.0 - x3(i));
        rule.points(q, 2) = x3(i);
        rule.weights(q) = w1(l) * w2(j) * w3(i);
      }
  return rule;
}

// Composite rule on [0,1] for integrands behaving like s^mu * (analytic) near
// s=0, mu > -1.  Geometric panels of the given ratio cover [ratio^levels, 1];
// the closing panel [0, ratio^levels] is a Gauss-Jacobi rule absorbing the
// power exactly, with weights carrying node^-mu so the rule applies to the raw
// integrand.
inline QuadratureRule graded_rule_01(int degree, double mu, int levels = 12,
                                     double ratio = 0.5) {
  assert(mu > -1.0 && levels >= 1 && ratio > 0.0 && ratio < 1.0);
  // two points beyond polynomial exactness: the panels see the analytic but
  // non-polynomial tail of the power factor
  const int n = detail::gauss_npts(degree) + 2;
  Eigen::VectorXd xg, wg, xj, wj;
  detail::gauss_jacobi_01(n, 0.0, 0.0, xg, wg);
  detail::gauss_jacobi_01(n, 0.0, mu, xj, wj);
  QuadratureRule rule;
  rule.domain = Domain::seg;
  rule.degree = degree;
  rule.points.resize((levels + 1) * n, 1);
  rule.weights.resize((levels + 1) * n);
  int q = 0;
  double hi = 1.0;
  for (int lev = 0; lev < levels; lev++) {
    const double lo = hi * ratio;
    for (int i = 0; i < n; i++, q++) {
      rule.points(q, 0) = lo + (hi - lo) * xg(i);
      rule.weights(q) = (hi - lo) * wg(i);
    }
    hi = lo;
  }
  const double eps = hi;
  for (int i = 0; i < n; i++, q++) {
    rule.points(q, 0) = eps * xj(i);
    rule.weights(q) = eps * wj(i) * std::pow(xj(i), -mu);
  }
  return rule;
}

namespace detail {

// graded-lex monomial exponents for P_k in `dim` variables
inline Eigen::MatrixXi monomial_exponents(int k, int dim) {
  Eigen::MatrixXi e(poly_dim(k, dim), dim);
  int row = 0;
  if (dim == 1) {
    for (int d = 0; d <= k; d++) e(row++, 0) = d;
  } else if (dim == 2) {
    for (int d = 0; d <= k; d++)
      for (int a = d; a >= 0; a--) {
        e(row, 0) = a;
        e(row, 1) = d - a;
        row++;
      }
  } else {
    for (int d = 0; d <= k; d++)
      for (int a = d; a >= 0; a--)
        for (int b = d - a; b >= 0; b--) {
          e(row, 0) = a;
          e(row, 1) = b;
          e(row, 2) = d - a - b;
          row++;
        }
  }
  assert(row == e.rows());
  return e;
}

inline Eigen::MatrixXd monomial_values(const Eigen::MatrixXi &expo,
                                       const Eigen::MatrixXd &pts) {
  const int N = static_cast<int>(expo.rows());
  const int dim = static_cast<int>(expo.cols());
  const int Q = static_cast<int>(pts.rows());
  Eigen::MatrixXd V(N, Q);
  for (int q = 0; q < Q; q++)
    for (int i = 0; i < N; i++) {
      double v = 1.0;
      for (int d = 0; d < dim; d++) v *= ipow(pts(q, d), expo(i, d));
      V(i, q) = v;
    }
  return V;
}

inline Eigen::MatrixXd monomial_derivs(const Eigen::MatrixXi &expo,
                                       const Eigen::MatrixXd &pts, int dir) {
  const int N = static_cast<int>(expo.rows());
  const int dim = static_cast<int>(expo.cols());
  const int Q = static_cast<int>(pts.rows());
  Eigen::MatrixXd V(N, Q);
  for (int q = 0; q < Q; q++)
    for (int i = 0; i < N; i++) {
      const int e = expo(i, dir);
      if (e == 0) {
        V(i, q) = 0.0;
        continue;
      }
      double v = e;
      for (int d = 0; d < dim; d++)
        v *= ipow(pts(q, d), d == dir ? expo(i, d) - 1 : expo(i, d));
      V(i, q) = v;
    }
  return V;
}

} // namespace detail

// Orthonormal basis of P_k on a reference simplex, with analytic gradients.
// Built by Cholesky orthonormalization of the monomial Gram matrix under an
// exact rule; a second pass removes the conditioning loss of the first.
struct BasisSet {
  Domain domain;
  int degree = 0;
  int N = 0;
  int dim = 0;
  Eigen::MatrixXi expo;   // N x dim monomial exponents
  Eigen::MatrixXd coeff;  // N x N, basis_i = sum_j coeff(i,j) mono_j

  Eigen::MatrixXd eval_all(const Eigen::MatrixXd &pts) const {
    return coeff * detail::monomial_values(expo, pts);
  }

  // gradient component `dir` of every basis function at every point
  Eigen::MatrixXd grad_all(const Eigen::MatrixXd &pts, int dir) const {
    return coeff * detail::monomial_derivs(expo, pts, dir);
  }

  Eigen::VectorXd eval(const Eigen::VectorXd &xi) const {
    Eigen::MatrixXd p(1, dim);
    p.row(0) = xi.transpose();
    return eval_all(p).col(0);
  }

  Eigen::MatrixXd grad(const Eigen::VectorXd &xi) const {
    Eigen::MatrixXd p(1, dim);
    p.row(0) = xi.transpose();
    Eigen::MatrixXd g(N, dim);
    for (int d = 0; d < dim; d++) g.col(d) = grad_all(p, d).col(0);
    return g;
  }
};

inline BasisSet make_basis(Domain dom, int k) {
  assert(k >= 0);
  BasisSet b;
  b.domain = dom;
  b.degree = k;
  b.dim = domain_dim(dom);
  b.N = poly_dim(k, b.dim);
  b.expo = detail::monomial_exponents(k, b.dim);
  const QuadratureRule rule = make_quadrature(dom, std::max(2 * k, 1));
  const Eigen::MatrixXd M = detail::monomial_values(b.expo, rule.points);
  b.coeff = Eigen::MatrixXd::Identity(b.N, b.N);
  for (int pass = 0; pass < 2; pass++) {
    const Eigen::MatrixXd V = b.coeff * M;
    const Eigen::MatrixXd G = V * rule.weights.asDiagonal() * V.transpose();
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("monomial Gram matrix not SPD");
    b.coeff = llt.matrixL().solve(b.coeff);
  }
  return b;
}

// Moment space D_k(F) = [P_{k-1}(F)]^2 (+) x~ P*_{k-1}(F) in face-local 2D
// coordinates; dimension k(k+2).  The space is origin-independent, so the
// face parametrization origin serves as x~ = 0.
struct DkFaceSpace {
  int k = 0;
  int dim = 0;
  Eigen::MatrixXi expo;  // 2D monomials of degree <= k
  Eigen::MatrixXd c1, c2;  // dim x nmono, component coefficients

  // component `comp` (0 or 1) of every member at every 2D point
  Eigen::MatrixXd eval_comp(const Eigen::MatrixXd &pts, int comp) const {
    const Eigen::MatrixXd M = detail::monomial_values(expo, pts);
    return (comp == 0 ? c1 : c2) * M;
  }
};

inline DkFaceSpace make_dk_face_space(int k) {
  assert(k >= 1);
  DkFaceSpace s;
  s.k = k;
  s.dim = k * (k + 2);
  s.expo = detail::monomial_exponents(k, 2);
  const int nm = static_cast<int>(s.expo.rows());
  const int nlow = poly_dim(k - 1, 2);
  s.c1 = Eigen::MatrixXd::Zero(s.dim, nm);
  s.c2 = Eigen::MatrixXd::Zero(s.dim, nm);
  auto mono_index = [&](int a, int bb) {
    for (int i = 0; i < nm; i++)
      if (s.expo(i, 0) == a && s.expo(i, 1) == bb) return i;
    assert(false);
    return -1;
  };
  int row = 0;
  for (int i = 0; i < nlow; i++) s.c1(row++, i) = 1.0;
  for (int i = 0; i < nlow; i++) s.c2(row++, i) = 1.0;
  // x~ m for each homogeneous monomial m of degree k-1
  for (int a = k - 1; a >= 0; a--) {
    s.c1(row, mono_index(a + 1, k - 1 - a)) = 1.0;
    s.c2(row, mono_index(a, k - a)) = 1.0;
    row++;
  }
  assert(row == s.dim);
  return s;
}

} // namespace hdgmax
