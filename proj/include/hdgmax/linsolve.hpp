#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "core.hpp"

namespace hdgmax {

inline Eigen::VectorXd solve_direct(const Eigen::SparseMatrix<double> &A,
                                    const Eigen::VectorXd &b) {
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw solver_error("sparse LU factorization failed: " + lu.lastErrorMessage());
  const Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success) throw solver_error("sparse LU solve failed");
  return x;
}

enum class Preconditioner { jacobi, ilut };

struct GmresOptions {
  double tol = 1e-10;
  int restart = 200;
  int max_iters = 5000;
  Preconditioner precond = Preconditioner::jacobi;
  double ilut_droptol = 1e-4;
  int ilut_fill = 10;
};

struct GmresResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double relres = 1.0;
  bool converged = false;
};

namespace detail {

struct JacobiPrecond {
  Eigen::VectorXd inv_diag;
  explicit JacobiPrecond(const Eigen::SparseMatrix<double> &A)
      : inv_diag(A.rows()) {
    const Eigen::VectorXd d = A.diagonal();
    for (int i = 0; i < A.rows(); i++)
      inv_diag(i) = (d(i) != 0.0) ? 1.0 / d(i) : 1.0;
  }
  Eigen::VectorXd apply(const Eigen::VectorXd &v) const {
    return inv_diag.asDiagonal() * v;
  }
};

struct IlutPrecond {
  Eigen::IncompleteLUT<double> ilut;
  IlutPrecond(const Eigen::SparseMatrix<double> &A, double droptol, int fill) {
    ilut.setDroptol(droptol);
    ilut.setFillfactor(fill);
    ilut.compute(A);
    if (ilut.info() != Eigen::Success)
      throw solver_error("incomplete LU factorization failed");
  }
  Eigen::VectorXd apply(const Eigen::VectorXd &v) const { return ilut.solve(v); }
};

// restarted GMRES, right preconditioned so the recurrence tracks the true
// residual; Givens rotations keep the least squares update incremental
template <typename Precond>
GmresResult gmres_impl(const Eigen::SparseMatrix<double> &A,
                       const Eigen::VectorXd &b, const Precond &M,
                       const GmresOptions &opt) {
  const int n = static_cast<int>(A.rows());
  GmresResult res;
  res.x = Eigen::VectorXd::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.converged = true;
    res.relres = 0.0;
    return res;
  }
  if (opt.max_iters <= 0) return res;

  const int kmax = std::max(1, opt.restart);
  Eigen::MatrixXd V(n, kmax + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(kmax + 1, kmax);
  Eigen::VectorXd cs(kmax), sn(kmax), g(kmax + 1);

  while (res.iterations < opt.max_iters) {
    Eigen::VectorXd r = b - A * res.x;
    const double beta = r.norm();
    res.relres = beta / bnorm;
    if (res.relres <= opt.tol) {
      res.converged = true;
      return res;
    }
    V.col(0) = r / beta;
    g.setZero();
    g(0) = beta;
    int k = 0;
    while (k < kmax && res.iterations < opt.max_iters) {
      Eigen::VectorXd w = A * M.apply(V.col(k));
      // modified Gram-Schmidt
      for (int i = 0; i <= k; i++) {
        H(i, k) = w.dot(V.col(i));
        w -= H(i, k) * V.col(i);
      }
      H(k + 1, k) = w.norm();
      const bool breakdown = (H(k + 1, k) == 0.0);
      if (!breakdown) V.col(k + 1) = w / H(k + 1, k);
      for (int i = 0; i < k; i++) {
        const double t = cs(i) * H(i, k) + sn(i) * H(i + 1, k);
        H(i + 1, k) = -sn(i) * H(i, k) + cs(i) * H(i + 1, k);
        H(i, k) = t;
      }
      const double denom = std::hypot(H(k, k), H(k + 1, k));
      if (denom == 0.0) {
        cs(k) = 1.0;
        sn(k) = 0.0;
      } else {
        cs(k) = H(k, k) / denom;
        sn(k) = H(k + 1, k) / denom;
      }
      H(k, k) = cs(k) * H(k, k) + sn(k) * H(k + 1, k);
      H(k + 1, k) = 0.0;
      g(k + 1) = -sn(k) * g(k);
      g(k) = cs(k) * g(k);
      k++;
      res.iterations++;
      res.relres = std::abs(g(k)) / bnorm;
      if (res.relres <= opt.tol || breakdown) break;
    }
    if (k > 0) {
      const Eigen::VectorXd y =
          H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
      res.x += M.apply(V.leftCols(k) * y);
    }
    if (res.relres <= opt.tol) {
      // recompute against the unprojected operator before declaring victory
      res.relres = (b - A * res.x).norm() / bnorm;
      if (res.relres <= opt.tol) {
        res.converged = true;
        return res;
      }
    }
  }
  res.relres = (b - A * res.x).norm() / bnorm;
  res.converged = res.relres <= opt.tol;
  return res;
}

} // namespace detail

inline GmresResult solve_gmres(const Eigen::SparseMatrix<double> &A,
                               const Eigen::VectorXd &b,
                               const GmresOptions &opt = {}) {
  if (opt.precond == Preconditioner::ilut) {
    const detail::IlutPrecond M(A, opt.ilut_droptol, opt.ilut_fill);
    return detail::gmres_impl(A, b, M, opt);
  }
  const detail::JacobiPrecond M(A);
  return detail::gmres_impl(A, b, M, opt);
}

} // namespace hdgmax
