#include "latcoh/lyapunov.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <vector>

#include "latcoh/errors.hpp"

namespace latcoh {

namespace {

constexpr int kKroneckerCutoff = 32;

void check_square(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  if (A.rows() != A.cols() || Q.rows() != Q.cols() || A.rows() != Q.rows())
    throw DimensionMismatch("solve_lyapunov: A and Q must be square and equally sized");
}

// vec(A^T P + P A) = (I (x) A^T + A^T (x) I) vec(P)
Eigen::MatrixXd solve_kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  const Eigen::Index n = A.rows();
  const Eigen::Index n2 = n * n;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n2, n2);
  const Eigen::MatrixXd At = A.transpose();
  for (Eigen::Index j = 0; j < n; ++j)
    M.block(j * n, j * n, n, n) += At;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < n; ++k)
        M(j * n + k, i * n + k) += At(j, i);

  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible())
    throw SingularLyapunov("linearized Lyapunov system is numerically singular");
  Eigen::VectorXd q(n2);
  for (Eigen::Index j = 0; j < n; ++j) q.segment(j * n, n) = -Q.col(j);
  const Eigen::VectorXd p = lu.solve(q);
  Eigen::MatrixXd P(n, n);
  for (Eigen::Index j = 0; j < n; ++j) P.col(j) = p.segment(j * n, n);
  return 0.5 * (P + P.transpose());
}

// Solves the tiny Sylvester block X: S_ii^T X + X S_jj = R, sizes <= 2x2.
Eigen::MatrixXd solve_small_sylvester(const Eigen::MatrixXd& Sii, const Eigen::MatrixXd& Sjj,
                                      const Eigen::MatrixXd& R) {
  const Eigen::Index p = Sii.rows(), r = Sjj.rows();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(p * r, p * r);
  // vec(S_ii^T X) = (I_r (x) S_ii^T) vec(X); vec(X S_jj) = (S_jj^T (x) I_p) vec(X)
  for (Eigen::Index j = 0; j < r; ++j) M.block(j * p, j * p, p, p) += Sii.transpose();
  for (Eigen::Index j = 0; j < r; ++j)
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index k = 0; k < p; ++k) M(j * p + k, i * p + k) += Sjj(i, j);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible())
    throw SingularLyapunov("Schur block pair is singular (eigenvalue pair sums to zero)");
  Eigen::VectorXd rhs(p * r);
  for (Eigen::Index j = 0; j < r; ++j) rhs.segment(j * p, p) = R.col(j);
  const Eigen::VectorXd x = lu.solve(rhs);
  Eigen::MatrixXd X(p, r);
  for (Eigen::Index j = 0; j < r; ++j) X.col(j) = x.segment(j * p, p);
  return X;
}

// Back-substitution for T^T Y + Y T = -Qt with T quasi-upper-triangular.
// Processes Schur block columns left to right; block rows top to bottom
// within each column, filling the lower triangle by symmetry.
Eigen::MatrixXd solve_quasi_triangular(const Eigen::MatrixXd& T, const Eigen::MatrixXd& Qt,
                                       const std::vector<Eigen::Index>& starts) {
  const Eigen::Index n = T.rows();
  const std::size_t nb = starts.size() - 1;
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(n, n);

  for (std::size_t jb = 0; jb < nb; ++jb) {
    const Eigen::Index j0 = starts[jb], js = starts[jb + 1] - j0;
    for (std::size_t ib = 0; ib <= jb; ++ib) {
      const Eigen::Index i0 = starts[ib], is = starts[ib + 1] - i0;
      // R = -Qt_ij - sum_{k<i0} T_ki^T Y_kj - sum_{k<j0} Y_ik T_kj
      Eigen::MatrixXd R = -Qt.block(i0, j0, is, js);
      if (i0 > 0)
        R.noalias() -= T.block(0, i0, i0, is).transpose() * Y.block(0, j0, i0, js);
      if (j0 > 0)
        R.noalias() -= Y.block(i0, 0, is, j0) * T.block(0, j0, j0, js);
      const Eigen::MatrixXd X =
          solve_small_sylvester(T.block(i0, i0, is, is), T.block(j0, j0, js, js), R);
      Y.block(i0, j0, is, js) = X;
      if (ib != jb) Y.block(j0, i0, js, is) = X.transpose();
    }
  }
  return Y;
}

struct SchurFactors {
  Eigen::MatrixXd U, T;
  std::vector<Eigen::Index> starts;  // block boundaries of the quasi-triangular T
};

SchurFactors factor(const Eigen::MatrixXd& A) {
  Eigen::RealSchur<Eigen::MatrixXd> schur(A);
  if (schur.info() != Eigen::Success)
    throw SingularLyapunov("real Schur factorization failed to converge");
  SchurFactors f{schur.matrixU(), schur.matrixT(), {}};

  const Eigen::Index n = A.rows();
  f.starts.push_back(0);
  Eigen::Index i = 0;
  while (i < n) {
    const bool two = (i + 1 < n) && f.T(i + 1, i) != 0.0;  // Eigen zeroes the subdiagonal exactly
    i += two ? 2 : 1;
    f.starts.push_back(i);
  }

  // eigenvalue pair sums must stay away from zero for a unique solution
  std::vector<std::complex<double>> eigs;
  for (std::size_t b = 0; b + 1 < f.starts.size(); ++b) {
    const Eigen::Index i0 = f.starts[b], sz = f.starts[b + 1] - i0;
    if (sz == 1) {
      eigs.emplace_back(f.T(i0, i0), 0.0);
    } else {
      const double re = 0.5 * (f.T(i0, i0) + f.T(i0 + 1, i0 + 1));
      const double det = f.T(i0, i0) * f.T(i0 + 1, i0 + 1) - f.T(i0, i0 + 1) * f.T(i0 + 1, i0);
      const double disc = re * re - det;
      if (disc < 0.0) {
        eigs.emplace_back(re, std::sqrt(-disc));
        eigs.emplace_back(re, -std::sqrt(-disc));
      } else {
        eigs.emplace_back(re + std::sqrt(disc), 0.0);
        eigs.emplace_back(re - std::sqrt(disc), 0.0);
      }
    }
  }
  double eig_scale = 0.0;
  for (const auto& e : eigs) eig_scale = std::max(eig_scale, std::abs(e));
  for (std::size_t a = 0; a < eigs.size(); ++a)
    for (std::size_t b = a; b < eigs.size(); ++b)
      if (std::abs(eigs[a] + std::conj(eigs[b])) < 1e-12 * std::max(1.0, eig_scale))
        throw SingularLyapunov("eigenvalue pair of A sums to zero on the solve subspace");
  return f;
}

Eigen::MatrixXd solve_schur(const SchurFactors& f, const Eigen::MatrixXd& Q) {
  const Eigen::MatrixXd Qt = f.U.transpose() * Q * f.U;
  const Eigen::MatrixXd Y = solve_quasi_triangular(f.T, Qt, f.starts);
  Eigen::MatrixXd P = f.U * Y * f.U.transpose();
  return 0.5 * (P + P.transpose());
}

}  // namespace

double lyapunov_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P,
                         const Eigen::MatrixXd& Q) {
  return (A.transpose() * P + P * A + Q).norm();
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  check_square(A, Q);
  if (A.rows() <= kKroneckerCutoff) return solve_kron(A, Q);

  const SchurFactors f = factor(A);
  Eigen::MatrixXd P = solve_schur(f, Q);
  // one refinement pass: A^T dP + dP A = -R with R the current defect
  const Eigen::MatrixXd R = A.transpose() * P + P * A + Q;
  P += solve_schur(f, R);
  return 0.5 * (P + P.transpose());
}

}  // namespace latcoh
