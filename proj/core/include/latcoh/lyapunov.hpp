#pragma once

#include <Eigen/Dense>

namespace latcoh {

/// Solves A^T P + P A = -Q for symmetric PSD Q; returns the symmetric P.
///
/// Small systems (n <= 32) go through the linearized n^2 x n^2 solve; larger
/// ones through real-Schur reduction with quasi-triangular back-substitution
/// and one iterative-refinement pass. Throws SingularLyapunov when an
/// eigenvalue pair of A sums to (numerical) zero.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q);

/// Frobenius norm of A^T P + P A + Q, for residual checks.
double lyapunov_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P,
                         const Eigen::MatrixXd& Q);

}  // namespace latcoh
