#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "latcoh/densities.hpp"
#include "latcoh/lattice.hpp"

namespace latcoh::testsupport {

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

/// Test-only reference solver: full Kronecker linearization of
/// A^T P + P A = -Q, independent of the production solve path.
inline Eigen::MatrixXd lyapunov_reference(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < n; ++k) {
        M(j * n + i, j * n + k) += A(k, i);  // I (x) A^T
        M(j * n + i, k * n + i) += A(k, j);  // A^T (x) I
      }
  Eigen::VectorXd q(n * n);
  for (Eigen::Index j = 0; j < n; ++j) q.segment(j * n, n) = -Q.col(j);
  const Eigen::VectorXd p = M.partialPivLu().solve(q);
  Eigen::MatrixXd P(n, n);
  for (Eigen::Index j = 0; j < n; ++j) P.col(j) = p.segment(j * n, n);
  return 0.5 * (P + P.transpose());
}

/// Random Hurwitz matrix: A = -(M M^T + c I) + skew part.
inline Eigen::MatrixXd random_stable_matrix(int n, std::mt19937_64& eng) {
  std::normal_distribution<double> dist;
  Eigen::MatrixXd M(n, n), S(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      M(i, j) = dist(eng);
      S(i, j) = dist(eng);
    }
  return -(M * M.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n)) +
         0.5 * (S - S.transpose());
}

/// Random admissible Relative kernel (axis-decoupled, symmetric, zero-sum).
inline FeedbackArray random_relative_array(int d, int q, std::mt19937_64& eng) {
  std::uniform_real_distribution<double> dist(0.2, 2.0);
  std::vector<double> profile(static_cast<std::size_t>(q));
  for (auto& p : profile) p = dist(eng);

  std::vector<std::vector<int>> offsets;
  std::vector<double> gains;
  double center = 0.0;
  for (int axis = 0; axis < d; ++axis)
    for (int t = 1; t <= q; ++t)
      for (int s : {t, -t}) {
        std::vector<int> k(d, 0);
        k[axis] = s;
        offsets.push_back(k);
        gains.push_back(profile[static_cast<std::size_t>(t - 1)]);
        center -= profile[static_cast<std::size_t>(t - 1)];
      }
  offsets.push_back(std::vector<int>(d, 0));
  gains.push_back(center);
  return make_feedback_array(offsets, gains, KernelKind::Relative);
}

/// Random admissible Absolute kernel: g0 plus an optional relative part
/// (q = 0 gives a pure absolute kernel). The per-distance profile is shared
/// across axes.
inline FeedbackArray random_absolute_array(int d, int q, std::mt19937_64& eng) {
  std::uniform_real_distribution<double> dist(0.2, 2.0);
  const double g0 = dist(eng);
  std::vector<double> profile(static_cast<std::size_t>(q));
  for (auto& p : profile) p = dist(eng);

  std::vector<std::vector<int>> offsets;
  std::vector<double> gains;
  double center = -g0;
  for (int axis = 0; axis < d; ++axis)
    for (int t = 1; t <= q; ++t)
      for (int s : {t, -t}) {
        std::vector<int> k(d, 0);
        k[axis] = s;
        offsets.push_back(k);
        gains.push_back(profile[static_cast<std::size_t>(t - 1)]);
        center -= profile[static_cast<std::size_t>(t - 1)];
      }
  offsets.push_back(std::vector<int>(d, 0));
  gains.push_back(center);
  return make_feedback_array(offsets, gains, KernelKind::Absolute);
}

/// Random admissible Dapi system on a d-dimensional torus. Window sizes are
/// capped so every kernel fits the torus (2q + 1 <= L).
inline SystemSpec random_dapi_spec(int d, int L, Controller controller, double epsilon,
                                   std::mt19937_64& eng) {
  std::uniform_real_distribution<double> cdist(0.3, 3.0);
  const int qmax = L >= 6 ? 2 : 1;
  auto draw_q = [&] { return 1 + static_cast<int>(eng() % static_cast<unsigned>(qmax)); };
  SystemSpec spec{LatticeShape::create(d, L),
                  random_relative_array(d, draw_q(), eng),
                  random_absolute_array(d, std::min(qmax - 1, static_cast<int>(eng() % 2)), eng),
                  controller,
                  random_relative_array(d, draw_q(), eng),
                  cdist(eng),
                  epsilon};
  return spec;
}

}  // namespace latcoh::testsupport
