#include "latcoh/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "latcoh/errors.hpp"
#include "latcoh/spectral.hpp"

namespace latcoh {

namespace {

constexpr double kHurwitzMargin = 1e-13;

// Output matrix on the x block: centering projector (global) or the stacked
// per-direction nearest-neighbor differences (local).
Eigen::MatrixXd output_on_x(const LatticeShape& shape, ErrorOutput output) {
  const std::int64_t N = shape.site_count();
  if (output == ErrorOutput::GlobalError) {
    Eigen::MatrixXd Pi = Eigen::MatrixXd::Identity(N, N);
    Pi.array() -= 1.0 / static_cast<double>(N);
    return Pi;
  }
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(shape.d) * N, N);
  Eigen::Index row = 0;
  std::vector<int> nb(shape.d);
  for (std::int64_t k = 0; k < N; ++k) {
    const std::vector<int> kc = shape.site_coords(k);
    for (int dir = 0; dir < shape.d; ++dir) {
      nb = kc;
      nb[dir] -= 1;
      D(row, k) += 1.0;
      D(row, shape.site_index(nb)) -= 1.0;
      ++row;
    }
  }
  return D;
}

}  // namespace

StateSpace build_full_system(const SystemSpec& spec, ErrorOutput output) {
  spec.validate();
  const LatticeShape& shape = spec.shape;
  const std::int64_t N = shape.site_count();
  const Eigen::MatrixXd F = circulant_matrix(spec.f, shape);
  const Eigen::MatrixXd G = circulant_matrix(spec.g, shape);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(N, N);

  StateSpace ss;
  ss.n_sites = N;

  switch (spec.controller) {
    case Controller::Static: {
      ss.z_dim = 0;
      ss.x_offset = 0;
      ss.A = Eigen::MatrixXd::Zero(2 * N, 2 * N);
      ss.A.block(0, N, N, N) = I;
      ss.A.block(N, 0, N, N) = F;
      ss.A.block(N, N, N, N) = G;
      ss.B = Eigen::MatrixXd::Zero(2 * N, N);
      ss.B.block(N, 0, N, N) = I;
      break;
    }
    case Controller::DapiNoiseless:
    case Controller::DapiNoisy: {
      const Eigen::MatrixXd Am = circulant_matrix(*spec.a, shape);
      ss.z_dim = N;
      ss.x_offset = N;
      ss.A = Eigen::MatrixXd::Zero(3 * N, 3 * N);
      ss.A.block(0, 0, N, N) = Am;
      ss.A.block(0, 2 * N, N, N) = -spec.c0 * I;
      ss.A.block(N, 2 * N, N, N) = I;
      ss.A.block(2 * N, 0, N, N) = I;
      ss.A.block(2 * N, N, N, N) = F;
      ss.A.block(2 * N, 2 * N, N, N) = G;
      if (spec.controller == Controller::DapiNoisy) {
        ss.B = Eigen::MatrixXd::Zero(3 * N, 2 * N);
        ss.B.block(0, N, N, N) = -spec.c0 * spec.epsilon * I;
        ss.B.block(2 * N, 0, N, N) = I;
      } else {
        ss.B = Eigen::MatrixXd::Zero(3 * N, N);
        ss.B.block(2 * N, 0, N, N) = I;
      }
      break;
    }
    case Controller::CentralizedAveraging: {
      // shared scalar integrator: z' = -(c0/N) sum_k (v_k + eps eta_k), u_k = z
      ss.z_dim = 1;
      ss.x_offset = 1;
      const Eigen::Index n = 2 * N + 1;
      ss.A = Eigen::MatrixXd::Zero(n, n);
      ss.A.block(0, 1 + N, 1, N).setConstant(-spec.c0 / static_cast<double>(N));
      ss.A.block(1, 1 + N, N, N) = I;
      ss.A.block(1 + N, 0, N, 1).setOnes();
      ss.A.block(1 + N, 1, N, N) = F;
      ss.A.block(1 + N, 1 + N, N, N) = G;
      const bool noisy = spec.epsilon > 0.0;
      ss.B = Eigen::MatrixXd::Zero(n, noisy ? 2 * N : N);
      ss.B.block(1 + N, 0, N, N) = I;
      if (noisy)
        ss.B.block(0, N, 1, N).setConstant(-spec.c0 * spec.epsilon / static_cast<double>(N));
      break;
    }
  }

  const Eigen::MatrixXd Cx = output_on_x(shape, output);
  ss.C = Eigen::MatrixXd::Zero(Cx.rows(), ss.A.rows());
  ss.C.block(0, ss.x_offset, Cx.rows(), N) = Cx;
  return ss;
}

Eigen::MatrixXd ones_complement_basis(std::int64_t N) {
  // Columns 2..N of the Householder reflection that maps e1 to 1/sqrt(N).
  Eigen::VectorXd v = Eigen::VectorXd::Constant(N, 1.0 / std::sqrt(static_cast<double>(N)));
  v(0) -= 1.0;
  const double vtv = v.squaredNorm();
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(N, N) - (2.0 / vtv) * v * v.transpose();
  return H.rightCols(N - 1);
}

double h2_per_site_with_basis(const StateSpace& ss, const LatticeShape& shape,
                              const Eigen::MatrixXd& Qx) {
  const std::int64_t N = shape.site_count();
  if (ss.n_sites != N) throw DimensionMismatch("state space does not match lattice shape");
  if (Qx.rows() != N || Qx.cols() != N - 1)
    throw DimensionMismatch("deflation basis must be N x (N-1)");

  // The lattice-average x-direction is unobservable under both outputs and is
  // uncoupled from every remaining state (relative kernels annihilate it), so
  // restricting to its complement is an exact realization with the marginal
  // integrator removed.
  const Eigen::Index n = ss.A.rows();
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(n, n - 1);
  U.block(0, 0, ss.x_offset, ss.x_offset).setIdentity();
  U.block(ss.x_offset, ss.x_offset, N, N - 1) = Qx;
  const Eigen::Index rest = n - (ss.x_offset + N);
  U.block(ss.x_offset + N, ss.x_offset + N - 1, rest, rest).setIdentity();

  const Eigen::MatrixXd Ad = U.transpose() * ss.A * U;
  const Eigen::MatrixXd Bd = U.transpose() * ss.B;
  const Eigen::MatrixXd Cd = ss.C * U;

  const Eigen::MatrixXd P = solve_lyapunov(Ad, Cd.transpose() * Cd);
  return (Bd.transpose() * P * Bd).trace() / static_cast<double>(N);
}

double h2_per_site(const StateSpace& ss, const LatticeShape& shape) {
  return h2_per_site_with_basis(ss, shape, ones_complement_basis(shape.site_count()));
}

double per_theta_block_h2(const SystemSpec& spec, std::span<const double> theta,
                          ErrorOutput output) {
  spec.validate();
  const double fh = symbol(spec.f, theta);
  const double gh = symbol(spec.g, theta);
  const double lh = local_error_symbol(theta);

  Eigen::MatrixXd A, B, Q;
  if (is_dapi(spec.controller)) {
    const double ah = symbol(*spec.a, theta);
    A.resize(3, 3);
    A << ah, 0.0, -spec.c0,
         0.0, 0.0, 1.0,
         1.0, fh, gh;
    if (spec.controller == Controller::DapiNoisy) {
      B = Eigen::MatrixXd::Zero(3, 2);
      B(0, 1) = -spec.c0 * spec.epsilon;
      B(2, 0) = 1.0;
    } else {
      B = Eigen::MatrixXd::Zero(3, 1);
      B(2, 0) = 1.0;
    }
    Q = Eigen::MatrixXd::Zero(3, 3);
    Q(1, 1) = (output == ErrorOutput::GlobalError) ? 1.0 : lh;
  } else {
    // CentralizedAveraging shares the static frequency blocks; the shared
    // integrator has no theta-indexed block.
    A.resize(2, 2);
    A << 0.0, 1.0, fh, gh;
    B = Eigen::MatrixXd::Zero(2, 1);
    B(1, 0) = 1.0;
    Q = Eigen::MatrixXd::Zero(2, 2);
    Q(0, 0) = (output == ErrorOutput::GlobalError) ? 1.0 : lh;
  }

  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  if (es.eigenvalues().real().maxCoeff() >= -kHurwitzMargin)
    throw UnstableBlock("frequency block is not Hurwitz",
                        std::vector<double>(theta.begin(), theta.end()));

  const Eigen::MatrixXd P = solve_lyapunov(A, Q);
  return (B.transpose() * P * B).trace();
}

}  // namespace latcoh
