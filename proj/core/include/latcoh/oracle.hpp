#pragma once

#include <Eigen/Dense>
#include <span>

#include "latcoh/densities.hpp"
#include "latcoh/lyapunov.hpp"

namespace latcoh {

/// Full N-site state-space realization. State ordering by block:
/// [z; x; v] for integral-controlled variants, [x; v] for static.
struct StateSpace {
  Eigen::MatrixXd A;  // n x n
  Eigen::MatrixXd B;  // n x m, m = N or 2N noise channels
  Eigen::MatrixXd C;  // p x n, error output
  std::int64_t n_sites = 0;
  Eigen::Index z_dim = 0;     // 0 (static), N (dapi) or 1 (centralized)
  Eigen::Index x_offset = 0;  // start of the x block
};

/// Assembles the full system matrices from circulant kernel blocks.
StateSpace build_full_system(const SystemSpec& spec, ErrorOutput output);

/// Brute-force per-site H2: deflates the unobservable lattice-average
/// x-direction, solves the full Lyapunov equation, returns tr(B^T P B)/N.
double h2_per_site(const StateSpace& ss, const LatticeShape& shape);

/// Same, but against a caller-supplied orthonormal basis of the complement of
/// the all-ones x-direction (for deflation-invariance checks).
double h2_per_site_with_basis(const StateSpace& ss, const LatticeShape& shape,
                              const Eigen::MatrixXd& x_complement_basis);

/// Numerically independent per-frequency H2 density: builds the 2x2 or 3x3
/// block from scalar symbols and solves the small Lyapunov equation.
double per_theta_block_h2(const SystemSpec& spec, std::span<const double> theta,
                          ErrorOutput output);

/// Householder-derived orthonormal basis of the complement of the all-ones
/// direction in R^N (the default deflation basis).
Eigen::MatrixXd ones_complement_basis(std::int64_t N);

}  // namespace latcoh
