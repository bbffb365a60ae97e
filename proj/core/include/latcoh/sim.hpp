#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "latcoh/densities.hpp"

namespace latcoh {

/// Second-order dynamics on an arbitrary undirected graph (swing-equation
/// form): m x''_k = -sum_j b_kj (x_k - x_j) - dmp x'_k + u_k + w_k, with the
/// controller's averaging layer running over comm_edges.
struct GraphSystem {
  struct Edge {
    int i = 0, j = 0;
    double w = 1.0;
  };

  int n_nodes = 0;
  std::vector<Edge> phys_edges;
  std::vector<Edge> comm_edges;
  double inertia = 1.0;
  double damping = 1.0;
  double c0 = 1.0;
  double epsilon = 0.0;
  Controller controller = Controller::Static;
};

/// Parses an edge-list description: lines "i j weight", with an optional
/// "#comm" marker introducing communication-layer edges (defaults to the
/// physical edges when absent). '#' elsewhere starts a comment.
GraphSystem load_graph_text(const std::string& text);
GraphSystem load_graph_file(const std::string& path);

/// Heterogeneous open-chain vehicle string: per-link directional position and
/// velocity gains drawn uniformly from [gain_low, gain_high], plus absolute
/// velocity feedback g_o at every node.
struct PlatoonSystem {
  int n_vehicles = 0;
  std::vector<double> f_fwd, f_bwd, g_fwd, g_bwd;  // size n_vehicles - 1
  double g_o = 1.0;
  std::uint64_t seed = 0;

  // controller attachment (defaults to plain static feedback)
  Controller controller = Controller::Static;
  double c0 = 1.0;
  double epsilon = 0.0;
  double comm_gain = 1.0;  // uniform averaging weight
  int comm_window = 1;     // q_A: align with vehicles up to this distance
};

PlatoonSystem platoon_system(int n, double gain_low, double gain_high, double g_o,
                             std::uint64_t seed);

/// State matrices plus the metadata the simulator and output maps need.
struct AssembledSystem {
  Eigen::SparseMatrix<double> A;
  Eigen::SparseMatrix<double> B;
  int n_nodes = 0;
  Eigen::Index z_dim = 0;
  Eigen::Index x_offset = 0;
  std::vector<std::pair<int, int>> local_pairs;  // local error: x_i - x_j per pair
  double max_abs_eig = 0.0;
  double time_constant = 0.0;  // 1 / min |Re lambda| over stable eigenvalues
  bool connected = true;
};

AssembledSystem assemble(const SystemSpec& spec);
AssembledSystem assemble(const GraphSystem& g);
AssembledSystem assemble(const PlatoonSystem& p);

enum class InputMode { WhiteNoise, InitialCondition };

struct SimOptions {
  double dt = 0.01;
  double T = 1.0;
  std::uint64_t seed = 0;
  InputMode mode = InputMode::WhiteNoise;
  int record_stride = 1;  // keep every record_stride-th step
};

/// Time-sampled node states. Recorded spacing is dt = record_stride * step dt;
/// identical inputs and seed reproduce the samples bit for bit.
struct Trajectory {
  std::vector<double> times;
  double dt = 0.0;
  std::uint64_t seed = 0;
  int n_nodes = 0;
  Eigen::Index z_dim = 0;
  Eigen::MatrixXd z;  // samples x z_dim
  Eigen::MatrixXd x;  // samples x n_nodes
  Eigen::MatrixXd v;  // samples x n_nodes
  std::vector<std::pair<int, int>> local_pairs;
  double time_constant = 0.0;
};

/// Euler-Maruyama integration of the assembled system, either white-noise
/// driven or decaying from a random initial condition with covariance B B^T.
Trajectory simulate_sde(const AssembledSystem& sys, const SimOptions& opt);
Trajectory simulate_sde(const SystemSpec& spec, const SimOptions& opt);
Trajectory simulate_sde(const GraphSystem& g, const SimOptions& opt);
Trajectory simulate_sde(const PlatoonSystem& p, const SimOptions& opt);

/// Time- and site-averaged squared error after burn_in seconds. Requires the
/// retained window to cover min_time_constants system time constants; relax
/// the latter only for one-sided comparisons on slowly mixing systems.
double empirical_variance(const Trajectory& traj, ErrorOutput output, double burn_in,
                          double min_time_constants = 10.0);

/// Instantaneous per-site output energy sum_k y_k^2 / N at each sample.
std::vector<double> output_energy_series(const Trajectory& traj, ErrorOutput output);

/// Trapezoidal integral of the output energy series (initial-condition runs).
double response_energy(const Trajectory& traj, ErrorOutput output);

/// CSV rows "time,node,z,x,v"; the scalar centralized integral state is
/// replicated per node, static runs write z = 0.
void write_trajectory_csv(const Trajectory& traj, std::ostream& os);

/// Little-endian binary layout: u64 node count, u64 sample count, f64 dt,
/// then sample-major rows of node-major (z, x, v) triples.
void write_trajectory_binary(const Trajectory& traj, std::ostream& os);
Trajectory read_trajectory_binary(std::istream& is);

}  // namespace latcoh
