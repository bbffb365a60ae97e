#include "latcoh/sim.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "latcoh/errors.hpp"
#include "latcoh/oracle.hpp"
#include "latcoh/rng.hpp"

namespace latcoh {

namespace {

constexpr double kStableMargin = 1e-9;

using Triplets = std::vector<Eigen::Triplet<double>>;

Eigen::SparseMatrix<double> to_sparse(Eigen::Index rows, Eigen::Index cols, const Triplets& t) {
  Eigen::SparseMatrix<double> m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

void spectral_metadata(AssembledSystem& sys) {
  const Eigen::MatrixXd dense = Eigen::MatrixXd(sys.A);
  Eigen::EigenSolver<Eigen::MatrixXd> es(dense, /*computeEigenvectors=*/false);
  double max_abs = 0.0;
  double min_stable_re = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const auto ev = es.eigenvalues()(i);
    max_abs = std::max(max_abs, std::abs(ev));
    const double re = ev.real();
    if (re < -kStableMargin) min_stable_re = std::min(min_stable_re, -re);
  }
  sys.max_abs_eig = max_abs;
  sys.time_constant = std::isfinite(min_stable_re) && min_stable_re > 0.0
                          ? 1.0 / min_stable_re
                          : std::numeric_limits<double>::infinity();
}

// weighted graph Laplacian triplets into block at (r0, c0)
void add_laplacian(Triplets& t, const std::vector<GraphSystem::Edge>& edges, double scale,
                   Eigen::Index r0, Eigen::Index c0) {
  for (const auto& e : edges) {
    t.emplace_back(r0 + e.i, c0 + e.i, scale * e.w);
    t.emplace_back(r0 + e.j, c0 + e.j, scale * e.w);
    t.emplace_back(r0 + e.i, c0 + e.j, -scale * e.w);
    t.emplace_back(r0 + e.j, c0 + e.i, -scale * e.w);
  }
}

bool is_connected(int n, const std::vector<GraphSystem::Edge>& edges) {
  if (n <= 1) return true;
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : edges) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int w : adj[u])
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
  }
  return count == n;
}

std::vector<std::pair<int, int>> torus_local_pairs(const LatticeShape& shape) {
  const std::int64_t N = shape.site_count();
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(N) * shape.d);
  std::vector<int> nb(shape.d);
  for (std::int64_t k = 0; k < N; ++k) {
    const std::vector<int> kc = shape.site_coords(k);
    for (int dir = 0; dir < shape.d; ++dir) {
      nb = kc;
      nb[dir] -= 1;
      pairs.emplace_back(static_cast<int>(k), static_cast<int>(shape.site_index(nb)));
    }
  }
  return pairs;
}

}  // namespace

GraphSystem load_graph_text(const std::string& text) {
  GraphSystem g;
  bool comm_section = false;
  bool saw_comm_marker = false;
  int max_node = -1;

  auto add_edge = [&](std::vector<GraphSystem::Edge>& list, int i, int j, double w, int line) {
    if (i == j) throw ParseError(line, "self-loop on node " + std::to_string(i));
    if (w < 0.0)
      throw NegativeWeight("line " + std::to_string(line) + ": negative edge weight");
    const int a = std::min(i, j), b = std::max(i, j);
    for (const auto& e : list) {
      if (e.i == a && e.j == b) {
        if (std::abs(e.w - w) > 1e-12 * std::max(1.0, std::abs(e.w)))
          throw ParseError(line, "duplicate edge with inconsistent weight");
        return;  // duplicate direction of an undirected edge
      }
    }
    list.push_back({a, b, w});
    max_node = std::max(max_node, b);
  };

  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      if (line.compare(first, 5, "#comm") == 0) {
        comm_section = true;
        saw_comm_marker = true;
      }
      continue;
    }
    std::istringstream ls(line);
    long long i = 0, j = 0;
    double w = 0.0;
    if (!(ls >> i >> j >> w)) throw ParseError(lineno, "expected 'i j weight'");
    std::string extra;
    if (ls >> extra) throw ParseError(lineno, "trailing tokens after 'i j weight'");
    if (i < 0 || j < 0) throw ParseError(lineno, "node indices must be nonnegative");
    add_edge(comm_section ? g.comm_edges : g.phys_edges, static_cast<int>(i),
             static_cast<int>(j), w, lineno);
  }

  g.n_nodes = max_node + 1;
  if (g.n_nodes == 0) throw ParseError(lineno, "no edges found");
  if (!saw_comm_marker) g.comm_edges = g.phys_edges;
  return g;
}

GraphSystem load_graph_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open graph file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return load_graph_text(ss.str());
}

PlatoonSystem platoon_system(int n, double gain_low, double gain_high, double g_o,
                             std::uint64_t seed) {
  if (n < 2) throw Error("platoon needs at least 2 vehicles");
  if (!(0.0 < gain_low && gain_low <= gain_high))
    throw Error("platoon gains require 0 < gain_low <= gain_high");

  PlatoonSystem p;
  p.n_vehicles = n;
  p.g_o = g_o;
  p.seed = seed;
  const double span = gain_high - gain_low;
  UniformStream u(channel_seed(seed, 0));
  auto draw = [&] { return gain_low + span * u.next(); };
  p.f_fwd.resize(n - 1);
  p.f_bwd.resize(n - 1);
  p.g_fwd.resize(n - 1);
  p.g_bwd.resize(n - 1);
  for (int k = 0; k + 1 < n; ++k) {
    p.f_fwd[k] = draw();
    p.f_bwd[k] = draw();
    p.g_fwd[k] = draw();
    p.g_bwd[k] = draw();
  }
  return p;
}

AssembledSystem assemble(const SystemSpec& spec) {
  spec.validate();
  const StateSpace ss = build_full_system(spec, ErrorOutput::GlobalError);
  AssembledSystem sys;
  sys.n_nodes = static_cast<int>(ss.n_sites);
  sys.z_dim = ss.z_dim;
  sys.x_offset = ss.x_offset;
  sys.A = ss.A.sparseView();
  sys.B = ss.B.sparseView();
  sys.local_pairs = torus_local_pairs(spec.shape);
  spectral_metadata(sys);
  return sys;
}

AssembledSystem assemble(const GraphSystem& g) {
  if (g.n_nodes < 2) throw Error("graph system needs at least 2 nodes");
  if (!(g.inertia > 0.0) || !(g.damping > 0.0))
    throw Error("graph system needs positive inertia and damping");
  const Eigen::Index n = g.n_nodes;
  const double im = 1.0 / g.inertia;

  AssembledSystem sys;
  sys.n_nodes = g.n_nodes;
  sys.connected = is_connected(g.n_nodes, g.phys_edges);
  for (const auto& e : g.phys_edges) sys.local_pairs.emplace_back(e.i, e.j);

  Triplets ta, tb;
  const bool dapi = is_dapi(g.controller);
  const bool central = g.controller == Controller::CentralizedAveraging;
  const Eigen::Index zdim = dapi ? n : (central ? 1 : 0);
  const Eigen::Index xo = zdim;
  const Eigen::Index vo = zdim + n;
  const Eigen::Index nstates = zdim + 2 * n;
  const bool noisy = (dapi || central) && g.epsilon > 0.0;
  const Eigen::Index m = noisy ? 2 * n : n;

  sys.z_dim = zdim;
  sys.x_offset = xo;

  // x' = v
  for (Eigen::Index k = 0; k < n; ++k) ta.emplace_back(xo + k, vo + k, 1.0);
  // v' = (1/m)(-L_b x - dmp v + u + w)
  add_laplacian(ta, g.phys_edges, -im, vo, xo);
  for (Eigen::Index k = 0; k < n; ++k) ta.emplace_back(vo + k, vo + k, -g.damping * im);
  for (Eigen::Index k = 0; k < n; ++k) tb.emplace_back(vo + k, k, im);

  if (dapi) {
    // z' = -L_a z - c0 (v + eps eta), u = z
    add_laplacian(ta, g.comm_edges, -1.0, 0, 0);
    for (Eigen::Index k = 0; k < n; ++k) ta.emplace_back(k, vo + k, -g.c0);
    for (Eigen::Index k = 0; k < n; ++k) ta.emplace_back(vo + k, k, im);
    if (noisy)
      for (Eigen::Index k = 0; k < n; ++k) tb.emplace_back(k, n + k, -g.c0 * g.epsilon);
  } else if (central) {
    // z' = -(c0/n) sum_k (v_k + eps eta_k), u_k = z
    for (Eigen::Index k = 0; k < n; ++k)
      ta.emplace_back(0, vo + k, -g.c0 / static_cast<double>(n));
    for (Eigen::Index k = 0; k < n; ++k) ta.emplace_back(vo + k, 0, im);
    if (noisy)
      for (Eigen::Index k = 0; k < n; ++k)
        tb.emplace_back(0, n + k, -g.c0 * g.epsilon / static_cast<double>(n));
  }

  sys.A = to_sparse(nstates, nstates, ta);
  sys.B = to_sparse(nstates, m, tb);
  spectral_metadata(sys);
  return sys;
}

AssembledSystem assemble(const PlatoonSystem& p) {
  const Eigen::Index n = p.n_vehicles;
  AssembledSystem sys;
  sys.n_nodes = p.n_vehicles;
  for (int k = 1; k < p.n_vehicles; ++k) sys.local_pairs.emplace_back(k, k - 1);

  const bool dapi = is_dapi(p.controller);
  const bool central = p.controller == Controller::CentralizedAveraging;
  const Eigen::Index zdim = dapi ? n : (central ? 1 : 0);
  const Eigen::Index xo = zdim;
  const Eigen::Index vo = zdim + n;
  const bool noisy = (dapi || central) && p.epsilon > 0.0;
  const Eigen::Index m = noisy ? 2 * n : n;

  sys.z_dim = zdim;
  sys.x_offset = xo;

  Triplets ta, tb;
  for (Eigen::Index k = 0; k < n; ++k) ta.emplace_back(xo + k, vo + k, 1.0);
  // directional relative couplings, open chain
  auto couple = [&](Eigen::Index row0, Eigen::Index col0, const std::vector<double>& fwd,
                    const std::vector<double>& bwd) {
    for (Eigen::Index k = 0; k < n; ++k) {
      double diag = 0.0;
      if (k + 1 < n) {
        ta.emplace_back(row0 + k, col0 + k + 1, fwd[k]);
        diag -= fwd[k];
      }
      if (k > 0) {
        ta.emplace_back(row0 + k, col0 + k - 1, bwd[k - 1]);
        diag -= bwd[k - 1];
      }
      ta.emplace_back(row0 + k, col0 + k, diag);
    }
  };
  couple(vo, xo, p.f_fwd, p.f_bwd);
  couple(vo, vo, p.g_fwd, p.g_bwd);
  for (Eigen::Index k = 0; k < n; ++k) ta.emplace_back(vo + k, vo + k, -p.g_o);
  for (Eigen::Index k = 0; k < n; ++k) tb.emplace_back(vo + k, k, 1.0);

  if (dapi) {
    // truncated uniform averaging window of half-width comm_window
    for (Eigen::Index k = 0; k < n; ++k) {
      double diag = 0.0;
      for (Eigen::Index j = std::max<Eigen::Index>(0, k - p.comm_window);
           j <= std::min<Eigen::Index>(n - 1, k + p.comm_window); ++j) {
        if (j == k) continue;
        ta.emplace_back(k, j, p.comm_gain);
        diag -= p.comm_gain;
      }
      ta.emplace_back(k, k, diag);
    }
    for (Eigen::Index k = 0; k < n; ++k) ta.emplace_back(k, vo + k, -p.c0);
    for (Eigen::Index k = 0; k < n; ++k) ta.emplace_back(vo + k, k, 1.0);
    if (noisy)
      for (Eigen::Index k = 0; k < n; ++k) tb.emplace_back(k, n + k, -p.c0 * p.epsilon);
  } else if (central) {
    for (Eigen::Index k = 0; k < n; ++k)
      ta.emplace_back(0, vo + k, -p.c0 / static_cast<double>(n));
    for (Eigen::Index k = 0; k < n; ++k) ta.emplace_back(vo + k, 0, 1.0);
    if (noisy)
      for (Eigen::Index k = 0; k < n; ++k)
        tb.emplace_back(0, n + k, -p.c0 * p.epsilon / static_cast<double>(n));
  }

  sys.A = to_sparse(zdim + 2 * n, zdim + 2 * n, ta);
  sys.B = to_sparse(zdim + 2 * n, m, tb);
  spectral_metadata(sys);
  return sys;
}

Trajectory simulate_sde(const AssembledSystem& sys, const SimOptions& opt) {
  if (!(opt.dt > 0.0) || !(opt.T > 0.0)) throw Error("simulation needs dt > 0 and T > 0");
  if (opt.record_stride < 1) throw Error("record_stride must be >= 1");
  if (opt.dt * sys.max_abs_eig >= 1.0)
    throw UnstableStep("explicit step unstable: dt * max|eig| = " +
                           std::to_string(opt.dt * sys.max_abs_eig) + " >= 1",
                       0.5 / sys.max_abs_eig);

  const Eigen::Index nstates = sys.A.rows();
  const Eigen::Index m = sys.B.cols();
  const int n = sys.n_nodes;
  const auto steps = static_cast<std::int64_t>(std::llround(opt.T / opt.dt));
  const std::int64_t samples = steps / opt.record_stride + 1;

  std::vector<NormalStream> streams;
  streams.reserve(static_cast<std::size_t>(m));
  for (Eigen::Index c = 0; c < m; ++c)
    streams.emplace_back(channel_seed(opt.seed, static_cast<std::uint64_t>(c)));

  Trajectory traj;
  traj.dt = opt.dt * opt.record_stride;
  traj.seed = opt.seed;
  traj.n_nodes = n;
  traj.z_dim = sys.z_dim;
  traj.local_pairs = sys.local_pairs;
  traj.time_constant = sys.time_constant;
  traj.times.reserve(static_cast<std::size_t>(samples));
  traj.z.resize(samples, sys.z_dim);
  traj.x.resize(samples, n);
  traj.v.resize(samples, n);

  Eigen::VectorXd psi = Eigen::VectorXd::Zero(nstates);
  Eigen::VectorXd xi(m);
  if (opt.mode == InputMode::InitialCondition) {
    for (Eigen::Index c = 0; c < m; ++c) xi(c) = streams[static_cast<std::size_t>(c)].next();
    psi = sys.B * xi;
  }

  std::int64_t sample = 0;
  auto record = [&](std::int64_t step) {
    traj.times.push_back(static_cast<double>(step) * opt.dt);
    traj.z.row(sample) = psi.head(sys.z_dim).transpose();
    traj.x.row(sample) = psi.segment(sys.x_offset, n).transpose();
    traj.v.row(sample) = psi.segment(sys.x_offset + n, n).transpose();
    ++sample;
  };
  record(0);

  const double sqrt_dt = std::sqrt(opt.dt);
  Eigen::VectorXd drift(nstates);
  for (std::int64_t s = 1; s <= steps; ++s) {
    drift.noalias() = sys.A * psi;
    psi += opt.dt * drift;
    if (opt.mode == InputMode::WhiteNoise) {
      for (Eigen::Index c = 0; c < m; ++c) xi(c) = streams[static_cast<std::size_t>(c)].next();
      psi += sqrt_dt * (sys.B * xi);
    }
    if (s % opt.record_stride == 0) record(s);
  }
  return traj;
}

Trajectory simulate_sde(const SystemSpec& spec, const SimOptions& opt) {
  return simulate_sde(assemble(spec), opt);
}
Trajectory simulate_sde(const GraphSystem& g, const SimOptions& opt) {
  return simulate_sde(assemble(g), opt);
}
Trajectory simulate_sde(const PlatoonSystem& p, const SimOptions& opt) {
  return simulate_sde(assemble(p), opt);
}

namespace {

double sample_output_energy(const Trajectory& traj, ErrorOutput output, Eigen::Index s) {
  const int n = traj.n_nodes;
  double acc = 0.0;
  if (output == ErrorOutput::GlobalError) {
    const double mean = traj.x.row(s).mean();
    for (int k = 0; k < n; ++k) {
      const double y = traj.x(s, k) - mean;
      acc += y * y;
    }
  } else {
    for (const auto& [i, j] : traj.local_pairs) {
      const double y = traj.x(s, i) - traj.x(s, j);
      acc += y * y;
    }
  }
  return acc / static_cast<double>(n);
}

}  // namespace

double empirical_variance(const Trajectory& traj, ErrorOutput output, double burn_in,
                          double min_time_constants) {
  if (output == ErrorOutput::LocalError && traj.local_pairs.empty())
    throw Error("trajectory carries no neighbor pairs for the local error");
  if (traj.times.empty()) throw InsufficientSamples("empty trajectory");
  const double T_end = traj.times.back();
  if (std::isfinite(traj.time_constant) &&
      T_end - burn_in < min_time_constants * traj.time_constant)
    throw InsufficientSamples(
        "retained window " + std::to_string(T_end - burn_in) + " s covers fewer than " +
        std::to_string(min_time_constants) + " time constants (tau = " +
        std::to_string(traj.time_constant) + " s)");

  double acc = 0.0;
  std::int64_t count = 0;
  for (Eigen::Index s = 0; s < static_cast<Eigen::Index>(traj.times.size()); ++s) {
    if (traj.times[static_cast<std::size_t>(s)] < burn_in) continue;
    acc += sample_output_energy(traj, output, s);
    ++count;
  }
  if (count == 0) throw InsufficientSamples("burn-in removed every sample");
  return acc / static_cast<double>(count);
}

std::vector<double> output_energy_series(const Trajectory& traj, ErrorOutput output) {
  std::vector<double> e(traj.times.size());
  for (Eigen::Index s = 0; s < static_cast<Eigen::Index>(e.size()); ++s)
    e[static_cast<std::size_t>(s)] = sample_output_energy(traj, output, s);
  return e;
}

double response_energy(const Trajectory& traj, ErrorOutput output) {
  const std::vector<double> e = output_energy_series(traj, output);
  double acc = 0.0;
  for (std::size_t i = 1; i < e.size(); ++i) acc += 0.5 * (e[i] + e[i - 1]) * traj.dt;
  return acc;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& os) {
  os << "time,node,z,x,v\n";
  const Eigen::Index samples = traj.x.rows();
  for (Eigen::Index s = 0; s < samples; ++s) {
    for (int k = 0; k < traj.n_nodes; ++k) {
      double zk = 0.0;
      if (traj.z_dim == traj.n_nodes)
        zk = traj.z(s, k);
      else if (traj.z_dim == 1)
        zk = traj.z(s, 0);
      os << traj.times[static_cast<std::size_t>(s)] << ',' << k << ',' << zk << ','
         << traj.x(s, k) << ',' << traj.v(s, k) << '\n';
    }
  }
}

namespace {

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw Error("truncated trajectory stream");
  return value;
}

}  // namespace

void write_trajectory_binary(const Trajectory& traj, std::ostream& os) {
  put<std::uint64_t>(os, static_cast<std::uint64_t>(traj.n_nodes));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(traj.x.rows()));
  put<double>(os, traj.dt);
  for (Eigen::Index s = 0; s < traj.x.rows(); ++s) {
    for (int k = 0; k < traj.n_nodes; ++k) {
      double zk = 0.0;
      if (traj.z_dim == traj.n_nodes)
        zk = traj.z(s, k);
      else if (traj.z_dim == 1)
        zk = traj.z(s, 0);
      put<double>(os, zk);
      put<double>(os, traj.x(s, k));
      put<double>(os, traj.v(s, k));
    }
  }
}

Trajectory read_trajectory_binary(std::istream& is) {
  Trajectory traj;
  const auto nodes = get<std::uint64_t>(is);
  const auto samples = get<std::uint64_t>(is);
  traj.dt = get<double>(is);
  traj.n_nodes = static_cast<int>(nodes);
  traj.z_dim = static_cast<Eigen::Index>(nodes);
  traj.z.resize(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(nodes));
  traj.x.resize(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(nodes));
  traj.v.resize(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(nodes));
  traj.times.resize(samples);
  for (std::uint64_t s = 0; s < samples; ++s) {
    traj.times[s] = static_cast<double>(s) * traj.dt;
    for (std::uint64_t k = 0; k < nodes; ++k) {
      traj.z(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k)) = get<double>(is);
      traj.x(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k)) = get<double>(is);
      traj.v(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k)) = get<double>(is);
    }
  }
  return traj;
}

}  // namespace latcoh
