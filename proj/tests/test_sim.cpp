#include <doctest.h>

#include <cmath>
#include <sstream>

#include "latcoh/sim.hpp"
#include "support.hpp"

using namespace latcoh;
using namespace latcoh::testsupport;

namespace {

SystemSpec ring_spec(int L, Controller c = Controller::Static, double eps = 0.0) {
  SystemSpec spec{LatticeShape::create(1, L), laplacian_array(1), absolute_array(1, 1.0),
                  c,       std::nullopt,      1.0,                eps};
  if (is_dapi(c)) spec.a = laplacian_array(1);
  return spec;
}

}  // namespace

TEST_CASE("zero noise from zero state stays identically zero") {
  SimOptions opt{.dt = 0.05, .T = 5.0, .seed = 1, .mode = InputMode::WhiteNoise};
  auto sys = assemble(ring_spec(6));
  sys.B.setZero();
  const auto traj = simulate_sde(sys, opt);
  CHECK(traj.x.cwiseAbs().maxCoeff() == 0.0);
  CHECK(traj.v.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("identical seeds reproduce trajectories bit for bit") {
  const SimOptions opt{.dt = 0.02, .T = 10.0, .seed = 42, .mode = InputMode::WhiteNoise,
                       .record_stride = 5};
  const auto a = simulate_sde(ring_spec(8), opt);
  const auto b = simulate_sde(ring_spec(8), opt);
  CHECK((a.x - b.x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.v - b.v).cwiseAbs().maxCoeff() == 0.0);

  SimOptions other = opt;
  other.seed = 43;
  const auto c = simulate_sde(ring_spec(8), other);
  CHECK((a.x - c.x).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("recorded spacing is uniform and equals stride * dt") {
  const SimOptions opt{.dt = 0.01, .T = 1.0, .seed = 7, .mode = InputMode::WhiteNoise,
                       .record_stride = 10};
  const auto traj = simulate_sde(ring_spec(4), opt);
  REQUIRE(traj.times.size() == 11);
  CHECK(traj.dt == doctest::Approx(0.1));
  for (std::size_t i = 1; i < traj.times.size(); ++i)
    CHECK(traj.times[i] - traj.times[i - 1] == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("unstable explicit step is rejected with a suggested dt") {
  const SimOptions opt{.dt = 2.0, .T = 10.0, .seed = 1, .mode = InputMode::WhiteNoise};
  try {
    simulate_sde(ring_spec(8), opt);
    FAIL("expected UnstableStep");
  } catch (const UnstableStep& e) {
    CHECK(e.suggested_dt() > 0.0);
    CHECK(e.suggested_dt() < 2.0);
  }
}

TEST_CASE("white-noise ring matches the closed-form variance within 15%") {
  const auto spec = ring_spec(10);
  const double want = 0.4125;  // (N^2-1)/(24N) at N = 10
  const SimOptions base{.dt = 0.02, .T = 4000.0, .seed = 0, .mode = InputMode::WhiteNoise,
                        .record_stride = 5};
  double acc = 0.0;
  for (std::uint64_t seed : {11ull, 12ull}) {
    SimOptions opt = base;
    opt.seed = seed;
    const auto traj = simulate_sde(spec, opt);
    acc += empirical_variance(traj, ErrorOutput::GlobalError, 0.2 * base.T);
  }
  CHECK(rel_err(acc / 2.0, want) < 0.15);
}

TEST_CASE("platoon draws stay inside the gain interval and reproduce") {
  const auto p = platoon_system(100, 0.5, 1.5, 1.0, 77);
  REQUIRE(p.f_fwd.size() == 99);
  for (const auto* v : {&p.f_fwd, &p.f_bwd, &p.g_fwd, &p.g_bwd})
    for (double g : *v) {
      CHECK(g >= 0.5);
      CHECK(g <= 1.5);
    }
  const auto q = platoon_system(100, 0.5, 1.5, 1.0, 77);
  CHECK(p.f_fwd == q.f_fwd);
  CHECK(p.g_bwd == q.g_bwd);

  const auto homog = platoon_system(5, 1.0, 1.0, 0.5, 3);
  for (double g : homog.f_fwd) CHECK(g == doctest::Approx(1.0));

  CHECK_THROWS_AS(platoon_system(1, 0.5, 1.5, 1.0, 0), Error);
  CHECK_THROWS_AS(platoon_system(10, 0.0, 1.5, 1.0, 0), Error);
}

TEST_CASE("graph parsing: path graph, comm section, dedupe, errors") {
  const auto g = load_graph_text("0 1 1.0\n1 2 1.0\n");
  CHECK(g.n_nodes == 3);
  CHECK(g.phys_edges.size() == 2);
  CHECK(g.comm_edges.size() == 2);  // defaults to phys

  const auto g2 = load_graph_text("0 1 1.0\n1 0 1.0\n");
  CHECK(g2.phys_edges.size() == 1);  // both directions of one undirected edge

  const auto g3 = load_graph_text("# physical\n0 1 2.5\n#comm\n0 1 0.5\n");
  REQUIRE(g3.comm_edges.size() == 1);
  CHECK(g3.comm_edges[0].w == doctest::Approx(0.5));
  CHECK(g3.phys_edges[0].w == doctest::Approx(2.5));

  CHECK_THROWS_AS(load_graph_text("0 1\n"), ParseError);
  CHECK_THROWS_AS(load_graph_text("0 0 1.0\n"), ParseError);
  CHECK_THROWS_AS(load_graph_text("0 1 -1.0\n"), NegativeWeight);
  CHECK_THROWS_AS(load_graph_text("0 1 1.0\n1 0 2.0\n"), ParseError);
  try {
    load_graph_text("0 1 1.0\nbogus\n");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("disconnected physical graphs are flagged") {
  const auto g = load_graph_text("0 1 1.0\n2 3 1.0\n");
  const auto sys = assemble(g);
  CHECK_FALSE(sys.connected);
  CHECK(assemble(load_graph_text("0 1 1.0\n1 2 1.0\n")).connected);
}

TEST_CASE("translation invariance of both outputs (exact on quantized states)") {
  SimOptions opt{.dt = 0.05, .T = 4.0, .seed = 5, .mode = InputMode::WhiteNoise};
  auto traj = simulate_sde(ring_spec(8), opt);
  // quantize so that adding 1.0 is exact in binary floating point
  for (Eigen::Index s = 0; s < traj.x.rows(); ++s)
    for (Eigen::Index k = 0; k < traj.x.cols(); ++k)
      traj.x(s, k) = std::round(traj.x(s, k) * 1048576.0) / 1048576.0;
  traj.time_constant = 0.0;  // lift the equilibration gate for this identity check

  const double g0 = empirical_variance(traj, ErrorOutput::GlobalError, 0.0);
  const double l0 = empirical_variance(traj, ErrorOutput::LocalError, 0.0);
  auto shifted = traj;
  shifted.x.array() += 1.0;
  CHECK(empirical_variance(shifted, ErrorOutput::GlobalError, 0.0) == g0);
  CHECK(empirical_variance(shifted, ErrorOutput::LocalError, 0.0) == l0);
}

TEST_CASE("zero-noise energy decays after burn-in") {
  SimOptions opt{.dt = 0.01, .T = 40.0, .seed = 9, .mode = InputMode::InitialCondition};
  const auto traj = simulate_sde(ring_spec(8), opt);
  double prev = std::numeric_limits<double>::infinity();
  bool decreasing = true;
  // sampled check on the lattice-frame energy sum (x - mean)^2 + v^2
  for (Eigen::Index s = traj.x.rows() / 2; s < traj.x.rows(); s += 100) {
    const double mean = traj.x.row(s).mean();
    double e = 0.0;
    for (Eigen::Index k = 0; k < traj.x.cols(); ++k) {
      const double xd = traj.x(s, k) - mean;
      e += xd * xd + traj.v(s, k) * traj.v(s, k);
    }
    if (e > prev * (1.0 + 1e-9)) decreasing = false;
    prev = e;
  }
  CHECK(decreasing);
}

TEST_CASE("empirical variance needs enough time constants unless relaxed") {
  SimOptions opt{.dt = 0.02, .T = 10.0, .seed = 3, .mode = InputMode::WhiteNoise};
  const auto traj = simulate_sde(ring_spec(10), opt);  // tau = 2 s, T = 5 tau
  CHECK_THROWS_AS(empirical_variance(traj, ErrorOutput::GlobalError, 2.0), InsufficientSamples);
  CHECK_NOTHROW(empirical_variance(traj, ErrorOutput::GlobalError, 2.0, 3.0));
}

TEST_CASE("doubling the run length shrinks the estimator spread across seeds") {
  const auto spec = ring_spec(6);
  auto spread = [&](double T) {
    std::vector<double> vals;
    for (std::uint64_t s = 0; s < 8; ++s) {
      SimOptions opt{.dt = 0.02, .T = T, .seed = 100 + s, .mode = InputMode::WhiteNoise,
                     .record_stride = 5};
      vals.push_back(
          empirical_variance(simulate_sde(spec, opt), ErrorOutput::GlobalError, 0.2 * T, 5.0));
    }
    double m = 0.0, v = 0.0;
    for (double x : vals) m += x;
    m /= static_cast<double>(vals.size());
    for (double x : vals) v += (x - m) * (x - m);
    return std::sqrt(v / static_cast<double>(vals.size())) / m;
  };
  CHECK(spread(1600.0) < spread(100.0));
}

TEST_CASE("trajectory binary round-trip preserves states, dt and node count") {
  SimOptions opt{.dt = 0.05, .T = 2.0, .seed = 21, .mode = InputMode::WhiteNoise};
  const auto traj = simulate_sde(ring_spec(4, Controller::DapiNoisy, 0.1), opt);
  std::stringstream buf;
  write_trajectory_binary(traj, buf);
  const auto back = read_trajectory_binary(buf);
  CHECK(back.n_nodes == traj.n_nodes);
  CHECK(back.dt == traj.dt);
  REQUIRE(back.x.rows() == traj.x.rows());
  CHECK((back.x - traj.x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.v - traj.v).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.z - traj.z).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("trajectory csv carries the documented header") {
  SimOptions opt{.dt = 0.5, .T = 1.0, .seed = 2, .mode = InputMode::WhiteNoise};
  const auto traj = simulate_sde(ring_spec(4), opt);
  std::stringstream buf;
  write_trajectory_csv(traj, buf);
  std::string line;
  std::getline(buf, line);
  CHECK(line == "time,node,z,x,v");
}

TEST_CASE("initial-condition mode draws psi0 = B xi and decays deterministically") {
  SimOptions opt{.dt = 0.01, .T = 5.0, .seed = 31, .mode = InputMode::InitialCondition};
  const auto t1 = simulate_sde(ring_spec(6), opt);
  const auto t2 = simulate_sde(ring_spec(6), opt);
  CHECK((t1.x - t2.x).cwiseAbs().maxCoeff() == 0.0);
  CHECK(t1.x.row(0).cwiseAbs().maxCoeff() == 0.0);  // B only feeds the v block
  CHECK(t1.v.row(0).cwiseAbs().maxCoeff() > 0.0);
  CHECK(response_energy(t1, ErrorOutput::GlobalError) > 0.0);
}
