#include <doctest.h>

#include <numbers>
#include <random>

#include "latcoh/oracle.hpp"
#include "support.hpp"

using namespace latcoh;
using namespace latcoh::testsupport;

namespace {

constexpr double kPi = std::numbers::pi;

SystemSpec unit_spec(int d, int L, Controller c, double eps = 0.0) {
  SystemSpec spec{LatticeShape::create(d, L), laplacian_array(d), absolute_array(d, 1.0),
                  c,       std::nullopt,      1.0,                eps};
  if (is_dapi(c)) spec.a = laplacian_array(d);
  return spec;
}

double theta_sum_h2(const SystemSpec& spec, ErrorOutput out) {
  const ThetaGrid grid = dft_grid(spec.shape);
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    acc += per_theta_block_h2(spec, grid.point(i), out);
  return acc / static_cast<double>(spec.shape.site_count());
}

}  // namespace

TEST_CASE("static full system has the expected block template") {
  const auto ss = build_full_system(unit_spec(1, 4, Controller::Static),
                                    ErrorOutput::GlobalError);
  REQUIRE(ss.A.rows() == 8);
  CHECK(ss.A.block(0, 4, 4, 4).isApprox(Eigen::MatrixXd::Identity(4, 4)));
  CHECK(ss.A.block(0, 0, 4, 4).isZero());
  CHECK(ss.A(4, 0) == doctest::Approx(-2.0));  // f circulant diagonal
  CHECK(ss.A(4, 1) == doctest::Approx(1.0));
  CHECK(ss.A(4, 4) == doctest::Approx(-1.0));  // g0 damping
  CHECK(ss.B.rows() == 8);
  CHECK(ss.B.cols() == 4);
}

TEST_CASE("noisy dapi B carries the -c0 eps block in the z rows") {
  auto spec = unit_spec(1, 4, Controller::DapiNoisy, 0.1);
  const auto ss = build_full_system(spec, ErrorOutput::GlobalError);
  REQUIRE(ss.B.rows() == 12);
  REQUIRE(ss.B.cols() == 8);
  CHECK(ss.B.block(0, 4, 4, 4).isApprox(-0.1 * Eigen::MatrixXd::Identity(4, 4)));
  CHECK(ss.B.block(0, 0, 4, 4).isZero());
  CHECK(ss.B.block(8, 0, 4, 4).isApprox(Eigen::MatrixXd::Identity(4, 4)));
}

TEST_CASE("global-error C rows sum to zero (centering projector)") {
  const auto ss = build_full_system(unit_spec(2, 3, Controller::DapiNoisy, 0.05),
                                    ErrorOutput::GlobalError);
  CHECK(ss.C.rowwise().sum().cwiseAbs().maxCoeff() < 1e-14);
  CHECK(ss.C.block(0, 0, ss.C.rows(), 9).isZero());  // z block unobserved
}

TEST_CASE("full-matrix h2 on the unit ring reproduces 5/32") {
  const auto spec = unit_spec(1, 4, Controller::Static);
  const auto ss = build_full_system(spec, ErrorOutput::GlobalError);
  CHECK(rel_err(h2_per_site(ss, spec.shape), 5.0 / 32.0) < 1e-12);
}

TEST_CASE("noisy dapi with epsilon = 0 equals the noiseless variant") {
  const auto a = unit_spec(1, 8, Controller::DapiNoisy, 0.0);
  const auto b = unit_spec(1, 8, Controller::DapiNoiseless, 0.0);
  for (auto out : {ErrorOutput::GlobalError, ErrorOutput::LocalError}) {
    const double va = h2_per_site(build_full_system(a, out), a.shape);
    const double vb = h2_per_site(build_full_system(b, out), b.shape);
    CHECK(rel_err(va, vb) < 1e-12);
  }
}

TEST_CASE("centralized averaging equals static feedback (full matrix, with noise)") {
  for (int L : {4, 8, 12}) {
    const auto spec_c = unit_spec(1, L, Controller::CentralizedAveraging, 0.2);
    const auto spec_s = unit_spec(1, L, Controller::Static);
    for (auto out : {ErrorOutput::GlobalError, ErrorOutput::LocalError}) {
      const double vc = h2_per_site(build_full_system(spec_c, out), spec_c.shape);
      const double vs = h2_per_site(build_full_system(spec_s, out), spec_s.shape);
      CHECK(rel_err(vc, vs) < 1e-8);
    }
  }
}

TEST_CASE("per-theta block h2: static block at pi/2 gives 1/4") {
  const auto spec = unit_spec(1, 4, Controller::Static);
  CHECK(per_theta_block_h2(spec, std::vector<double>{kPi / 2}, ErrorOutput::GlobalError) ==
        doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("per-theta block h2: dapi block at pi matches the density fractions") {
  const auto spec = unit_spec(1, 4, Controller::DapiNoisy, 0.1);
  const double got =
      per_theta_block_h2(spec, std::vector<double>{kPi}, ErrorOutput::GlobalError);
  CHECK(rel_err(got, 3.0 / 29.0 + 0.05 / 928.0) < 1e-10);
}

TEST_CASE("per-theta block h2 is positive on stable blocks and rejects unstable ones") {
  std::mt19937_64 eng(311);
  const auto spec = random_dapi_spec(1, 8, Controller::DapiNoisy, 0.1, eng);
  const ThetaGrid grid = dft_grid(spec.shape);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(per_theta_block_h2(spec, grid.point(i), ErrorOutput::GlobalError) > 0.0);

  auto bad = unit_spec(1, 16, Controller::DapiNoiseless);
  bad.c0 = -1.0;
  const std::vector<double> theta{2.0 * kPi / 16.0};
  CHECK_THROWS_AS(per_theta_block_h2(bad, theta, ErrorOutput::GlobalError), UnstableBlock);
}

TEST_CASE("cross-oracle identity: densities == theta-sum == full matrix") {
  std::mt19937_64 eng(313);
  for (int rep = 0; rep < 6; ++rep) {
    const int d = 1 + static_cast<int>(eng() % 2);
    const int L = d == 1 ? 8 : 4;
    const auto controller = (rep % 3 == 0)   ? Controller::Static
                            : (rep % 3 == 1) ? Controller::DapiNoiseless
                                             : Controller::DapiNoisy;
    const double eps = controller == Controller::DapiNoisy ? 0.05 : 0.0;
    SystemSpec spec = random_dapi_spec(d, L, controller, eps, eng);
    if (controller == Controller::Static) spec.a.reset();
    const auto out = (rep % 2) ? ErrorOutput::LocalError : ErrorOutput::GlobalError;

    const double v_closed = per_site_variance(spec, out).V_N;
    const double v_theta = theta_sum_h2(spec, out);
    const double v_full = h2_per_site(build_full_system(spec, out), spec.shape);
    CHECK(rel_err(v_theta, v_closed) < 1e-8);
    CHECK(rel_err(v_full, v_closed) < 1e-8);
  }
}

TEST_CASE("deflated h2 is invariant under the complement basis choice") {
  const auto spec = unit_spec(1, 6, Controller::DapiNoisy, 0.1);
  const auto ss = build_full_system(spec, ErrorOutput::GlobalError);
  const double v0 = h2_per_site(ss, spec.shape);

  // rotate the default basis by a random orthogonal map of the complement
  std::mt19937_64 eng(317);
  std::normal_distribution<double> dist;
  const auto N = spec.shape.site_count();
  Eigen::MatrixXd R(N - 1, N - 1);
  for (Eigen::Index i = 0; i < N - 1; ++i)
    for (Eigen::Index j = 0; j < N - 1; ++j) R(i, j) = dist(eng);
  const Eigen::MatrixXd Qr = Eigen::HouseholderQR<Eigen::MatrixXd>(R).householderQ();
  const Eigen::MatrixXd basis = ones_complement_basis(N) * Qr;
  CHECK(rel_err(h2_per_site_with_basis(ss, spec.shape, basis), v0) < 1e-10);
}
