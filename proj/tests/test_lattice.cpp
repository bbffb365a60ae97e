#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "latcoh/kernel_io.hpp"
#include "latcoh/lattice.hpp"
#include "latcoh/spectral.hpp"
#include "support.hpp"

using namespace latcoh;
using namespace latcoh::testsupport;

TEST_CASE("nearest-neighbor relative kernel validates with q=1, beta=2") {
  const auto a = make_feedback_array({{1}, {-1}, {0}}, {1.0, 1.0, -2.0}, KernelKind::Relative);
  CHECK(a.window() == 1);
  CHECK(a.beta() == doctest::Approx(2.0));
  CHECK(a.row_sum() == 0.0);
}

TEST_CASE("asymmetric gains violate reflection symmetry") {
  CHECK_THROWS_AS(make_feedback_array({{1}, {-1}}, {1.0, 0.5}, KernelKind::Relative),
                  AssumptionViolation);
  try {
    make_feedback_array({{1}, {-1}}, {1.0, 0.5}, KernelKind::Relative);
  } catch (const AssumptionViolation& e) {
    CHECK(e.which() == AssumptionViolation::Which::ReflectionSymmetry);
  }
}

TEST_CASE("pure absolute kernel: g0=1, q=0, beta=1") {
  const auto g = make_feedback_array({{0}}, {-1.0}, KernelKind::Absolute);
  CHECK(g.window() == 0);
  CHECK(g.beta() == doctest::Approx(1.0));
  CHECK(g.absolute_gain() == doctest::Approx(1.0));
}

TEST_CASE("kernel validation rejects bad inputs") {
  CHECK_THROWS_AS(make_feedback_array({{1}, {1}}, {1.0, 1.0}, KernelKind::Relative),
                  DimensionMismatch);  // duplicate offsets
  CHECK_THROWS_AS(make_feedback_array({{1}}, {1.0, 2.0}, KernelKind::Relative),
                  DimensionMismatch);  // length mismatch
  // diagonal offset breaks coordinate decoupling
  CHECK_THROWS_AS(make_feedback_array({{1, 1}, {-1, -1}, {0, 0}}, {1.0, 1.0, -2.0},
                                      KernelKind::Relative),
                  AssumptionViolation);
  // anisotropic axis profiles
  CHECK_THROWS_AS(
      make_feedback_array({{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {0, 0}},
                          {1.0, 1.0, 2.0, 2.0, -6.0}, KernelKind::Relative),
      AssumptionViolation);
  // relative kernel with nonzero sum
  CHECK_THROWS_AS(make_feedback_array({{1}, {-1}, {0}}, {1.0, 1.0, -1.0}, KernelKind::Relative),
                  AssumptionViolation);
  // absolute kernel with nonnegative sum
  CHECK_THROWS_AS(make_feedback_array({{0}}, {1.0}, KernelKind::Absolute), AssumptionViolation);
}

TEST_CASE("zero-sum tolerance accepts user-entered round-off") {
  const double third = 1.0 / 3.0;
  CHECK_NOTHROW(make_feedback_array({{1}, {-1}, {0}}, {third, third, -2.0 * third},
                                    KernelKind::Relative));
}

TEST_CASE("circulant of the ring Laplacian kernel has cyclic rows [-2,1,0,1]") {
  const auto f = laplacian_array(1);
  const auto shape = LatticeShape::create(1, 4);
  const Eigen::MatrixXd M = circulant_matrix(f, shape);
  Eigen::MatrixXd want(4, 4);
  want << -2, 1, 0, 1,
           1, -2, 1, 0,
           0, 1, -2, 1,
           1, 0, 1, -2;
  CHECK((M - want).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("circulant matrices are exactly symmetric with row sums = kernel sum") {
  std::mt19937_64 eng(7);
  for (int d : {1, 2}) {
    const auto f = random_relative_array(d, 2, eng);
    const auto shape = LatticeShape::create(d, 6);
    const Eigen::MatrixXd M = circulant_matrix(f, shape);
    CHECK((M - M.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(M.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("window too large for the torus is rejected") {
  const auto wide = uniform_window_array(1, 3, 1.0);  // 2q+1 = 7
  CHECK_THROWS_AS(circulant_matrix(wide, LatticeShape::create(1, 6)), WindowTooLarge);
  CHECK_NOTHROW(circulant_matrix(wide, LatticeShape::create(1, 7)));
}

TEST_CASE("circulant spectrum equals the symbol on the full DFT grid") {
  std::mt19937_64 eng(11);
  for (int d : {1, 2}) {
    const int L = d == 1 ? 8 : 4;
    const auto f = random_relative_array(d, 1, eng);
    const auto shape = LatticeShape::create(d, L);
    const Eigen::MatrixXd M = circulant_matrix(f, shape);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    Eigen::VectorXd eigs = es.eigenvalues();

    std::vector<double> syms;
    const ThetaGrid grid = dft_grid(shape);
    for (std::size_t i = 0; i < grid.size(); ++i) syms.push_back(symbol(f, grid.point(i)));
    syms.push_back(0.0);  // theta = 0 for a relative kernel
    std::sort(syms.begin(), syms.end());

    const double scale = std::max(1.0, eigs.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < eigs.size(); ++i)
      CHECK(std::abs(eigs(i) - syms[static_cast<std::size_t>(i)]) < 1e-10 * scale);
  }
}

TEST_CASE("convolve: relative kernel annihilates constant fields exactly") {
  std::mt19937_64 eng(3);
  const auto f = random_relative_array(1, 2, eng);
  const auto shape = LatticeShape::create(1, 9);
  const Eigen::VectorXd ones = Eigen::VectorXd::Constant(shape.site_count(), 3.7);
  CHECK(convolve(f, ones, shape).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("convolve: impulse reads the kernel row back") {
  const auto f = laplacian_array(1);
  const auto shape = LatticeShape::create(1, 4);
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(4);
  e0(0) = 1.0;
  const Eigen::VectorXd y = convolve(f, e0, shape);
  CHECK(y(0) == doctest::Approx(-2.0));
  CHECK(y(1) == doctest::Approx(1.0));
  CHECK(y(2) == doctest::Approx(0.0));
  CHECK(y(3) == doctest::Approx(1.0));
}

TEST_CASE("convolve agrees with the circulant matrix product on random fields") {
  std::mt19937_64 eng(19);
  std::normal_distribution<double> dist;
  for (int d : {1, 2}) {
    const auto f = random_relative_array(d, 1, eng);
    const auto shape = LatticeShape::create(d, 5);
    Eigen::VectorXd field(shape.site_count());
    for (Eigen::Index i = 0; i < field.size(); ++i) field(i) = dist(eng);
    const Eigen::VectorXd direct = circulant_matrix(f, shape) * field;
    const Eigen::VectorXd viaconv = convolve(f, field, shape);
    CHECK((direct - viaconv).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK_THROWS_AS(convolve(laplacian_array(1), Eigen::VectorXd::Zero(3),
                           LatticeShape::create(1, 4)),
                  DimensionMismatch);
}

TEST_CASE("kernel JSON round-trips through the documented format") {
  const auto f = laplacian_array(2, 1.5);
  const auto back = parse_kernel_json(kernel_to_json(f));
  CHECK(back.kind() == KernelKind::Relative);
  CHECK(back.window() == f.window());
  CHECK(back.beta() == doctest::Approx(f.beta()));

  const auto g = parse_kernel_json(
      R"({"kind":"absolute","entries":[{"offset":[0],"gain":-1.0}]})");
  CHECK(g.absolute_gain() == doctest::Approx(1.0));
  CHECK_THROWS_AS(parse_kernel_json("{"), Error);
  CHECK_THROWS_AS(parse_kernel_json(R"({"kind":"huh","entries":[]})"), Error);
}
