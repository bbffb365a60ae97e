#include "latcoh/spectral.hpp"

#include <cmath>
#include <numbers>

namespace latcoh {

ThetaGrid::ThetaGrid(const LatticeShape& shape) : shape_(shape) {
  const std::int64_t N = shape.site_count();
  count_ = static_cast<std::size_t>(N - 1);
  points_.reserve(count_ * static_cast<std::size_t>(shape.d));

  const double step = 2.0 * std::numbers::pi / shape.L;
  std::vector<int> n(shape.d, 0);
  for (std::int64_t idx = 1; idx < N; ++idx) {
    // row-major enumeration of wavenumbers, skipping n = 0
    std::int64_t rem = idx;
    for (int i = shape.d - 1; i >= 0; --i) {
      n[i] = static_cast<int>(rem % shape.L);
      rem /= shape.L;
    }
    for (int i = 0; i < shape.d; ++i) {
      const int w = (2 * n[i] > shape.L) ? n[i] - shape.L : n[i];  // wrap to (-pi, pi]
      points_.push_back(step * w);
    }
  }
}

double symbol(const FeedbackArray& array, std::span<const double> theta) {
  if (static_cast<int>(theta.size()) != array.dim())
    throw DimensionMismatch("theta dimension does not match kernel dimension");
  double acc = 0.0;
  for (std::size_t i = 0; i < array.size(); ++i) {
    auto k = array.offset(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) dot += theta[j] * k[j];
    const double s = std::sin(0.5 * dot);
    acc += array.gain(i) * 2.0 * s * s;
  }
  return array.row_sum() - acc;
}

double local_error_symbol(std::span<const double> theta) {
  double acc = 0.0;
  for (double t : theta) {
    const double s = std::sin(0.5 * t);
    acc += 2.0 * s * s;  // == 1 - cos(t), cancellation-free
  }
  return 2.0 * acc;
}

AsymptoteBounds asymptote_bounds(const FeedbackArray& array, int samples) {
  if (array.kind() != KernelKind::Relative)
    throw Error("asymptote_bounds applies to Relative arrays only");
  if (array.beta() == 0.0) throw DegenerateArray("kernel is identically zero");

  // Admissible arrays are axis-decoupled: symbol(theta) = sum_i s1(theta_i)
  // with a common 1-D profile s1, and |theta|^2 = sum_i theta_i^2. By the
  // mediant inequality the d-dimensional ratio extrema equal the 1-D ones,
  // so a dense 1-D sweep suffices.
  const auto profile = array.axis_profile();
  double beta = 0.0;
  for (double p : profile) beta = std::max(beta, std::abs(p));
  if (beta == 0.0) throw DegenerateArray("kernel has no coupling gains");
  auto s1 = [&](double t) {
    double acc = 0.0;
    for (std::size_t j = 0; j < profile.size(); ++j) {
      const double s = std::sin(0.5 * t * static_cast<double>(j + 1));
      acc += profile[j] * 2.0 * s * s;
    }
    return -2.0 * acc;  // mirror offsets contribute equally
  };

  AsymptoteBounds b{std::numeric_limits<double>::infinity(), 0.0};
  for (int i = 1; i <= samples; ++i) {
    const double t = std::numbers::pi * static_cast<double>(i) / samples;
    const double ratio = -s1(t) / (beta * t * t);
    b.lower = std::min(b.lower, ratio);
    b.upper = std::max(b.upper, ratio);
  }
  return b;
}

}  // namespace latcoh
