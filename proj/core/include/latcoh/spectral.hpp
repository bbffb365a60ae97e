#pragma once

#include <span>
#include <vector>

#include "latcoh/lattice.hpp"

namespace latcoh {

/// The nonzero DFT frequencies theta = 2*pi*n/L, n in Z_L^d \ {0},
/// componentwise wrapped to (-pi, pi].
class ThetaGrid {
 public:
  explicit ThetaGrid(const LatticeShape& shape);

  const LatticeShape& shape() const { return shape_; }
  std::size_t size() const { return count_; }
  std::span<const double> point(std::size_t i) const {
    return {points_.data() + i * static_cast<std::size_t>(shape_.d),
            static_cast<std::size_t>(shape_.d)};
  }

 private:
  LatticeShape shape_;
  std::size_t count_ = 0;
  std::vector<double> points_;  // flattened, stride d
};

inline ThetaGrid dft_grid(const LatticeShape& shape) { return ThetaGrid(shape); }

/// Real Fourier symbol of a kernel: sum_k f_k e^{-i theta.k}, evaluated as
/// row_sum - sum_k f_k * 2 sin^2(theta.k / 2). Reflection symmetry makes the
/// symbol real; the sin^2 form avoids cancellation near theta = 0.
double symbol(const FeedbackArray& array, std::span<const double> theta);

/// Symbol of the per-direction nearest-neighbor difference output:
/// sum_i 2(1 - cos theta_i).
double local_error_symbol(std::span<const double> theta);

struct AsymptoteBounds {
  double lower = 0.0;  // c:     c * beta * |theta|^2 <= -symbol(theta)
  double upper = 0.0;  // c_bar: -symbol(theta) <= c_bar * beta * |theta|^2
};

/// Empirical constants bracketing -symbol(theta) / (beta |theta|^2) for a
/// Relative array, sampled densely over theta in (0, pi] per axis. beta here
/// is the largest coupling (off-center) gain, the scale that makes the
/// nearest-neighbor bracket come out as [4/pi^2, 1].
AsymptoteBounds asymptote_bounds(const FeedbackArray& array, int samples = 65536);

}  // namespace latcoh
