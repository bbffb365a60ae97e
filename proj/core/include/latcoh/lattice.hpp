#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "latcoh/errors.hpp"

namespace latcoh {

/// A d-dimensional discrete torus with L sites per side.
struct LatticeShape {
  int d = 1;
  int L = 2;

  static LatticeShape create(int d, int L);

  std::int64_t site_count() const {
    std::int64_t n = 1;
    for (int i = 0; i < d; ++i) n *= L;
    return n;
  }

  /// Row-major linear index of a multi-index (components taken mod L).
  std::int64_t site_index(std::span<const int> coords) const;
  /// Inverse of site_index.
  std::vector<int> site_coords(std::int64_t index) const;
};

enum class KernelKind { Relative, Absolute };

/// A spatially invariant convolution kernel on the lattice.
///
/// Offsets are d-dimensional integer multi-indices; admissibility requires
/// reflection symmetry, axis-aligned offsets with identical per-axis gain
/// profiles, and either zero row sum (Relative) or strictly negative row sum
/// (Absolute). Construct through make_feedback_array.
class FeedbackArray {
 public:
  int dim() const { return dim_; }
  KernelKind kind() const { return kind_; }
  int window() const { return window_; }       // q: max |k|_inf over nonzero gains
  double beta() const { return beta_; }        // max |gain|
  double row_sum() const { return row_sum_; }  // 0 for Relative, -f0 for Absolute
  double absolute_gain() const { return -row_sum_; }  // f0 (g0 for velocity kernels)

  std::size_t size() const { return gains_.size(); }
  std::span<const int> offset(std::size_t i) const {
    return {offsets_.data() + i * static_cast<std::size_t>(dim_),
            static_cast<std::size_t>(dim_)};
  }
  double gain(std::size_t i) const { return gains_[i]; }

  /// Kernel with every gain multiplied by s (admissibility is preserved).
  FeedbackArray scaled(double s) const;

  /// Per-axis gain profile: entry t-1 is the gain at offset +t*e_axis
  /// (identical for every axis on an admissible array), t = 1..window().
  std::vector<double> axis_profile() const;

  /// Empty kernel (no entries, acts as zero); build real ones through
  /// make_feedback_array.
  FeedbackArray() = default;

 private:
  friend FeedbackArray make_feedback_array(const std::vector<std::vector<int>>&,
                                           const std::vector<double>&, KernelKind);

  int dim_ = 1;
  KernelKind kind_ = KernelKind::Relative;
  std::vector<int> offsets_;  // flattened, stride dim_
  std::vector<double> gains_;
  int window_ = 0;
  double beta_ = 0.0;
  double row_sum_ = 0.0;
};

/// Validates and builds a kernel; throws AssumptionViolation if the entries
/// are outside the admissible class.
FeedbackArray make_feedback_array(const std::vector<std::vector<int>>& offsets,
                                  const std::vector<double>& gains, KernelKind kind);

/// Uniform Relative kernel: gain `g` at every axis offset 0 < |t| <= q,
/// zero-sum center entry. q = 0 gives the zero kernel.
FeedbackArray uniform_window_array(int d, int q, double g);

/// Nearest-neighbor Laplacian-style kernel: gain `g` at +-e_i, center -2*d*g.
FeedbackArray laplacian_array(int d, double g = 1.0);

/// Pure absolute kernel {0 -> -g0}.
FeedbackArray absolute_array(int d, double g0);

/// Materializes the convolution as a dense N x N symmetric circulant matrix.
Eigen::MatrixXd circulant_matrix(const FeedbackArray& array, const LatticeShape& shape);

/// result_k = sum_l f_{k-l mod} field_l.
Eigen::VectorXd convolve(const FeedbackArray& array, const Eigen::VectorXd& field,
                         const LatticeShape& shape);

}  // namespace latcoh
