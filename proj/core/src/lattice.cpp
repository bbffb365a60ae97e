#include "latcoh/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>

namespace latcoh {

namespace {

constexpr double kRelTol = 1e-12;

std::string offset_str(std::span<const int> k) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < k.size(); ++i) os << (i ? "," : "") << k[i];
  os << ")";
  return os.str();
}

int inf_norm(std::span<const int> k) {
  int m = 0;
  for (int c : k) m = std::max(m, std::abs(c));
  return m;
}

}  // namespace

LatticeShape LatticeShape::create(int d, int L) {
  if (d < 1 || d > 5) throw Error("lattice dimension must be in 1..5, got " + std::to_string(d));
  if (L < 1) throw Error("lattice side length must be positive, got " + std::to_string(L));
  return LatticeShape{d, L};
}

std::int64_t LatticeShape::site_index(std::span<const int> coords) const {
  if (static_cast<int>(coords.size()) != d)
    throw DimensionMismatch("multi-index has wrong dimension");
  std::int64_t idx = 0;
  for (int i = 0; i < d; ++i) {
    int c = coords[i] % L;
    if (c < 0) c += L;
    idx = idx * L + c;
  }
  return idx;
}

std::vector<int> LatticeShape::site_coords(std::int64_t index) const {
  std::vector<int> c(d);
  for (int i = d - 1; i >= 0; --i) {
    c[i] = static_cast<int>(index % L);
    index /= L;
  }
  return c;
}

FeedbackArray make_feedback_array(const std::vector<std::vector<int>>& offsets,
                                  const std::vector<double>& gains, KernelKind kind) {
  if (offsets.size() != gains.size())
    throw DimensionMismatch("offsets and gains must have the same length");
  if (offsets.empty()) throw DimensionMismatch("kernel needs at least one entry");

  const int d = static_cast<int>(offsets.front().size());
  if (d < 1 || d > 5) throw Error("offset dimension must be in 1..5");
  for (const auto& k : offsets)
    if (static_cast<int>(k.size()) != d)
      throw DimensionMismatch("all offsets must have the same dimension");

  std::map<std::vector<int>, double> entries;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (!entries.emplace(offsets[i], gains[i]).second)
      throw DimensionMismatch("duplicate offset " + offset_str(offsets[i]));
  }

  double abs_sum = 0.0, sum = 0.0, beta = 0.0;
  int q = 0;
  for (const auto& [k, g] : entries) {
    sum += g;
    abs_sum += std::abs(g);
    beta = std::max(beta, std::abs(g));
    if (g != 0.0) q = std::max(q, inf_norm(k));
  }

  auto gain_at = [&](const std::vector<int>& k) {
    auto it = entries.find(k);
    return it == entries.end() ? 0.0 : it->second;
  };

  // reflection symmetry: f_k == f_{-k}
  for (const auto& [k, g] : entries) {
    std::vector<int> neg(k.size());
    std::transform(k.begin(), k.end(), neg.begin(), std::negate<int>());
    if (std::abs(g - gain_at(neg)) > kRelTol * std::max(1.0, beta))
      throw AssumptionViolation(AssumptionViolation::Which::ReflectionSymmetry,
                                "gain at " + offset_str(k) + " differs from gain at its mirror");
  }

  // axis alignment + isotropy across axes
  for (const auto& [k, g] : entries) {
    if (g == 0.0) continue;
    int nonzero = 0;
    for (int c : k) nonzero += (c != 0);
    if (nonzero > 1)
      throw AssumptionViolation(AssumptionViolation::Which::CoordinateDecoupling,
                                "offset " + offset_str(k) + " is not axis-aligned");
  }
  for (int t = 1; t <= q; ++t) {
    std::vector<int> e0(d, 0);
    e0[0] = t;
    const double ref = gain_at(e0);
    for (int axis = 1; axis < d; ++axis) {
      std::vector<int> ei(d, 0);
      ei[axis] = t;
      if (std::abs(gain_at(ei) - ref) > kRelTol * std::max(1.0, beta))
        throw AssumptionViolation(AssumptionViolation::Which::CoordinateDecoupling,
                                  "gain profile along axis " + std::to_string(axis) +
                                      " differs from axis 0 at distance " + std::to_string(t));
    }
  }

  if (kind == KernelKind::Relative) {
    if (std::abs(sum) > kRelTol * abs_sum)
      throw AssumptionViolation(AssumptionViolation::Which::RelativeZeroSum,
                                "relative kernel gains sum to " + std::to_string(sum));
  } else {
    if (!(sum < -kRelTol * abs_sum))
      throw AssumptionViolation(AssumptionViolation::Which::AbsoluteNegativeSum,
                                "absolute kernel needs strictly negative gain sum, got " +
                                    std::to_string(sum));
  }

  FeedbackArray a;
  a.dim_ = d;
  a.kind_ = kind;
  a.window_ = q;
  a.beta_ = beta;
  a.row_sum_ = (kind == KernelKind::Relative) ? 0.0 : sum;
  a.offsets_.reserve(entries.size() * d);
  a.gains_.reserve(entries.size());
  for (const auto& [k, g] : entries) {
    a.offsets_.insert(a.offsets_.end(), k.begin(), k.end());
    a.gains_.push_back(g);
  }
  return a;
}

FeedbackArray FeedbackArray::scaled(double s) const {
  FeedbackArray a = *this;
  for (double& g : a.gains_) g *= s;
  a.beta_ *= std::abs(s);
  a.row_sum_ *= s;
  return a;
}

std::vector<double> FeedbackArray::axis_profile() const {
  std::vector<double> p(static_cast<std::size_t>(window_), 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    auto k = offset(i);
    if (k[0] > 0) {
      bool axis0 = true;
      for (int j = 1; j < dim_; ++j) axis0 &= (k[j] == 0);
      if (axis0) p[static_cast<std::size_t>(k[0]) - 1] = gains_[i];
    }
  }
  return p;
}

FeedbackArray uniform_window_array(int d, int q, double g) {
  std::vector<std::vector<int>> offsets;
  std::vector<double> gains;
  for (int axis = 0; axis < d; ++axis) {
    for (int t = 1; t <= q; ++t) {
      for (int s : {t, -t}) {
        std::vector<int> k(d, 0);
        k[axis] = s;
        offsets.push_back(std::move(k));
        gains.push_back(g);
      }
    }
  }
  offsets.push_back(std::vector<int>(d, 0));
  gains.push_back(-2.0 * q * d * g);
  return make_feedback_array(offsets, gains, KernelKind::Relative);
}

FeedbackArray laplacian_array(int d, double g) { return uniform_window_array(d, 1, g); }

FeedbackArray absolute_array(int d, double g0) {
  return make_feedback_array({std::vector<int>(d, 0)}, {-g0}, KernelKind::Absolute);
}

Eigen::MatrixXd circulant_matrix(const FeedbackArray& array, const LatticeShape& shape) {
  if (array.dim() != shape.d) throw DimensionMismatch("kernel/lattice dimension mismatch");
  if (2 * array.window() + 1 > shape.L)
    throw WindowTooLarge("feedback window 2q+1 = " + std::to_string(2 * array.window() + 1) +
                         " exceeds side length " + std::to_string(shape.L));

  const std::int64_t N = shape.site_count();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N, N);
  std::vector<int> col(shape.d);
  for (std::int64_t row = 0; row < N; ++row) {
    const std::vector<int> rc = shape.site_coords(row);
    for (std::size_t i = 0; i < array.size(); ++i) {
      auto off = array.offset(i);
      for (int j = 0; j < shape.d; ++j) col[j] = rc[j] - off[j];
      M(row, shape.site_index(col)) += array.gain(i);
    }
  }
  return M;
}

Eigen::VectorXd convolve(const FeedbackArray& array, const Eigen::VectorXd& field,
                         const LatticeShape& shape) {
  if (array.dim() != shape.d) throw DimensionMismatch("kernel/lattice dimension mismatch");
  const std::int64_t N = shape.site_count();
  if (field.size() != N) throw DimensionMismatch("field length does not match site count");
  if (2 * array.window() + 1 > shape.L)
    throw WindowTooLarge("feedback window does not fit the torus");

  Eigen::VectorXd out = Eigen::VectorXd::Zero(N);
  std::vector<int> src(shape.d);
  for (std::int64_t k = 0; k < N; ++k) {
    const std::vector<int> kc = shape.site_coords(k);
    double acc = 0.0;
    for (std::size_t i = 0; i < array.size(); ++i) {
      auto off = array.offset(i);
      for (int j = 0; j < shape.d; ++j) src[j] = kc[j] - off[j];
      acc += array.gain(i) * field(shape.site_index(src));
    }
    out(k) = acc;
  }
  return out;
}

}  // namespace latcoh
