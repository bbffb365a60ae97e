#pragma once

#include <optional>
#include <span>
#include <vector>

#include "latcoh/densities.hpp"

namespace latcoh {

/// SystemSpec minus the lattice shape: kernels and gains held fixed while the
/// network size sweeps.
struct SystemTemplate {
  FeedbackArray f;
  FeedbackArray g;
  Controller controller = Controller::Static;
  std::optional<FeedbackArray> a;
  double c0 = 1.0;
  double epsilon = 0.0;

  SystemSpec at(int d, int L) const;
};

struct SweepRow {
  int L = 0;
  std::int64_t N = 0;
  VarianceReport report;
};

/// One VarianceReport per size; kernels fixed across sizes.
std::vector<SweepRow> sweep_variance(const SystemTemplate& tmpl, int d,
                                     std::span<const int> L_list, ErrorOutput output);

struct ScalingFit {
  std::vector<std::int64_t> sizes;   // fitted subset (upper half of the ladder)
  std::vector<double> values;
  double slope = 0.0;
  double slope_stderr = 0.0;
  bool log_classified = false;
};

/// Least-squares slope of log V against log N over the upper half of the size
/// ladder; flags logarithmic growth when a near-flat power fit is beaten by a
/// V/log N ratio test.
ScalingFit fit_exponent(std::span<const std::int64_t> sizes, std::span<const double> values);

enum class TuneStrategy { ShrinkIntegralGain, GrowAveragingGain, GrowCommWindow };

TuneStrategy tune_strategy_from_string(const std::string& s);
std::string to_string(TuneStrategy s);

struct TuneReference {
  int L_ref = 2;
  double c0_ref = 1.0;
  double abar_ref = 1.0;
  double cbar = 1.0;
};

/// Size-dependent controller re-tuning. ShrinkIntegralGain scales c0 by
/// (L_ref/L)^2; GrowAveragingGain scales the averaging kernel by (L/L_ref)^2;
/// GrowCommWindow rebuilds it as a uniform window of half-width
/// ceil(cbar * L^(2/3)) with gains abar_ref.
SystemTemplate tune(TuneStrategy strategy, int L, const TuneReference& ref,
                    SystemTemplate base);

/// Integer comm window for size L: ceil(cbar * L^(2/3)).
int comm_window_for(double cbar, int L);

struct Lemma5Row {
  int L = 0;
  int q_A = 0;
  double symbol_at_thetamin = 0.0;  // |a^(2*pi/L)|
  double lower_bound = 0.0;         // quadratic cosine bound with the integer q_A
  double delta = 0.0;               // 32 cbar^3 a_min / 6
  bool ok = false;
};

/// Checks |a^(2*pi/L)| >= quadratic lower bound >= delta for uniform windows
/// q_A = ceil(cbar * L^(2/3)) with gains a_min.
std::vector<Lemma5Row> lemma5_check(double a_min, double cbar, std::span<const int> L_list);

}  // namespace latcoh
