#include "latcoh/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "latcoh/errors.hpp"

namespace latcoh {

SystemSpec SystemTemplate::at(int d, int L) const {
  SystemSpec spec{LatticeShape::create(d, L), f, g, controller, a, c0, epsilon};
  spec.validate();
  return spec;
}

std::vector<SweepRow> sweep_variance(const SystemTemplate& tmpl, int d,
                                     std::span<const int> L_list, ErrorOutput output) {
  std::vector<SweepRow> rows;
  rows.reserve(L_list.size());
  for (int L : L_list) {
    const SystemSpec spec = tmpl.at(d, L);
    try {
      rows.push_back({L, spec.shape.site_count(), per_site_variance(spec, output)});
    } catch (const UnstableBlock& e) {
      throw UnstableBlock("at L = " + std::to_string(L) + ": " + e.what(), e.theta());
    } catch (const ZeroAveraging& e) {
      throw ZeroAveraging("at L = " + std::to_string(L) + ": " + e.what(), e.theta());
    }
  }
  return rows;
}

namespace {

double rel_spread(std::span<const double> v) {
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  return (*mx - *mn) / mean;
}

}  // namespace

ScalingFit fit_exponent(std::span<const std::int64_t> sizes, std::span<const double> values) {
  if (sizes.size() != values.size())
    throw DimensionMismatch("sizes and values must have equal length");
  if (sizes.size() < 4)
    throw InsufficientData("exponent fit needs at least 4 sizes, got " +
                           std::to_string(sizes.size()));
  for (std::size_t i = 1; i < sizes.size(); ++i)
    if (sizes[i] <= sizes[i - 1]) throw InsufficientData("sizes must be strictly increasing");

  // asymptotic regime: fit only the upper half of the ladder
  const std::size_t start = sizes.size() / 2;
  const std::size_t n = sizes.size() - start;

  ScalingFit fit;
  fit.sizes.assign(sizes.begin() + start, sizes.end());
  fit.values.assign(values.begin() + start, values.end());

  std::vector<double> x(n), y(n);
  double xb = 0.0, yb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::log(static_cast<double>(fit.sizes[i]));
    y[i] = std::log(fit.values[i]);
    xb += x[i];
    yb += y[i];
  }
  xb /= n;
  yb /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - xb) * (x[i] - xb);
    sxy += (x[i] - xb) * (y[i] - yb);
  }
  fit.slope = sxy / sxx;
  const double icpt = yb - fit.slope * xb;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (icpt + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.slope_stderr = n > 2 ? std::sqrt(ss_res / static_cast<double>(n - 2) / sxx) : 0.0;

  if (fit.slope > 0.0 && fit.slope < 0.15) {
    std::vector<double> by_log(n), by_pow(n);
    for (std::size_t i = 0; i < n; ++i) {
      by_log[i] = fit.values[i] / std::log(static_cast<double>(fit.sizes[i]));
      by_pow[i] = fit.values[i] / std::pow(static_cast<double>(fit.sizes[i]), fit.slope);
    }
    fit.log_classified = rel_spread(by_log) < rel_spread(by_pow);
  }
  return fit;
}

TuneStrategy tune_strategy_from_string(const std::string& s) {
  if (s == "shrink-integral-gain") return TuneStrategy::ShrinkIntegralGain;
  if (s == "grow-averaging-gain") return TuneStrategy::GrowAveragingGain;
  if (s == "grow-comm-window") return TuneStrategy::GrowCommWindow;
  throw Error("unknown tune strategy '" + s + "'");
}

std::string to_string(TuneStrategy s) {
  switch (s) {
    case TuneStrategy::ShrinkIntegralGain: return "shrink-integral-gain";
    case TuneStrategy::GrowAveragingGain: return "grow-averaging-gain";
    case TuneStrategy::GrowCommWindow: return "grow-comm-window";
  }
  return "?";
}

int comm_window_for(double cbar, int L) {
  if (!(cbar > 0.0)) throw Error("cbar must be positive");
  // L^(2/3) via cbrt(L^2): exact for perfect cubes, guarded against the
  // ceil of a value sitting one ulp above an integer
  const double t = cbar * std::cbrt(static_cast<double>(L) * static_cast<double>(L));
  return static_cast<int>(std::ceil(t - 1e-9 * std::max(1.0, t)));
}

SystemTemplate tune(TuneStrategy strategy, int L, const TuneReference& ref,
                    SystemTemplate base) {
  if (L < ref.L_ref || ref.L_ref < 2)
    throw Error("tune requires L >= L_ref >= 2");
  const double ratio = static_cast<double>(L) / static_cast<double>(ref.L_ref);
  switch (strategy) {
    case TuneStrategy::ShrinkIntegralGain:
      base.c0 = ref.c0_ref / (ratio * ratio);
      break;
    case TuneStrategy::GrowAveragingGain: {
      if (!base.a) throw InvalidVariant("GrowAveragingGain needs an averaging kernel");
      base.a = base.a->scaled(ratio * ratio);
      break;
    }
    case TuneStrategy::GrowCommWindow: {
      if (!base.a) throw InvalidVariant("GrowCommWindow needs an averaging kernel");
      const int q = comm_window_for(ref.cbar, L);
      if (2 * q + 1 > L)
        throw WindowTooLarge("comm window 2q+1 = " + std::to_string(2 * q + 1) +
                             " exceeds L = " + std::to_string(L));
      base.a = uniform_window_array(base.a->dim(), q, ref.abar_ref);
      break;
    }
  }
  return base;
}

std::vector<Lemma5Row> lemma5_check(double a_min, double cbar, std::span<const int> L_list) {
  if (!(a_min > 0.0)) throw Error("a_min must be positive");
  if (!(cbar > 0.0)) throw Error("cbar must be positive");

  std::vector<Lemma5Row> rows;
  rows.reserve(L_list.size());
  for (int L : L_list) {
    Lemma5Row row;
    row.L = L;
    row.q_A = comm_window_for(cbar, L);
    // symbol evaluation only; the quadratic cosine bound needs 2 pi q / L <= pi
    if (2 * row.q_A > L)
      throw WindowTooLarge("comm window q = " + std::to_string(row.q_A) +
                           " exceeds L/2 for L = " + std::to_string(L));

    const double theta_min = 2.0 * std::numbers::pi / L;
    double mag = 0.0;
    for (int k = 1; k <= row.q_A; ++k) {
      const double s = std::sin(0.5 * theta_min * k);
      mag += a_min * 4.0 * s * s;  // (a_k + a_{-k}) (1 - cos(k theta_min))
    }
    row.symbol_at_thetamin = mag;

    const double q = row.q_A;
    row.lower_bound = 16.0 * a_min / (static_cast<double>(L) * L) * q * (q + 1.0) *
                      (2.0 * q + 1.0) / 6.0;
    row.delta = 32.0 * cbar * cbar * cbar * a_min / 6.0;

    const double tol = 1e-12 * std::max({1.0, mag, row.lower_bound});
    row.ok = (row.symbol_at_thetamin >= row.lower_bound - tol) &&
             (row.lower_bound >= row.delta - tol);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace latcoh
