#include "latcoh/densities.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "latcoh/errors.hpp"

namespace latcoh {

namespace {

// Genuine slow integral-alignment modes decay like a^ f^ ~ |theta|^4, which
// reaches ~5e-12 at L = 4096; 3x3 eigensolver round-off sits near 1e-15.
constexpr double kHurwitzMargin = 1e-13;
constexpr double kSingularTol = 1e-14;

std::vector<double> to_vec(std::span<const double> theta) {
  return {theta.begin(), theta.end()};
}

Eigen::Matrix3d dapi_block(double fh, double gh, double ah, double c0) {
  Eigen::Matrix3d A;
  A << ah, 0.0, -c0,
       0.0, 0.0, 1.0,
       1.0, fh, gh;
  return A;
}

double max_real_eig(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
  return es.eigenvalues().real().maxCoeff();
}

// Neumaier compensated accumulation; grid sums must not depend on order
// beyond ~1e-13 relative.
struct CompensatedSum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    const double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

}  // namespace

std::string to_string(Controller c) {
  switch (c) {
    case Controller::Static: return "static";
    case Controller::DapiNoiseless: return "dapi-noiseless";
    case Controller::DapiNoisy: return "dapi-noisy";
    case Controller::CentralizedAveraging: return "centralized";
  }
  return "?";
}

std::string to_string(ErrorOutput o) {
  return o == ErrorOutput::GlobalError ? "global" : "local";
}

Controller controller_from_string(const std::string& s) {
  if (s == "static") return Controller::Static;
  if (s == "dapi-noiseless") return Controller::DapiNoiseless;
  if (s == "dapi-noisy") return Controller::DapiNoisy;
  if (s == "centralized") return Controller::CentralizedAveraging;
  throw Error("unknown controller '" + s + "'");
}

ErrorOutput output_from_string(const std::string& s) {
  if (s == "global") return ErrorOutput::GlobalError;
  if (s == "local") return ErrorOutput::LocalError;
  throw Error("unknown error output '" + s + "'");
}

void SystemSpec::validate() const {
  if (f.dim() != shape.d || g.dim() != shape.d)
    throw DimensionMismatch("kernel dimension does not match lattice dimension");
  if (f.kind() != KernelKind::Relative)
    throw InvalidVariant("position kernel f must be Relative");
  if (g.kind() != KernelKind::Absolute || !(g.absolute_gain() > 0.0))
    throw InvalidVariant("velocity kernel g must be Absolute with g0 > 0");
  if (is_dapi(controller)) {
    if (!a) throw InvalidVariant("Dapi variants require an averaging kernel a");
    if (a->dim() != shape.d)
      throw DimensionMismatch("averaging kernel dimension does not match lattice");
    if (a->kind() != KernelKind::Relative)
      throw InvalidVariant("averaging kernel a must be Relative");
    // c0 <= 0 is constructible on purpose: is_stable reports it as unstable
  }
  if (controller == Controller::DapiNoiseless && epsilon != 0.0)
    throw InvalidVariant("DapiNoiseless requires epsilon = 0");
  if (epsilon < 0.0) throw InvalidVariant("epsilon must be nonnegative");
}

double phi(std::span<const double> theta, const SystemSpec& spec) {
  if (!is_dapi(spec.controller))
    throw InvalidVariant("phi is defined for Dapi controller variants");
  const double fh = symbol(spec.f, theta);
  const double gh = symbol(spec.g, theta);
  const double ah = symbol(*spec.a, theta);
  const double den = ah * ah + gh * ah - fh;
  if (std::abs(den) < kSingularTol)
    throw SingularPhi("phi denominator vanished at the requested frequency");
  return spec.c0 * (ah + gh) / den;
}

double density_static(std::span<const double> theta, const FeedbackArray& f,
                      const FeedbackArray& g, ErrorOutput output) {
  const double fh = symbol(f, theta);
  const double gh = symbol(g, theta);
  if (fh >= 0.0 || gh >= 0.0)
    throw UnstableBlock("static frequency block is not Hurwitz (f^ or g^ >= 0)", to_vec(theta));
  const double p = 1.0 / (2.0 * fh * gh);
  return output == ErrorOutput::LocalError ? local_error_symbol(theta) * p : p;
}

DapiDensity density_dapi(std::span<const double> theta, const SystemSpec& spec,
                         ErrorOutput output) {
  const double fh = symbol(spec.f, theta);
  const double gh = symbol(spec.g, theta);
  const double ah = symbol(*spec.a, theta);

  if (spec.epsilon > 0.0 && std::abs(ah) < kSingularTol)
    throw ZeroAveraging("averaging symbol vanishes: measurement-noise density is infinite",
                        to_vec(theta));
  const double worst = max_real_eig(dapi_block(fh, gh, ah, spec.c0));
  if (worst >= -kHurwitzMargin)
    throw UnstableBlock("Dapi frequency block is not Hurwitz", to_vec(theta));

  const double ph = phi(theta, spec);
  DapiDensity dens;
  dens.p_w = 1.0 / (2.0 * fh) / (ph + gh);
  if (spec.epsilon > 0.0) {
    dens.p_eta =
        (spec.epsilon * spec.epsilon / ah) * (spec.c0 / (2.0 * fh)) / (1.0 + gh / ph);
  }
  if (output == ErrorOutput::LocalError) {
    const double lh = local_error_symbol(theta);
    dens.p_w *= lh;
    dens.p_eta *= lh;
  }
  return dens;
}

StabilityReport is_stable(const SystemSpec& spec) {
  spec.validate();
  const ThetaGrid grid = dft_grid(spec.shape);

  StabilityReport rep;
  rep.worst_real_part = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto theta = grid.point(i);
    const double fh = symbol(spec.f, theta);
    const double gh = symbol(spec.g, theta);
    double worst;
    if (is_dapi(spec.controller)) {
      worst = max_real_eig(dapi_block(fh, gh, symbol(*spec.a, theta), spec.c0));
    } else {
      // Static and CentralizedAveraging share the 2x2 block; the centralized
      // integrator pair (z, v-mean) is Hurwitz whenever c0 > 0 and g0 > 0.
      Eigen::Matrix2d A;
      A << 0.0, 1.0, fh, gh;
      worst = max_real_eig(A);
    }
    if (worst > rep.worst_real_part) {
      rep.worst_real_part = worst;
      rep.worst_theta = to_vec(theta);
    }
  }
  rep.ok = rep.worst_real_part < -kHurwitzMargin;
  return rep;
}

VarianceReport per_site_variance(const SystemSpec& spec, ErrorOutput output,
                                 bool keep_per_theta) {
  spec.validate();
  if (spec.controller == Controller::DapiNoisy && spec.epsilon > 0.0) {
    const ThetaGrid grid = dft_grid(spec.shape);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto theta = grid.point(i);
      if (std::abs(symbol(*spec.a, theta)) < kSingularTol)
        throw ZeroAveraging(
            "averaging symbol vanishes on the grid: measurement-noise variance is infinite",
            to_vec(theta));
    }
  }
  const StabilityReport st = is_stable(spec);
  if (!st.ok)
    throw UnstableBlock("per-frequency block not Hurwitz (worst real part " +
                            std::to_string(st.worst_real_part) + ")",
                        st.worst_theta);

  const ThetaGrid grid = dft_grid(spec.shape);
  const double N = static_cast<double>(spec.shape.site_count());

  VarianceReport rep;
  rep.output = output;
  rep.N = spec.shape.site_count();
  rep.d = spec.shape.d;
  if (keep_per_theta) rep.per_theta.emplace();

  CompensatedSum sw, se;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto theta = grid.point(i);
    double pw = 0.0, pe = 0.0;
    if (is_dapi(spec.controller)) {
      const DapiDensity d = density_dapi(theta, spec, output);
      pw = d.p_w;
      pe = d.p_eta;
    } else {
      pw = density_static(theta, spec.f, spec.g, output);
    }
    sw.add(pw);
    se.add(pe);
    if (keep_per_theta)
      rep.per_theta->push_back({to_vec(theta), pw, pe});
  }
  rep.V_w = sw.value() / N;
  rep.V_eta = se.value() / N;
  rep.V_N = rep.V_w + rep.V_eta;
  return rep;
}

}  // namespace latcoh
