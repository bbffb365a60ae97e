#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "latcoh/lattice.hpp"
#include "latcoh/spectral.hpp"

namespace latcoh {

enum class Controller { Static, DapiNoiseless, DapiNoisy, CentralizedAveraging };
enum class ErrorOutput { GlobalError, LocalError };

std::string to_string(Controller c);
std::string to_string(ErrorOutput o);
Controller controller_from_string(const std::string& s);
ErrorOutput output_from_string(const std::string& s);

inline bool is_dapi(Controller c) {
  return c == Controller::DapiNoiseless || c == Controller::DapiNoisy;
}

/// Full description of a controlled lattice system: shape, kernels,
/// controller variant and scalar gains.
struct SystemSpec {
  LatticeShape shape;
  FeedbackArray f;                // position kernel, Relative
  FeedbackArray g;                // velocity kernel, Absolute (g0 > 0)
  Controller controller = Controller::Static;
  std::optional<FeedbackArray> a; // averaging kernel, Relative (Dapi variants)
  double c0 = 1.0;                // integral gain [1/s]
  double epsilon = 0.0;           // relative measurement-noise intensity

  /// Throws on inconsistent variant/kernel combinations.
  void validate() const;
};

struct PerThetaRow {
  std::vector<double> theta;
  double p_w = 0.0;
  double p_eta = 0.0;
};

struct VarianceReport {
  double V_N = 0.0;   // V_w + V_eta
  double V_w = 0.0;   // process-disturbance contribution
  double V_eta = 0.0; // measurement-noise contribution
  ErrorOutput output = ErrorOutput::GlobalError;
  std::int64_t N = 0;
  int d = 1;
  std::optional<std::vector<PerThetaRow>> per_theta;  // off by default
};

struct StabilityReport {
  bool ok = false;
  double worst_real_part = 0.0;
  std::vector<double> worst_theta;
};

/// Integral-state coupling function
/// phi = c0 (a^ + g^) / ((a^)^2 + g^ a^ - f^); throws SingularPhi when the
/// denominator vanishes.
double phi(std::span<const double> theta, const SystemSpec& spec);

/// Static-feedback density: 1/(2 f^ g^), with the local-error factor l^ when
/// requested. Throws UnstableBlock unless f^ < 0 and g^ < 0.
double density_static(std::span<const double> theta, const FeedbackArray& f,
                      const FeedbackArray& g, ErrorOutput output);

struct DapiDensity {
  double p_w = 0.0;
  double p_eta = 0.0;
};

/// Distributed-integral-control density split into disturbance and noise
/// terms. Throws ZeroAveraging when a^ = 0 with epsilon > 0, UnstableBlock
/// when the 3x3 frequency block is not Hurwitz.
DapiDensity density_dapi(std::span<const double> theta, const SystemSpec& spec,
                         ErrorOutput output);

/// Hurwitz check of every per-frequency block over the DFT grid
/// (eigenvalue real parts < -1e-9).
StabilityReport is_stable(const SystemSpec& spec);

/// Per-site variance: grid sum of the closed-form densities divided by N.
/// CentralizedAveraging reduces to the static density (the shared integral
/// state is unobservable in both error outputs; the oracle module verifies
/// this numerically).
VarianceReport per_site_variance(const SystemSpec& spec, ErrorOutput output,
                                 bool keep_per_theta = false);

}  // namespace latcoh
