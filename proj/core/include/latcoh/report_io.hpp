#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "latcoh/densities.hpp"
#include "latcoh/scaling.hpp"

namespace latcoh {

/// {"V_N":..., "V_w":..., "V_eta":..., "output":..., "N":..., "d":...} plus
/// optional meta fields (tool version, resolved configuration) merged in.
std::string report_to_json(const VarianceReport& report,
                           const std::map<std::string, std::string>& meta = {});

/// CSV rows theta_1..theta_d, p_w, p_eta (requires a report with the
/// per-theta table retained), preceded by "# key=value" header lines.
void report_to_csv(const VarianceReport& report, std::ostream& os,
                   const std::map<std::string, std::string>& meta = {});

/// Sweep CSV: N, d, L, controller, output, V_N, V_w, V_eta.
void sweep_to_csv(const std::vector<SweepRow>& rows, int d, Controller controller,
                  ErrorOutput output, std::ostream& os,
                  const std::map<std::string, std::string>& meta = {});

std::string fit_to_json(const ScalingFit& fit,
                        const std::map<std::string, std::string>& meta = {});

std::string lemma5_to_csv(const std::vector<Lemma5Row>& rows,
                          const std::map<std::string, std::string>& meta = {});

}  // namespace latcoh
