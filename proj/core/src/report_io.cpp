#include "latcoh/report_io.hpp"

#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>

namespace latcoh {

using nlohmann::json;

namespace {

void write_meta(std::ostream& os, const std::map<std::string, std::string>& meta) {
  for (const auto& [k, v] : meta) os << "# " << k << "=" << v << "\n";
}

json meta_json(const std::map<std::string, std::string>& meta) {
  json j = json::object();
  for (const auto& [k, v] : meta) j[k] = v;
  return j;
}

}  // namespace

std::string report_to_json(const VarianceReport& report,
                           const std::map<std::string, std::string>& meta) {
  json j;
  j["V_N"] = report.V_N;
  j["V_w"] = report.V_w;
  j["V_eta"] = report.V_eta;
  j["output"] = to_string(report.output);
  j["N"] = report.N;
  j["d"] = report.d;
  if (!meta.empty()) j["meta"] = meta_json(meta);
  return j.dump(2);
}

void report_to_csv(const VarianceReport& report, std::ostream& os,
                   const std::map<std::string, std::string>& meta) {
  write_meta(os, meta);
  os << std::setprecision(17);
  for (int i = 0; i < report.d; ++i) os << "theta_" << (i + 1) << ",";
  os << "p_w,p_eta\n";
  if (!report.per_theta) return;
  for (const auto& row : *report.per_theta) {
    for (double t : row.theta) os << t << ",";
    os << row.p_w << "," << row.p_eta << "\n";
  }
}

void sweep_to_csv(const std::vector<SweepRow>& rows, int d, Controller controller,
                  ErrorOutput output, std::ostream& os,
                  const std::map<std::string, std::string>& meta) {
  write_meta(os, meta);
  os << std::setprecision(17);
  os << "N,d,L,controller,output,V_N,V_w,V_eta\n";
  for (const auto& row : rows) {
    os << row.N << "," << d << "," << row.L << "," << to_string(controller) << ","
       << to_string(output) << "," << row.report.V_N << "," << row.report.V_w << ","
       << row.report.V_eta << "\n";
  }
}

std::string fit_to_json(const ScalingFit& fit,
                        const std::map<std::string, std::string>& meta) {
  json j;
  j["slope"] = fit.slope;
  j["slope_stderr"] = fit.slope_stderr;
  j["classification"] = fit.log_classified ? "logarithmic" : "power";
  j["fit_sizes"] = fit.sizes;
  j["fit_values"] = fit.values;
  if (!meta.empty()) j["meta"] = meta_json(meta);
  return j.dump(2);
}

std::string lemma5_to_csv(const std::vector<Lemma5Row>& rows,
                          const std::map<std::string, std::string>& meta) {
  std::ostringstream os;
  write_meta(os, meta);
  os << std::setprecision(17);
  os << "L,q_A,symbol_at_thetamin,lower_bound,delta,ok\n";
  for (const auto& r : rows) {
    os << r.L << "," << r.q_A << "," << r.symbol_at_thetamin << "," << r.lower_bound << ","
       << r.delta << "," << (r.ok ? 1 : 0) << "\n";
  }
  return os.str();
}

}  // namespace latcoh
