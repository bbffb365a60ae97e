// latcoh command-line tool: validation, variance computation, scaling sweeps,
// controller tuning, averaging-window checks and time-domain simulation.
//
// Exit codes: 0 success, 1 usage/config error, 2 model/stability error,
// 3 I/O error.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "latcoh/densities.hpp"
#include "latcoh/errors.hpp"
#include "latcoh/kernel_io.hpp"
#include "latcoh/oracle.hpp"
#include "latcoh/report_io.hpp"
#include "latcoh/scaling.hpp"
#include "latcoh/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace latcoh;

namespace {

constexpr const char* kVersion = LATCOH_VERSION_STRING;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open '" + path + "'");
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("JSON parse failure in '" + path + "': " + e.what());
  }
  return j;
}

// write-temp-then-rename; "-" means stdout
void write_output(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    return;
  }
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw IoError("cannot open '" + tmp.string() + "' for writing");
    f << content;
    if (!f) throw IoError("write failure on '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path + "'");
}

FeedbackArray kernel_from_node(const json& node, const fs::path& base_dir) {
  if (node.is_string()) {
    fs::path p(node.get<std::string>());
    if (p.is_relative()) p = base_dir / p;
    return load_kernel_file(p.string());
  }
  return parse_kernel_json(node.dump());
}

struct TorusConfig {
  SystemSpec spec;
  ErrorOutput output = ErrorOutput::GlobalError;
};

// known override keys; anything else is rejected
const std::map<std::string, std::string> kOverrideKeys = {
    {"c0", "number"},     {"epsilon", "number"}, {"L", "int"},
    {"d", "int"},         {"seed", "int"},       {"dt", "number"},
    {"T", "number"},      {"strategy", "string"}, {"cbar", "number"}};

std::map<std::string, std::string> parse_overrides(const std::vector<std::string>& sets) {
  std::map<std::string, std::string> out;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + s + "' is not key=value");
    const std::string key = s.substr(0, eq);
    if (!kOverrideKeys.count(key)) throw ConfigError("unknown override key '" + key + "'");
    out[key] = s.substr(eq + 1);
  }
  return out;
}

double to_number(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("override " + key + "=" + v + " is not a number");
  }
}

TorusConfig parse_torus_config(const json& j, const fs::path& base_dir,
                               const std::map<std::string, std::string>& ov) {
  TorusConfig cfg;
  auto get_int = [&](const char* key, int fallback) {
    auto it = ov.find(key);
    if (it != ov.end()) return static_cast<int>(to_number(key, it->second));
    return j.value(key, fallback);
  };
  auto get_num = [&](const char* key, double fallback) {
    auto it = ov.find(key);
    if (it != ov.end()) return to_number(key, it->second);
    return j.value(key, fallback);
  };

  if (!j.contains("f") || !j.contains("g"))
    throw ConfigError("system spec needs 'f' and 'g' kernels");
  const int d = get_int("d", 1);
  const int L = get_int("L", 8);
  cfg.spec.shape = LatticeShape::create(d, L);
  cfg.spec.f = kernel_from_node(j.at("f"), base_dir);
  cfg.spec.g = kernel_from_node(j.at("g"), base_dir);
  cfg.spec.controller = controller_from_string(j.value("controller", "static"));
  if (j.contains("a")) cfg.spec.a = kernel_from_node(j.at("a"), base_dir);
  cfg.spec.c0 = get_num("c0", 1.0);
  cfg.spec.epsilon = get_num("epsilon", 0.0);
  cfg.output = output_from_string(j.value("output", "global"));
  return cfg;
}

json resolved_config_json(const TorusConfig& cfg) {
  json j;
  j["d"] = cfg.spec.shape.d;
  j["L"] = cfg.spec.shape.L;
  j["N"] = cfg.spec.shape.site_count();
  j["controller"] = to_string(cfg.spec.controller);
  j["output"] = to_string(cfg.output);
  j["c0"] = cfg.spec.c0;
  j["epsilon"] = cfg.spec.epsilon;
  j["f"] = json::parse(kernel_to_json(cfg.spec.f));
  j["g"] = json::parse(kernel_to_json(cfg.spec.g));
  if (cfg.spec.a) j["a"] = json::parse(kernel_to_json(*cfg.spec.a));
  return j;
}

std::map<std::string, std::string> csv_meta(const std::string& command, const json& config) {
  return {{"latcoh_version", kVersion},
          {"command", command},
          {"config", config.dump()}};
}

std::vector<int> parse_size_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stoi(tok));
  }
  if (out.empty()) throw ConfigError("empty size list");
  return out;
}

// ---- subcommand implementations ----

int cmd_validate(const std::string& spec_path, const std::vector<std::string>& sets) {
  const auto ov = parse_overrides(sets);
  const json j = load_json_file(spec_path);
  const TorusConfig cfg = parse_torus_config(j, fs::path(spec_path).parent_path(), ov);
  cfg.spec.validate();
  const auto st = is_stable(cfg.spec);
  json out;
  out["valid"] = true;
  out["stable"] = st.ok;
  out["worst_real_part"] = st.worst_real_part;
  out["meta"] = {{"latcoh_version", kVersion}, {"config", resolved_config_json(cfg)}};
  std::cout << out.dump(2) << "\n";
  if (!st.ok) {
    std::ostringstream theta;
    for (double t : st.worst_theta) theta << t << " ";
    throw UnstableBlock("spec is unstable at theta = " + theta.str(), st.worst_theta);
  }
  return 0;
}

int cmd_variance(const std::string& spec_path, const std::string& out_path,
                 const std::string& format, bool per_theta,
                 const std::vector<std::string>& sets) {
  const auto ov = parse_overrides(sets);
  const json j = load_json_file(spec_path);
  const TorusConfig cfg = parse_torus_config(j, fs::path(spec_path).parent_path(), ov);
  const bool want_table = per_theta || format == "csv";
  const VarianceReport rep = per_site_variance(cfg.spec, cfg.output, want_table);
  const json config = resolved_config_json(cfg);

  if (format == "csv") {
    std::ostringstream os;
    report_to_csv(rep, os, csv_meta("variance", config));
    write_output(out_path, os.str());
  } else {
    json out = json::parse(report_to_json(rep));
    if (want_table && rep.per_theta) {
      json table = json::array();
      for (const auto& row : *rep.per_theta)
        table.push_back({{"theta", row.theta}, {"p_w", row.p_w}, {"p_eta", row.p_eta}});
      out["per_theta"] = table;
    }
    out["meta"] = {{"latcoh_version", kVersion}, {"config", config}};
    write_output(out_path, out.dump(2) + "\n");
  }
  return 0;
}

int cmd_sweep(const std::string& spec_path, const std::string& L_csv,
              const std::string& csv_path, const std::string& fit_path,
              const std::string& fit_on, const std::string& tune_strategy, int L_ref,
              const std::vector<std::string>& sets) {
  const auto ov = parse_overrides(sets);
  const json j = load_json_file(spec_path);
  TorusConfig cfg = parse_torus_config(j, fs::path(spec_path).parent_path(), ov);
  const std::vector<int> Ls = parse_size_list(L_csv);

  SystemTemplate tmpl{cfg.spec.f, cfg.spec.g, cfg.spec.controller, cfg.spec.a,
                      cfg.spec.c0, cfg.spec.epsilon};

  std::vector<SweepRow> rows;
  if (!tune_strategy.empty()) {
    const TuneStrategy strategy = tune_strategy_from_string(tune_strategy);
    TuneReference ref;
    ref.L_ref = L_ref > 0 ? L_ref : Ls.front();
    ref.c0_ref = tmpl.c0;
    ref.abar_ref = tmpl.a ? tmpl.a->beta() : 1.0;
    if (auto it = ov.find("cbar"); it != ov.end()) ref.cbar = to_number("cbar", it->second);
    for (int L : Ls) {
      const SystemTemplate tuned = tune(strategy, L, ref, tmpl);
      auto one = sweep_variance(tuned, cfg.spec.shape.d, std::vector<int>{L}, cfg.output);
      rows.push_back(one.front());
    }
  } else {
    rows = sweep_variance(tmpl, cfg.spec.shape.d, Ls, cfg.output);
  }

  json config = resolved_config_json(cfg);
  config["L_list"] = Ls;
  if (!tune_strategy.empty()) config["tune"] = tune_strategy;

  std::ostringstream os;
  sweep_to_csv(rows, cfg.spec.shape.d, cfg.spec.controller, cfg.output, os,
               csv_meta("sweep", config));
  write_output(csv_path, os.str());

  std::vector<std::int64_t> sizes;
  std::vector<double> values;
  for (const auto& row : rows) {
    sizes.push_back(row.N);
    if (fit_on == "V_eta")
      values.push_back(row.report.V_eta);
    else if (fit_on == "V_w")
      values.push_back(row.report.V_w);
    else
      values.push_back(row.report.V_N);
  }
  const ScalingFit fit = fit_exponent(sizes, values);
  json fj = json::parse(fit_to_json(fit));
  fj["fit_on"] = fit_on;
  fj["meta"] = {{"latcoh_version", kVersion}, {"config", config}};
  write_output(fit_path, fj.dump(2) + "\n");
  return 0;
}

int cmd_tune(const std::string& strategy_s, int L, int L_ref, double c0_ref, double abar_ref,
             double cbar) {
  const TuneStrategy strategy = tune_strategy_from_string(strategy_s);
  SystemTemplate base{laplacian_array(1), absolute_array(1, 1.0), Controller::DapiNoisy,
                      laplacian_array(1, abar_ref), c0_ref, 0.0};
  const TuneReference ref{L_ref, c0_ref, abar_ref, cbar};
  const SystemTemplate tuned = tune(strategy, L, ref, base);
  json out;
  out["strategy"] = strategy_s;
  out["L"] = L;
  out["c0"] = tuned.c0;
  if (tuned.a) {
    out["abar"] = tuned.a->beta();
    out["q_A"] = tuned.a->window();
    out["a"] = json::parse(kernel_to_json(*tuned.a));
  }
  out["meta"] = {{"latcoh_version", kVersion}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_lemma5(double a_min, double cbar, const std::string& L_csv,
               const std::string& out_path) {
  const std::vector<int> Ls = parse_size_list(L_csv);
  const auto rows = lemma5_check(a_min, cbar, Ls);
  json config{{"a_min", a_min}, {"cbar", cbar}, {"L_list", Ls}};
  write_output(out_path, lemma5_to_csv(rows, csv_meta("lemma5", config)));
  return 0;
}

struct SimConfig {
  std::optional<SystemSpec> torus;
  std::optional<GraphSystem> graph;
  std::optional<PlatoonSystem> platoon;
  ErrorOutput output = ErrorOutput::GlobalError;
  SimOptions opt;
  double burn_in = -1.0;  // < 0: default 20% of T
  double min_time_constants = 10.0;
};

SimConfig parse_sim_config(const json& j, const fs::path& base_dir,
                           const std::map<std::string, std::string>& ov) {
  SimConfig cfg;
  auto get_num = [&](const json& node, const char* key, double fallback) {
    auto it = ov.find(key);
    if (it != ov.end()) return to_number(key, it->second);
    return node.value(key, fallback);
  };

  if (j.contains("system")) {
    cfg.torus = parse_torus_config(j.at("system"), base_dir, ov).spec;
    cfg.output = output_from_string(j.at("system").value("output", "global"));
  } else if (j.contains("graph")) {
    const json& gj = j.at("graph");
    fs::path p(gj.at("file").get<std::string>());
    if (p.is_relative()) p = base_dir / p;
    GraphSystem g = load_graph_file(p.string());
    g.inertia = gj.value("inertia", 1.0);
    g.damping = gj.value("damping", 1.0);
    g.controller = controller_from_string(gj.value("controller", "static"));
    g.c0 = get_num(gj, "c0", 1.0);
    g.epsilon = get_num(gj, "epsilon", 0.0);
    cfg.graph = g;
    cfg.output = output_from_string(gj.value("output", "global"));
  } else if (j.contains("platoon")) {
    const json& pj = j.at("platoon");
    auto seed_it = ov.find("seed");
    const std::uint64_t gains_seed = seed_it != ov.end()
                                         ? static_cast<std::uint64_t>(
                                               to_number("seed", seed_it->second))
                                         : pj.value("seed", 0ull);
    PlatoonSystem p = platoon_system(pj.value("n", 100), pj.value("gain_low", 0.5),
                                     pj.value("gain_high", 1.5), pj.value("g_o", 1.0),
                                     gains_seed);
    p.controller = controller_from_string(pj.value("controller", "static"));
    p.c0 = get_num(pj, "c0", 1.0);
    p.epsilon = get_num(pj, "epsilon", 0.0);
    p.comm_gain = pj.value("comm_gain", 1.0);
    p.comm_window = pj.value("comm_window", 1);
    cfg.platoon = p;
    cfg.output = output_from_string(pj.value("output", "global"));
  } else {
    throw ConfigError("simulate spec needs a 'system', 'graph' or 'platoon' section");
  }

  const json sj = j.value("sim", json::object());
  cfg.opt.dt = get_num(sj, "dt", 0.01);
  cfg.opt.T = get_num(sj, "T", 100.0);
  auto it = ov.find("seed");
  cfg.opt.seed = it != ov.end() ? static_cast<std::uint64_t>(to_number("seed", it->second))
                                : sj.value("seed", 0ull);
  cfg.opt.record_stride = sj.value("record_stride", 1);
  const std::string mode = sj.value("mode", "white-noise");
  if (mode == "white-noise")
    cfg.opt.mode = InputMode::WhiteNoise;
  else if (mode == "initial-condition")
    cfg.opt.mode = InputMode::InitialCondition;
  else
    throw ConfigError("sim mode must be 'white-noise' or 'initial-condition'");
  cfg.burn_in = sj.value("burn_in", -1.0);
  cfg.min_time_constants = sj.value("min_time_constants", 10.0);
  return cfg;
}

int cmd_simulate(const std::string& spec_path, const std::string& out_path,
                 const std::string& traj_path, const std::string& traj_format,
                 const std::string& energy_path, const std::vector<std::string>& sets) {
  const auto ov = parse_overrides(sets);
  const json j = load_json_file(spec_path);
  SimConfig cfg = parse_sim_config(j, fs::path(spec_path).parent_path(), ov);

  AssembledSystem sys;
  json config;
  if (cfg.torus) {
    sys = assemble(*cfg.torus);
    config["kind"] = "torus";
    config["controller"] = to_string(cfg.torus->controller);
    config["N"] = cfg.torus->shape.site_count();
  } else if (cfg.graph) {
    sys = assemble(*cfg.graph);
    config["kind"] = "graph";
    config["controller"] = to_string(cfg.graph->controller);
    config["n_nodes"] = cfg.graph->n_nodes;
    config["inertia"] = cfg.graph->inertia;
    config["damping"] = cfg.graph->damping;
    config["c0"] = cfg.graph->c0;
    config["epsilon"] = cfg.graph->epsilon;
    if (!sys.connected)
      std::cerr << "warning: physical graph is not connected\n";
  } else {
    sys = assemble(*cfg.platoon);
    config["kind"] = "platoon";
    config["controller"] = to_string(cfg.platoon->controller);
    config["n"] = cfg.platoon->n_vehicles;
    config["gains_seed"] = cfg.platoon->seed;
    config["g_o"] = cfg.platoon->g_o;
    config["c0"] = cfg.platoon->c0;
    config["epsilon"] = cfg.platoon->epsilon;
    config["comm_window"] = cfg.platoon->comm_window;
    config["comm_gain"] = cfg.platoon->comm_gain;
    // drawn couplings echoed for audit
    config["f_fwd"] = cfg.platoon->f_fwd;
    config["f_bwd"] = cfg.platoon->f_bwd;
    config["g_fwd"] = cfg.platoon->g_fwd;
    config["g_bwd"] = cfg.platoon->g_bwd;
  }
  config["dt"] = cfg.opt.dt;
  config["T"] = cfg.opt.T;
  config["seed"] = cfg.opt.seed;
  config["record_stride"] = cfg.opt.record_stride;
  config["mode"] = cfg.opt.mode == InputMode::WhiteNoise ? "white-noise" : "initial-condition";
  config["output"] = to_string(cfg.output);

  const Trajectory traj = simulate_sde(sys, cfg.opt);
  const double burn_in = cfg.burn_in >= 0.0 ? cfg.burn_in : 0.2 * cfg.opt.T;

  json out;
  out["seed"] = cfg.opt.seed;
  out["burn_in"] = burn_in;
  out["time_constant"] = traj.time_constant;
  out["samples"] = traj.times.size();
  if (cfg.opt.mode == InputMode::WhiteNoise) {
    out["empirical_variance"] =
        empirical_variance(traj, cfg.output, burn_in, cfg.min_time_constants);
  } else {
    out["response_energy"] = response_energy(traj, cfg.output);
  }
  out["meta"] = {{"latcoh_version", kVersion}, {"config", config}};

  if (!traj_path.empty()) {
    if (traj_format == "bin") {
      std::ostringstream os(std::ios::binary);
      write_trajectory_binary(traj, os);
      write_output(traj_path, os.str());
    } else {
      std::ostringstream os;
      write_trajectory_csv(traj, os);
      write_output(traj_path, os.str());
    }
  }
  if (!energy_path.empty()) {
    const auto series = output_energy_series(traj, cfg.output);
    std::ostringstream os;
    os << "time,energy\n" << std::setprecision(17);
    for (std::size_t i = 0; i < series.size(); ++i)
      os << traj.times[i] << "," << series[i] << "\n";
    write_output(energy_path, os.str());
  }

  write_output(out_path, out.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latcoh: variance scaling of distributed integral control on lattices"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string spec_path, out_path = "-", format = "json";
  std::vector<std::string> sets;
  bool per_theta = false;

  auto add_common = [&](CLI::App* cmd, bool needs_spec = true) {
    if (needs_spec) cmd->add_option("spec", spec_path, "system spec JSON file")->required();
    cmd->add_option("-o,--out", out_path, "output path ('-' = stdout)");
    cmd->add_option("--set", sets, "override key=value (c0, epsilon, L, d, seed, dt, T, strategy, cbar)");
  };

  auto* validate = app.add_subcommand("validate", "validate a system spec");
  add_common(validate);

  auto* variance = app.add_subcommand("variance", "per-site variance from closed-form densities");
  add_common(variance);
  variance->add_option("--format", format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
  variance->add_flag("--per-theta", per_theta, "include the per-frequency density table");

  std::string L_csv, fit_path = "-", fit_on = "V_N", tune_strategy;
  int L_ref = 0;
  auto* sweep = app.add_subcommand("sweep", "variance across network sizes + exponent fit");
  add_common(sweep);
  sweep->add_option("--L", L_csv, "comma-separated side lengths")->required();
  sweep->add_option("--fit-out", fit_path, "fit JSON path ('-' = stdout)");
  sweep->add_option("--fit-on", fit_on, "V_N|V_w|V_eta")
      ->check(CLI::IsMember({"V_N", "V_w", "V_eta"}));
  sweep->add_option("--tune", tune_strategy,
                    "apply a tuning strategy per size "
                    "(shrink-integral-gain|grow-averaging-gain|grow-comm-window)");
  sweep->add_option("--L-ref", L_ref, "tuning reference size (default: first L)");

  std::string strategy_s;
  int tune_L = 0, tune_L_ref = 2;
  double c0_ref = 1.0, abar_ref = 1.0, cbar = 1.0;
  auto* tunec = app.add_subcommand("tune", "print re-tuned controller parameters");
  tunec->add_option("--strategy", strategy_s, "tuning strategy")->required();
  tunec->add_option("--L", tune_L, "target size")->required();
  tunec->add_option("--L-ref", tune_L_ref, "reference size");
  tunec->add_option("--c0-ref", c0_ref, "reference integral gain");
  tunec->add_option("--abar-ref", abar_ref, "reference averaging gain");
  tunec->add_option("--cbar", cbar, "window growth constant");

  double a_min = 1.0, l5_cbar = 1.0;
  std::string l5_L = "8,16,32,64,128,256,512";
  auto* lemma5 = app.add_subcommand("lemma5", "averaging-symbol lower-bound table");
  lemma5->add_option("--a-min", a_min, "uniform averaging gain");
  lemma5->add_option("--cbar", l5_cbar, "window growth constant");
  lemma5->add_option("--L", l5_L, "comma-separated side lengths");
  lemma5->add_option("-o,--out", out_path, "output path ('-' = stdout)");

  std::string traj_path, traj_format = "csv", energy_path;
  auto* simulate = app.add_subcommand("simulate", "time-domain stochastic simulation");
  add_common(simulate);
  simulate->add_option("--traj", traj_path, "trajectory output path");
  simulate->add_option("--traj-format", traj_format, "csv|bin")
      ->check(CLI::IsMember({"csv", "bin"}));
  simulate->add_option("--energy", energy_path, "output-energy time series CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints help or the usage error
    return rc == 0 ? 0 : 1;
  }

  try {
    if (validate->parsed()) return cmd_validate(spec_path, sets);
    if (variance->parsed()) return cmd_variance(spec_path, out_path, format, per_theta, sets);
    if (sweep->parsed())
      return cmd_sweep(spec_path, L_csv, out_path, fit_path, fit_on, tune_strategy, L_ref, sets);
    if (tunec->parsed()) return cmd_tune(strategy_s, tune_L, tune_L_ref, c0_ref, abar_ref, cbar);
    if (lemma5->parsed()) return cmd_lemma5(a_min, l5_cbar, l5_L, out_path);
    if (simulate->parsed())
      return cmd_simulate(spec_path, out_path, traj_path, traj_format, energy_path, sets);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
