#include "latcoh/kernel_io.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "latcoh/errors.hpp"

namespace latcoh {

using nlohmann::json;

FeedbackArray parse_kernel_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("kernel JSON parse failure: ") + e.what());
  }
  if (!j.is_object() || !j.contains("kind") || !j.contains("entries"))
    throw Error("kernel JSON needs 'kind' and 'entries'");

  const std::string kind_s = j.at("kind").get<std::string>();
  KernelKind kind;
  if (kind_s == "relative")
    kind = KernelKind::Relative;
  else if (kind_s == "absolute")
    kind = KernelKind::Absolute;
  else
    throw Error("kernel kind must be 'relative' or 'absolute', got '" + kind_s + "'");

  std::vector<std::vector<int>> offsets;
  std::vector<double> gains;
  for (const auto& e : j.at("entries")) {
    if (!e.contains("offset") || !e.contains("gain"))
      throw Error("kernel entry needs 'offset' and 'gain'");
    offsets.push_back(e.at("offset").get<std::vector<int>>());
    gains.push_back(e.at("gain").get<double>());
  }
  return make_feedback_array(offsets, gains, kind);
}

FeedbackArray load_kernel_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open kernel file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_kernel_json(ss.str());
}

std::string kernel_to_json(const FeedbackArray& array) {
  json j;
  j["kind"] = array.kind() == KernelKind::Relative ? "relative" : "absolute";
  j["entries"] = json::array();
  for (std::size_t i = 0; i < array.size(); ++i) {
    auto off = array.offset(i);
    j["entries"].push_back(
        {{"offset", std::vector<int>(off.begin(), off.end())}, {"gain", array.gain(i)}});
  }
  return j.dump(2);
}

}  // namespace latcoh
