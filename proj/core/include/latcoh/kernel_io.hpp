#pragma once

#include <string>

#include "latcoh/lattice.hpp"

namespace latcoh {

/// Kernel definition format:
/// {"kind": "relative"|"absolute",
///  "entries": [{"offset": [k1, ..., kd], "gain": g}, ...]}
/// Offsets omitted are zero.
FeedbackArray parse_kernel_json(const std::string& text);
FeedbackArray load_kernel_file(const std::string& path);
std::string kernel_to_json(const FeedbackArray& array);

}  // namespace latcoh
