#pragma once

// Model files are single JSON documents tagged "phasornet-model/1". Reals are
// written with 17 significant digits so a save/load round trip is bit-exact.

#include <filesystem>
#include <string>

#include "phasornet/network.hpp"

namespace phasornet {

inline constexpr const char* kModelFormat = "phasornet-model/1";

std::string model_to_json(const Model& model);
Model model_from_json(const std::string& text);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace phasornet
