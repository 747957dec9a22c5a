// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#include "stvq/config.hpp"

#include <fstream>

namespace stvq {

void VoxelConfig::validate() const {
  for (double v : base_size) {
    if (!(v > 0.0)) throw Error("base_size components must be positive");
  }
  if (scales.empty()) throw Error("scales must be non-empty");
  if (scales.front() != 1) throw Error("first scale must be 1");
  for (std::size_t i = 1; i < scales.size(); ++i) {
    if (scales[i] <= scales[i - 1]) throw Error("scales must be strictly increasing");
  }
  if (feature_dim <= 0 || key_dim <= 0 || channel_dim <= 0) {
    throw Error("feature_dim, key_dim and channel_dim must be positive");
  }
  if (history_frames < 0) throw Error("history_frames must be non-negative");
  if (score_threshold < 0.0 || score_threshold > 1.0) {
    throw Error("score_threshold must lie in [0, 1]");
  }
}

nlohmann::json VoxelConfig::to_json() const {
  return nlohmann::json{{"base_size", base_size},
                        {"scales", scales},
                        {"feature_dim", feature_dim},
                        {"key_dim", key_dim},
                        {"channel_dim", channel_dim},
                        {"history_frames", history_frames},
                        {"score_threshold", score_threshold}};
}

VoxelConfig VoxelConfig::from_json(const nlohmann::json& j) {
  VoxelConfig cfg;
  if (j.contains("base_size")) cfg.base_size = j.at("base_size").get<std::array<double, 3>>();
  if (j.contains("scales")) cfg.scales = j.at("scales").get<std::vector<int>>();
  if (j.contains("feature_dim")) cfg.feature_dim = j.at("feature_dim").get<int>();
  if (j.contains("key_dim")) cfg.key_dim = j.at("key_dim").get<int>();
  if (j.contains("channel_dim")) cfg.channel_dim = j.at("channel_dim").get<int>();
  if (j.contains("history_frames")) cfg.history_frames = j.at("history_frames").get<int>();
  if (j.contains("score_threshold")) cfg.score_threshold = j.at("score_threshold").get<double>();
  cfg.validate();
  return cfg;
}

VoxelConfig VoxelConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("invalid config JSON in " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

void VoxelConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write config file: " + path.string());
  out << to_json().dump(2) << "\n";
}

}  // namespace stvq
