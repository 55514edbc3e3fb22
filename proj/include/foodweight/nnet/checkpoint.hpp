#pragma once

// Versioned JSON checkpoint. nlohmann::json prints doubles in shortest
// round-trip form, so save -> load reproduces every parameter bit for bit.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "foodweight/error.hpp"
#include "foodweight/features.hpp"
#include "foodweight/nnet/model.hpp"
#include "foodweight/nnet/train.hpp"

namespace foodweight::nnet {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  WeightModel model;
  std::optional<TrainConfig> config;
};

namespace detail {

inline nlohmann::json layer_to_json(const DenseLayer& l) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < l.out_dim; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < l.in_dim; ++c) row.push_back(l.w(r, c));
    rows.push_back(std::move(row));
  }
  return {{"weights", std::move(rows)}, {"bias", l.bias}};
}

inline DenseLayer layer_from_json(const nlohmann::json& j, const char* name) {
  const auto& rows = j.at("weights");
  if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
    throw DimensionMismatch(std::string(name) + ": weights must be a non-empty nested array");
  }
  const int out = static_cast<int>(rows.size());
  const int in = static_cast<int>(rows[0].size());
  DenseLayer l(in, out);
  for (int r = 0; r < out; ++r) {
    if (static_cast<int>(rows[r].size()) != in) throw DimensionMismatch(std::string(name) + ": ragged weights");
    for (int c = 0; c < in; ++c) l.w(r, c) = rows[r][c].get<double>();
  }
  l.bias = j.at("bias").get<std::vector<double>>();
  return l;
}

}  // namespace detail

inline nlohmann::json checkpoint_to_json(const WeightModel& m, const std::optional<TrainConfig>& cfg) {
  nlohmann::json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["class_registry"] = m.registry.names();
  j["feature_scaler"] = {{"features", {"food_type", "area", "aspect_ratio", "avg_pixel_intensity"}},
                         {"shift", m.scaler.shift},
                         {"scale", m.scaler.scale}};
  j["pixel_normalization"] = {{"mean", m.pixel_norm.mean}, {"std", m.pixel_norm.std}};
  j["backbone"] = {{"pool_size", m.params.backbone.pool_size},
                   {"channels", m.params.backbone.channels},
                   {"weights", m.params.backbone.weights},
                   {"bias", m.params.backbone.bias[0]}};
  j["layers"] = {detail::layer_to_json(m.params.layer1), detail::layer_to_json(m.params.layer2),
                 detail::layer_to_json(m.params.layer3)};
  if (cfg) {
    j["train_config"] = {{"learning_rate", cfg->learning_rate}, {"batch_size", cfg->batch_size},
                         {"epochs", cfg->epochs},               {"seed", cfg->seed},
                         {"flip_probability", cfg->flip_probability},
                         {"scaler", to_string(cfg->scaler)},    {"pool_size", cfg->pool_size},
                         {"readout_init", to_string(cfg->readout)}, {"readout_ridge", cfg->readout_ridge}};
  }
  return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw ParseError("unsupported checkpoint format_version " + std::to_string(version));
    }
    Checkpoint ck;
    WeightModel& m = ck.model;
    m.registry = ClassRegistry(j.at("class_registry").get<std::vector<std::string>>());
    m.scaler.shift = j.at("feature_scaler").at("shift").get<std::array<double, 4>>();
    m.scaler.scale = j.at("feature_scaler").at("scale").get<std::array<double, 4>>();
    m.scaler.validate();
    m.pixel_norm.mean = j.at("pixel_normalization").at("mean").get<double>();
    m.pixel_norm.std = j.at("pixel_normalization").at("std").get<double>();
    if (!(m.pixel_norm.std > 0.0)) throw ZeroStd("checkpoint pixel std must be positive");

    const auto& bb = j.at("backbone");
    m.params.backbone.pool_size = bb.at("pool_size").get<int>();
    m.params.backbone.channels = bb.at("channels").get<int>();
    m.params.backbone.weights = bb.at("weights").get<std::vector<double>>();
    m.params.backbone.bias = {bb.at("bias").get<double>()};

    const auto& layers = j.at("layers");
    if (!layers.is_array() || layers.size() != 3) throw DimensionMismatch("checkpoint must hold exactly 3 layers");
    m.params.layer1 = detail::layer_from_json(layers[0], "layer1");
    m.params.layer2 = detail::layer_from_json(layers[1], "layer2");
    m.params.layer3 = detail::layer_from_json(layers[2], "layer3");
    m.params.validate_shapes();

    if (j.contains("train_config")) {
      const auto& c = j.at("train_config");
      TrainConfig cfg;
      cfg.learning_rate = c.at("learning_rate").get<double>();
      cfg.batch_size = c.at("batch_size").get<int>();
      cfg.epochs = c.at("epochs").get<int>();
      cfg.seed = c.at("seed").get<std::uint64_t>();
      cfg.flip_probability = c.at("flip_probability").get<double>();
      cfg.scaler = parse_scaler_mode(c.at("scaler").get<std::string>());
      cfg.pool_size = c.at("pool_size").get<int>();
      cfg.readout = parse_readout_init(c.at("readout_init").get<std::string>());
      cfg.readout_ridge = c.at("readout_ridge").get<double>();
      ck.config = cfg;
    }
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const std::filesystem::path& path, const WeightModel& m,
                            const std::optional<TrainConfig>& cfg = std::nullopt) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(m, cfg).dump(2) << '\n';
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace foodweight::nnet
