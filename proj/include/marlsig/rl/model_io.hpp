#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "marlsig/rl/mlp.hpp"

namespace marlsig::rl {

struct ModelMetadata {
  std::string role;  // e.g. "background_A", "tsp_B"
  int episodes = 0;
  std::string config_hash;
};

struct ModelFile {
  Mlp mlp;
  ModelMetadata metadata;
};

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json model_to_json(const Mlp& mlp, const ModelMetadata& meta);
ModelFile model_from_json(const nlohmann::json& j);

void save_model(const std::string& path, const Mlp& mlp, const ModelMetadata& meta);
ModelFile load_model(const std::string& path);

}  // namespace marlsig::rl
