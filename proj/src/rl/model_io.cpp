#include "marlsig/rl/model_io.hpp"

#include <fstream>

namespace marlsig::rl {

nlohmann::json model_to_json(const Mlp& mlp, const ModelMetadata& meta) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : mlp.layers()) {
    nlohmann::json w = nlohmann::json::array();
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) w.push_back(layer.weights(r, c));
    std::vector<double> b(layer.bias.data(), layer.bias.data() + layer.bias.size());
    layers.push_back({{"weights", std::move(w)}, {"bias", std::move(b)}});
  }
  return {{"format", "marlsig-mlp-1"},
          {"widths", mlp.widths()},
          {"layers", std::move(layers)},
          {"metadata", {{"role", meta.role}, {"episodes", meta.episodes}, {"config_hash", meta.config_hash}}}};
}

ModelFile model_from_json(const nlohmann::json& j) {
  try {
    const auto widths = j.at("widths").get<std::vector<int>>();
    if (widths.size() < 2) throw ModelFormatError("model needs at least two widths");
    for (int w : widths)
      if (w <= 0) throw ModelFormatError("non-positive layer width");
    ModelFile out{Mlp(widths), {}};
    const auto& layers = j.at("layers");
    if (layers.size() != widths.size() - 1) throw ModelFormatError("layer count does not match widths");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto& dst = out.mlp.layers()[l];
      const auto w = layers[l].at("weights").get<std::vector<double>>();
      const auto b = layers[l].at("bias").get<std::vector<double>>();
      if (w.size() != static_cast<std::size_t>(dst.weights.size()) ||
          b.size() != static_cast<std::size_t>(dst.bias.size()))
        throw ModelFormatError("layer " + std::to_string(l) + " has wrong parameter count");
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < dst.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < dst.weights.cols(); ++c) dst.weights(r, c) = w[k++];
      for (std::size_t i = 0; i < b.size(); ++i) dst.bias(static_cast<Eigen::Index>(i)) = b[i];
    }
    if (!out.mlp.all_finite()) throw ModelFormatError("non-finite parameter");
    if (j.contains("metadata")) {
      const auto& m = j.at("metadata");
      out.metadata.role = m.value("role", "");
      out.metadata.episodes = m.value("episodes", 0);
      out.metadata.config_hash = m.value("config_hash", "");
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("malformed model: ") + e.what());
  }
}

void save_model(const std::string& path, const Mlp& mlp, const ModelMetadata& meta) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file " + path);
  out << model_to_json(mlp, meta).dump() << '\n';
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelFormatError("cannot read model file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("malformed model: ") + e.what());
  }
  return model_from_json(j);
}

}  // namespace marlsig::rl
