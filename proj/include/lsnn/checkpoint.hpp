#pragma once

// JSON parameter checkpoints. Doubles are written with shortest round-trip
// formatting, so load(save(p)) is bit-exact.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "lsnn/error.hpp"
#include "lsnn/network.hpp"

namespace lsnn {

inline constexpr int kCheckpointFormat = 1;

struct Checkpoint {
  MlpParameters params;
  std::uint64_t seed = 0;
  int block = 1;
};

inline nlohmann::json checkpoint_to_json(const Checkpoint& c) {
  nlohmann::json j;
  j["format_version"] = kCheckpointFormat;
  j["layer_dims"] = c.params.layer_dims;
  j["seed"] = c.seed;
  j["block"] = c.block;
  nlohmann::json weights = nlohmann::json::array(), biases = nlohmann::json::array();
  for (int k = 0; k < c.params.layers(); ++k) {
    const Matrix& w = c.params.weights[k];
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index col = 0; col < w.cols(); ++col) rows.push_back(w(r, col));
    }
    weights.push_back(std::move(rows));
    const Vector& b = c.params.biases[k];
    biases.push_back(std::vector<double>(b.data(), b.data() + b.size()));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format_version").get<int>() != kCheckpointFormat) {
      throw InvalidArgument("checkpoint: unsupported format version");
    }
    Checkpoint c;
    c.params = MlpParameters::zeros(j.at("layer_dims").get<std::vector<int>>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.block = j.at("block").get<int>();
    const auto& weights = j.at("weights");
    const auto& biases = j.at("biases");
    if (static_cast<int>(weights.size()) != c.params.layers() ||
        static_cast<int>(biases.size()) != c.params.layers()) {
      throw InvalidArgument("checkpoint: layer count does not match layer_dims");
    }
    for (int k = 0; k < c.params.layers(); ++k) {
      Matrix& w = c.params.weights[k];
      const auto flat = weights[k].get<std::vector<double>>();
      const auto b = biases[k].get<std::vector<double>>();
      if (static_cast<Eigen::Index>(flat.size()) != w.size() ||
          static_cast<Eigen::Index>(b.size()) != c.params.biases[k].size()) {
        throw InvalidArgument("checkpoint: array size does not match layer_dims");
      }
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        for (Eigen::Index col = 0; col < w.cols(); ++col) w(r, col) = flat[r * w.cols() + col];
      }
      for (std::size_t i = 0; i < b.size(); ++i) c.params.biases[k][static_cast<Eigen::Index>(i)] = b[i];
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const std::string& path, const Checkpoint& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("checkpoint: cannot write " + path);
  out << checkpoint_to_json(c).dump(1) << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("checkpoint: cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("checkpoint: ") + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace lsnn
