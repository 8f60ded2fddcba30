#include "rankalign/model.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

#include "rankalign/error.hpp"
#include "rankalign/io.hpp"

namespace rankalign {

namespace {

constexpr int kWeightFormatVersion = 1;

void check_same_schema(const LayerSchema& schema, const DistanceTensor& tensor) {
  if (tensor.values.size() != schema.layer_count()) {
    throw ValidationError("tensor (" + tensor.set_id + ", " + tensor.image_id + ") has " +
                          std::to_string(tensor.values.size()) + " layers, schema has " +
                          std::to_string(schema.layer_count()));
  }
  for (std::size_t l = 0; l < schema.layer_count(); ++l) {
    if (tensor.values[l].size() != schema.channels(l)) {
      throw ValidationError("layer '" + schema.layers()[l].name + "' of tensor (" + tensor.set_id +
                            ", " + tensor.image_id + ") has " +
                            std::to_string(tensor.values[l].size()) + " channels, expected " +
                            std::to_string(schema.channels(l)));
    }
  }
}

}  // namespace

LayerSchema::LayerSchema(std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
  std::set<std::string> seen;
  offsets_.reserve(layers_.size());
  for (const auto& spec : layers_) {
    if (spec.name.empty()) throw ValidationError("layer name must not be empty");
    if (!seen.insert(spec.name).second) throw ValidationError("duplicate layer name '" + spec.name + "'");
    if (spec.channel_count == 0) throw ValidationError("layer '" + spec.name + "' has zero channels");
    offsets_.push_back(total_);
    total_ += spec.channel_count;
  }
}

void check_conforms(const LayerSchema& schema, const DistanceTensor& tensor) {
  check_same_schema(schema, tensor);
  for (std::size_t l = 0; l < schema.layer_count(); ++l) {
    for (float v : tensor.values[l]) {
      if (!std::isfinite(v) || v < 0.0f) {
        throw ValidationError("layer '" + schema.layers()[l].name + "' of tensor (" + tensor.set_id +
                              ", " + tensor.image_id + ") holds a negative or non-finite value");
      }
    }
  }
}

WeightHead::WeightHead(LayerSchema schema, std::vector<double> weights)
    : schema_(std::move(schema)), weights_(std::move(weights)) {
  if (weights_.size() != schema_.parameter_count()) {
    throw ValidationError("weight count " + std::to_string(weights_.size()) +
                          " does not match schema parameter count " +
                          std::to_string(schema_.parameter_count()));
  }
  for (std::size_t l = 0; l < schema_.layer_count(); ++l) {
    for (double w : layer(l)) {
      if (!std::isfinite(w)) throw ValidationError("layer '" + schema_.layers()[l].name + "' has a non-finite weight");
      if (w < 0.0) throw ValidationError("layer '" + schema_.layers()[l].name + "' has a negative weight");
    }
  }
}

WeightHead WeightHead::constant(LayerSchema schema, double value) {
  const auto n = schema.parameter_count();
  return WeightHead(std::move(schema), std::vector<double>(n, value));
}

double distance(const WeightHead& head, const DistanceTensor& tensor) {
  const auto& schema = head.schema();
  check_same_schema(schema, tensor);
  double total = 0.0;
  for (std::size_t l = 0; l < schema.layer_count(); ++l) {
    const auto w = head.layer(l);
    const auto& t = tensor.values[l];
    for (std::size_t c = 0; c < w.size(); ++c) total += w[c] * static_cast<double>(t[c]);
  }
  return total;
}

std::vector<double> distance_gradient(const WeightHead& head, const DistanceTensor& tensor) {
  check_same_schema(head.schema(), tensor);
  return flatten(tensor);
}

std::vector<double> flatten(const DistanceTensor& tensor) {
  std::vector<double> out;
  for (const auto& layer : tensor.values) out.insert(out.end(), layer.begin(), layer.end());
  return out;
}

WeightHead weights_from_string(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("weight file does not parse: ") + e.what());
  }
  try {
    if (doc.at("format_version").get<int>() != kWeightFormatVersion) {
      throw ValidationError("unsupported weight format_version " + doc.at("format_version").dump());
    }
    std::vector<LayerSpec> specs;
    std::vector<double> weights;
    for (const auto& layer : doc.at("layers")) {
      LayerSpec spec{layer.at("name").get<std::string>(), layer.at("channel_count").get<std::size_t>()};
      const auto values = layer.at("weights").get<std::vector<double>>();
      if (values.size() != spec.channel_count) {
        throw ValidationError("layer '" + spec.name + "' declares " + std::to_string(spec.channel_count) +
                              " channels but lists " + std::to_string(values.size()) + " weights");
      }
      weights.insert(weights.end(), values.begin(), values.end());
      specs.push_back(std::move(spec));
    }
    return WeightHead(LayerSchema(std::move(specs)), std::move(weights));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("weight file schema violation: ") + e.what());
  }
}

std::string weights_to_string(const WeightHead& head) {
  nlohmann::json layers = nlohmann::json::array();
  const auto& schema = head.schema();
  for (std::size_t l = 0; l < schema.layer_count(); ++l) {
    const auto w = head.layer(l);
    layers.push_back({{"name", schema.layers()[l].name},
                      {"channel_count", schema.channels(l)},
                      {"weights", std::vector<double>(w.begin(), w.end())}});
  }
  nlohmann::json doc = {{"format_version", kWeightFormatVersion}, {"layers", std::move(layers)}};
  return doc.dump(2) + "\n";
}

WeightHead load_weights(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  try {
    return weights_from_string(text);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_weights(const WeightHead& head, const std::filesystem::path& path) {
  write_text_file(path, weights_to_string(head));
}

}  // namespace rankalign
