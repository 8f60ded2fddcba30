#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace rankalign {

struct LayerSpec {
  std::string name;
  std::size_t channel_count = 0;

  bool operator==(const LayerSpec&) const = default;
};

/// Ordered backbone taps and their channel widths. Immutable once built.
class LayerSchema {
 public:
  LayerSchema() = default;
  /// Throws ValidationError on duplicate names, empty names or zero channels.
  explicit LayerSchema(std::vector<LayerSpec> layers);

  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  std::size_t layer_count() const noexcept { return layers_.size(); }
  std::size_t channels(std::size_t layer) const { return layers_.at(layer).channel_count; }
  /// Offset of the layer's first channel in the flattened parameter vector.
  std::size_t offset(std::size_t layer) const { return offsets_.at(layer); }
  std::size_t parameter_count() const noexcept { return total_; }

  bool operator==(const LayerSchema& other) const noexcept { return layers_ == other.layers_; }

 private:
  std::vector<LayerSpec> layers_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
};

/// Spatially averaged squared normalized feature differences between a
/// set's target and one of its images, one vector per layer.
struct DistanceTensor {
  std::string set_id;
  std::string image_id;
  std::vector<std::vector<float>> values;

  bool operator==(const DistanceTensor&) const = default;
};

/// Throws ValidationError naming the first layer whose width disagrees, or a
/// negative / non-finite entry.
void check_conforms(const LayerSchema& schema, const DistanceTensor& tensor);

/// Non-negative per-layer, per-channel weights; flattened in schema order.
class WeightHead {
 public:
  WeightHead() = default;
  /// Throws ValidationError if the size disagrees with the schema or any
  /// weight is negative or non-finite.
  WeightHead(LayerSchema schema, std::vector<double> weights);

  static WeightHead constant(LayerSchema schema, double value);

  const LayerSchema& schema() const noexcept { return schema_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const double> layer(std::size_t l) const {
    return std::span<const double>(weights_).subspan(schema_.offset(l), schema_.channels(l));
  }

  bool operator==(const WeightHead&) const = default;

 private:
  LayerSchema schema_;
  std::vector<double> weights_;
};

/// Σ_l Σ_ch w[l][ch]·t[l][ch].
double distance(const WeightHead& head, const DistanceTensor& tensor);

/// ∂distance/∂w, which is the tensor itself flattened in schema order.
std::vector<double> distance_gradient(const WeightHead& head, const DistanceTensor& tensor);

/// Flattens a tensor to doubles in schema order (no conformance check).
std::vector<double> flatten(const DistanceTensor& tensor);

WeightHead load_weights(const std::filesystem::path& path);
void save_weights(const WeightHead& head, const std::filesystem::path& path);

// Text forms used by load/save, exposed for tests and embedding in reports.
WeightHead weights_from_string(const std::string& text);
std::string weights_to_string(const WeightHead& head);

}  // namespace rankalign
