#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rankalign/model.hpp"

namespace rankalign {

/// FDX version 1, little-endian throughout:
///
///   header  "FDX1" | u32 L | L x (u16 name_len, name, u32 channels) | u64 R
///   record  u16 set_len, set_id | u16 image_len, image_id | per layer: channels x f32
///
/// Records are written in lexicographic (set_id, image_id) byte order.
class DistanceArchive {
 public:
  using Key = std::pair<std::string, std::string>;  // (set_id, image_id)

  DistanceArchive() = default;
  explicit DistanceArchive(LayerSchema schema) : schema_(std::move(schema)) {}

  const LayerSchema& schema() const noexcept { return schema_; }
  std::size_t size() const noexcept { return records_.size(); }
  const std::map<Key, DistanceTensor>& records() const noexcept { return records_; }

  /// Validates against the schema; throws ValidationError on a duplicate key.
  void insert(DistanceTensor tensor);

  const DistanceTensor* find(const std::string& set_id, const std::string& image_id) const;
  /// Throws ValidationError naming (set_id, image_id) when absent.
  const DistanceTensor& at(const std::string& set_id, const std::string& image_id) const;

  bool operator==(const DistanceArchive&) const = default;

 private:
  LayerSchema schema_;
  std::map<Key, DistanceTensor> records_;
};

std::vector<std::uint8_t> encode_archive(const DistanceArchive& archive);
/// Throws FormatError with the byte offset of the first problem.
DistanceArchive decode_archive(std::span<const std::uint8_t> bytes);

std::uint64_t archive_header_size(const LayerSchema& schema);

DistanceArchive read_archive(const std::filesystem::path& path);
void write_archive(const DistanceArchive& archive, const std::filesystem::path& path);

}  // namespace rankalign
