#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace rankalign {

inline constexpr const char* kToolVersion = "0.1.0";

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Reproducibility record written beside every command's outputs.
struct RunManifest {
  std::string command;
  std::string config_json;  // serialized JSON object of every effective setting
  std::vector<std::pair<std::string, std::filesystem::path>> inputs;  // role -> path
  std::vector<std::filesystem::path> outputs;
  double wall_seconds = 0.0;
};

/// Writes the manifest, hashing every input. Timestamp fields are the only
/// content that differs between identical runs.
void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

}  // namespace rankalign
