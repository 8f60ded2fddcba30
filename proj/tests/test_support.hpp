#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "rankalign/model.hpp"
#include "rankalign/rng.hpp"

namespace rankalign::testing {

// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("rankalign_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline DistanceTensor random_tensor(const LayerSchema& schema, SplitMix64& rng, std::string set_id = "s",
                                    std::string image_id = "i", double scale = 1.0) {
  DistanceTensor t{std::move(set_id), std::move(image_id), {}};
  for (std::size_t l = 0; l < schema.layer_count(); ++l) {
    t.values.emplace_back(schema.channels(l));
    for (auto& v : t.values.back()) v = static_cast<float>(rng.uniform() * scale);
  }
  return t;
}

inline WeightHead random_head(const LayerSchema& schema, SplitMix64& rng, double scale = 1.0) {
  std::vector<double> w(schema.parameter_count());
  for (auto& x : w) x = rng.uniform() * scale;
  return WeightHead(schema, std::move(w));
}

}  // namespace rankalign::testing
