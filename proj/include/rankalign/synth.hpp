#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rankalign/dataset.hpp"
#include "rankalign/distx.hpp"
#include "rankalign/model.hpp"

namespace rankalign {

struct SynthConfig {
  std::size_t set_count = 200;
  std::size_t images_per_set = 10;
  LayerSchema schema;
  std::size_t noise_swaps = 0;  // random adjacent transpositions applied to each human order
  std::uint64_t seed = 0;
  double value_scale = 0.1;     // tensor entries ~ U[0, value_scale)
};

/// Schema "conv1".."convL" with the given channel counts.
LayerSchema make_schema(const std::vector<std::size_t>& channels);

struct SynthData {
  WeightHead hidden;
  DistanceArchive archive;
  std::vector<RankedSet> sets;
};

/// Planted model: hidden weights ~ Exp(1), tensors uniform, and each set's
/// human order is the ascending hidden-head distance (stable on ties) followed
/// by `noise_swaps` adjacent transpositions at uniformly drawn positions.
SynthData generate(const SynthConfig& config);

/// Reorders the hidden head's channels with a seeded permutation within each
/// layer; used as a deliberately misaligned comparison head.
WeightHead permuted_head(const WeightHead& head, std::uint64_t seed);

}  // namespace rankalign
