#include "rankalign/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

#include "rankalign/error.hpp"
#include "rankalign/rng.hpp"

namespace rankalign {

namespace {

std::string numbered(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

int digits(std::size_t n) {
  int d = 1;
  for (; n >= 10; n /= 10) ++d;
  return d;
}

}  // namespace

LayerSchema make_schema(const std::vector<std::size_t>& channels) {
  std::vector<LayerSpec> specs;
  for (std::size_t l = 0; l < channels.size(); ++l) specs.push_back({"conv" + std::to_string(l + 1), channels[l]});
  return LayerSchema(std::move(specs));
}

SynthData generate(const SynthConfig& config) {
  if (config.images_per_set < 2) throw ValidationError("images_per_set must be >= 2");
  if (config.set_count == 0) throw ValidationError("set_count must be positive");
  if (config.schema.layer_count() == 0) throw ValidationError("synthetic schema has no layers");
  if (!(config.value_scale > 0.0) || !std::isfinite(config.value_scale)) throw ValidationError("value_scale must be > 0");

  const auto& schema = config.schema;
  SplitMix64 rng(config.seed);

  std::vector<double> hidden_w(schema.parameter_count());
  for (auto& w : hidden_w) w = -std::log1p(-rng.uniform());
  SynthData out{WeightHead(schema, std::move(hidden_w)), DistanceArchive(schema), {}};

  const int set_width = std::max(4, digits(config.set_count - 1));
  const int image_width = std::max(2, digits(config.images_per_set - 1));
  out.sets.reserve(config.set_count);
  for (std::size_t s = 0; s < config.set_count; ++s) {
    RankedSet set;
    set.set_id = numbered("set", s, set_width);
    set.target_id = numbered("tgt", s, set_width);
    std::vector<double> dist;
    for (std::size_t i = 0; i < config.images_per_set; ++i) {
      DistanceTensor t{set.set_id, numbered("img", i, image_width), {}};
      t.values.resize(schema.layer_count());
      for (std::size_t l = 0; l < schema.layer_count(); ++l) {
        t.values[l].resize(schema.channels(l));
        for (auto& v : t.values[l]) v = static_cast<float>(rng.uniform() * config.value_scale);
      }
      dist.push_back(distance(out.hidden, t));
      set.images.push_back(t.image_id);
      out.archive.insert(std::move(t));
    }
    std::vector<std::size_t> order(config.images_per_set);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    for (std::size_t k = 0; k < config.noise_swaps; ++k) {
      const auto pos = static_cast<std::size_t>(rng.below(config.images_per_set - 1));
      std::swap(order[pos], order[pos + 1]);
    }
    for (auto idx : order) set.human_order.push_back(set.images[idx]);
    out.sets.push_back(std::move(set));
  }
  return out;
}

WeightHead permuted_head(const WeightHead& head, std::uint64_t seed) {
  const auto& schema = head.schema();
  std::vector<double> w(head.weights().begin(), head.weights().end());
  SplitMix64 rng(seed);
  for (std::size_t l = 0; l < schema.layer_count(); ++l) {
    shuffle(std::span<double>(w.data() + schema.offset(l), schema.channels(l)), rng);
  }
  return WeightHead(schema, std::move(w));
}

}  // namespace rankalign
