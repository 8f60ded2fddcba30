#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "rankalign/error.hpp"
#include "rankalign/io.hpp"
#include "rankalign/model.hpp"
#include "test_support.hpp"

using namespace rankalign;
using rankalign::testing::random_head;
using rankalign::testing::random_tensor;

namespace {

const LayerSchema kThreeLayers({{"conv1", 4}, {"conv2", 7}, {"conv3", 3}});

// Independent accumulation: walk the flat weight vector with a running index.
double brute_force_distance(const WeightHead& head, const DistanceTensor& t) {
  const auto w = head.weights();
  std::size_t idx = 0;
  double total = 0.0;
  for (std::size_t l = 0; l < t.values.size(); ++l)
    for (std::size_t c = 0; c < t.values[l].size(); ++c) total += w[idx++] * double(t.values[l][c]);
  return total;
}

WeightHead with_weights(const WeightHead& h, std::vector<double> w) { return WeightHead(h.schema(), std::move(w)); }

}  // namespace

TEST_CASE("schema rejects duplicate names and empty layers") {
  CHECK_THROWS_AS(LayerSchema({{"a", 2}, {"a", 3}}), ValidationError);
  CHECK_THROWS_AS(LayerSchema({{"a", 0}}), ValidationError);
  CHECK(kThreeLayers.parameter_count() == 14);
  CHECK(kThreeLayers.offset(2) == 11);
}

TEST_CASE("distance: trivial cases") {
  SplitMix64 rng(1);
  const auto t = random_tensor(kThreeLayers, rng);
  CHECK(distance(WeightHead::constant(kThreeLayers, 0.0), t) == 0.0);

  const LayerSchema one({{"only", 1}});
  const WeightHead h(one, {2.0});
  const DistanceTensor v{"s", "i", {{0.3f}}};
  CHECK(distance(h, v) == doctest::Approx(2.0 * double(0.3f)).epsilon(1e-15));
  CHECK(distance(h, v) == doctest::Approx(0.6).epsilon(1e-7));
}

TEST_CASE("distance matches brute-force accumulation on seeded inputs") {
  SplitMix64 rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const auto h = random_head(kThreeLayers, rng, 3.0);
    const auto t = random_tensor(kThreeLayers, rng);
    CHECK(distance(h, t) == doctest::Approx(brute_force_distance(h, t)).epsilon(1e-14));
  }
}

TEST_CASE("schema mismatch names the offending layer") {
  SplitMix64 rng(3);
  const auto h = WeightHead::constant(kThreeLayers, 1.0);
  auto t = random_tensor(kThreeLayers, rng);
  t.values[1].pop_back();
  try {
    (void)distance(h, t);
    FAIL("expected a schema error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("conv2") != std::string::npos);
  }
  CHECK_THROWS_AS((void)distance_gradient(h, t), ValidationError);
}

TEST_CASE("gradient is the tensor and agrees with central differences") {
  const auto h = WeightHead::constant(kThreeLayers, 0.5);
  DistanceTensor ones{"s", "i", {std::vector<float>(4, 1.f), std::vector<float>(7, 1.f), std::vector<float>(3, 1.f)}};
  const auto g1 = distance_gradient(h, ones);
  CHECK(std::all_of(g1.begin(), g1.end(), [](double g) { return g == 1.0; }));

  DistanceTensor zeros{"s", "i", {std::vector<float>(4, 0.f), std::vector<float>(7, 0.f), std::vector<float>(3, 0.f)}};
  const auto g0 = distance_gradient(h, zeros);
  CHECK(std::all_of(g0.begin(), g0.end(), [](double g) { return g == 0.0; }));

  SplitMix64 rng(7);
  const double eps = 1e-4;
  for (int trial = 0; trial < 20; ++trial) {
    const auto head = random_head(kThreeLayers, rng);
    const auto t = random_tensor(kThreeLayers, rng);
    const auto g = distance_gradient(head, t);
    std::vector<double> w(head.weights().begin(), head.weights().end());
    for (std::size_t i = 0; i < w.size(); ++i) {
      auto plus = w, minus = w;
      plus[i] += eps;
      minus[i] = std::max(0.0, minus[i] - eps);
      const double step = plus[i] - minus[i];
      const double fd = (distance(with_weights(head, plus), t) - distance(with_weights(head, minus), t)) / step;
      CHECK(std::fabs(fd - g[i]) <= 1e-6 * std::max(1.0, std::fabs(g[i])));
    }
  }
}

TEST_CASE("distance properties: non-negative, linear, rank-scale invariant") {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = random_head(kThreeLayers, rng);
    const auto b = random_head(kThreeLayers, rng);
    const auto t = random_tensor(kThreeLayers, rng);
    const double alpha = 0.1 + 5.0 * rng.uniform();
    CHECK(distance(a, t) >= 0.0);

    std::vector<double> scaled, summed;
    for (std::size_t i = 0; i < a.weights().size(); ++i) {
      scaled.push_back(alpha * a.weights()[i]);
      summed.push_back(a.weights()[i] + b.weights()[i]);
    }
    CHECK(distance(with_weights(a, scaled), t) == doctest::Approx(alpha * distance(a, t)).epsilon(1e-12));
    CHECK(distance(with_weights(a, summed), t) == doctest::Approx(distance(a, t) + distance(b, t)).epsilon(1e-12));

    std::vector<DistanceTensor> set;
    for (int i = 0; i < 10; ++i) set.push_back(random_tensor(kThreeLayers, rng));
    const auto order_of = [&](const WeightHead& h) {
      std::vector<std::size_t> idx(set.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(), [&](auto x, auto y) { return distance(h, set[x]) < distance(h, set[y]); });
      return idx;
    };
    CHECK(order_of(a) == order_of(with_weights(a, scaled)));
  }
}

TEST_CASE("weights round-trip bit-exactly and reject negatives") {
  const auto dir = rankalign::testing::scratch_dir("model");
  SplitMix64 rng(5);
  const auto h = random_head(kThreeLayers, rng, 1e3);
  save_weights(h, dir / "w.json");
  const auto back = load_weights(dir / "w.json");
  CHECK(back == h);
  CHECK(std::equal(h.weights().begin(), h.weights().end(), back.weights().begin(),
                   [](double x, double y) { return std::memcmp(&x, &y, sizeof x) == 0; }));

  const std::string negative =
      R"({"format_version": 1, "layers": [{"name": "a", "channel_count": 2, "weights": [0.5, -0.1]}]})";
  CHECK_THROWS_AS(weights_from_string(negative), ValidationError);
  CHECK_THROWS_AS(weights_from_string(R"({"format_version": 2, "layers": []})"), ValidationError);
  CHECK_THROWS_AS(weights_from_string(R"({"format_version": 1, "layers": [{"name": "a", "channel_count": 3, "weights": [1, 2]}]})"),
                  ValidationError);
  CHECK_THROWS_AS(weights_from_string("{not json"), ValidationError);
  CHECK_THROWS_AS(load_weights(dir / "missing.json"), IoError);
}

TEST_CASE("weight head rejects negative and mis-sized weights") {
  CHECK_THROWS_AS(WeightHead(kThreeLayers, std::vector<double>(13, 1.0)), ValidationError);
  std::vector<double> w(14, 1.0);
  w[3] = -1e-12;
  CHECK_THROWS_AS(WeightHead(kThreeLayers, w), ValidationError);
}
