#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "rankalign/alignment.hpp"
#include "rankalign/stats.hpp"
#include "rankalign/synth.hpp"

using namespace rankalign;

namespace {

SynthConfig config(std::size_t noise, std::uint64_t seed, std::size_t sets = 30) {
  SynthConfig c;
  c.set_count = sets;
  c.images_per_set = 10;
  c.schema = make_schema({8, 16, 32});
  c.noise_swaps = noise;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("noise-free human orders are the hidden-head rankings") {
  const auto data = generate(config(0, 1));
  for (const auto& set : data.sets) {
    std::vector<double> d;
    for (const auto& id : set.human_order) d.push_back(distance(data.hidden, data.archive.at(set.set_id, id)));
    CHECK(std::is_sorted(d.begin(), d.end()));
  }
  const auto report = evaluate(data.hidden, data.archive, data.sets);
  CHECK(report.merged_rho == 1.0);
  CHECK(report.pooled_icc == 1.0);
  CHECK(report.mean_set_icc == 1.0);
}

TEST_CASE("generation is deterministic and satisfies module invariants") {
  const auto a = generate(config(3, 77));
  const auto b = generate(config(3, 77));
  CHECK(a.hidden == b.hidden);
  CHECK(a.archive == b.archive);
  CHECK(a.sets == b.sets);
  CHECK_FALSE(generate(config(3, 78)).archive == a.archive);

  CHECK(a.archive.size() == 30 * 10);
  for (double w : a.hidden.weights()) CHECK(w >= 0.0);
  for (const auto& set : a.sets) {
    CHECK_NOTHROW(validate(set));
    for (const auto& id : set.images) {
      const auto* t = a.archive.find(set.set_id, id);
      REQUIRE(t != nullptr);
      CHECK_NOTHROW(check_conforms(a.archive.schema(), *t));
      for (const auto& layer : t->values)
        for (float v : layer) CHECK(v < 0.1f);
    }
  }
}

TEST_CASE("expected rho falls as noise swaps grow") {
  std::vector<double> mean_rho;
  for (std::size_t noise : {0u, 2u, 5u, 10u, 20u}) {
    double sum = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto data = generate(config(noise, seed, 5));
      sum += evaluate(data.hidden, data.archive, data.sets).merged_rho;
    }
    mean_rho.push_back(sum / 100);
  }
  CHECK(mean_rho.front() == 1.0);
  for (std::size_t i = 1; i < mean_rho.size(); ++i) CHECK(mean_rho[i] < mean_rho[i - 1]);
}

TEST_CASE("permuted head keeps per-layer weight multisets") {
  const auto data = generate(config(0, 4));
  const auto p = permuted_head(data.hidden, 9);
  CHECK_FALSE(p == data.hidden);
  for (std::size_t l = 0; l < p.schema().layer_count(); ++l) {
    std::vector<double> x(p.layer(l).begin(), p.layer(l).end()), y(data.hidden.layer(l).begin(), data.hidden.layer(l).end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    CHECK(x == y);
  }
}
