#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "rankalign/dataset.hpp"
#include "rankalign/error.hpp"
#include "rankalign/rng.hpp"
#include "test_support.hpp"

using namespace rankalign;

namespace {

RankedSet make_set(std::string id, std::vector<std::string> human) {
  RankedSet s{id, "tgt_" + id, human, human};
  std::sort(s.images.begin(), s.images.end());
  return s;
}

std::vector<RankedSet> numbered_sets(std::size_t n) {
  std::vector<RankedSet> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(make_set("set" + std::to_string(i), {"a", "b", "c"}));
  return out;
}

}  // namespace

TEST_CASE("rankings parse, validate and round-trip") {
  const std::string text =
      R"({"set_id": "s1", "target_id": "t1", "images": ["x", "y", "z"], "human_order": ["z", "x", "y"]})"
      "\n\n"
      R"({"set_id": "s2", "target_id": "t2", "images": ["p", "q"], "human_order": ["p", "q"]})"
      "\n";
  const auto sets = parse_rankings(text);
  REQUIRE(sets.size() == 2);
  CHECK(sets[0].set_id == "s1");
  CHECK(sets[0].human_ranks() == std::vector<double>{2, 3, 1});
  CHECK(parse_rankings(format_rankings(sets)) == sets);

  const auto dir = rankalign::testing::scratch_dir("dataset");
  save_rankings(sets, dir / "r.jsonl");
  CHECK(load_rankings(dir / "r.jsonl") == sets);
}

TEST_CASE("ranking errors cite the line and set") {
  const std::string omits =
      R"({"set_id": "s1", "target_id": "t", "images": ["a", "b"], "human_order": ["a", "b"]})"
      "\n"
      R"({"set_id": "bad", "target_id": "t", "images": ["a", "b", "c"], "human_order": ["a", "b"]})";
  try {
    parse_rankings(omits);
    FAIL("expected error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("bad") != std::string::npos);
  }
  const std::string dup =
      R"({"set_id": "s", "target_id": "t", "images": ["a", "b"], "human_order": ["a", "b"]})"
      "\n"
      R"({"set_id": "s", "target_id": "t", "images": ["a", "b"], "human_order": ["b", "a"]})";
  CHECK_THROWS_AS(parse_rankings(dup), ParseError);
  const std::string tie = R"({"set_id": "s", "target_id": "t", "images": ["a", "b"], "human_order": ["a", "a"]})";
  CHECK_THROWS_AS(parse_rankings(tie), ParseError);
  CHECK_THROWS_AS(parse_rankings("{\"set_id\": 3"), ParseError);
  CHECK_THROWS_AS(parse_rankings(R"({"set_id": "s", "images": ["a", "b"], "human_order": ["a", "b"]})"), ParseError);
}

TEST_CASE("build_pairs definitions") {
  const RankedSet abc{"s", "t", {"C", "A", "B"}, {"A", "B", "C"}};
  const auto all = build_pairs(abc, PairScheme::all_pairs);
  CHECK(all == std::vector<PairTuple>{{"s", "A", "B"}, {"s", "A", "C"}, {"s", "B", "C"}});

  const RankedSet abcd{"s", "t", {"A", "B", "C", "D"}, {"A", "B", "C", "D"}};
  CHECK(build_pairs(abcd, PairScheme::adjacent) == std::vector<PairTuple>{{"s", "A", "B"}, {"s", "B", "C"}, {"s", "C", "D"}});

  std::vector<std::string> ten;
  for (int i = 0; i < 10; ++i) ten.push_back("i" + std::to_string(i));
  const RankedSet big{"s", "t", ten, ten};
  CHECK(build_pairs(big, PairScheme::all_pairs).size() == 45);
  CHECK(build_pairs(big, PairScheme::adjacent).size() == 9);

  const RankedSet tiny{"s", "t", {"a"}, {"a"}};
  CHECK_THROWS_AS(build_pairs(tiny, PairScheme::all_pairs), ValidationError);
}

TEST_CASE("all_pairs is transitively closed and never crosses sets") {
  SplitMix64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(9);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("im" + std::to_string(i));
    auto order = ids;
    shuffle(std::span<std::string>(order), rng);
    const std::vector<RankedSet> sets{{"one", "t", ids, order}, {"two", "t", ids, ids}};
    const auto pairs = build_pairs(sets, PairScheme::all_pairs);
    CHECK(pairs.size() == n * (n - 1));

    std::map<std::string, std::set<std::pair<std::string, std::string>>> by_set;
    for (const auto& p : pairs) by_set[p.set_id].insert({p.pos_id, p.neg_id});
    CHECK(by_set.size() == 2);
    for (const auto& [sid, rel] : by_set) {
      for (const auto& [a, b] : rel)
        for (const auto& [c, d] : rel)
          if (b == c) CHECK(rel.contains({a, d}));
    }
    // Orientation follows the human order.
    for (const auto& p : pairs) {
      if (p.set_id != "one") continue;
      const auto rank = [&](const std::string& id) { return std::find(order.begin(), order.end(), id) - order.begin(); };
      CHECK(rank(p.pos_id) < rank(p.neg_id));
    }
  }
}

TEST_CASE("split_sets: 70/30, deterministic, disjoint, order-stable") {
  const auto sets = numbered_sets(10);
  const auto plan = split_sets(sets, 0.7, 123);
  CHECK(plan.train_set_ids.size() == 7);
  CHECK(plan.val_set_ids.size() == 3);
  CHECK(split_sets(sets, 0.7, 123) == plan);

  auto reversed = sets;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(split_sets(reversed, 0.7, 123) == plan);

  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto p = split_sets(sets, 0.7, seed);
    std::set<std::string> train(p.train_set_ids.begin(), p.train_set_ids.end());
    std::set<std::string> all(train);
    for (const auto& id : p.val_set_ids) {
      CHECK_FALSE(train.contains(id));
      all.insert(id);
    }
    CHECK(all.size() == 10);
  }

  CHECK_THROWS_AS(split_sets(sets, 0.01, 1), ValidationError);
  CHECK_THROWS_AS(split_sets(sets, 0.99, 1), ValidationError);
  CHECK_THROWS_AS(split_sets(sets, 1.0, 1), ValidationError);
  CHECK_THROWS_AS(split_sets(numbered_sets(1), 0.5, 1), ValidationError);
}

TEST_CASE("pair and split files round-trip") {
  const auto dir = rankalign::testing::scratch_dir("dataset_files");
  const auto sets = numbered_sets(5);
  const auto pairs = build_pairs(sets, PairScheme::all_pairs);
  save_pairs(pairs, dir / "p.jsonl");
  CHECK(load_pairs(dir / "p.jsonl") == pairs);

  const auto plan = split_sets(sets, 0.6, 77);
  save_split(plan, dir / "split.json");
  CHECK(load_split(dir / "split.json") == plan);
}

TEST_CASE("splitmix64 reference outputs") {
  // First outputs for seed 1234567, as published with the reference C implementation.
  SplitMix64 rng(1234567);
  CHECK(rng.next() == 6457827717110365317ULL);
  CHECK(rng.next() == 3203168211198807973ULL);
  CHECK(rng.next() == 9817491932198370423ULL);
}
