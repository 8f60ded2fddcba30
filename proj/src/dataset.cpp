#include "rankalign/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "rankalign/error.hpp"
#include "rankalign/io.hpp"
#include "rankalign/rng.hpp"

namespace rankalign {

namespace {

using nlohmann::json;

// Calls fn(line_text, line_number) for every non-blank line.
template <typename Fn>
void for_each_record(const std::string& text, Fn&& fn) {
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    fn(line, number);
  }
}

json parse_line(const std::string& line, std::size_t number) {
  try {
    auto doc = json::parse(line);
    if (!doc.is_object()) throw ParseError("record is not an object", number);
    return doc;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed record: ") + e.what(), number);
  }
}

}  // namespace

std::vector<double> RankedSet::human_ranks() const {
  std::unordered_map<std::string, double> rank;
  for (std::size_t i = 0; i < human_order.size(); ++i) rank[human_order[i]] = static_cast<double>(i + 1);
  std::vector<double> out;
  out.reserve(images.size());
  for (const auto& id : images) {
    auto it = rank.find(id);
    if (it == rank.end()) throw ValidationError("set '" + set_id + "': image '" + id + "' missing from human_order");
    out.push_back(it->second);
  }
  return out;
}

void validate(const RankedSet& set) {
  const auto where = "set '" + set.set_id + "': ";
  if (set.set_id.empty()) throw ValidationError("set_id must not be empty");
  if (set.images.size() < 2) throw ValidationError(where + "needs at least 2 images");
  std::unordered_set<std::string> images;
  for (const auto& id : set.images) {
    if (!images.insert(id).second) throw ValidationError(where + "duplicate image id '" + id + "'");
  }
  if (set.human_order.size() != set.images.size()) {
    throw ValidationError(where + "human_order lists " + std::to_string(set.human_order.size()) +
                          " images but the set has " + std::to_string(set.images.size()) +
                          " (human_order must be a permutation of images)");
  }
  std::unordered_set<std::string> ranked;
  for (const auto& id : set.human_order) {
    if (!images.contains(id)) throw ValidationError(where + "human_order names unknown image '" + id + "'");
    if (!ranked.insert(id).second) throw ValidationError(where + "human_order ranks '" + id + "' twice (ties are not allowed)");
  }
}

PairScheme parse_pair_scheme(const std::string& name) {
  if (name == "all_pairs" || name == "all-pairs") return PairScheme::all_pairs;
  if (name == "adjacent") return PairScheme::adjacent;
  throw ValidationError("unknown pair scheme '" + name + "' (expected all_pairs or adjacent)");
}

std::string to_string(PairScheme scheme) {
  return scheme == PairScheme::all_pairs ? "all_pairs" : "adjacent";
}

std::vector<PairTuple> build_pairs(const RankedSet& set, PairScheme scheme) {
  validate(set);
  const auto& order = set.human_order;
  const std::size_t n = order.size();
  std::vector<PairTuple> out;
  if (scheme == PairScheme::adjacent) {
    out.reserve(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) out.push_back({set.set_id, order[i], order[i + 1]});
  } else {
    out.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) out.push_back({set.set_id, order[i], order[j]});
  }
  return out;
}

std::vector<PairTuple> build_pairs(const std::vector<RankedSet>& sets, PairScheme scheme) {
  std::vector<PairTuple> out;
  for (const auto& set : sets) {
    auto pairs = build_pairs(set, scheme);
    out.insert(out.end(), std::make_move_iterator(pairs.begin()), std::make_move_iterator(pairs.end()));
  }
  return out;
}

SplitPlan split_sets(const std::vector<RankedSet>& sets, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("train_fraction must lie in (0, 1)");
  }
  if (sets.size() < 2) throw ValidationError("need at least 2 sets to split");
  std::vector<std::string> ids;
  ids.reserve(sets.size());
  for (const auto& s : sets) ids.push_back(s.set_id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw ValidationError("duplicate set ids in split input");

  SplitMix64 rng(seed);
  shuffle(std::span<std::string>(ids), rng);
  const auto cut = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(ids.size())));
  if (cut == 0 || cut == ids.size()) {
    throw ValidationError("train_fraction " + std::to_string(train_fraction) + " leaves an empty partition for " +
                          std::to_string(ids.size()) + " sets");
  }
  SplitPlan plan;
  plan.seed = seed;
  plan.train_fraction = train_fraction;
  plan.train_set_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(cut));
  plan.val_set_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(cut), ids.end());
  return plan;
}

std::vector<RankedSet> select_sets(const std::vector<RankedSet>& sets, const std::vector<std::string>& ids) {
  const std::unordered_set<std::string> wanted(ids.begin(), ids.end());
  std::vector<RankedSet> out;
  for (const auto& s : sets)
    if (wanted.contains(s.set_id)) out.push_back(s);
  if (out.size() != wanted.size()) throw ValidationError("split names set ids that are not in the rankings");
  return out;
}

std::vector<RankedSet> parse_rankings(const std::string& text) {
  std::vector<RankedSet> out;
  std::unordered_set<std::string> ids;
  for_each_record(text, [&](const std::string& line, std::size_t number) {
    const auto doc = parse_line(line, number);
    RankedSet set;
    try {
      set.set_id = doc.at("set_id").get<std::string>();
      set.target_id = doc.at("target_id").get<std::string>();
      set.images = doc.at("images").get<std::vector<std::string>>();
      set.human_order = doc.at("human_order").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad ranking record: ") + e.what(), number);
    }
    try {
      validate(set);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), number);
    }
    if (!ids.insert(set.set_id).second) throw ParseError("duplicate set_id '" + set.set_id + "'", number);
    out.push_back(std::move(set));
  });
  return out;
}

std::string format_rankings(const std::vector<RankedSet>& sets) {
  std::string out;
  for (const auto& s : sets) {
    json doc = {{"set_id", s.set_id}, {"target_id", s.target_id}, {"images", s.images}, {"human_order", s.human_order}};
    out += doc.dump() + "\n";
  }
  return out;
}

std::vector<RankedSet> load_rankings(const std::filesystem::path& path) {
  try {
    return parse_rankings(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

void save_rankings(const std::vector<RankedSet>& sets, const std::filesystem::path& path) {
  write_text_file(path, format_rankings(sets));
}

std::string format_pairs(const std::vector<PairTuple>& pairs) {
  std::string out;
  for (const auto& p : pairs) out += json{{"set_id", p.set_id}, {"pos_id", p.pos_id}, {"neg_id", p.neg_id}}.dump() + "\n";
  return out;
}

std::vector<PairTuple> parse_pairs(const std::string& text) {
  std::vector<PairTuple> out;
  for_each_record(text, [&](const std::string& line, std::size_t number) {
    const auto doc = parse_line(line, number);
    PairTuple p;
    try {
      p.set_id = doc.at("set_id").get<std::string>();
      p.pos_id = doc.at("pos_id").get<std::string>();
      p.neg_id = doc.at("neg_id").get<std::string>();
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad pair record: ") + e.what(), number);
    }
    if (p.pos_id == p.neg_id) throw ParseError("pair compares '" + p.pos_id + "' with itself", number);
    out.push_back(std::move(p));
  });
  return out;
}

void save_pairs(const std::vector<PairTuple>& pairs, const std::filesystem::path& path) {
  write_text_file(path, format_pairs(pairs));
}

std::vector<PairTuple> load_pairs(const std::filesystem::path& path) { return parse_pairs(read_text_file(path)); }

void save_split(const SplitPlan& plan, const std::filesystem::path& path) {
  json doc = {{"seed", plan.seed},
              {"train_fraction", plan.train_fraction},
              {"train_set_ids", plan.train_set_ids},
              {"val_set_ids", plan.val_set_ids}};
  write_text_file(path, doc.dump(2) + "\n");
}

SplitPlan load_split(const std::filesystem::path& path) {
  SplitPlan plan;
  try {
    const auto doc = json::parse(read_text_file(path));
    plan.seed = doc.at("seed").get<std::uint64_t>();
    plan.train_fraction = doc.at("train_fraction").get<double>();
    plan.train_set_ids = doc.at("train_set_ids").get<std::vector<std::string>>();
    plan.val_set_ids = doc.at("val_set_ids").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": bad split document: " + e.what());
  }
  std::set<std::string> train(plan.train_set_ids.begin(), plan.train_set_ids.end());
  for (const auto& id : plan.val_set_ids)
    if (train.contains(id)) throw ValidationError(path.string() + ": set '" + id + "' is in both partitions");
  return plan;
}

}  // namespace rankalign
