#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rankalign {

/// One target image, its generated images and the human's total ordering.
struct RankedSet {
  std::string set_id;
  std::string target_id;
  std::vector<std::string> images;       // generation order
  std::vector<std::string> human_order;  // most similar first

  /// 1-based human rank of each entry of `images`, in `images` order.
  std::vector<double> human_ranks() const;

  bool operator==(const RankedSet&) const = default;
};

/// Throws ValidationError if ids repeat, human_order is not a permutation of
/// images, or fewer than two images are listed.
void validate(const RankedSet& set);

struct PairTuple {
  std::string set_id;
  std::string pos_id;  // ranked more similar by the human
  std::string neg_id;

  bool operator==(const PairTuple&) const = default;
};

enum class PairScheme { all_pairs, adjacent };

PairScheme parse_pair_scheme(const std::string& name);
std::string to_string(PairScheme scheme);

/// all_pairs: n(n-1)/2 tuples ordered by (rank_pos, rank_neg).
/// adjacent: n-1 tuples between consecutive ranks.
std::vector<PairTuple> build_pairs(const RankedSet& set, PairScheme scheme);
std::vector<PairTuple> build_pairs(const std::vector<RankedSet>& sets, PairScheme scheme);

struct SplitPlan {
  std::vector<std::string> train_set_ids;
  std::vector<std::string> val_set_ids;
  std::uint64_t seed = 0;
  double train_fraction = 0.7;

  bool operator==(const SplitPlan&) const = default;
};

/// Sorts set ids, shuffles them with SplitMix64(seed) Fisher-Yates and cuts at
/// round(train_fraction·n). Throws ValidationError if either side is empty.
SplitPlan split_sets(const std::vector<RankedSet>& sets, double train_fraction, std::uint64_t seed);

/// Keeps the sets whose ids appear in `ids`, preserving input order.
std::vector<RankedSet> select_sets(const std::vector<RankedSet>& sets, const std::vector<std::string>& ids);

// Line-delimited JSON ranking records.
std::vector<RankedSet> parse_rankings(const std::string& text);
std::string format_rankings(const std::vector<RankedSet>& sets);
std::vector<RankedSet> load_rankings(const std::filesystem::path& path);
void save_rankings(const std::vector<RankedSet>& sets, const std::filesystem::path& path);

// Line-delimited JSON pair records.
std::string format_pairs(const std::vector<PairTuple>& pairs);
std::vector<PairTuple> parse_pairs(const std::string& text);
void save_pairs(const std::vector<PairTuple>& pairs, const std::filesystem::path& path);
std::vector<PairTuple> load_pairs(const std::filesystem::path& path);

// Single JSON document.
void save_split(const SplitPlan& plan, const std::filesystem::path& path);
SplitPlan load_split(const std::filesystem::path& path);

}  // namespace rankalign
