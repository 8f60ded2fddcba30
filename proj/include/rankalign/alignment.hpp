#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rankalign/dataset.hpp"
#include "rankalign/distx.hpp"
#include "rankalign/model.hpp"
#include "rankalign/stats.hpp"

namespace rankalign {

enum class Aggregate { merged, per_set_mean };

Aggregate parse_aggregate(const std::string& name);
std::string to_string(Aggregate aggregate);

struct EvalOptions {
  Aggregate aggregate = Aggregate::merged;
  // Merged rho against pooled raw distances instead of within-set metric ranks.
  bool raw_scores = false;
  double confidence = 0.95;
};

/// Human and metric ranks for one set, both in the set's `images` order.
struct SetRanks {
  std::string set_id;
  std::vector<double> human;
  std::vector<double> metric;     // ascending distance = rank 1, ties averaged
  std::vector<double> distances;
};

SetRanks rank_set(const WeightHead& head, const DistanceArchive& archive, const RankedSet& set);

/// Two-way ANOVA over every (set, image) item of the given sets, raters =
/// (human rank, metric rank). Sets may repeat.
AnovaTable pooled_anova(std::span<const SetRanks* const> sets);

struct SetDiagnostics {
  std::string set_id;
  std::size_t images = 0;
  double rho = 0.0;  // NaN when undefined
  double icc = 0.0;  // NaN when undefined
};

struct AlignmentReport {
  Aggregate aggregate = Aggregate::merged;
  bool raw_scores = false;
  std::size_t set_count = 0;
  std::size_t item_count = 0;

  // Headline values under the chosen aggregate.
  double spearman_rho = 0.0;
  double spearman_p = 0.0;
  double icc2k = 0.0;
  double icc_p = 0.0;
  double icc_ci_low = 0.0;
  double icc_ci_high = 0.0;
  double confidence = 0.95;
  std::string koo_li_band;
  std::string cicchetti_band;

  // Both aggregates, always populated.
  double merged_rho = 0.0;
  double mean_set_rho = 0.0;
  double pooled_icc = 0.0;
  double mean_set_icc = 0.0;
  AnovaTable pooled;

  std::vector<SetDiagnostics> per_set;
};

/// p-values and the ICC interval always come from the merged / pooled
/// statistics, which are the ones with a sampling distribution.
AlignmentReport evaluate(const WeightHead& head, const DistanceArchive& archive, const std::vector<RankedSet>& sets,
                         const EvalOptions& options = {});

std::string report_to_json(const AlignmentReport& report);
std::string report_to_csv(const AlignmentReport& report);

}  // namespace rankalign
