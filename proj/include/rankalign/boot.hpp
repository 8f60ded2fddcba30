#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rankalign/dataset.hpp"
#include "rankalign/distx.hpp"
#include "rankalign/model.hpp"

namespace rankalign {

struct BootstrapOptions {
  std::size_t resamples = 10000;
  std::uint64_t seed = 0;
  double confidence = 0.95;
  std::size_t threads = 0;  // 0 = worker_count()
};

struct BootstrapResult {
  double delta_icc_full = 0.0;  // pooled ICC(a) - ICC(b) on the original sets
  double delta_icc_mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
  std::size_t resamples = 0;
  std::uint64_t seed = 0;
  double confidence = 0.95;
  std::size_t redraws = 0;  // resamples redrawn because an ICC was undefined
  std::vector<double> per_resample_delta;

  bool operator==(const BootstrapResult&) const = default;
};

/// Paired percentile bootstrap over whole sets: resample r draws |sets| sets
/// with replacement from SplitMix64::stream(seed, r), and both heads are
/// scored on that same multiset with the pooled ICC(2,k).
///
/// p = 2·min(P(Δ <= 0), P(Δ >= 0)) clamped to [2/resamples, 1].
BootstrapResult paired_bootstrap(const DistanceArchive& archive, const std::vector<RankedSet>& sets,
                                 const WeightHead& head_a, const WeightHead& head_b, const BootstrapOptions& options);

/// Linear-interpolation percentile (Hyndman-Fan type 7) of sorted data.
double percentile_sorted(const std::vector<double>& sorted, double q);

std::string bootstrap_to_json(const BootstrapResult& result);
std::string deltas_to_csv(const BootstrapResult& result);

}  // namespace rankalign
