#include "rankalign/boot.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "rankalign/alignment.hpp"
#include "rankalign/error.hpp"
#include "rankalign/parallel.hpp"
#include "rankalign/rng.hpp"
#include "rankalign/stats.hpp"

namespace rankalign {

namespace {

constexpr std::size_t kMaxRedrawsPerResample = 1000;

double pooled_icc(std::span<const SetRanks* const> sets) { return icc2k(pooled_anova(sets)); }

struct ResampleOutcome {
  double delta = 0.0;
  std::size_t redraws = 0;
};

ResampleOutcome run_resample(const std::vector<SetRanks>& a, const std::vector<SetRanks>& b, std::uint64_t seed,
                             std::size_t index) {
  auto rng = SplitMix64::stream(seed, index);
  std::vector<const SetRanks*> draw_a(a.size()), draw_b(b.size());
  for (std::size_t attempt = 0; attempt <= kMaxRedrawsPerResample; ++attempt) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto pick = static_cast<std::size_t>(rng.below(a.size()));
      draw_a[i] = &a[pick];
      draw_b[i] = &b[pick];
    }
    try {
      return {pooled_icc(draw_a) - pooled_icc(draw_b), attempt};
    } catch (const NumericError&) {
    }
  }
  throw NumericError("bootstrap resample " + std::to_string(index) + " stayed degenerate after " +
                     std::to_string(kMaxRedrawsPerResample) + " redraws");
}

}  // namespace

double percentile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw ValidationError("percentile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0 || sorted[lo] == sorted[hi]) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BootstrapResult paired_bootstrap(const DistanceArchive& archive, const std::vector<RankedSet>& sets,
                                 const WeightHead& head_a, const WeightHead& head_b, const BootstrapOptions& options) {
  if (options.resamples < 100) throw ValidationError("bootstrap needs at least 100 resamples");
  if (!(options.confidence > 0.0 && options.confidence < 1.0)) throw ValidationError("confidence must lie in (0, 1)");
  if (!(head_a.schema() == archive.schema()) || !(head_b.schema() == archive.schema())) {
    throw ValidationError("both heads must share the archive schema");
  }
  if (sets.empty()) throw ValidationError("bootstrap needs at least one set");

  // Within-set ranks do not change under resampling, so rank once per head.
  std::vector<SetRanks> ranks_a, ranks_b;
  for (const auto& s : sets) {
    validate(s);
    ranks_a.push_back(rank_set(head_a, archive, s));
    ranks_b.push_back(rank_set(head_b, archive, s));
  }

  BootstrapResult result;
  result.resamples = options.resamples;
  result.seed = options.seed;
  result.confidence = options.confidence;
  {
    std::vector<const SetRanks*> all_a, all_b;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      all_a.push_back(&ranks_a[i]);
      all_b.push_back(&ranks_b[i]);
    }
    result.delta_icc_full = pooled_icc(all_a) - pooled_icc(all_b);
  }

  std::vector<ResampleOutcome> outcomes(options.resamples);
  const std::size_t workers = std::clamp<std::size_t>(options.threads == 0 ? worker_count() : options.threads, 1, options.resamples);
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t r = w; r < options.resamples; r += workers) outcomes[r] = run_resample(ranks_a, ranks_b, options.seed, r);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  result.per_resample_delta.reserve(outcomes.size());
  double sum = 0.0;
  std::size_t le_zero = 0, ge_zero = 0;
  for (const auto& o : outcomes) {
    result.per_resample_delta.push_back(o.delta);
    result.redraws += o.redraws;
    sum += o.delta;
    if (o.delta <= 0.0) ++le_zero;
    if (o.delta >= 0.0) ++ge_zero;
  }
  const auto b = static_cast<double>(options.resamples);
  result.delta_icc_mean = sum / b;

  auto sorted = result.per_resample_delta;
  std::sort(sorted.begin(), sorted.end());
  const double tail = (1.0 - options.confidence) / 2.0;
  result.ci_low = percentile_sorted(sorted, tail);
  result.ci_high = percentile_sorted(sorted, 1.0 - tail);

  const double two_sided = 2.0 * static_cast<double>(std::min(le_zero, ge_zero)) / b;
  result.p_value = std::clamp(two_sided, 2.0 / b, 1.0);
  return result;
}

std::string bootstrap_to_json(const BootstrapResult& r) {
  nlohmann::json doc = {
      {"delta_icc_full", r.delta_icc_full},
      {"delta_icc_mean", r.delta_icc_mean},
      {"ci_low", r.ci_low},
      {"ci_high", r.ci_high},
      {"confidence", r.confidence},
      {"p_value", r.p_value},
      {"resamples", r.resamples},
      {"seed", r.seed},
      {"redraws", r.redraws},
      {"interval", "percentile"},
      {"p_value_convention", "two-sided 2*min(P(d<=0), P(d>=0)), clamped to [2/resamples, 1]"},
  };
  return doc.dump(2) + "\n";
}

std::string deltas_to_csv(const BootstrapResult& r) {
  std::ostringstream out;
  out << "resample,delta_icc\n" << std::setprecision(17);
  for (std::size_t i = 0; i < r.per_resample_delta.size(); ++i) out << i << ',' << r.per_resample_delta[i] << '\n';
  return out.str();
}

}  // namespace rankalign
