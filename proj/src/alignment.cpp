#include "rankalign/alignment.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "rankalign/error.hpp"

namespace rankalign {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double mean_of_defined(const std::vector<double>& values) {
  double sum = 0.0;
  std::size_t count = 0;
  for (double v : values) {
    if (std::isfinite(v)) {
      sum += v;
      ++count;
    }
  }
  return count == 0 ? kNaN : sum / static_cast<double>(count);
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Aggregate parse_aggregate(const std::string& name) {
  if (name == "merged") return Aggregate::merged;
  if (name == "per-set" || name == "per_set" || name == "per_set_mean") return Aggregate::per_set_mean;
  throw ValidationError("unknown aggregate '" + name + "' (expected merged or per-set)");
}

std::string to_string(Aggregate aggregate) { return aggregate == Aggregate::merged ? "merged" : "per_set_mean"; }

SetRanks rank_set(const WeightHead& head, const DistanceArchive& archive, const RankedSet& set) {
  SetRanks out;
  out.set_id = set.set_id;
  out.human = set.human_ranks();
  out.distances.reserve(set.images.size());
  for (const auto& image : set.images) out.distances.push_back(distance(head, archive.at(set.set_id, image)));
  out.metric = average_ranks(out.distances);
  return out;
}

AnovaTable pooled_anova(std::span<const SetRanks* const> sets) {
  std::size_t items = 0;
  for (const auto* s : sets) items += s->human.size();
  RatingMatrix m(items, 2);
  std::size_t row = 0;
  for (const auto* s : sets) {
    for (std::size_t i = 0; i < s->human.size(); ++i, ++row) {
      m(row, 0) = s->human[i];
      m(row, 1) = s->metric[i];
    }
  }
  return anova_two_way(m);
}

AlignmentReport evaluate(const WeightHead& head, const DistanceArchive& archive, const std::vector<RankedSet>& sets,
                         const EvalOptions& options) {
  if (sets.empty()) throw ValidationError("evaluate needs at least one set");
  if (!(head.schema() == archive.schema())) throw ValidationError("weight head schema does not match the archive schema");

  std::vector<SetRanks> ranked;
  ranked.reserve(sets.size());
  for (const auto& set : sets) {
    if (set.images.size() < 2) throw ValidationError("set '" + set.set_id + "' has fewer than 2 images");
    ranked.push_back(rank_set(head, archive, set));
  }

  AlignmentReport r;
  r.aggregate = options.aggregate;
  r.raw_scores = options.raw_scores;
  r.set_count = sets.size();
  r.confidence = options.confidence;

  std::vector<double> human, metric;
  std::vector<double> set_rhos, set_iccs;
  for (const auto& s : ranked) {
    human.insert(human.end(), s.human.begin(), s.human.end());
    metric.insert(metric.end(), options.raw_scores ? s.distances.begin() : s.metric.begin(),
                  options.raw_scores ? s.distances.end() : s.metric.end());
    SetDiagnostics d{s.set_id, s.human.size(), kNaN, kNaN};
    try {
      d.rho = spearman_rho(s.human, s.metric);
    } catch (const NumericError&) {
    }
    try {
      d.icc = icc2k(anova_two_way(RatingMatrix::from_columns(s.human, s.metric)));
    } catch (const NumericError&) {
    }
    set_rhos.push_back(d.rho);
    set_iccs.push_back(d.icc);
    r.per_set.push_back(std::move(d));
  }
  r.item_count = human.size();

  r.merged_rho = spearman_rho(human, metric);
  r.mean_set_rho = mean_of_defined(set_rhos);

  std::vector<const SetRanks*> refs;
  for (const auto& s : ranked) refs.push_back(&s);
  if (r.item_count < 3) throw ValidationError("pooled ICC needs at least 3 items");
  r.pooled = pooled_anova(refs);
  r.pooled_icc = icc2k(r.pooled);
  r.mean_set_icc = mean_of_defined(set_iccs);

  const bool merged = options.aggregate == Aggregate::merged;
  r.spearman_rho = merged ? r.merged_rho : r.mean_set_rho;
  r.icc2k = merged ? r.pooled_icc : r.mean_set_icc;
  r.spearman_p = r.item_count >= 4 ? spearman_p(r.merged_rho, r.item_count) : kNaN;
  r.icc_p = icc_p_value(r.pooled);
  const auto ci = icc2k_confidence_interval(r.pooled, options.confidence);
  r.icc_ci_low = ci.low;
  r.icc_ci_high = ci.high;
  r.koo_li_band = interpret_icc(r.icc2k, IccGuideline::koo_li);
  r.cicchetti_band = interpret_icc(r.icc2k, IccGuideline::cicchetti);
  return r;
}

std::string report_to_json(const AlignmentReport& r) {
  nlohmann::json per_set = nlohmann::json::object();
  for (const auto& d : r.per_set) {
    per_set[d.set_id] = {{"images", d.images}, {"spearman_rho", number_or_null(d.rho)}, {"icc2k", number_or_null(d.icc)}};
  }
  nlohmann::json doc = {
      {"aggregate", to_string(r.aggregate)},
      {"raw_scores", r.raw_scores},
      {"set_count", r.set_count},
      {"item_count", r.item_count},
      {"spearman_rho", number_or_null(r.spearman_rho)},
      {"spearman_p", number_or_null(r.spearman_p)},
      {"icc2k", number_or_null(r.icc2k)},
      {"icc_p", number_or_null(r.icc_p)},
      {"icc_ci_low", number_or_null(r.icc_ci_low)},
      {"icc_ci_high", number_or_null(r.icc_ci_high)},
      {"confidence", r.confidence},
      {"koo_li_band", r.koo_li_band},
      {"cicchetti_band", r.cicchetti_band},
      {"merged_rho", number_or_null(r.merged_rho)},
      {"mean_set_rho", number_or_null(r.mean_set_rho)},
      {"pooled_icc", number_or_null(r.pooled_icc)},
      {"mean_set_icc", number_or_null(r.mean_set_icc)},
      {"anova",
       {{"n", r.pooled.n},
        {"k", r.pooled.k},
        {"ms_r", r.pooled.ms_rows},
        {"ms_c", r.pooled.ms_cols},
        {"ms_e", r.pooled.ms_error}}},
      {"per_set", std::move(per_set)},
  };
  return doc.dump(2) + "\n";
}

std::string report_to_csv(const AlignmentReport& r) {
  std::ostringstream out;
  out << "row,set_id,items,spearman_rho,icc2k,spearman_p,icc_p,icc_ci_low,icc_ci_high,koo_li_band,cicchetti_band\n";
  for (const auto& d : r.per_set) {
    out << "set," << csv_field(d.set_id) << ',' << d.images << ',' << csv_number(d.rho) << ',' << csv_number(d.icc)
        << ",,,,,," << '\n';
  }
  out << "summary," << to_string(r.aggregate) << ',' << r.item_count << ',' << csv_number(r.spearman_rho) << ','
      << csv_number(r.icc2k) << ',' << csv_number(r.spearman_p) << ',' << csv_number(r.icc_p) << ','
      << csv_number(r.icc_ci_low) << ',' << csv_number(r.icc_ci_high) << ',' << r.koo_li_band << ','
      << r.cicchetti_band << '\n';
  return out.str();
}

}  // namespace rankalign
