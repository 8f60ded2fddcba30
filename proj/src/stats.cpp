#include "rankalign/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "rankalign/distributions.hpp"
#include "rankalign/error.hpp"

namespace rankalign {

namespace {

bool has_ties(std::span<const double> ranks) {
  std::vector<double> sorted(ranks.begin(), ranks.end());
  std::sort(sorted.begin(), sorted.end());
  return std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<double>(a.size());
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw NumericError("correlation undefined: a ranking is constant");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return scores[x] < scores[y]; });
  std::vector<double> ranks(scores.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = shared;
    i = j + 1;
  }
  return ranks;
}

double spearman_rho(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ValidationError("spearman_rho: lengths differ (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  if (a.size() < 2) throw ValidationError("spearman_rho needs at least 2 observations");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) || std::isnan(b[i])) throw NumericError("spearman_rho: NaN input");
  }
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  if (has_ties(ra) || has_ties(rb)) return pearson(ra, rb);

  // Tie-free ranks are the integers 1..n, so Σd² and n(n²-1) are exact integers.
  const auto n = static_cast<std::int64_t>(a.size());
  std::int64_t sum_d2 = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const auto d = static_cast<std::int64_t>(ra[i]) - static_cast<std::int64_t>(rb[i]);
    sum_d2 += d * d;
  }
  const std::int64_t denom = n * (n * n - 1);
  return static_cast<double>(denom - 6 * sum_d2) / static_cast<double>(denom);
}

double spearman_p(double rho, std::size_t n) {
  if (n < 4) throw ValidationError("spearman_p needs n >= 4");
  if (std::isnan(rho)) throw NumericError("spearman_p of NaN");
  if (std::fabs(rho) >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = rho * std::sqrt(df / (1.0 - rho * rho));
  return t_two_sided_p(t, df);
}

RatingMatrix RatingMatrix::from_columns(std::span<const double> first, std::span<const double> second) {
  if (first.size() != second.size()) throw ValidationError("rating columns differ in length");
  RatingMatrix m(first.size(), 2);
  for (std::size_t i = 0; i < first.size(); ++i) {
    m(i, 0) = first[i];
    m(i, 1) = second[i];
  }
  return m;
}

AnovaTable anova_two_way(const RatingMatrix& ratings) {
  const std::size_t n = ratings.rows();
  const std::size_t k = ratings.cols();
  if (n < 2 || k < 2) {
    throw ValidationError("two-way ANOVA needs at least 2 items and 2 raters (got " + std::to_string(n) + "x" + std::to_string(k) + ")");
  }
  std::vector<double> row_mean(n, 0.0), col_mean(k, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      row_mean[i] += ratings(i, j);
      col_mean[j] += ratings(i, j);
    }
  }
  for (auto& r : row_mean) grand += r;
  grand /= static_cast<double>(n * k);
  for (auto& r : row_mean) r /= static_cast<double>(k);
  for (auto& c : col_mean) c /= static_cast<double>(n);

  AnovaTable t;
  t.n = n;
  t.k = k;
  for (std::size_t i = 0; i < n; ++i) t.ss_rows += (row_mean[i] - grand) * (row_mean[i] - grand);
  t.ss_rows *= static_cast<double>(k);
  for (std::size_t j = 0; j < k; ++j) t.ss_cols += (col_mean[j] - grand) * (col_mean[j] - grand);
  t.ss_cols *= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double dev = ratings(i, j) - grand;
      const double resid = ratings(i, j) - row_mean[i] - col_mean[j] + grand;
      t.ss_total += dev * dev;
      t.ss_error += resid * resid;
    }
  }
  const auto df_rows = static_cast<double>(n - 1);
  const auto df_cols = static_cast<double>(k - 1);
  t.ms_rows = t.ss_rows / df_rows;
  t.ms_cols = t.ss_cols / df_cols;
  t.ms_error = t.ss_error / (df_rows * df_cols);
  return t;
}

double icc2k(const AnovaTable& t) {
  const double denom = t.ms_rows + (t.ms_cols - t.ms_error) / static_cast<double>(t.n);
  if (denom == 0.0 || !std::isfinite(denom)) throw NumericError("ICC(2,k) undefined: zero denominator");
  return (t.ms_rows - t.ms_error) / denom;
}

double icc_p_value(const AnovaTable& t) {
  if (t.ms_error <= 0.0) return 0.0;
  const double f = t.ms_rows / t.ms_error;
  const auto d1 = static_cast<double>(t.n - 1);
  const auto d2 = static_cast<double>((t.n - 1) * (t.k - 1));
  return f_survival(f, d1, d2);
}

Interval icc2k_confidence_interval(const AnovaTable& t, double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw ValidationError("confidence must lie in (0, 1)");
  const double average = icc2k(t);
  if (t.ms_error <= 0.0) return {average, average};

  const auto n = static_cast<double>(t.n);
  const auto k = static_cast<double>(t.k);
  const double msr = t.ms_rows, msc = t.ms_cols, mse = t.ms_error;
  // Single-rater agreement ICC(A,1) drives the Satterthwaite df.
  const double single = (msr - mse) / (msr + (k - 1.0) * mse + k * (msc - mse) / n);
  const double a = k * single / (n * (1.0 - single));
  const double b = 1.0 + k * single * (n - 1.0) / (n * (1.0 - single));
  const double v = std::pow(a * msc + b * mse, 2.0) /
                   (std::pow(a * msc, 2.0) / (k - 1.0) + std::pow(b * mse, 2.0) / ((n - 1.0) * (k - 1.0)));
  const double upper_tail = 1.0 - (1.0 - confidence) / 2.0;
  const double f_upper = f_quantile(upper_tail, n - 1.0, v);
  const double f_lower = f_quantile(upper_tail, v, n - 1.0);
  const double low1 = n * (msr - f_upper * mse) / (f_upper * (k * msc + (k * n - k - n) * mse) + n * msr);
  const double high1 = n * (f_lower * msr - mse) / (k * msc + (k * n - k - n) * mse + n * f_lower * msr);
  const auto to_average = [k](double r) { return k * r / (1.0 + (k - 1.0) * r); };
  return {to_average(low1), to_average(high1)};
}

std::string interpret_icc(double value, IccGuideline guideline) {
  if (std::isnan(value)) return "Undefined";
  if (guideline == IccGuideline::koo_li) {
    if (value < 0.50) return "Poor";
    if (value <= 0.75) return "Moderate";
    if (value <= 0.90) return "Good";
    return "Excellent";
  }
  if (value < 0.40) return "Poor";
  if (value <= 0.60) return "Fair";
  if (value <= 0.75) return "Good";
  return "Excellent";
}

}  // namespace rankalign
