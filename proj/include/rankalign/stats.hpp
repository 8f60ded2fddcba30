#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace rankalign {

/// 1-based ranks, ascending; tied scores share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> scores);

/// Spearman's rank correlation. Tie-free inputs use 1 - 6Σd²/(n(n²-1))
/// evaluated as one exactly-rounded rational; otherwise the Pearson
/// correlation of average ranks. Throws ValidationError on length mismatch or
/// n < 2 and NumericError when either side is constant.
double spearman_rho(std::span<const double> a, std::span<const double> b);

/// Two-sided p for H0: rho = 0 via t = rho·sqrt((n-2)/(1-rho²)), df = n-2.
/// |rho| = 1 gives 0. Requires n >= 4.
double spearman_p(double rho, std::size_t n);

/// Dense row-major n×k ratings: rows are items, columns are raters.
class RatingMatrix {
 public:
  RatingMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  /// Builds an n×2 matrix from two equally long rating columns.
  static RatingMatrix from_columns(std::span<const double> first, std::span<const double> second);

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

struct AnovaTable {
  std::size_t n = 0;  // items
  std::size_t k = 0;  // raters
  double ss_rows = 0.0;
  double ss_cols = 0.0;
  double ss_error = 0.0;
  double ss_total = 0.0;
  double ms_rows = 0.0;   // MS_R
  double ms_cols = 0.0;   // MS_C
  double ms_error = 0.0;  // MS_E
};

/// Two-way ANOVA without replication. Requires n >= 2 and k >= 2.
AnovaTable anova_two_way(const RatingMatrix& ratings);

/// ICC(2,k), two-way random effects, absolute agreement, average of k raters:
/// (MS_R - MS_E) / (MS_R + (MS_C - MS_E)/n). Throws NumericError on a zero
/// denominator.
double icc2k(const AnovaTable& table);

/// One-sided p for H0: ICC = 0, from F = MS_R/MS_E on (n-1, (n-1)(k-1)) df.
/// MS_E = 0 gives 0.
double icc_p_value(const AnovaTable& table);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// McGraw & Wong (1996) interval for ICC(A,k). Degenerates to [icc, icc]
/// when MS_E = 0.
Interval icc2k_confidence_interval(const AnovaTable& table, double confidence);

enum class IccGuideline { koo_li, cicchetti };

/// Koo & Li: < 0.50 Poor, [0.50, 0.75] Moderate, (0.75, 0.90] Good, > 0.90 Excellent.
/// Cicchetti: < 0.40 Poor, [0.40, 0.60] Fair, (0.60, 0.75] Good, > 0.75 Excellent.
/// A value on a shared boundary belongs to the lower of the two bands. NaN is "Undefined".
std::string interpret_icc(double value, IccGuideline guideline);

}  // namespace rankalign
