#pragma once

namespace rankalign {

/// I_x(a, b), the regularized incomplete beta function, by Lentz's continued
/// fraction. Requires a, b > 0 and 0 <= x <= 1.
double regularized_incomplete_beta(double a, double b, double x);

/// Student t CDF with `df` > 0 degrees of freedom (df may be fractional).
double t_cdf(double t, double df);

/// Two-sided tail P(|T| >= |t|), computed without cancellation.
double t_two_sided_p(double t, double df);

/// Fisher-Snedecor F CDF for x >= 0.
double f_cdf(double x, double d1, double d2);

/// Upper tail 1 - F_cdf, computed directly.
double f_survival(double x, double d1, double d2);

/// Inverse of f_cdf for p in (0, 1).
double f_quantile(double p, double d1, double d2);

}  // namespace rankalign
