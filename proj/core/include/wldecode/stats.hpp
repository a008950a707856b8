#pragma once

#include <span>

namespace wld {

// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

// CDF of Student's t distribution with `dof` degrees of freedom.
double student_t_cdf(double t, double dof);

struct TTestResult {
  double t = 0.0;
  double dof = 0.0;
  double p = 1.0;  // two-sided
};

// Welch's unequal-variance two-sample t-test, two-sided.  Each group needs
// at least 2 values.  Two identical groups give t = 0, p = 1.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

// Paired t-test on a[i] - b[i], two-sided.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

struct WilcoxonResult {
  double w_plus = 0.0;
  double w_minus = 0.0;
  int n_used = 0;  // pairs remaining after zero differences are dropped
  double p = 1.0;  // exact two-sided
};

// Exact two-sided Wilcoxon signed-rank test for paired samples: zero
// differences dropped, average ranks on ties, and the null distribution
// enumerated over all 2^n sign assignments (n <= 25).
WilcoxonResult wilcoxon_signed_rank_exact(std::span<const double> a, std::span<const double> b);

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, n-1 denominator
};

// Throws ValidationError when fewer than 2 values are given.
Aggregate aggregate(std::span<const double> values);

}  // namespace wld
