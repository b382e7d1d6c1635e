#pragma once

#include <span>

namespace grainrisk {

/// Table-1 style descriptive row. Kurtosis is the raw Pearson convention
/// (normal = 3); the Jarque-Bera statistic uses (K - 3).
struct StatsRow {
  double max = 0, min = 0, mean = 0, stddev = 0;
  double skewness = 0, kurtosis = 0;  // NaN when variance is zero
  double jarque_bera = 0;             // NaN when variance is zero
  bool jb_significant_1pct = false;
  double adf_statistic = 0;
  bool adf_significant_1pct = false;
};

/// Moments, JB and ADF for one series. Requires length >= 8.
StatsRow describe(std::span<const double> x);

struct AdfResult {
  double statistic = 0;
  bool significant_1pct = false;
  bool significant_5pct = false;
  int lags = 0;
};

/// Augmented Dickey-Fuller t-statistic, constant-only specification.
/// lags < 0 selects floor(12*(n/100)^(1/4)). Critical values come from the
/// MacKinnon (2010) response surface for the constant case.
AdfResult adf_test(std::span<const double> x, int lags = -1);

struct SpearmanResult {
  double rho = 0;
  bool significant_5pct = false;
  bool significant_1pct = false;
  double p_value = 1.0;
};

/// Rank correlation with average ranks for ties; significance by the
/// t-approximation t = rho*sqrt((n-2)/(1-rho^2)) with n-2 degrees of freedom.
SpearmanResult spearman(std::span<const double> x, std::span<const double> y);

/// Two-sided p-value of a Student-t statistic (regularized incomplete beta).
double student_t_two_sided_p(double t, double dof);

}  // namespace grainrisk
