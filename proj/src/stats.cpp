#include "grainrisk/stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "grainrisk/core.hpp"

namespace grainrisk {

namespace {

// Continued-fraction evaluation of the regularized incomplete beta I_x(a, b),
// Lentz's algorithm.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16, kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

// MacKinnon (2010), response surface for the ADF tau, constant, no trend.
double adf_critical(double level, int nobs) {
  double b0, b1, b2, b3;
  if (level == 0.01) {
    b0 = -3.43035; b1 = -6.5393; b2 = -16.786; b3 = -79.433;
  } else if (level == 0.05) {
    b0 = -2.86154; b1 = -2.8903; b2 = -4.234; b3 = -40.040;
  } else {
    b0 = -2.56677; b1 = -1.5384; b2 = -2.809; b3 = 0.0;
  }
  const double T = static_cast<double>(nobs);
  return b0 + b1 / T + b2 / (T * T) + b3 / (T * T * T);
}

std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;  // average rank, 1-based
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double student_t_two_sided_p(double t, double dof) {
  if (!std::isfinite(t)) return 0.0;
  const double x = dof / (dof + t * t);
  return incomplete_beta(0.5 * dof, 0.5, x);
}

StatsRow describe(std::span<const double> x) {
  if (x.size() < 8) throw std::invalid_argument("describe: need at least 8 values");
  const double n = static_cast<double>(x.size());
  StatsRow r;
  r.max = *std::max_element(x.begin(), x.end());
  r.min = *std::min_element(x.begin(), x.end());
  r.mean = mean(x);
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : x) {
    const double d = v - r.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  r.stddev = std::sqrt(m2 * n / (n - 1.0));
  if (m2 == 0.0) {
    r.skewness = r.kurtosis = r.jarque_bera = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  r.skewness = m3 / std::pow(m2, 1.5);
  r.kurtosis = m4 / (m2 * m2);
  const double k_excess = r.kurtosis - 3.0;
  r.jarque_bera = n / 6.0 * (r.skewness * r.skewness + 0.25 * k_excess * k_excess);
  r.jb_significant_1pct = r.jarque_bera > 9.21034;  // chi^2(2), 1%
  const AdfResult adf = adf_test(x);
  r.adf_statistic = adf.statistic;
  r.adf_significant_1pct = adf.significant_1pct;
  return r;
}

AdfResult adf_test(std::span<const double> x, int lags) {
  const int n = static_cast<int>(x.size());
  if (lags < 0)
    lags = static_cast<int>(std::floor(12.0 * std::pow(n / 100.0, 0.25)));
  if (n <= lags + 10) throw std::invalid_argument("adf_test: series too short");

  // dy_t = a + g*y_{t-1} + sum_i d_i*dy_{t-i} + e_t
  const int start = lags + 1;
  const int rows = n - 1 - lags;
  const int cols = 2 + lags;
  Eigen::MatrixXd X(rows, cols);
  Eigen::VectorXd y(rows);
  for (int t = start; t < n; ++t) {
    const int r = t - start;
    y(r) = x[t] - x[t - 1];
    X(r, 0) = 1.0;
    X(r, 1) = x[t - 1];
    for (int i = 1; i <= lags; ++i) X(r, 1 + i) = x[t - i] - x[t - i - 1];
  }
  const Eigen::MatrixXd xtx = X.transpose() * X;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14)
    throw std::domain_error("adf_test: singular regression (degenerate series)");
  const Eigen::VectorXd beta = ldlt.solve(X.transpose() * y);
  const Eigen::VectorXd resid = y - X * beta;
  const double dof = rows - cols;
  if (dof <= 0) throw std::invalid_argument("adf_test: not enough observations");
  const double s2 = resid.squaredNorm() / dof;
  const Eigen::MatrixXd xtx_inv = ldlt.solve(Eigen::MatrixXd::Identity(cols, cols));
  const double se = std::sqrt(s2 * xtx_inv(1, 1));
  if (!(se > 0.0)) throw std::domain_error("adf_test: degenerate regression");

  AdfResult out;
  out.lags = lags;
  out.statistic = beta(1) / se;
  out.significant_1pct = out.statistic < adf_critical(0.01, rows);
  out.significant_5pct = out.statistic < adf_critical(0.05, rows);
  return out;
}

SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3)
    throw std::invalid_argument("spearman: need equal lengths >= 3");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  SpearmanResult out;
  out.rho = pearson_correlation(rx, ry);  // throws on zero rank variance
  const double n = static_cast<double>(x.size());
  if (std::abs(out.rho) >= 1.0) {
    out.p_value = 0.0;
  } else {
    const double t = out.rho * std::sqrt((n - 2.0) / (1.0 - out.rho * out.rho));
    out.p_value = student_t_two_sided_p(t, n - 2.0);
  }
  out.significant_5pct = out.p_value < 0.05;
  out.significant_1pct = out.p_value < 0.01;
  return out;
}

}  // namespace grainrisk
