#include "grainrisk/connectedness.hpp"

#include <cmath>
#include <stdexcept>

#include "grainrisk/core.hpp"

namespace grainrisk {

namespace {

constexpr double kEigenvalueCutoff = 1e-10;

Eigen::MatrixXd covariance_of(const Eigen::MatrixXd& data) {
  const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(data.rows());
}

Eigen::MatrixXd correlation_from_covariance(const Eigen::MatrixXd& cov) {
  const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  for (int i = 0; i < sd.size(); ++i)
    if (!(sd(i) > 0.0))
      throw std::domain_error("correlation: zero variance in column " +
                              std::to_string(i));
  return cov.array() / (sd * sd.transpose()).array();
}

// Eigendecomposition with ascending eigenvalues and a deterministic sign
// convention: the largest-magnitude entry of each eigenvector is positive.
void symmetric_eigen(const Eigen::MatrixXd& m, Eigen::VectorXd& values,
                     Eigen::MatrixXd& vectors) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  values = solver.eigenvalues();
  vectors = solver.eigenvectors();
  for (int c = 0; c < vectors.cols(); ++c) {
    int arg = 0;
    vectors.col(c).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, c) < 0.0) vectors.col(c) = -vectors.col(c);
  }
}

// Contributions of every predictor column given the correlation matrix of the
// predictors (Rxx) and their correlations with the target (Ryx).
Eigen::VectorXd genizi_contributions(const Eigen::MatrixXd& rxx,
                                     const Eigen::VectorXd& ryx) {
  Eigen::VectorXd lambda;
  Eigen::MatrixXd v;
  symmetric_eigen(rxx, lambda, v);

  const int m = static_cast<int>(lambda.size());
  Eigen::VectorXd sqrt_l = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd inv_sqrt_l = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < m; ++i) {
    if (lambda(i) > kEigenvalueCutoff) {
      sqrt_l(i) = std::sqrt(lambda(i));
      inv_sqrt_l(i) = 1.0 / sqrt_l(i);
    }
  }
  const Eigen::MatrixXd rxz = v * sqrt_l.asDiagonal() * v.transpose();
  const Eigen::VectorXd w = v * (inv_sqrt_l.asDiagonal() * (v.transpose() * ryx));
  return rxz.array().square().matrix() * w.array().square().matrix();
}

}  // namespace

VarModel fit_var(const Panel& panel, int p) {
  const int k = static_cast<int>(panel.width());
  const int t_len = static_cast<int>(panel.length());
  if (p < 0) throw std::invalid_argument("fit_var: negative lag order");
  if (t_len <= k * p + 10) throw std::invalid_argument("fit_var: series too short");

  VarModel model;
  model.lag_order = p;
  if (p == 0) {
    model.intercept = panel.data.colwise().mean();
    model.sigma = covariance_of(panel.data);
    return model;
  }

  const int rows = t_len - p;
  const int cols = 1 + k * p;
  Eigen::MatrixXd X(rows, cols);
  Eigen::MatrixXd Y(rows, k);
  for (int t = p; t < t_len; ++t) {
    const int r = t - p;
    X(r, 0) = 1.0;
    for (int lag = 1; lag <= p; ++lag)
      X.block(r, 1 + (lag - 1) * k, 1, k) = panel.data.row(t - lag);
    Y.row(r) = panel.data.row(t);
  }
  const Eigen::MatrixXd xtx = X.transpose() * X;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(xtx);
  if (!lu.isInvertible())
    throw std::domain_error("fit_var: singular regressor matrix");
  const Eigen::MatrixXd beta = lu.solve(X.transpose() * Y);  // cols x k

  model.intercept = beta.row(0);
  for (int lag = 1; lag <= p; ++lag)
    model.coefficients.push_back(beta.block(1 + (lag - 1) * k, 0, k, k).transpose());
  const Eigen::MatrixXd resid = Y - X * beta;
  const int dof = std::max(rows - cols, 1);
  model.sigma = resid.transpose() * resid / static_cast<double>(dof);
  return model;
}

std::vector<Eigen::MatrixXd> vma_coeffs(const VarModel& var, int horizon) {
  if (horizon < 1) throw std::invalid_argument("vma_coeffs: horizon >= 1 required");
  const int k = static_cast<int>(var.sigma.rows());
  std::vector<Eigen::MatrixXd> a;
  a.reserve(horizon);
  a.push_back(Eigen::MatrixXd::Identity(k, k));
  for (int h = 1; h < horizon; ++h) {
    Eigen::MatrixXd ah = Eigen::MatrixXd::Zero(k, k);
    for (std::size_t i = 0; i < var.coefficients.size(); ++i) {
      const int prev = h - 1 - static_cast<int>(i);
      if (prev < 0) break;
      ah += var.coefficients[i] * a[prev];
    }
    a.push_back(std::move(ah));
  }
  return a;
}

Eigen::MatrixXd gfevd(const VarModel& var, int horizon) {
  const int k = static_cast<int>(var.sigma.rows());
  for (int i = 0; i < k; ++i)
    if (!(var.sigma(i, i) > 0.0))
      throw std::domain_error("gfevd: zero diagonal in sigma");
  const auto a = vma_coeffs(var, horizon);
  Eigen::MatrixXd numer = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd denom = Eigen::VectorXd::Zero(k);
  for (const auto& ah : a) {
    const Eigen::MatrixXd as = ah * var.sigma;
    numer += as.array().square().matrix();
    denom += (as * ah.transpose()).diagonal();
  }
  Eigen::MatrixXd out(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      out(i, j) = numer(i, j) / (var.sigma(j, j) * denom(i));
  return out;
}

Eigen::MatrixXd r2_bivariate(const Eigen::MatrixXd& cov) {
  const Eigen::MatrixXd corr = correlation_from_covariance(cov);
  return corr.array().square();
}

Eigen::VectorXd genizi_decompose(const Eigen::MatrixXd& corr_full, int target) {
  const int k = static_cast<int>(corr_full.rows());
  if (k < 2 || corr_full.cols() != k)
    throw std::invalid_argument("genizi_decompose: need a square matrix, k >= 2");
  if (target < 0 || target >= k)
    throw std::invalid_argument("genizi_decompose: bad target");

  Eigen::MatrixXd rxx(k - 1, k - 1);
  Eigen::VectorXd ryx(k - 1);
  int ri = 0;
  for (int i = 0; i < k; ++i) {
    if (i == target) continue;
    ryx(ri) = corr_full(target, i);
    int rj = 0;
    for (int j = 0; j < k; ++j) {
      if (j == target) continue;
      rxx(ri, rj++) = corr_full(i, j);
    }
    ++ri;
  }
  return genizi_contributions(rxx, ryx);
}

void ConnectednessTable::finalize_from_contributions() {
  const int k = static_cast<int>(contributions.rows());
  from = contributions.rowwise().sum();
  to = contributions.colwise().sum();
  net = to - from;
  npdc = contributions - contributions.transpose();
  tci = from.sum() / static_cast<double>(k);
}

ConnectednessTable connectedness_table(const Panel& panel,
                                       const ConnectednessOptions& opts) {
  const int k = static_cast<int>(panel.width());
  if (k < 2) throw std::invalid_argument("connectedness_table: k >= 2 required");

  ConnectednessTable table;
  table.names = panel.names;
  table.contributions = Eigen::MatrixXd::Zero(k, k);
  table.r2 = Eigen::VectorXd::Zero(k);

  if (opts.mode == SpilloverMode::gfevd) {
    const VarModel var = fit_var(panel, opts.var_lags);
    const Eigen::MatrixXd phi = gfevd(var, opts.horizon);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        if (i != j) table.contributions(i, j) = 100.0 * phi(i, j);
    table.r2 = table.contributions.rowwise().sum() / 100.0;
    table.finalize_from_contributions();
    return table;
  }

  const int p = opts.lags;
  const int rows = static_cast<int>(panel.length()) - p;
  if (rows < k * (p + 1) + 2)
    throw std::invalid_argument("connectedness_table: window too short for lags");

  if (p == 0) {
    const Eigen::MatrixXd corr =
        correlation_from_covariance(covariance_of(panel.data));
    for (int i = 0; i < k; ++i) {
      const Eigen::VectorXd contrib = genizi_decompose(corr, i);
      table.r2(i) = contrib.sum();
      int cj = 0;
      for (int j = 0; j < k; ++j) {
        if (j == i) continue;
        table.contributions(i, j) = 100.0 * contrib(cj++);
      }
    }
    table.finalize_from_contributions();
    return table;
  }

  // Lagged path: predictors for target i are the other variables at lags
  // 0..p; per-variable contributions aggregate over the lags.
  for (int i = 0; i < k; ++i) {
    const int m = (k - 1) * (p + 1);
    Eigen::MatrixXd design(rows, m + 1);
    for (int t = 0; t < rows; ++t) {
      design(t, 0) = panel.data(t + p, i);
      int c = 1;
      for (int j = 0; j < k; ++j) {
        if (j == i) continue;
        for (int lag = 0; lag <= p; ++lag) design(t, c++) = panel.data(t + p - lag, j);
      }
    }
    const Eigen::MatrixXd corr =
        correlation_from_covariance(covariance_of(design));
    const Eigen::VectorXd contrib = genizi_decompose(corr, 0);
    table.r2(i) = contrib.sum();
    int c = 0;
    for (int j = 0; j < k; ++j) {
      if (j == i) continue;
      double sum = 0.0;
      for (int lag = 0; lag <= p; ++lag) sum += contrib(c++);
      table.contributions(i, j) = 100.0 * sum;
    }
  }
  table.finalize_from_contributions();
  return table;
}

namespace {

bool window_has_zero_variance(const Panel& panel, int start, int window) {
  const auto block = panel.data.middleRows(start, window);
  const Eigen::RowVectorXd mean = block.colwise().mean();
  for (int c = 0; c < block.cols(); ++c) {
    const double ss = (block.col(c).array() - mean(c)).square().sum();
    if (!(ss > 0.0)) return true;
  }
  return false;
}

template <typename ForEach>
RollingResult rolling_impl(const Panel& panel, int window, int step,
                           const ConnectednessOptions& opts,
                           const ForEach& for_each_window) {
  const int t_len = static_cast<int>(panel.length());
  if (window < 2 || window > t_len)
    throw std::invalid_argument("rolling_connectedness: window of " +
                                std::to_string(window) + " exceeds series length " +
                                std::to_string(t_len));
  if (step < 1) throw std::invalid_argument("rolling_connectedness: step >= 1");

  std::vector<int> ends;
  for (int e = window - 1; e < t_len; e += step) ends.push_back(e);

  const int n = static_cast<int>(ends.size());
  std::vector<std::optional<ConnectednessTable>> slots(n);
  std::vector<char> skipped(n, 0);

  for_each_window(n, [&](int w) {
    const int start = ends[w] - window + 1;
    if (window_has_zero_variance(panel, start, window)) {
      skipped[w] = 1;
      return;
    }
    Panel sub{panel.names, panel.data.middleRows(start, window)};
    slots[w] = connectedness_table(sub, opts);
  });

  RollingResult out;
  for (int w = 0; w < n; ++w) {
    if (skipped[w]) {
      out.skipped.push_back(ends[w]);
    } else {
      out.window_ends.push_back(ends[w]);
      out.tables.push_back(std::move(*slots[w]));
    }
  }
  return out;
}

}  // namespace

RollingResult rolling_connectedness(const Panel& panel, int window, int step,
                                    const ConnectednessOptions& opts, int threads) {
  const int nthreads = resolve_threads(threads);
  return rolling_impl(panel, window, step, opts, [&](int n, auto&& body) {
    (void)nthreads;
#ifdef _OPENMP
#pragma omp parallel for num_threads(nthreads) schedule(dynamic)
#endif
    for (int w = 0; w < n; ++w) body(w);
  });
}

RollingResult rolling_connectedness_serial(const Panel& panel, int window, int step,
                                           const ConnectednessOptions& opts) {
  return rolling_impl(panel, window, step, opts, [&](int n, auto&& body) {
    for (int w = 0; w < n; ++w) body(w);
  });
}

ConnectednessTable average_connectedness(const std::vector<ConnectednessTable>& tables) {
  if (tables.empty())
    throw std::invalid_argument("average_connectedness: no tables");
  ConnectednessTable out;
  out.names = tables.front().names;
  out.contributions = tables.front().contributions;
  out.r2 = tables.front().r2;
  for (std::size_t i = 1; i < tables.size(); ++i) {
    out.contributions += tables[i].contributions;
    out.r2 += tables[i].r2;
  }
  const double inv = 1.0 / static_cast<double>(tables.size());
  out.contributions *= inv;
  out.r2 *= inv;
  out.finalize_from_contributions();
  return out;
}

}  // namespace grainrisk
