#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace grainrisk {

/// k named series on a common calendar, organized as a T x k matrix.
struct Panel {
  std::vector<std::string> names;
  Eigen::MatrixXd data;  // column per series

  std::size_t length() const { return static_cast<std::size_t>(data.rows()); }
  std::size_t width() const { return static_cast<std::size_t>(data.cols()); }
};

struct VarModel {
  int lag_order = 0;
  Eigen::VectorXd intercept;
  std::vector<Eigen::MatrixXd> coefficients;  // B_1..B_p, each k x k
  Eigen::MatrixXd sigma;                      // residual covariance
};

/// Equation-by-equation least squares VAR(p); p = 0 fits only the intercept
/// and sets sigma to the sample covariance.
VarModel fit_var(const Panel& panel, int p);

/// VMA recursion A_0 = I, A_h = sum_i B_i A_{h-i}.
std::vector<Eigen::MatrixXd> vma_coeffs(const VarModel& var, int horizon);

/// Generalized forecast error variance decomposition at horizon H,
/// unnormalized (row sums may exceed 1).
Eigen::MatrixXd gfevd(const VarModel& var, int horizon);

/// Squared Pearson correlations from a covariance matrix (diagonal 1).
Eigen::MatrixXd r2_bivariate(const Eigen::MatrixXd& covariance);

/// R^2 contributions of the predictors behind `corr_full` to target i:
/// eigendecompose the predictor correlation block, take its symmetric square
/// root R_xz, and return elementwise (R_xz)^2 (R_xz^{-1} R_yx)^2. Eigenvalues
/// below 1e-10 are truncated (spectral pseudo-inverse), which keeps the
/// decomposition exact for perfectly collinear predictors. The contributions
/// sum to the multivariate regression R^2 of target i on the others.
Eigen::VectorXd genizi_decompose(const Eigen::MatrixXd& corr_full, int target);

struct ConnectednessTable {
  std::vector<std::string> names;
  Eigen::MatrixXd contributions;  // percent; [i][j] = spillover from j to i; diagonal 0
  Eigen::VectorXd r2;             // per-variable multivariate R^2 (fractions)
  Eigen::VectorXd to, from, net;  // percent
  Eigen::MatrixXd npdc;           // percent, antisymmetric
  double tci = 0;                 // percent, mean of `from`

  void finalize_from_contributions();  // fills to/from/net/npdc/tci
};

enum class SpilloverMode { r2_decomposed, gfevd };

struct ConnectednessOptions {
  SpilloverMode mode = SpilloverMode::r2_decomposed;
  int lags = 0;       // r2 path: include this many lags of the other variables
  int horizon = 10;   // gfevd path
  int var_lags = 1;   // gfevd path
};

ConnectednessTable connectedness_table(const Panel& panel,
                                       const ConnectednessOptions& opts = {});

struct RollingResult {
  std::vector<int> window_ends;  // row index of each window's last observation
  std::vector<ConnectednessTable> tables;
  std::vector<int> skipped;      // window ends skipped for zero variance
};

RollingResult rolling_connectedness(const Panel& panel, int window, int step = 1,
                                    const ConnectednessOptions& opts = {},
                                    int threads = 0);

/// Reference implementation without OpenMP; identical output.
RollingResult rolling_connectedness_serial(const Panel& panel, int window,
                                           int step = 1,
                                           const ConnectednessOptions& opts = {});

/// Elementwise mean over window tables.
ConnectednessTable average_connectedness(const std::vector<ConnectednessTable>& tables);

}  // namespace grainrisk
