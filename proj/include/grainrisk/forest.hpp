#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace grainrisk {

enum class SplitMode { random, chronological };

/// Standardized feature matrix and target with a train/test split. The
/// z-scoring uses training-set moments only.
struct Dataset {
  std::vector<std::vector<double>> features;  // [row][feature]
  std::vector<double> target;
  std::vector<std::string> feature_names;
  std::vector<int> train_indices, test_indices;
  std::vector<std::string> dropped_features;  // zero variance on the full set

  std::size_t rows() const { return target.size(); }
  std::size_t dims() const { return feature_names.size(); }
};

Dataset standardize_split(const std::vector<std::vector<double>>& features,
                          std::span<const double> target,
                          const std::vector<std::string>& names, double train_ratio,
                          SplitMode mode, std::uint64_t seed);

struct TreeParams {
  int max_depth = 0;      // 0 = unlimited
  int max_features = 0;   // features tried per node; 0 = all
  int min_leaf = 2;       // minimum samples per leaf
};

struct Tree {
  struct Node {
    int feature = -1;  // -1 = leaf
    double threshold = 0;
    int left = -1, right = -1;
    double value = 0;  // leaf mean
  };
  std::vector<Node> nodes;
  std::vector<double> importance_raw;  // per-feature impurity decrease

  double predict(std::span<const double> x) const;
  int depth() const;
};

Tree fit_tree(const Dataset& data, std::span<const int> sample_indices,
              const TreeParams& params, std::uint64_t seed);

struct ForestParams {
  int trees = 300;
  TreeParams tree;
  bool bootstrap = true;
};

struct ForestModel {
  std::vector<Tree> trees;
  ForestParams params;
  std::vector<double> importance;  // normalized to sum 1
  std::uint64_t seed = 0;

  double predict(std::span<const double> x) const;  // mean of tree outputs
};

ForestModel fit_forest(const Dataset& data, const ForestParams& params,
                       std::uint64_t seed, int threads = 0);

/// Reference implementation without OpenMP; identical output.
ForestModel fit_forest_serial(const Dataset& data, const ForestParams& params,
                              std::uint64_t seed);

struct Metrics {
  double mae = 0, mse = 0;
};

Metrics evaluate(const ForestModel& model, const Dataset& data,
                 std::span<const int> indices);

/// Test-set MSE increase when each feature is permuted (averaged over
/// `repeats` seeded shuffles).
std::vector<double> permutation_importance(const ForestModel& model,
                                           const Dataset& data, std::uint64_t seed,
                                           int repeats = 5);

struct GridSearchResult {
  ForestParams best;
  double best_cv_mse = 0;
  struct Cell {
    ForestParams params;
    double cv_mse = 0;
  };
  std::vector<Cell> cells;
};

/// Exhaustive 5-fold cross-validation over the grid on the training split.
/// Ties prefer fewer trees, then shallower depth.
GridSearchResult grid_search(const Dataset& data,
                             const std::vector<ForestParams>& grid,
                             std::uint64_t seed, int threads = 0);

/// The default grid: trees {100,300,500} x depth {4,8,16,unlimited} x
/// max_features {d/3, sqrt(d), d}, min_leaf 2.
std::vector<ForestParams> default_grid(int dims);

}  // namespace grainrisk
