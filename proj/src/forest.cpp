#include "grainrisk/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "grainrisk/core.hpp"

namespace grainrisk {

Dataset standardize_split(const std::vector<std::vector<double>>& features,
                          std::span<const double> target,
                          const std::vector<std::string>& names, double train_ratio,
                          SplitMode mode, std::uint64_t seed) {
  const std::size_t n = target.size();
  if (n < 20) throw std::invalid_argument("standardize_split: need at least 20 rows");
  if (features.size() != n)
    throw std::invalid_argument("standardize_split: feature/target length mismatch");
  if (!(train_ratio > 0.0 && train_ratio < 1.0))
    throw std::invalid_argument("standardize_split: ratio must be in (0,1)");
  const std::size_t d_in = names.size();

  Dataset out;
  const std::size_t n_train =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(train_ratio * n)));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (mode == SplitMode::random) {
    Rng rng(derive_seed(seed, "split"));
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1], order[rng.uniform_index(i)]);
  }
  out.train_indices.assign(order.begin(), order.begin() + n_train);
  out.test_indices.assign(order.begin() + n_train, order.end());
  std::sort(out.train_indices.begin(), out.train_indices.end());
  std::sort(out.test_indices.begin(), out.test_indices.end());

  // Train-set moments per feature; zero-variance features are dropped.
  std::vector<double> mu(d_in, 0.0), sd(d_in, 0.0);
  for (int idx : out.train_indices)
    for (std::size_t f = 0; f < d_in; ++f) mu[f] += features[idx][f];
  for (std::size_t f = 0; f < d_in; ++f) mu[f] /= static_cast<double>(n_train);
  for (int idx : out.train_indices)
    for (std::size_t f = 0; f < d_in; ++f) {
      const double d = features[idx][f] - mu[f];
      sd[f] += d * d;
    }
  std::vector<std::size_t> keep;
  for (std::size_t f = 0; f < d_in; ++f) {
    sd[f] = std::sqrt(sd[f] / static_cast<double>(n_train));
    if (sd[f] > 0.0)
      keep.push_back(f);
    else
      out.dropped_features.push_back(names[f]);
  }
  if (keep.empty())
    throw std::invalid_argument("standardize_split: every feature has zero variance");

  double ty = 0.0, sy = 0.0;
  for (int idx : out.train_indices) ty += target[idx];
  ty /= static_cast<double>(n_train);
  for (int idx : out.train_indices) sy += (target[idx] - ty) * (target[idx] - ty);
  sy = std::sqrt(sy / static_cast<double>(n_train));
  if (!(sy > 0.0)) throw std::invalid_argument("standardize_split: constant target");

  out.features.assign(n, std::vector<double>(keep.size()));
  out.target.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < keep.size(); ++c)
      out.features[i][c] = (features[i][keep[c]] - mu[keep[c]]) / sd[keep[c]];
    out.target[i] = (target[i] - ty) / sy;
  }
  for (std::size_t c = 0; c < keep.size(); ++c)
    out.feature_names.push_back(names[keep[c]]);
  return out;
}

double Tree::predict(std::span<const double> x) const {
  int i = 0;
  while (nodes[i].feature >= 0)
    i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return nodes[i].value;
}

int Tree::depth() const {
  // Iterative depth over the explicit node array.
  std::vector<std::pair<int, int>> stack{{0, 1}};
  int best = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (nodes[i].feature >= 0) {
      stack.push_back({nodes[i].left, d + 1});
      stack.push_back({nodes[i].right, d + 1});
    }
  }
  return best;
}

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0;
  double gain = 0;  // decrease in summed squared deviation
  std::size_t left_count = 0;
};

// Best variance-reduction split over the candidate features for the samples
// in [begin, end) of `idx`.
SplitChoice best_split(const Dataset& data, std::vector<int>& idx, std::size_t begin,
                       std::size_t end, std::span<const int> features,
                       const TreeParams& params) {
  const std::size_t n = end - begin;
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const double y = data.target[idx[i]];
    sum += y;
    sum2 += y * y;
  }
  const double parent_ss = sum2 - sum * sum / static_cast<double>(n);

  SplitChoice best;
  std::vector<std::pair<double, double>> xy(n);  // (feature value, target)
  for (int f : features) {
    for (std::size_t i = 0; i < n; ++i) {
      const int row = idx[begin + i];
      xy[i] = {data.features[row][f], data.target[row]};
    }
    std::sort(xy.begin(), xy.end());
    double left_sum = 0.0, left_sum2 = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left_sum += xy[i].second;
      left_sum2 += xy[i].second * xy[i].second;
      if (xy[i].first == xy[i + 1].first) continue;  // no boundary here
      const std::size_t nl = i + 1, nr = n - nl;
      if (nl < static_cast<std::size_t>(params.min_leaf) ||
          nr < static_cast<std::size_t>(params.min_leaf))
        continue;
      const double right_sum = sum - left_sum;
      const double right_sum2 = sum2 - left_sum2;
      const double ss = (left_sum2 - left_sum * left_sum / nl) +
                        (right_sum2 - right_sum * right_sum / nr);
      const double gain = parent_ss - ss;
      if (gain > best.gain) {
        best.feature = f;
        best.threshold = 0.5 * (xy[i].first + xy[i + 1].first);
        best.gain = gain;
        best.left_count = nl;
      }
    }
  }
  return best;
}

void grow(Tree& tree, const Dataset& data, std::vector<int>& idx, std::size_t begin,
          std::size_t end, int depth, const TreeParams& params, Rng& rng,
          int node_index) {
  const std::size_t n = end - begin;
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i) sum += data.target[idx[i]];
  tree.nodes[node_index].value = sum / static_cast<double>(n);

  if (n < 2 * static_cast<std::size_t>(params.min_leaf)) return;
  if (params.max_depth > 0 && depth >= params.max_depth) return;

  const int d = static_cast<int>(data.dims());
  const int mf = params.max_features > 0 ? std::min(params.max_features, d) : d;
  // Deterministic feature subset: partial Fisher-Yates over 0..d-1.
  std::vector<int> all(d);
  std::iota(all.begin(), all.end(), 0);
  for (int i = 0; i < mf; ++i) {
    const int j = i + static_cast<int>(rng.uniform_index(d - i));
    std::swap(all[i], all[j]);
  }
  const SplitChoice split =
      best_split(data, idx, begin, end, std::span<const int>(all.data(), mf), params);
  if (split.feature < 0 || !(split.gain > 0.0)) return;

  const auto mid = std::partition(idx.begin() + begin, idx.begin() + end, [&](int row) {
    return data.features[row][split.feature] <= split.threshold;
  });
  const std::size_t split_at = static_cast<std::size_t>(mid - idx.begin());

  tree.importance_raw[split.feature] += split.gain;
  tree.nodes[node_index].feature = split.feature;
  tree.nodes[node_index].threshold = split.threshold;
  const int left = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  const int right = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  tree.nodes[node_index].left = left;
  tree.nodes[node_index].right = right;
  grow(tree, data, idx, begin, split_at, depth + 1, params, rng, left);
  grow(tree, data, idx, split_at, end, depth + 1, params, rng, right);
}

}  // namespace

Tree fit_tree(const Dataset& data, std::span<const int> sample_indices,
              const TreeParams& params, std::uint64_t seed) {
  if (sample_indices.empty()) throw std::invalid_argument("fit_tree: empty sample");
  Tree tree;
  tree.importance_raw.assign(data.dims(), 0.0);
  tree.nodes.emplace_back();
  std::vector<int> idx(sample_indices.begin(), sample_indices.end());
  Rng rng(seed);
  grow(tree, data, idx, 0, idx.size(), 0, params, rng, 0);
  return tree;
}

double ForestModel::predict(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& tree : trees) sum += tree.predict(x);
  return sum / static_cast<double>(trees.size());
}

namespace {

template <typename ForEach>
ForestModel fit_forest_impl(const Dataset& data, const ForestParams& params,
                            std::uint64_t seed, const ForEach& for_each_tree) {
  if (params.trees < 1) throw std::invalid_argument("fit_forest: trees >= 1");
  if (data.train_indices.empty())
    throw std::invalid_argument("fit_forest: empty training split");

  ForestModel model;
  model.params = params;
  model.seed = seed;
  model.trees.resize(params.trees);

  const auto& train = data.train_indices;
  for_each_tree(params.trees, [&](int t) {
    const std::uint64_t tree_seed = derive_seed(seed, static_cast<std::uint64_t>(t));
    std::vector<int> sample;
    if (params.bootstrap) {
      Rng rng(derive_seed(tree_seed, "bootstrap"));
      sample.resize(train.size());
      for (auto& s : sample) s = train[rng.uniform_index(train.size())];
    } else {
      sample = train;
    }
    model.trees[t] = fit_tree(data, sample, params.tree, tree_seed);
  });

  model.importance.assign(data.dims(), 0.0);
  for (const auto& tree : model.trees)
    for (std::size_t f = 0; f < data.dims(); ++f)
      model.importance[f] += tree.importance_raw[f];
  double total = 0.0;
  for (double v : model.importance) total += v;
  if (total > 0.0)
    for (double& v : model.importance) v /= total;
  return model;
}

}  // namespace

ForestModel fit_forest(const Dataset& data, const ForestParams& params,
                       std::uint64_t seed, int threads) {
  const int nthreads = resolve_threads(threads);
  return fit_forest_impl(data, params, seed, [&](int n, auto&& body) {
    (void)nthreads;
#ifdef _OPENMP
#pragma omp parallel for num_threads(nthreads) schedule(dynamic)
#endif
    for (int t = 0; t < n; ++t) body(t);
  });
}

ForestModel fit_forest_serial(const Dataset& data, const ForestParams& params,
                              std::uint64_t seed) {
  return fit_forest_impl(data, params, seed, [&](int n, auto&& body) {
    for (int t = 0; t < n; ++t) body(t);
  });
}

Metrics evaluate(const ForestModel& model, const Dataset& data,
                 std::span<const int> indices) {
  if (indices.empty()) throw std::invalid_argument("evaluate: empty index set");
  Metrics m;
  for (int i : indices) {
    const double err = data.target[i] - model.predict(data.features[i]);
    m.mae += std::abs(err);
    m.mse += err * err;
  }
  m.mae /= static_cast<double>(indices.size());
  m.mse /= static_cast<double>(indices.size());
  return m;
}

std::vector<double> permutation_importance(const ForestModel& model,
                                           const Dataset& data, std::uint64_t seed,
                                           int repeats) {
  const auto& test = data.test_indices;
  if (test.empty()) throw std::invalid_argument("permutation_importance: no test set");
  const double base = evaluate(model, data, test).mse;
  std::vector<double> out(data.dims(), 0.0);
  for (std::size_t f = 0; f < data.dims(); ++f) {
    for (int r = 0; r < repeats; ++r) {
      Rng rng(derive_seed(derive_seed(seed, static_cast<std::uint64_t>(f)),
                          static_cast<std::uint64_t>(r)));
      std::vector<int> perm(test.begin(), test.end());
      for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
      double mse = 0.0;
      std::vector<double> x;
      for (std::size_t i = 0; i < test.size(); ++i) {
        x.assign(data.features[test[i]].begin(), data.features[test[i]].end());
        x[f] = data.features[perm[i]][f];
        const double err = data.target[test[i]] - model.predict(x);
        mse += err * err;
      }
      out[f] += mse / static_cast<double>(test.size()) - base;
    }
    out[f] /= repeats;
  }
  return out;
}

GridSearchResult grid_search(const Dataset& data,
                             const std::vector<ForestParams>& grid,
                             std::uint64_t seed, int threads) {
  if (grid.empty()) throw std::invalid_argument("grid_search: empty grid");
  constexpr int kFolds = 5;
  const auto& train = data.train_indices;
  if (train.size() < kFolds)
    throw std::invalid_argument("grid_search: training split smaller than fold count");

  // Contiguous folds over a seeded permutation of the training rows.
  std::vector<int> order(train.begin(), train.end());
  Rng rng(derive_seed(seed, "cv-folds"));
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.uniform_index(i)]);

  GridSearchResult result;
  result.best_cv_mse = std::numeric_limits<double>::infinity();
  for (std::size_t cell = 0; cell < grid.size(); ++cell) {
    double mse_sum = 0.0;
    for (int fold = 0; fold < kFolds; ++fold) {
      const std::size_t lo = fold * order.size() / kFolds;
      const std::size_t hi = (fold + 1) * order.size() / kFolds;
      Dataset cv = data;
      cv.train_indices.clear();
      cv.test_indices.assign(order.begin() + lo, order.begin() + hi);
      for (std::size_t i = 0; i < order.size(); ++i)
        if (i < lo || i >= hi) cv.train_indices.push_back(order[i]);
      const ForestModel model = fit_forest(
          cv, grid[cell], derive_seed(seed, static_cast<std::uint64_t>(fold)), threads);
      mse_sum += evaluate(model, cv, cv.test_indices).mse;
    }
    const double cv_mse = mse_sum / kFolds;
    result.cells.push_back({grid[cell], cv_mse});

    const auto& cand = grid[cell];
    const auto& best = result.best;
    const bool better =
        cv_mse < result.best_cv_mse ||
        (cv_mse == result.best_cv_mse &&
         (cand.trees < best.trees ||
          (cand.trees == best.trees && cand.tree.max_depth != 0 &&
           (best.tree.max_depth == 0 || cand.tree.max_depth < best.tree.max_depth))));
    if (better || result.cells.size() == 1) {
      result.best = cand;
      result.best_cv_mse = cv_mse;
    }
  }
  return result;
}

std::vector<ForestParams> default_grid(int dims) {
  std::vector<ForestParams> grid;
  const int sqrt_d = std::max(1, static_cast<int>(std::lround(std::sqrt(dims))));
  const int third_d = std::max(1, dims / 3);
  for (int trees : {100, 300, 500})
    for (int depth : {4, 8, 16, 0})
      for (int mf : {third_d, sqrt_d, dims}) {
        ForestParams p;
        p.trees = trees;
        p.tree.max_depth = depth;
        p.tree.max_features = mf;
        p.tree.min_leaf = 2;
        grid.push_back(p);
      }
  return grid;
}

}  // namespace grainrisk
