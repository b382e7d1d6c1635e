#include "grainrisk/core.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace grainrisk {

std::vector<double> pairwise_mean(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("pairwise_mean: no rows");
  const std::size_t m = rows.size();
  // Stride-doubling pairwise tree over scratch copies; the combination order
  // is a function of m alone.
  std::vector<std::vector<double>> work(rows);
  for (std::size_t gap = 1; gap < m; gap *= 2) {
    for (std::size_t i = 0; i + gap < m; i += 2 * gap) {
      auto& dst = work[i];
      const auto& src = work[i + gap];
      for (std::size_t t = 0; t < dst.size(); ++t) dst[t] += src[t];
    }
  }
  std::vector<double> out = std::move(work[0]);
  const double inv = 1.0 / static_cast<double>(m);
  for (double& v : out) v *= inv;
  return out;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("pearson_correlation: length mismatch");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::domain_error("pearson_correlation: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

int resolve_threads(int requested) {
#ifdef _OPENMP
  if (requested <= 0) return omp_get_max_threads();
  return requested;
#else
  (void)requested;
  return 1;
#endif
}

}  // namespace grainrisk
