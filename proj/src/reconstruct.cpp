#include "grainrisk/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "grainrisk/core.hpp"

namespace grainrisk {

std::optional<double> mean_period(std::span<const double> mode) {
  const auto ex = find_extrema(mode);
  if (ex.maxima.empty()) return std::nullopt;
  return static_cast<double>(mode.size()) / static_cast<double>(ex.maxima.size());
}

long run_length_number(std::span<const double> mode) {
  if (mode.empty()) throw std::invalid_argument("run_length_number: empty input");
  const double m = mean(mode);
  long runs = 0;
  int current = 0;  // 0 = unseen, +1/-1 = sign of the open run
  for (double v : mode) {
    int s = v > m ? 1 : (v < m ? -1 : current);  // ties join the preceding run
    if (s == 0) s = 1;  // leading ties open the first run
    if (s != current) {
      ++runs;
      current = s;
    }
  }
  return std::max(runs, 1L);
}

double variance_share(std::span<const double> mode, std::span<const double> original) {
  if (mode.size() != original.size())
    throw std::invalid_argument("variance_share: length mismatch");
  const double denom = variance_population(original);
  if (denom == 0.0) throw std::domain_error("variance_share: zero original variance");
  return variance_population(mode) / denom;
}

std::vector<ModeMeasures> measure_modes(const IMFSet& imfs,
                                        std::span<const double> original) {
  std::vector<ModeMeasures> out;
  out.reserve(imfs.modes.size());
  for (const auto& mode : imfs.modes) {
    ModeMeasures m;
    m.mean_period = mean_period(mode);
    m.correlation = spearman(mode, original);
    m.variance_share = variance_share(mode, original);
    m.run_length = run_length_number(mode);
    out.push_back(std::move(m));
  }
  return out;
}

// ---------------------------------------------------------------------------
// GMM
// ---------------------------------------------------------------------------

int GmmModel1D::argmax_component(std::size_t point) const {
  const auto& r = responsibilities[point];
  return static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
}

namespace {

struct EmFit {
  std::vector<GmmComponent> comp;
  double ll = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> resp;
};

EmFit run_em(std::span<const double> x, std::vector<double> means, double floor,
             const GmmConfig& cfg) {
  const std::size_t n = x.size();
  const std::size_t k = means.size();
  const double var0 = std::max(variance_population(x), floor);

  std::vector<GmmComponent> comp(k);
  for (std::size_t j = 0; j < k; ++j) comp[j] = {1.0 / k, means[j], var0};

  std::vector<std::vector<double>> resp(n, std::vector<double>(k));
  double ll_prev = -std::numeric_limits<double>::infinity();
  double ll = ll_prev;
  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    // E step
    ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double tot = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double d = x[i] - comp[j].mean;
        const double p = comp[j].weight *
                         std::exp(-0.5 * d * d / comp[j].variance) /
                         std::sqrt(2.0 * std::numbers::pi * comp[j].variance);
        resp[i][j] = p;
        tot += p;
      }
      if (!(tot > 0.0)) {
        // All densities underflowed; assign to the nearest mean.
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j)
          if (std::abs(x[i] - comp[j].mean) < std::abs(x[i] - comp[best].mean))
            best = j;
        for (std::size_t j = 0; j < k; ++j) resp[i][j] = j == best ? 1.0 : 0.0;
        ll += -745.0;  // ~log(DBL_MIN)
        continue;
      }
      for (std::size_t j = 0; j < k; ++j) resp[i][j] /= tot;
      ll += std::log(tot);
    }
    // M step
    for (std::size_t j = 0; j < k; ++j) {
      double nk = 0.0, mu = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        nk += resp[i][j];
        mu += resp[i][j] * x[i];
      }
      if (nk < 1e-300) nk = 1e-300;
      mu /= nk;
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        var += resp[i][j] * (x[i] - mu) * (x[i] - mu);
      var /= nk;
      comp[j] = {nk / n, mu, std::max(var, floor)};
    }
    if (iter > 0 && ll - ll_prev < cfg.tolerance) break;
    ll_prev = ll;
  }
  return {std::move(comp), ll, std::move(resp)};
}

// Collapsed: a component pinned at the variance floor holding fewer than two
// argmax members. Such fits are likelihood spikes, not clusterings.
bool is_degenerate(const EmFit& fit, double floor) {
  const std::size_t k = fit.comp.size();
  std::vector<int> members(k, 0);
  for (std::size_t i = 0; i < fit.resp.size(); ++i) {
    const auto& r = fit.resp[i];
    members[std::max_element(r.begin(), r.end()) - r.begin()]++;
  }
  for (std::size_t j = 0; j < k; ++j)
    if (fit.comp[j].variance <= floor * 1.0001 && members[j] < 2) return true;
  return false;
}

}  // namespace

GmmModel1D gmm_fit_1d(std::span<const double> values, int k, const GmmConfig& cfg) {
  const std::size_t n = values.size();
  if (k < 1 || n < static_cast<std::size_t>(k))
    throw std::invalid_argument("gmm_fit_1d: k exceeds the number of values");

  const double floor =
      std::max(cfg.variance_floor_factor * variance_population(values), 1e-300);

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  EmFit best;
  bool best_valid = false, best_clean = false;
  Rng rng(derive_seed(cfg.seed, "gmm-restarts"));
  for (int r = 0; r < std::max(cfg.restarts, 1); ++r) {
    std::vector<double> means(k);
    if (r == 0) {
      for (int j = 0; j < k; ++j) {
        const double q = (j + 0.5) / k;
        means[j] = sorted[static_cast<std::size_t>(q * (n - 1) + 0.5)];
      }
    } else {
      // k-means++ style: first pick uniform, then proportional to squared
      // distance from the chosen set.
      means[0] = values[rng.uniform_index(n)];
      for (int j = 1; j < k; ++j) {
        std::vector<double> d2(n);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          double dmin = std::numeric_limits<double>::infinity();
          for (int c = 0; c < j; ++c)
            dmin = std::min(dmin, (values[i] - means[c]) * (values[i] - means[c]));
          d2[i] = dmin;
          total += dmin;
        }
        if (total == 0.0) {
          means[j] = values[rng.uniform_index(n)];
          continue;
        }
        double u = rng.uniform() * total;
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          u -= d2[i];
          if (u <= 0.0) {
            pick = i;
            break;
          }
        }
        means[j] = values[pick];
      }
    }
    EmFit fit = run_em(values, means, floor, cfg);
    const bool clean = !is_degenerate(fit, floor);
    const bool better = !best_valid || (clean && !best_clean) ||
                        (clean == best_clean && fit.ll > best.ll);
    if (better) {
      best = std::move(fit);
      best_valid = true;
      best_clean = clean;
    }
  }

  GmmModel1D model;
  model.components = best.comp;
  model.log_likelihood = best.ll;
  model.responsibilities = best.resp;
  return model;
}

// ---------------------------------------------------------------------------
// Component classification
// ---------------------------------------------------------------------------

std::vector<int> ComponentSet::modes_of(ComponentKind kind) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < membership.size(); ++i)
    if (membership[i] == kind) out.push_back(static_cast<int>(i));
  return out;
}

namespace {

// Splits mode indices [0, n) into `k` contiguous groups at the first index of
// each label change; labels are cluster ids ordered so that group 0 is the
// cluster of mode 0.
std::vector<int> contiguous_boundaries(const std::vector<int>& labels, int k) {
  std::vector<int> bounds;  // first index of each group after the first
  int current = labels[0];
  for (std::size_t i = 1; i < labels.size() && static_cast<int>(bounds.size()) < k - 1;
       ++i) {
    if (labels[i] != current) {
      bounds.push_back(static_cast<int>(i));
      current = labels[i];
    }
  }
  return bounds;
}

std::vector<int> quantile_boundaries(std::size_t n_modes, int k) {
  std::vector<int> bounds;
  for (int j = 1; j < k; ++j)
    bounds.push_back(static_cast<int>(std::ceil(static_cast<double>(n_modes) * j / k)));
  return bounds;
}

}  // namespace

ComponentSet classify_components(const IMFSet& imfs, const ClassifyConfig& cfg) {
  const int k = cfg.clusters;
  if (k < 1 || k > 3)
    throw std::invalid_argument("classify_components: clusters must be 1..3");
  const std::size_t n_modes = imfs.mode_count();
  if (n_modes < static_cast<std::size_t>(k))
    throw std::invalid_argument("classify_components: fewer modes than clusters");
  const std::size_t t_len = imfs.length();

  std::vector<double> rln(n_modes), feat(n_modes);
  for (std::size_t i = 0; i < n_modes; ++i) {
    rln[i] = static_cast<double>(run_length_number(imfs.modes[i]));
    feat[i] = cfg.scale == RunLengthScale::log_scale ? std::log(rln[i]) : rln[i];
  }

  ComponentSet out;
  std::vector<int> bounds;
  if (k == 1) {
    bounds = {};
  } else {
    const GmmModel1D gmm = gmm_fit_1d(feat, k, cfg.gmm);
    std::vector<int> raw_labels(n_modes);
    std::vector<int> counts(k, 0);
    for (std::size_t i = 0; i < n_modes; ++i) {
      raw_labels[i] = gmm.argmax_component(i);
      counts[raw_labels[i]]++;
    }
    const bool empty_cluster =
        std::any_of(counts.begin(), counts.end(), [](int c) { return c == 0; });
    if (empty_cluster) {
      out.used_quantile_fallback = true;
      bounds = quantile_boundaries(n_modes, k);
    } else {
      bounds = contiguous_boundaries(raw_labels, k);
      if (static_cast<int>(bounds.size()) != k - 1) {
        // Labels never change often enough; fall back to quantile thirds.
        out.used_quantile_fallback = true;
        bounds = quantile_boundaries(n_modes, k);
      }
    }
  }

  // Membership: group g covers [bounds[g-1], bounds[g]). Group order along the
  // mode index already matches run-length descending (mode 0 has the highest
  // run-length cluster), which is asserted below.
  out.membership.resize(n_modes);
  static constexpr ComponentKind kKinds[3] = {
      ComponentKind::short_term, ComponentKind::medium_term, ComponentKind::long_term};
  for (std::size_t i = 0; i < n_modes; ++i) {
    int g = 0;
    while (g < static_cast<int>(bounds.size()) && static_cast<int>(i) >= bounds[g]) ++g;
    out.membership[i] = kKinds[g];
  }

  // Order check: mean run-length must decrease across groups; if the GMM
  // produced an inverted ordering (possible only on adversarial inputs),
  // quantile boundaries restore it.
  if (k > 1) {
    std::vector<double> group_mean(k, 0.0);
    std::vector<int> group_n(k, 0);
    for (std::size_t i = 0; i < n_modes; ++i) {
      const int g = static_cast<int>(out.membership[i]);
      group_mean[g] += rln[i];
      group_n[g]++;
    }
    for (int g = 0; g < k; ++g) group_mean[g] /= std::max(group_n[g], 1);
    for (int g = 1; g < k; ++g) {
      if (group_mean[g] >= group_mean[g - 1]) {
        out.used_quantile_fallback = true;
        bounds = quantile_boundaries(n_modes, k);
        for (std::size_t i = 0; i < n_modes; ++i) {
          int gg = 0;
          while (gg < static_cast<int>(bounds.size()) && static_cast<int>(i) >= bounds[gg])
            ++gg;
          out.membership[i] = kKinds[gg];
        }
        break;
      }
    }
  }

  out.stc.assign(t_len, 0.0);
  out.mtc.assign(t_len, 0.0);
  out.ltc.assign(t_len, 0.0);
  for (std::size_t i = 0; i < n_modes; ++i) {
    auto& dst = out.membership[i] == ComponentKind::short_term
                    ? out.stc
                    : (out.membership[i] == ComponentKind::medium_term ? out.mtc
                                                                       : out.ltc);
    for (std::size_t t = 0; t < t_len; ++t) dst[t] += imfs.modes[i][t];
  }
  if (out.residue_in_ltc)
    for (std::size_t t = 0; t < t_len; ++t) out.ltc[t] += imfs.residue[t];
  return out;
}

}  // namespace grainrisk
