#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grainrisk/emd.hpp"
#include "grainrisk/stats.hpp"

namespace grainrisk {

/// Per-mode measures mirroring the decomposition table: mean period,
/// correlation with the original series, variance shareinin the original, and
/// the run-length number.
struct ModeMeasures {
  std::optional<double> mean_period;  // absent when the mode has no peak
  SpearmanResult correlation;
  double variance_share = 0;  // fraction of the original variance
  long run_length = 0;
};

/// T / (#local maxima); nullopt when the mode has no peak (e.g. the residue).
std::optional<double> mean_period(std::span<const double> mode);

/// Number of maximal runs of same-sign deviations from the series mean.
/// Values exactly equal to the mean join the preceding run.
long run_length_number(std::span<const double> mode);

/// var(mode) / var(original).
double variance_share(std::span<const double> mode, std::span<const double> original);

std::vector<ModeMeasures> measure_modes(const IMFSet& imfs,
                                        std::span<const double> original);

// ---------------------------------------------------------------------------
// 1-D Gaussian mixture fitted by EM.
// ---------------------------------------------------------------------------

struct GmmComponent {
  double weight = 0, mean = 0, variance = 0;
};

struct GmmModel1D {
  std::vector<GmmComponent> components;
  double log_likelihood = 0;
  std::vector<std::vector<double>> responsibilities;  // [point][component]

  int argmax_component(std::size_t point) const;
};

struct GmmConfig {
  int restarts = 10;
  int max_iterations = 500;
  double tolerance = 1e-10;            // absolute log-likelihood improvement
  double variance_floor_factor = 1e-6; // floor = factor * var(values)
  std::uint64_t seed = 0;
};

/// EM to convergence, best of `restarts` initializations (restart 0 places
/// means at quantiles, the rest draw k-means++ style seeded starts).
/// Restarts that collapse onto the variance floor with fewer than two hard
/// members are not eligible winners unless every restart did.
GmmModel1D gmm_fit_1d(std::span<const double> values, int k, const GmmConfig& cfg = {});

// ---------------------------------------------------------------------------
// Component reconstruction (short / medium / long term).
// ---------------------------------------------------------------------------

enum class ComponentKind { short_term = 0, medium_term = 1, long_term = 2 };

enum class RunLengthScale { log_scale, raw };

struct ComponentSet {
  std::vector<double> stc, mtc, ltc;       // each of source length
  std::vector<ComponentKind> membership;   // per mode, contiguous in mode order
  bool residue_in_ltc = true;
  bool used_quantile_fallback = false;     // set when the GMM degenerated

  std::vector<int> modes_of(ComponentKind kind) const;  // 0-based mode indices
};

struct ClassifyConfig {
  int clusters = 3;  // 1, 2 or 3
  RunLengthScale scale = RunLengthScale::log_scale;
  GmmConfig gmm;
};

/// Clusters the modes' run-length numbers with a 1-D GMM, orders clusters by
/// mean run-length descending (STC first), makes the memberships contiguous in
/// mode order, and sums member modes. The residue joins the long-term
/// component. Degenerate clusterings fall back to quantile thresholds.
ComponentSet classify_components(const IMFSet& imfs, const ClassifyConfig& cfg = {});

}  // namespace grainrisk
