#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace grainrisk {

struct Extrema {
  std::vector<int> maxima;
  std::vector<int> minima;
  std::size_t total() const { return maxima.size() + minima.size(); }
};

/// Strict local extrema; a flat plateau that forms a peak (valley) contributes
/// its midpoint index (lower median for even plateaus). Monotone input yields
/// empty lists.
Extrema find_extrema(std::span<const double> x);

int count_zero_crossings(std::span<const double> x);

enum class SiftStopRule {
  /// Stop once the IMF condition (extrema and zero-crossing counts differ by
  /// at most one) holds with unchanged counts for `s_number` consecutive
  /// checks. Default: it reproduces the dyadic mean-period ladder of EMD on
  /// noise-like data.
  s_number,
  /// Cauchy criterion sum(m^2)/sum(d^2) < sd_threshold.
  sd_threshold,
};

struct SiftConfig {
  SiftStopRule stop_rule = SiftStopRule::s_number;
  int s_number = 3;
  double sd_threshold = 0.2;
  int max_sift_iterations = 50;
  int mirror_extrema = 2;      // extrema reflected about each boundary sample
  double residue_amplitude_tol = 1e-12;  // relative to max|input|
  int max_modes = 0;           // 0 = until the residue is monotonic
};

struct EnsembleConfig {
  int realizations = 100;  // I
  double noise_scale = 0.2;  // epsilon; noise amplitude = epsilon * std(residue)
  std::uint64_t seed = 0;
};

/// Ordered intrinsic mode functions (high frequency first) plus residue.
/// Every mode and the residue have the source length, and
/// sum(modes) + residue reconstructs the input to ~1e-8.
struct IMFSet {
  std::vector<std::vector<double>> modes;
  std::vector<double> residue;

  std::size_t mode_count() const { return modes.size(); }
  std::size_t length() const { return residue.size(); }
  /// max_t |x(t) - sum_n mode_n(t) - residue(t)|
  double reconstruction_error(std::span<const double> x) const;
};

/// Mean of the upper and lower natural-spline envelopes after mirror
/// extension. Returns false ("monotonic residue") when either extrema list is
/// empty.
bool envelope_mean(std::span<const double> x, int mirror_extrema,
                   std::vector<double>& out);

/// Extracts one IMF candidate by iterating d <- d - m until the configured
/// stopping rule or the iteration cap. Returns false when x admits no
/// envelope. `iterations` (optional) receives the number of envelope
/// subtractions performed.
bool sift(std::span<const double> x, const SiftConfig& cfg, std::vector<double>& imf,
          int* iterations = nullptr);

/// Local mean operator: x minus its first sifted IMF (x itself when no
/// envelope exists).
std::vector<double> local_mean(std::span<const double> x, const SiftConfig& cfg);

/// Plain empirical mode decomposition. Requires length >= 16.
IMFSet emd(std::span<const double> x, const SiftConfig& cfg = {});

/// Improved complete ensemble EMD with adaptive noise. Stage n perturbs the
/// running residue with the n-th EMD mode of each unit-variance noise
/// realization, scaled by epsilon*std(residue), and averages the local means
/// over the ensemble (fixed pairwise order, so results are identical for any
/// thread count). Realization i draws its noise from seed hash(seed, i).
IMFSet iceemdan(std::span<const double> x, const SiftConfig& sift_cfg,
                const EnsembleConfig& ens_cfg, int threads = 0);

/// Reference implementation without OpenMP; bitwise-identical to iceemdan().
IMFSet iceemdan_serial(std::span<const double> x, const SiftConfig& sift_cfg,
                       const EnsembleConfig& ens_cfg);

}  // namespace grainrisk
