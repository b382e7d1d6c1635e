#include "grainrisk/emd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "grainrisk/core.hpp"
#include "grainrisk/spline.hpp"

namespace grainrisk {

Extrema find_extrema(std::span<const double> x) {
  Extrema ex;
  const int n = static_cast<int>(x.size());
  if (n < 3) return ex;
  ex.maxima.reserve(n / 4 + 4);
  ex.minima.reserve(n / 4 + 4);
  int i = 1;
  while (i < n - 1) {
    if (x[i] > x[i - 1]) {
      const int start = i;
      while (i < n - 1 && x[i + 1] == x[i]) ++i;
      if (i < n - 1 && x[i + 1] < x[i]) ex.maxima.push_back((start + i) / 2);
    } else if (x[i] < x[i - 1]) {
      const int start = i;
      while (i < n - 1 && x[i + 1] == x[i]) ++i;
      if (i < n - 1 && x[i + 1] > x[i]) ex.minima.push_back((start + i) / 2);
    }
    ++i;
  }
  return ex;
}

int count_zero_crossings(std::span<const double> x) {
  int count = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const bool prev = x[i - 1] >= 0.0;
    const bool cur = x[i] >= 0.0;
    count += prev != cur;
  }
  return count;
}

double IMFSet::reconstruction_error(std::span<const double> x) const {
  double err = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    double s = residue[t];
    for (const auto& m : modes) s += m[t];
    err = std::max(err, std::abs(x[t] - s));
  }
  return err;
}

namespace {

// Knot list for one envelope: extrema reflected about the first and last
// sample positions. Extrema indices never include the boundary samples, so
// the reflected knots are strictly outside [0, n-1] and the spline covers the
// whole grid.
void build_envelope_knots(const std::vector<int>& idx, std::span<const double> x,
                          int mirror, std::vector<double>& kx,
                          std::vector<double>& ky) {
  const int m = static_cast<int>(idx.size());
  const int w = std::min(mirror, m);
  const int last = static_cast<int>(x.size()) - 1;
  kx.clear();
  ky.clear();
  for (int j = w - 1; j >= 0; --j) {
    kx.push_back(-static_cast<double>(idx[j]));
    ky.push_back(x[idx[j]]);
  }
  for (int j = 0; j < m; ++j) {
    kx.push_back(static_cast<double>(idx[j]));
    ky.push_back(x[idx[j]]);
  }
  for (int j = 0; j < w; ++j) {
    kx.push_back(static_cast<double>(2 * last - idx[m - 1 - j]));
    ky.push_back(x[idx[m - 1 - j]]);
  }
}

bool envelope_mean_impl(std::span<const double> x, const Extrema& ex, int mirror,
                        std::vector<double>& out) {
  if (ex.maxima.empty() || ex.minima.empty()) return false;
  const int n = static_cast<int>(x.size());
  thread_local std::vector<double> kx, ky, upper, lower;
  upper.resize(n);
  lower.resize(n);
  build_envelope_knots(ex.maxima, x, mirror, kx, ky);
  CubicSpline(kx, ky).eval_integer_grid(0, n, upper.data());
  build_envelope_knots(ex.minima, x, mirror, kx, ky);
  CubicSpline(kx, ky).eval_integer_grid(0, n, lower.data());
  out.resize(n);
  for (int t = 0; t < n; ++t) out[t] = 0.5 * (upper[t] + lower[t]);
  return true;
}

}  // namespace

bool envelope_mean(std::span<const double> x, int mirror_extrema,
                   std::vector<double>& out) {
  return envelope_mean_impl(x, find_extrema(x), mirror_extrema, out);
}

bool sift(std::span<const double> x, const SiftConfig& cfg, std::vector<double>& imf,
          int* iterations) {
  imf.assign(x.begin(), x.end());
  std::vector<double> m;
  int stable = 0, prev_extrema = -1, prev_crossings = -1, subtractions = 0;
  for (int iter = 0; iter < cfg.max_sift_iterations; ++iter) {
    const Extrema ex = find_extrema(imf);
    if (!envelope_mean_impl(imf, ex, cfg.mirror_extrema, m)) {
      if (iterations) *iterations = subtractions;
      return iter > 0;  // monotonic from the start => no IMF here
    }
    if (cfg.stop_rule == SiftStopRule::s_number) {
      const int n_extrema = static_cast<int>(ex.total());
      const int n_crossings = count_zero_crossings(imf);
      if (std::abs(n_extrema - n_crossings) <= 1 && n_extrema == prev_extrema &&
          n_crossings == prev_crossings)
        ++stable;
      else
        stable = 0;
      prev_extrema = n_extrema;
      prev_crossings = n_crossings;
      if (stable >= cfg.s_number) break;
      for (std::size_t t = 0; t < imf.size(); ++t) imf[t] -= m[t];
      ++subtractions;
    } else {
      double num = 0.0, den = 0.0;
      for (std::size_t t = 0; t < imf.size(); ++t) {
        num += m[t] * m[t];
        den += imf[t] * imf[t];
      }
      for (std::size_t t = 0; t < imf.size(); ++t) imf[t] -= m[t];
      ++subtractions;
      if (den == 0.0 || num / den < cfg.sd_threshold) break;
    }
  }
  if (iterations) *iterations = subtractions;
  return true;
}

std::vector<double> local_mean(std::span<const double> x, const SiftConfig& cfg) {
  std::vector<double> imf;
  if (!sift(x, cfg, imf)) return {x.begin(), x.end()};
  std::vector<double> out(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) out[t] = x[t] - imf[t];
  return out;
}

namespace {

bool residue_finished(std::span<const double> residue, double amplitude_floor,
                      const SiftConfig& cfg, std::size_t mode_count) {
  if (cfg.max_modes > 0 && mode_count >= static_cast<std::size_t>(cfg.max_modes))
    return true;
  if (max_abs(residue) < amplitude_floor) return true;
  return find_extrema(residue).total() < 3;
}

}  // namespace

IMFSet emd(std::span<const double> x, const SiftConfig& cfg) {
  if (x.size() < 16) throw std::invalid_argument("emd: series too short (< 16)");
  IMFSet out;
  out.residue.assign(x.begin(), x.end());
  const double floor = cfg.residue_amplitude_tol * max_abs(x);
  std::vector<double> imf;
  while (!residue_finished(out.residue, floor, cfg, out.modes.size())) {
    if (!sift(out.residue, cfg, imf)) break;
    for (std::size_t t = 0; t < out.residue.size(); ++t) out.residue[t] -= imf[t];
    out.modes.push_back(imf);
  }
  return out;
}

namespace {

struct NoiseBank {
  // bank[i][n] = n-th EMD mode of unit-variance noise realization i.
  std::vector<std::vector<std::vector<double>>> modes;
};

std::vector<std::vector<double>> realization_bank(std::size_t t_len,
                                                  std::uint64_t seed,
                                                  const SiftConfig& cfg) {
  Rng rng(seed);
  const std::vector<double> noise = rng.normal_vector(t_len);
  return emd(noise, cfg).modes;
}

// One ICEEMDAN stage: the ensemble-averaged local mean of
// residue + beta * E_stage(w^i). Realizations missing the stage's noise mode
// contribute the plain local mean of the residue.
std::vector<double> stage_local_mean(const std::vector<double>& residue,
                                     const std::vector<std::vector<double>>& bank_i,
                                     std::size_t stage, double beta,
                                     const SiftConfig& cfg) {
  if (stage < bank_i.size()) {
    std::vector<double> perturbed(residue.size());
    const auto& noise_mode = bank_i[stage];
    for (std::size_t t = 0; t < residue.size(); ++t)
      perturbed[t] = residue[t] + beta * noise_mode[t];
    return local_mean(perturbed, cfg);
  }
  return local_mean(residue, cfg);
}

template <typename ForEach>
IMFSet iceemdan_impl(std::span<const double> x, const SiftConfig& cfg,
                     const EnsembleConfig& ens, const ForEach& for_each_realization) {
  if (x.size() < 16) throw std::invalid_argument("iceemdan: series too short (< 16)");
  if (ens.realizations < 1) throw std::invalid_argument("iceemdan: I >= 1 required");
  if (!(ens.noise_scale > 0.0)) throw std::invalid_argument("iceemdan: epsilon > 0 required");

  const std::size_t n = x.size();
  const int I = ens.realizations;

  NoiseBank bank;
  bank.modes.resize(I);
  for_each_realization([&](int i) {
    bank.modes[i] = realization_bank(n, derive_seed(ens.seed, static_cast<std::uint64_t>(i)), cfg);
  });

  IMFSet out;
  out.residue.assign(x.begin(), x.end());
  const double floor = cfg.residue_amplitude_tol * max_abs(x);

  std::vector<std::vector<double>> locals(I);
  std::size_t stage = 0;
  while (!residue_finished(out.residue, floor, cfg, out.modes.size())) {
    const double beta = ens.noise_scale * stddev_population(out.residue);
    for_each_realization([&](int i) {
      locals[i] = stage_local_mean(out.residue, bank.modes[i], stage, beta, cfg);
    });
    std::vector<double> next = pairwise_mean(locals);
    if (next == out.residue) break;  // no oscillation left to extract
    std::vector<double> mode(n);
    for (std::size_t t = 0; t < n; ++t) mode[t] = out.residue[t] - next[t];
    out.modes.push_back(std::move(mode));
    out.residue = std::move(next);
    ++stage;
  }
  return out;
}

}  // namespace

IMFSet iceemdan(std::span<const double> x, const SiftConfig& sift_cfg,
                const EnsembleConfig& ens_cfg, int threads) {
  const int nthreads = resolve_threads(threads);
  const int I = ens_cfg.realizations;
  return iceemdan_impl(x, sift_cfg, ens_cfg, [&](auto&& body) {
    (void)nthreads;
#ifdef _OPENMP
#pragma omp parallel for num_threads(nthreads) schedule(dynamic)
#endif
    for (int i = 0; i < I; ++i) body(i);
  });
}

IMFSet iceemdan_serial(std::span<const double> x, const SiftConfig& sift_cfg,
                       const EnsembleConfig& ens_cfg) {
  const int I = ens_cfg.realizations;
  return iceemdan_impl(x, sift_cfg, ens_cfg, [&](auto&& body) {
    for (int i = 0; i < I; ++i) body(i);
  });
}

}  // namespace grainrisk
