#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "ensembles.hpp"
#include "errors.hpp"

namespace rsurmise {

struct RatioOptions {
  /// Fraction of levels dropped at each spectral edge (floor(trim * N) per side).
  double trim_fraction = 0.05;
  /// Levels closer than this times the spectral width are merged.
  double degeneracy_tol = 1e-12;
};

struct RatioSeries {
  std::vector<double> values;  // r_n > 0
  std::vector<double> folded;  // min(r_n, 1/r_n)
  std::size_t merged_levels = 0;
  std::size_t spectra = 0;

  std::size_t size() const { return values.size(); }

  /// Pool another series into this one.
  void append(const RatioSeries& other) {
    values.insert(values.end(), other.values.begin(), other.values.end());
    folded.insert(folded.end(), other.folded.begin(), other.folded.end());
    merged_levels += other.merged_levels;
    spectra += other.spectra;
  }
};

/// Number of ratios produced by an N-level spectrum without degeneracies.
inline std::size_t ratios_per_spectrum(std::size_t levels, const RatioOptions& opt = {}) {
  const auto cut = static_cast<std::size_t>(std::floor(opt.trim_fraction * static_cast<double>(levels)));
  const std::size_t kept = levels > 2 * cut ? levels - 2 * cut : 0;
  return kept >= 3 ? kept - 2 : 0;
}

/// Consecutive spacing ratios r_n = (E_{n+1} - E_n) / (E_n - E_{n-1}) of an
/// ascending spectrum, after merging exact degeneracies and trimming the edges.
inline RatioSeries ratios_from_energies(std::span<const double> energies, const RatioOptions& opt = {}) {
  if (energies.size() < 3) throw TooFewLevels("ratios: need at least three levels");
  if (!std::is_sorted(energies.begin(), energies.end())) throw InvalidArgument("ratios: energies must be ascending");
  if (!(opt.trim_fraction >= 0.0 && opt.trim_fraction < 0.5)) throw InvalidArgument("ratios: trim fraction in [0, 0.5)");

  RatioSeries out;
  out.spectra = 1;
  const double width = energies.back() - energies.front();
  const double tol = opt.degeneracy_tol * width;
  std::vector<double> levels;
  levels.reserve(energies.size());
  levels.push_back(energies.front());
  for (std::size_t i = 1; i < energies.size(); ++i) {
    if (energies[i] - levels.back() <= tol) {
      ++out.merged_levels;
      continue;
    }
    levels.push_back(energies[i]);
  }

  const auto cut = static_cast<std::size_t>(std::floor(opt.trim_fraction * static_cast<double>(levels.size())));
  if (levels.size() < 2 * cut + 3) throw TooFewLevels("ratios: fewer than three levels after merging and trimming");
  const std::span<const double> kept(levels.data() + cut, levels.size() - 2 * cut);

  out.values.reserve(kept.size() - 2);
  out.folded.reserve(kept.size() - 2);
  for (std::size_t n = 1; n + 1 < kept.size(); ++n) {
    const double r = (kept[n + 1] - kept[n]) / (kept[n] - kept[n - 1]);
    out.values.push_back(r);
    out.folded.push_back(std::min(r, 1.0 / r));
  }
  return out;
}

inline RatioSeries ratios_from_spectrum(const SpectrumSample& s, const RatioOptions& opt = {}) {
  return ratios_from_energies(s.energies, opt);
}

/// Pooled ratios of many spectra, in the given order.
inline RatioSeries pool_ratios(std::span<const SpectrumSample> samples, const RatioOptions& opt = {}) {
  RatioSeries pooled;
  for (const auto& s : samples) pooled.append(ratios_from_spectrum(s, opt));
  return pooled;
}

/// Density estimate of P(r) on [0, r_max) with n = r_max / bin_width bins.
/// density_j = count_j / (total * bin_width), where total counts every ratio,
/// including those beyond r_max.
struct RatioHistogram {
  double bin_width = 0.005;
  double r_max = 5.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  std::size_t bins() const { return counts.size(); }
  double bin_left(std::size_t j) const { return static_cast<double>(j) * bin_width; }
  double bin_center(std::size_t j) const { return (static_cast<double>(j) + 0.5) * bin_width; }
  double density(std::size_t j) const {
    return total == 0 ? 0.0 : static_cast<double>(counts[j]) / (static_cast<double>(total) * bin_width);
  }
  std::vector<double> densities() const {
    std::vector<double> d(bins());
    for (std::size_t j = 0; j < bins(); ++j) d[j] = density(j);
    return d;
  }
  std::size_t nonempty_bins() const {
    return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
  }
  /// Fraction of ratios that fell inside [0, r_max).
  double covered_fraction() const {
    if (total == 0) return 0.0;
    return static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0})) /
           static_cast<double>(total);
  }
  /// <min(r, 1/r)> estimated from bin centers; mass beyond r_max contributes 1/r_max.
  double mean_folded_estimate() const {
    if (total == 0) return 0.0;
    double acc = 0.0;
    std::uint64_t inside = 0;
    for (std::size_t j = 0; j < bins(); ++j) {
      const double c = bin_center(j);
      acc += static_cast<double>(counts[j]) * std::min(c, 1.0 / c);
      inside += counts[j];
    }
    acc += static_cast<double>(total - inside) / r_max;
    return acc / static_cast<double>(total);
  }

  void merge(const RatioHistogram& other) {
    if (other.bins() != bins() || other.bin_width != bin_width) throw InvalidArgument("histogram: binning mismatch");
    for (std::size_t j = 0; j < bins(); ++j) counts[j] += other.counts[j];
    total += other.total;
  }
};

inline std::size_t bin_count(double bin_width, double r_max) {
  if (!(bin_width > 0.0) || !(r_max > 0.0)) throw InvalidArgument("histogram: bin width and r_max must be positive");
  const double n = std::round(r_max / bin_width);
  if (n < 1.0 || std::abs(n * bin_width - r_max) > 1e-9 * r_max) {
    throw InvalidArgument("histogram: r_max must be a multiple of the bin width");
  }
  return static_cast<std::size_t>(n);
}

inline RatioHistogram histogram(std::span<const double> ratios, double bin_width, double r_max) {
  RatioHistogram h;
  h.bin_width = bin_width;
  h.r_max = r_max;
  h.counts.assign(bin_count(bin_width, r_max), 0);
  h.total = ratios.size();
  for (double r : ratios) {
    if (!(r >= 0.0)) throw InvalidArgument("histogram: ratios must be non-negative");
    const auto j = static_cast<std::size_t>(std::floor(r / bin_width));
    if (j < h.counts.size()) ++h.counts[j];
  }
  return h;
}

inline RatioHistogram histogram(const RatioSeries& series, double bin_width, double r_max) {
  return histogram(series.values, bin_width, r_max);
}

inline double mean_r(const RatioSeries& s) {
  if (s.values.empty()) throw InvalidArgument("mean_r: empty series");
  return std::accumulate(s.values.begin(), s.values.end(), 0.0) / static_cast<double>(s.size());
}

inline double mean_r_tilde(const RatioSeries& s) {
  if (s.folded.empty()) throw InvalidArgument("mean_r_tilde: empty series");
  return std::accumulate(s.folded.begin(), s.folded.end(), 0.0) / static_cast<double>(s.size());
}

}  // namespace rsurmise
