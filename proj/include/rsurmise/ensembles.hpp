#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace rsurmise {

enum class EnsembleKind { Poisson, GOE, GUE, BetaEnsemble, MixPoissonGOE, MixPoissonGUE, MixGOEGUE };

inline std::string_view to_string(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::Poisson: return "poisson";
    case EnsembleKind::GOE: return "goe";
    case EnsembleKind::GUE: return "gue";
    case EnsembleKind::BetaEnsemble: return "beta";
    case EnsembleKind::MixPoissonGOE: return "mix-poisson-goe";
    case EnsembleKind::MixPoissonGUE: return "mix-poisson-gue";
    case EnsembleKind::MixGOEGUE: return "mix-goe-gue";
  }
  return "unknown";
}

inline EnsembleKind parse_ensemble(std::string_view name) {
  for (auto k : {EnsembleKind::Poisson, EnsembleKind::GOE, EnsembleKind::GUE, EnsembleKind::BetaEnsemble,
                 EnsembleKind::MixPoissonGOE, EnsembleKind::MixPoissonGUE, EnsembleKind::MixGOEGUE}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown ensemble '" + std::string(name) + "'");
}

inline bool is_mixture(EnsembleKind k) {
  return k == EnsembleKind::MixPoissonGOE || k == EnsembleKind::MixPoissonGUE || k == EnsembleKind::MixGOEGUE;
}

/// parameter is lambda for mixtures, beta for the beta-ensemble, unused otherwise.
struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::GOE;
  std::size_t order = 100;
  double parameter = 0.0;
  std::uint64_t seed = 0;
};

inline void validate(const EnsembleSpec& spec) {
  if (spec.order < 3) throw InvalidArgument("ensemble order must be >= 3");
  if (is_mixture(spec.kind) && !(spec.parameter >= 0.0 && spec.parameter <= 1.0)) {
    throw InvalidArgument("mixture parameter lambda must lie in [0, 1]");
  }
  if (spec.kind == EnsembleKind::BetaEnsemble && !(spec.parameter >= 0.0)) {
    throw InvalidArgument("beta-ensemble index must be >= 0");
  }
}

struct SpectrumSample {
  std::vector<double> energies;  // ascending
  EnsembleSpec spec;
  std::size_t realization = 0;
};

/// GOE with off-diagonal variance 1 and diagonal variance 2.
inline SymmetricMatrix sample_goe(std::size_t order, RngStream& rng) {
  if (order < 2) throw InvalidArgument("sample_goe: order must be >= 2");
  SymmetricMatrix m(order);
  for (std::size_t j = 0; j < order; ++j) {
    m.set(j, j, sample_gaussian(rng, 0.0, std::sqrt(2.0)));
    for (std::size_t i = j + 1; i < order; ++i) m.set(i, j, sample_gaussian(rng, 0.0, 1.0));
  }
  return m;
}

/// GUE with unit-variance real diagonal and off-diagonal components of variance 1/2.
inline HermitianMatrix sample_gue(std::size_t order, RngStream& rng) {
  if (order < 2) throw InvalidArgument("sample_gue: order must be >= 2");
  HermitianMatrix m(order);
  const double s = std::sqrt(0.5);
  for (std::size_t j = 0; j < order; ++j) {
    m.set(j, j, sample_gaussian(rng, 0.0, 1.0));
    for (std::size_t i = j + 1; i < order; ++i) {
      const double re = sample_gaussian(rng, 0.0, s);
      const double im = sample_gaussian(rng, 0.0, s);
      m.set(i, j, {re, im});
    }
  }
  return m;
}

/// Integrable endpoint: diagonal with i.i.d. N(0, sqrt(order)) entries, so its
/// width is commensurate with the sqrt(order) scaling of the Gaussian ensembles.
inline SymmetricMatrix sample_poisson_diag(std::size_t order, RngStream& rng) {
  if (order < 2) throw InvalidArgument("sample_poisson_diag: order must be >= 2");
  SymmetricMatrix m(order);
  const double sigma = std::sqrt(static_cast<double>(order));
  for (std::size_t i = 0; i < order; ++i) m.set(i, i, sample_gaussian(rng, 0.0, sigma));
  return m;
}

/// Tridiagonal Gaussian beta-ensemble: H_ii ~ N(0, sqrt(1/(2 lambda))),
/// H_{i+1,i} ~ sqrt(1/(4 lambda)) chi_{(N-i+1) beta} (1-based i), chi_0 = 0.
inline TridiagonalMatrix sample_beta_ensemble(std::size_t order, double beta, double scale_lambda, RngStream& rng) {
  if (order < 2) throw InvalidArgument("sample_beta_ensemble: order must be >= 2");
  if (!(beta >= 0.0)) throw InvalidArgument("sample_beta_ensemble: beta must be >= 0");
  if (!(scale_lambda > 0.0)) throw InvalidArgument("sample_beta_ensemble: lambda must be > 0");
  TridiagonalMatrix t;
  t.diagonal.resize(order);
  t.offdiagonal.resize(order - 1);
  const double diag_sigma = std::sqrt(1.0 / (2.0 * scale_lambda));
  const double off_scale = std::sqrt(1.0 / (4.0 * scale_lambda));
  for (std::size_t i = 0; i < order; ++i) t.diagonal[i] = sample_gaussian(rng, 0.0, diag_sigma);
  const auto n = static_cast<double>(order);
  for (std::size_t i = 0; i + 1 < order; ++i) {
    const double dof = (n - static_cast<double>(i + 1) + 1.0) * beta;
    t.offdiagonal[i] = off_scale * sample_chi(rng, dof);
  }
  return t;
}

/// Convex mixture lambda * H_chaotic + (1 - lambda) * H_regular, diagonalized.
/// Endpoints are drawn independently from the same stream (regular first).
inline SpectrumSample sample_mixture(const EnsembleSpec& spec, RngStream& rng) {
  if (!is_mixture(spec.kind)) throw InvalidArgument("sample_mixture: ensemble is not a mixture");
  validate(spec);
  const double lambda = spec.parameter;
  SpectrumSample out{{}, spec, rng.stream()};
  switch (spec.kind) {
    case EnsembleKind::MixPoissonGOE: {
      SymmetricMatrix h = sample_poisson_diag(spec.order, rng);
      const SymmetricMatrix g = sample_goe(spec.order, rng);
      h *= 1.0 - lambda;
      h.axpy(lambda, g);
      out.energies = eigvals_sym(h);
      break;
    }
    case EnsembleKind::MixPoissonGUE: {
      HermitianMatrix h(sample_poisson_diag(spec.order, rng));
      const HermitianMatrix g = sample_gue(spec.order, rng);
      h *= 1.0 - lambda;
      h.axpy(lambda, g);
      out.energies = eigvals_herm(h);
      break;
    }
    default: {
      HermitianMatrix h(sample_goe(spec.order, rng));
      const HermitianMatrix g = sample_gue(spec.order, rng);
      h *= 1.0 - lambda;
      h.axpy(lambda, g);
      out.energies = eigvals_herm(h);
      break;
    }
  }
  return out;
}

/// One realization of any ensemble. The stream id is the realization index.
inline SpectrumSample sample_spectrum(const EnsembleSpec& spec, std::size_t realization) {
  validate(spec);
  RngStream rng(spec.seed, realization);
  SpectrumSample out{{}, spec, realization};
  switch (spec.kind) {
    case EnsembleKind::Poisson: out.energies = eigvals_sym(sample_poisson_diag(spec.order, rng)); break;
    case EnsembleKind::GOE: out.energies = eigvals_sym(sample_goe(spec.order, rng)); break;
    case EnsembleKind::GUE: out.energies = eigvals_herm(sample_gue(spec.order, rng)); break;
    case EnsembleKind::BetaEnsemble:
      out.energies = eigvals_tridiag(sample_beta_ensemble(spec.order, spec.parameter, 1.0, rng));
      break;
    default: out = sample_mixture(spec, rng); break;
  }
  out.realization = realization;
  return out;
}

/// M realizations of one spec, computed in parallel, returned in realization order.
inline std::vector<SpectrumSample> sample_batch(const EnsembleSpec& spec, std::size_t realizations,
                                                unsigned threads = 0) {
  validate(spec);
  std::vector<SpectrumSample> out(realizations);
  parallel_for(realizations, threads, [&](std::size_t m) { out[m] = sample_spectrum(spec, m); });
  return out;
}

/// Seed of grid point g derived from the master seed.
inline std::uint64_t grid_point_seed(std::uint64_t master_seed, std::size_t g) {
  return detail::mix64(master_seed + detail::kGolden * (static_cast<std::uint64_t>(g) + 1));
}

/// For each parameter value, M realizations with distinct streams. Deterministic in the master seed.
inline std::vector<std::vector<SpectrumSample>> sweep(const EnsembleSpec& spec_template,
                                                      const std::vector<double>& grid, std::size_t realizations,
                                                      unsigned threads = 0) {
  if (grid.empty()) throw InvalidArgument("sweep: empty parameter grid");
  if (realizations < 1) throw InvalidArgument("sweep: need at least one realization");
  std::vector<std::vector<SpectrumSample>> out(grid.size(), std::vector<SpectrumSample>(realizations));
  std::vector<EnsembleSpec> specs(grid.size(), spec_template);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    specs[g].parameter = grid[g];
    specs[g].seed = grid_point_seed(spec_template.seed, g);
    validate(specs[g]);
  }
  const std::size_t total = grid.size() * realizations;
  parallel_for(total, threads, [&](std::size_t task) {
    const std::size_t g = task / realizations;
    const std::size_t m = task % realizations;
    out[g][m] = sample_spectrum(specs[g], m);
  });
  return out;
}

/// {base * ratio^(q - 1 + shift)} for q = first..last.
inline std::vector<double> geometric_grid(double base, double ratio, int first, int last, int shift = -1) {
  std::vector<double> g;
  for (int q = first; q <= last; ++q) g.push_back(base * std::pow(ratio, q + shift));
  return g;
}

/// Poisson-GOE mixture grid 1.22^(q-1) * 20^-6, q = 1..51.
inline std::vector<double> poisson_goe_lambda_grid() { return geometric_grid(std::pow(20.0, -6.0), 1.22, 1, 51, -1); }

/// Poisson-GUE and GOE-GUE grid 1.34^q * 1e-6, q = 1..50.
inline std::vector<double> gue_mixture_lambda_grid() { return geometric_grid(1e-6, 1.34, 1, 50, 0); }

/// Beta-ensemble grid 0.02 (q - 1), q = 1..51.
inline std::vector<double> beta_ensemble_grid() {
  std::vector<double> g;
  for (int q = 1; q <= 51; ++q) g.push_back(0.02 * (q - 1));
  return g;
}

/// Geometric grid divided by its last value, so the sweep ends at lambda = 1.
/// The raw Poisson-GOE grid stops at 3.2e-4, which leaves a N(0, sqrt N) Poisson
/// endpoint unperturbed, and the raw 1.34^q grid overshoots 1.
inline std::vector<double> rescale_to_unit(std::vector<double> grid) {
  if (grid.empty() || !(grid.back() > 0.0)) throw InvalidArgument("rescale_to_unit: empty grid");
  const double top = grid.back();
  for (auto& v : grid) v /= top;
  grid.back() = 1.0;
  return grid;
}

/// Default sweep grid for a parametrized ensemble.
inline std::vector<double> default_sweep_grid(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::MixPoissonGOE: return rescale_to_unit(poisson_goe_lambda_grid());
    case EnsembleKind::MixPoissonGUE:
    case EnsembleKind::MixGOEGUE: return rescale_to_unit(gue_mixture_lambda_grid());
    case EnsembleKind::BetaEnsemble: return beta_ensemble_grid();
    default: throw InvalidArgument("ensemble '" + std::string(to_string(k)) + "' has no parameter to sweep");
  }
}

}  // namespace rsurmise
