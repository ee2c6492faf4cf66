#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "numerics.hpp"
#include "rng.hpp"

namespace rsurmise {

// ---------------------------------------------------------------------------
// Disordered XXZ (isotropic Heisenberg) chain in a random z field.
// Bit n of a basis state is 1 when spin n points up.
// ---------------------------------------------------------------------------

enum class Boundary { Open, Periodic };

struct XXZSpec {
  int sites = 11;
  double coupling = 1.0;
  double disorder = 1.0;  // fields uniform on [-disorder, disorder]
  Boundary boundary = Boundary::Periodic;
  double sector_sz = -0.5;
  std::uint64_t seed = 0;
};

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::uint64_t b = 1;
  for (int i = 1; i <= k; ++i) b = b * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return b;
}

/// Number of up spins in the sector with total S^z = sz.
inline int xxz_up_spins(int sites, double sz) {
  const double up = 0.5 * sites + sz;
  if (std::abs(up - std::round(up)) > 1e-9 || up < 0 || up > sites) {
    throw InvalidArgument("xxz: S^z = " + std::to_string(sz) + " is not a sector of " + std::to_string(sites) +
                          " spins");
  }
  return static_cast<int>(std::lround(up));
}

inline std::size_t xxz_sector_dimension(int sites, double sz) {
  return static_cast<std::size_t>(binomial(sites, xxz_up_spins(sites, sz)));
}

/// Basis states of fixed popcount in increasing numeric order.
inline std::vector<std::uint32_t> fixed_popcount_states(int sites, int up) {
  std::vector<std::uint32_t> states;
  for (std::uint32_t s = 0; s < (1u << sites); ++s) {
    if (std::popcount(s) == up) states.push_back(s);
  }
  return states;
}

/// H = sum_n w_n S^z_n + J sum_<n,m> S_n . S_m restricted to `up` up spins.
/// Fields are given explicitly; the periodic bond (L-1, 0) is added for L > 2.
inline SymmetricMatrix xxz_hamiltonian(int sites, double coupling, std::span<const double> fields, Boundary boundary,
                                       int up) {
  if (sites < 2 || sites > 24) throw InvalidArgument("xxz: sites must be in [2, 24]");
  if (fields.size() != static_cast<std::size_t>(sites)) throw InvalidArgument("xxz: one field per site required");
  const auto states = fixed_popcount_states(sites, up);
  if (states.empty()) throw EmptySector("xxz: empty sector");
  std::vector<std::int64_t> index(std::size_t{1} << sites, -1);
  for (std::size_t a = 0; a < states.size(); ++a) index[states[a]] = static_cast<std::int64_t>(a);

  std::vector<std::pair<int, int>> bonds;
  for (int n = 0; n + 1 < sites; ++n) bonds.emplace_back(n, n + 1);
  if (boundary == Boundary::Periodic && sites > 2) bonds.emplace_back(sites - 1, 0);

  SymmetricMatrix h(states.size());
  for (std::size_t a = 0; a < states.size(); ++a) {
    const std::uint32_t s = states[a];
    double diag = 0.0;
    for (int n = 0; n < sites; ++n) diag += fields[static_cast<std::size_t>(n)] * (((s >> n) & 1u) ? 0.5 : -0.5);
    for (auto [n, m] : bonds) {
      const bool same = ((s >> n) & 1u) == ((s >> m) & 1u);
      diag += coupling * (same ? 0.25 : -0.25);
      if (!same) {
        const std::uint32_t t = s ^ ((1u << n) | (1u << m));
        const auto b = static_cast<std::size_t>(index[t]);
        if (b < a) h.add(a, b, 0.5 * coupling);
      }
    }
    h.set(a, a, diag);
  }
  return h;
}

inline SymmetricMatrix build_xxz(const XXZSpec& spec, RngStream& rng) {
  if (spec.sites < 2) throw InvalidArgument("xxz: need at least two sites");
  if (!(spec.disorder >= 0.0)) throw InvalidArgument("xxz: disorder must be >= 0");
  const int up = xxz_up_spins(spec.sites, spec.sector_sz);
  if (binomial(spec.sites, up) < 3) throw EmptySector("xxz: sector dimension below 3");
  std::vector<double> fields(static_cast<std::size_t>(spec.sites));
  for (auto& w : fields) w = sample_uniform(rng, -spec.disorder, spec.disorder);
  return xxz_hamiltonian(spec.sites, spec.coupling, fields, spec.boundary, up);
}

// ---------------------------------------------------------------------------
// Gaudin XYZ elliptic model with integrability-breaking perturbation.
// ---------------------------------------------------------------------------

struct GaudinSpec {
  int spins = 9;
  double alpha = 0.0;  // mixing angle in [0, pi/2]
  double kappa = 0.5;  // elliptic modulus
  double lambda = 1.0;
  int parity = +1;
  std::uint64_t seed = 0;
};

/// Free parameters of one realization.
struct GaudinParameters {
  std::vector<double> epsilon;
  std::vector<double> z;
  std::vector<double> omega;
};

/// epsilon_i ~ U[0.5, 1.5], z_j ~ U[0.1, 2.0] redrawn until pairwise separated
/// by 1e-3, omega_j ~ U[0, 1].
inline GaudinParameters draw_gaudin_parameters(int spins, RngStream& rng) {
  const auto d = static_cast<std::size_t>(spins);
  GaudinParameters p;
  p.epsilon.resize(d);
  p.z.resize(d);
  p.omega.resize(d);
  for (auto& e : p.epsilon) e = sample_uniform(rng, 0.5, 1.5);
  for (std::size_t j = 0; j < d; ++j) {
    for (;;) {
      const double candidate = sample_uniform(rng, 0.1, 2.0);
      bool separated = true;
      for (std::size_t k = 0; k < j; ++k) separated = separated && std::abs(candidate - p.z[k]) >= 1e-3;
      if (separated) {
        p.z[j] = candidate;
        break;
      }
    }
  }
  for (auto& w : p.omega) w = sample_uniform(rng, 0.0, 1.0);
  return p;
}

/// Pair couplings Xt, Yt, Zt (d x d, row-major). Xt_jk = cos(a) X_jk + sin(a) A_jk etc.
struct GaudinCouplings {
  int spins = 0;
  std::vector<double> x, y, z;
  double operator()(const std::vector<double>& m, int j, int k) const {
    return m[static_cast<std::size_t>(j * spins + k)];
  }
};

inline GaudinCouplings gaudin_couplings(const GaudinSpec& spec, const GaudinParameters& p) {
  const int d = spec.spins;
  const auto dd = static_cast<std::size_t>(d * d);
  if (p.z.size() != static_cast<std::size_t>(d) || p.omega.size() != static_cast<std::size_t>(d)) {
    throw InvalidArgument("gaudin: parameter lists must have one entry per spin");
  }
  // Integrable part: antisymmetric elliptic couplings.
  std::vector<double> ex(dd, 0.0), ey(dd, 0.0), ez(dd, 0.0);
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) {
      if (j == k) continue;
      const auto e = jacobi_sn_cn_dn(p.z[static_cast<std::size_t>(j)] - p.z[static_cast<std::size_t>(k)], spec.kappa);
      if (std::abs(e.sn) < 1e-8) throw DegenerateParameters("gaudin: sn(z_j - z_k) vanishes");
      const auto at = static_cast<std::size_t>(j * d + k);
      ex[at] = (1.0 + spec.kappa * e.sn * e.sn) / e.sn;
      ey[at] = (1.0 - spec.kappa * e.sn * e.sn) / e.sn;
      ez[at] = e.cn * e.dn / e.sn;
    }
  }
  // Perturbation: cosine matrices standardized to zero mean and unit deviation
  // over the pooled strict upper triangles of A, B and C.
  std::vector<double> a(dd, 0.0), b(dd, 0.0), c(dd, 0.0);
  const double freq[3] = {std::sqrt(2.0 * spec.lambda), std::sqrt(3.0 * spec.lambda), std::sqrt(5.0 * spec.lambda)};
  std::vector<double>* raw[3] = {&a, &b, &c};
  double sum = 0.0, sum2 = 0.0;
  std::size_t count = 0;
  for (int m = 0; m < 3; ++m) {
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < d; ++k) {
        const double v =
            std::cos(freq[m] * (p.omega[static_cast<std::size_t>(j)] - p.omega[static_cast<std::size_t>(k)]));
        (*raw[m])[static_cast<std::size_t>(j * d + k)] = v;
        if (j < k) {
          sum += v;
          sum2 += v * v;
          ++count;
        }
      }
    }
  }
  const double mean = sum / static_cast<double>(count);
  const double var = sum2 / static_cast<double>(count) - mean * mean;
  const double sd = var > 1e-300 ? std::sqrt(var) : 1.0;

  GaudinCouplings out;
  out.spins = d;
  out.x.resize(dd);
  out.y.resize(dd);
  out.z.resize(dd);
  const double ca = std::cos(spec.alpha), sa = std::sin(spec.alpha);
  for (std::size_t i = 0; i < dd; ++i) {
    out.x[i] = ca * ex[i] + sa * (a[i] - mean) / sd;
    out.y[i] = ca * ey[i] + sa * (b[i] - mean) / sd;
    out.z[i] = ca * ez[i] + sa * (c[i] - mean) / sd;
  }
  return out;
}

namespace detail {
/// Adds w * (cx sx_j sx_k + cy sy_j sy_k + cz sz_j sz_k) on the full 2^d space.
/// Bit = 1 means spin up; sy sy contributes -1 on parallel and +1 on antiparallel pairs.
inline void add_pair_term(SymmetricMatrix& h, int spins, int j, int k, double cx, double cy, double cz) {
  const std::uint32_t dim = 1u << spins;
  const std::uint32_t flip = (1u << j) | (1u << k);
  for (std::uint32_t s = 0; s < dim; ++s) {
    const bool parallel = ((s >> j) & 1u) == ((s >> k) & 1u);
    h.add(s, s, parallel ? cz : -cz);
    const std::uint32_t t = s ^ flip;
    if (t < s) h.add(s, t, parallel ? cx - cy : cx + cy);
  }
}
}  // namespace detail

/// R_i = sum_{j != i} Xt_ij sx_i sx_j + Yt_ij sy_i sy_j + Zt_ij sz_i sz_j on 2^d states.
inline SymmetricMatrix gaudin_integral(const GaudinCouplings& g, int i) {
  SymmetricMatrix r(std::size_t{1} << g.spins);
  for (int j = 0; j < g.spins; ++j) {
    if (j == i) continue;
    detail::add_pair_term(r, g.spins, i, j, g(g.x, i, j), g(g.y, i, j), g(g.z, i, j));
  }
  return r;
}

/// H = sum_i epsilon_i R_i on the full 2^d space.
inline SymmetricMatrix gaudin_full_hamiltonian(const GaudinCouplings& g, std::span<const double> epsilon) {
  if (g.spins < 2 || g.spins > 16) throw InvalidArgument("gaudin: spins must be in [2, 16]");
  SymmetricMatrix h(std::size_t{1} << g.spins);
  for (int j = 0; j < g.spins; ++j) {
    for (int k = j + 1; k < g.spins; ++k) {
      const double ej = epsilon[static_cast<std::size_t>(j)];
      const double ek = epsilon[static_cast<std::size_t>(k)];
      detail::add_pair_term(h, g.spins, j, k, ej * g(g.x, j, k) + ek * g(g.x, k, j),
                            ej * g(g.y, j, k) + ek * g(g.y, k, j), ej * g(g.z, j, k) + ek * g(g.z, k, j));
    }
  }
  return h;
}

/// Eigenvalue of P = prod_i sz_i on a basis state: +1 for an even number of down spins.
inline int spin_flip_parity(std::uint32_t state, int spins) {
  const int down = spins - std::popcount(state);
  return down % 2 == 0 ? +1 : -1;
}

/// Restriction of H (on 2^d states) to the P = sector eigenspace.
inline SymmetricMatrix parity_project(const SymmetricMatrix& h, int spins, int sector) {
  const std::size_t dim = std::size_t{1} << spins;
  if (h.order() != dim) throw InvalidArgument("parity_project: matrix order must be 2^d");
  if (sector != 1 && sector != -1) throw InvalidArgument("parity_project: sector must be +1 or -1");
  double scale = 0.0;
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = 0; b <= a; ++b) scale = std::max(scale, std::abs(h(a, b)));
  }
  std::vector<std::size_t> keep;
  for (std::uint32_t s = 0; s < dim; ++s) {
    if (spin_flip_parity(s, spins) == sector) keep.push_back(s);
  }
  for (std::uint32_t a = 0; a < dim; ++a) {
    for (std::uint32_t b = 0; b < a; ++b) {
      if (spin_flip_parity(a, spins) != spin_flip_parity(b, spins) && std::abs(h(a, b)) > 1e-10 * std::max(1.0, scale)) {
        throw SymmetryViolation("parity_project: matrix does not commute with the spin-flip parity");
      }
    }
  }
  SymmetricMatrix out(keep.size());
  for (std::size_t a = 0; a < keep.size(); ++a) {
    for (std::size_t b = 0; b <= a; ++b) out.set(a, b, h(keep[a], keep[b]));
  }
  return out;
}

inline SymmetricMatrix build_gaudin(const GaudinSpec& spec, const GaudinParameters& params) {
  if (spec.spins < 4) throw InvalidArgument("gaudin: need at least four spins");
  if (!(spec.alpha >= 0.0 && spec.alpha <= std::numbers::pi / 2 + 1e-12)) {
    throw InvalidArgument("gaudin: alpha must lie in [0, pi/2]");
  }
  if (!(spec.kappa >= 0.0 && spec.kappa <= 1.0)) throw InvalidArgument("gaudin: kappa must lie in [0, 1]");
  const auto g = gaudin_couplings(spec, params);
  return parity_project(gaudin_full_hamiltonian(g, params.epsilon), spec.spins, spec.parity);
}

inline SymmetricMatrix build_gaudin(const GaudinSpec& spec, RngStream& rng) {
  return build_gaudin(spec, draw_gaudin_parameters(spec.spins, rng));
}

/// Spectrum of realization m; the stream id is the realization index.
inline std::vector<double> xxz_spectrum(const XXZSpec& spec, std::size_t realization) {
  RngStream rng(spec.seed, realization);
  return eigvals_sym(build_xxz(spec, rng));
}

inline std::vector<double> gaudin_spectrum(const GaudinSpec& spec, std::size_t realization) {
  RngStream rng(spec.seed, realization);
  return eigvals_sym(build_gaudin(spec, rng));
}

}  // namespace rsurmise
