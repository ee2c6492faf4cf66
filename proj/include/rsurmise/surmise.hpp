#pragma once

#include <array>
#include <cmath>
#include <mutex>
#include <string>

#include "errors.hpp"
#include "numerics.hpp"

namespace rsurmise {

/// Parameters of the crossover density
///   P(r) = C (r + r^2)^beta / [(1 + r)^2 - gamma r]^(1 + 3 beta / 2).
struct SurmiseParams {
  double beta = 0.0;
  double gamma = 0.0;
  double c = 1.0;
};

inline void validate_shape(double beta, double gamma) {
  if (!std::isfinite(beta) || beta < 0.0) throw InvalidParams("surmise: beta must be finite and >= 0");
  if (!std::isfinite(gamma) || gamma >= 4.0) throw InvalidParams("surmise: gamma must be finite and < 4");
}

/// Unnormalized density. The denominator is evaluated as (1 - r)^2 + (4 - gamma) r,
/// which stays accurate as gamma approaches 4.
inline double surmise_kernel(double beta, double gamma, double r) {
  const double denom = (1.0 - r) * (1.0 - r) + (4.0 - gamma) * r;
  if (r <= 0.0) return beta == 0.0 ? 1.0 / denom : 0.0;
  return std::exp(beta * std::log(r * (1.0 + r)) - (1.0 + 1.5 * beta) * std::log(denom));
}

inline double eval_surmise(const SurmiseParams& p, double r) {
  validate_shape(p.beta, p.gamma);
  if (!(p.c > 0.0)) throw InvalidParams("surmise: normalization must be positive");
  if (r < 0.0) return 0.0;
  return p.c * surmise_kernel(p.beta, p.gamma, r);
}

/// Normalization constant C(beta, gamma) from the unit-mass condition.
inline double normalize(double beta, double gamma, double rel_tol = 1e-12) {
  validate_shape(beta, gamma);
  const auto q = integrate_halfline([&](double r) { return surmise_kernel(beta, gamma, r); }, rel_tol);
  return 1.0 / q.value;
}

inline SurmiseParams make_surmise(double beta, double gamma) { return {beta, gamma, normalize(beta, gamma)}; }

/// 3x3 Wigner-like surmise for beta in {1, 2, 4}; Z_beta is obtained by quadrature once.
inline double wigner_normalization(int beta) {
  if (beta != 1 && beta != 2 && beta != 4) throw InvalidParams("wigner surmise: beta must be 1, 2 or 4");
  static std::once_flag once;
  static std::array<double, 5> z{};
  std::call_once(once, [] {
    for (int b : {1, 2, 4}) {
      z[static_cast<std::size_t>(b)] =
          integrate_halfline([b](double r) { return surmise_kernel(b, 1.0, r); }, 1e-13).value;
    }
  });
  return z[static_cast<std::size_t>(beta)];
}

inline double eval_wigner(int beta, double r) {
  const double z = wigner_normalization(beta);
  if (r < 0.0) return 0.0;
  return surmise_kernel(beta, 1.0, r) / z;
}

inline SurmiseParams wigner_params(int beta) { return {static_cast<double>(beta), 1.0, 1.0 / wigner_normalization(beta)}; }

/// Linear coefficient a in P(r) ~ C r^beta (1 + a r + O(r^2)).
inline double smallr_expansion_coeff(double beta, double gamma) {
  validate_shape(beta, gamma);
  return -2.0 - 2.0 * beta + gamma + 1.5 * beta * gamma;
}

struct MomentResult {
  bool diverges = false;
  double value = 0.0;
};

/// k-th moment of r. Finite iff beta > k - 1; otherwise reported as diverging.
inline MomentResult moment(const SurmiseParams& p, int k) {
  validate_shape(p.beta, p.gamma);
  if (k < 1) throw InvalidArgument("moment: k must be a positive integer");
  if (!(p.beta > k - 1)) return {true, 0.0};
  // P(1/r) = r^2 P(r) folds [1, inf) onto [0, 1] as int_0^1 u^-k P(u) du, which
  // behaves like u^(beta - k) at 0. With s = u^a, a = beta - k + 1, that piece is
  // (1/a) int_0^1 u^-beta P(u) ds, smooth in s.
  const double a = p.beta - k + 1.0;
  auto reduced = [&](double u) {  // u^-beta P(u)
    const double denom = (1.0 - u) * (1.0 - u) + (4.0 - p.gamma) * u;
    return p.c * std::exp(p.beta * std::log1p(u) - (1.0 + 1.5 * p.beta) * std::log(denom));
  };
  const auto head = integrate_interval(
      [&](double u) { return std::pow(u, k) * p.c * surmise_kernel(p.beta, p.gamma, u); }, 0.0, 1.0, 1e-10);
  const auto tail = integrate_interval([&](double s) { return reduced(std::pow(s, 1.0 / a)) / a; }, 0.0, 1.0, 1e-10);
  return {false, head.value + tail.value};
}

/// <min(r, 1/r)> = 2 * integral_0^1 r P(r) dr.
inline double mean_r_tilde_theory(const SurmiseParams& p) {
  validate_shape(p.beta, p.gamma);
  const auto q = integrate_interval([&](double r) { return r * p.c * surmise_kernel(p.beta, p.gamma, r); }, 0.0, 1.0,
                                    1e-12);
  return 2.0 * q.value;
}

struct Table1Row {
  std::string ensemble;
  double beta;
  double gamma;
  double c;
  MomentResult mean_r;
  double mean_r_tilde;
};

/// Constants of the Poisson, GOE and GUE points, all computed by quadrature.
inline std::array<Table1Row, 3> table1() {
  std::array<Table1Row, 3> rows{{{"Poisson", 0.0, 0.0, 0, {}, 0}, {"GOE", 1.0, 4.0 / 5.0, 0, {}, 0},
                                 {"GUE", 2.0, 8.0 / 9.0, 0, {}, 0}}};
  for (auto& row : rows) {
    const SurmiseParams p = make_surmise(row.beta, row.gamma);
    row.c = p.c;
    row.mean_r = moment(p, 1);
    row.mean_r_tilde = mean_r_tilde_theory(p);
  }
  return rows;
}

}  // namespace rsurmise
