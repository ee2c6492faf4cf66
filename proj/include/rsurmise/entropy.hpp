#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"
#include "parallel.hpp"
#include "surmise.hpp"

namespace rsurmise {

enum class Transition { PoissonGOE, PoissonGUE, GOEGUE };

inline std::string_view to_string(Transition t) {
  switch (t) {
    case Transition::PoissonGOE: return "poisson-goe";
    case Transition::PoissonGUE: return "poisson-gue";
    case Transition::GOEGUE: return "goe-gue";
  }
  return "unknown";
}

inline Transition parse_transition(std::string_view name) {
  for (auto t : {Transition::PoissonGOE, Transition::PoissonGUE, Transition::GOEGUE}) {
    if (to_string(t) == name) return t;
  }
  throw InvalidArgument("unknown transition '" + std::string(name) + "'");
}

/// Endpoints and polynomial basis of a transition. The ansatz is a polynomial
/// in x = pivot - beta with the listed exponents.
struct TransitionInfo {
  double beta_lo;
  double beta_hi;
  double gamma_lo;
  double gamma_hi;
  double pivot;
  std::array<int, 3> exponents;
  std::array<double, 3> tabulated;  // reference coefficients, for comparison
  double tabulated_intercept;       // tabulated linear entropy law S = a + b beta
  double tabulated_slope;
};

inline const TransitionInfo& transition_info(Transition t) {
  static const std::array<TransitionInfo, 3> info{{
      {0.0, 1.0, 0.0, 4.0 / 5.0, 1.0, {0, 1, 5}, {0.80, -1.69, 0.89}, 2.0, -0.5407},
      {0.0, 2.0, 0.0, 8.0 / 9.0, 2.0, {0, 1, 7}, {0.92, -1.42, 0.01}, 2.0, -0.4126},
      {1.0, 2.0, 4.0 / 5.0, 8.0 / 9.0, 2.0, {0, 1, 3}, {0.88, -0.36, 0.28}, 1.7271, -0.2762},
  }};
  return info[static_cast<std::size_t>(t)];
}

/// Differential entropy -int P ln P of a normalized surmise.
inline double entropy_of(const SurmiseParams& p) {
  validate_shape(p.beta, p.gamma);
  const double log_c = std::log(p.c);
  auto integrand = [&](double r) {
    if (r <= 0.0) return p.beta == 0.0 ? -p.c * log_c : 0.0;
    const double denom = (1.0 - r) * (1.0 - r) + (4.0 - p.gamma) * r;
    const double log_p = log_c + p.beta * std::log(r * (1.0 + r)) - (1.0 + 1.5 * p.beta) * std::log(denom);
    const double density = std::exp(log_p);
    return density > 0.0 ? -density * log_p : 0.0;
  };
  return integrate_halfline(integrand, 1e-12).value;
}

inline double entropy_of(double beta, double gamma) { return entropy_of(make_surmise(beta, gamma)); }

/// Entropies at the Poisson (0, 0), GOE (1, 4/5) and GUE (2, 8/9) points.
inline const std::array<double, 3>& reference_entropies() {
  static std::once_flag once;
  static std::array<double, 3> s{};
  std::call_once(once, [] {
    s[0] = entropy_of(0.0, 0.0);
    s[1] = entropy_of(1.0, 4.0 / 5.0);
    s[2] = entropy_of(2.0, 8.0 / 9.0);
  });
  return s;
}

inline double endpoint_entropy(double beta) {
  const auto& s = reference_entropies();
  if (beta == 0.0) return s[0];
  if (beta == 1.0) return s[1];
  return s[2];
}

namespace detail {
inline void check_in_range(const TransitionInfo& info, double beta) {
  if (!(beta >= info.beta_lo - 1e-12 && beta <= info.beta_hi + 1e-12)) {
    throw OutOfRange("beta = " + std::to_string(beta) + " outside the transition range");
  }
}
}  // namespace detail

/// Entropy interpolated linearly in beta between the transition endpoints,
/// with the endpoint entropies computed by quadrature.
inline double linear_entropy_target(Transition t, double beta) {
  const auto& info = transition_info(t);
  detail::check_in_range(info, beta);
  const double s_lo = endpoint_entropy(info.beta_lo);
  const double s_hi = endpoint_entropy(info.beta_hi);
  return s_lo + (s_hi - s_lo) * (beta - info.beta_lo) / (info.beta_hi - info.beta_lo);
}

/// The tabulated linear law, kept for comparison only.
inline double tabulated_entropy_target(Transition t, double beta) {
  const auto& info = transition_info(t);
  detail::check_in_range(info, beta);
  return info.tabulated_intercept + info.tabulated_slope * beta;
}

/// gamma(beta) along a transition, either tabulated or as a polynomial in (pivot - beta).
struct AnsatzCurve {
  Transition transition = Transition::PoissonGOE;
  double beta_lo = 0.0;
  double beta_hi = 1.0;
  std::vector<double> beta;   // tabulated grid (ascending)
  std::vector<double> gamma;  // tabulated values
  double pivot = 1.0;
  std::vector<int> exponents;
  std::vector<double> coefficients;  // empty for a purely tabulated curve
  double max_deviation = 0.0;        // polynomial vs tabulated

  bool is_polynomial() const { return !coefficients.empty(); }

  double gamma_at(double b) const {
    if (!(b >= beta_lo - 1e-9 && b <= beta_hi + 1e-9)) {
      throw OutOfRange("ansatz: beta = " + std::to_string(b) + " outside curve range");
    }
    if (is_polynomial()) return polyval(coefficients, exponents, pivot - b);
    if (beta.empty()) throw InvalidArgument("ansatz: empty curve");
    if (b <= beta.front()) return gamma.front();
    if (b >= beta.back()) return gamma.back();
    const auto it = std::upper_bound(beta.begin(), beta.end(), b);
    const auto i = static_cast<std::size_t>(it - beta.begin());
    const double t = (b - beta[i - 1]) / (beta[i] - beta[i - 1]);
    return gamma[i - 1] + t * (gamma[i] - gamma[i - 1]);
  }
};

/// The tabulated polynomial for a transition.
inline AnsatzCurve tabulated_ansatz(Transition t) {
  const auto& info = transition_info(t);
  AnsatzCurve c;
  c.transition = t;
  c.beta_lo = info.beta_lo;
  c.beta_hi = info.beta_hi;
  c.pivot = info.pivot;
  c.exponents.assign(info.exponents.begin(), info.exponents.end());
  c.coefficients.assign(info.tabulated.begin(), info.tabulated.end());
  return c;
}

inline std::vector<double> uniform_grid(double lo, double hi, std::size_t points) {
  if (points < 2) throw InvalidArgument("uniform_grid: need at least two points");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) {
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  g.back() = hi;
  return g;
}

/// gamma such that S(beta, gamma) equals the target entropy. S decreases
/// monotonically in gamma; the bracket is found by scanning downward from 3.9.
inline double solve_gamma_for_entropy(double beta, double target, double tol = 1e-10) {
  static constexpr std::array<double, 14> scan{3.9, 3.5, 3.0, 2.0, 1.0, 0.5, 0.0, -1.0, -2.0, -4.0, -8.0, -16.0, -32.0, -64.0};
  auto f = [&](double g) { return entropy_of(beta, g) - target; };
  double hi = scan[0];
  double f_hi = f(hi);
  if (f_hi == 0.0) return hi;
  for (std::size_t i = 1; i < scan.size(); ++i) {
    const double lo = scan[i];
    const double f_lo = f(lo);
    if (f_lo == 0.0) return lo;
    if ((f_lo > 0.0) != (f_hi > 0.0)) return find_root(f, lo, hi, tol);
    hi = lo;
    f_hi = f_lo;
  }
  throw NoBracket("no gamma in [-64, 3.9] reaches entropy " + std::to_string(target) + " at beta = " +
                  std::to_string(beta));
}

/// Tabulated gamma(beta) that makes the entropy linear in beta along the transition.
inline AnsatzCurve solve_gamma_curve(Transition t, std::span<const double> betas, unsigned threads = 0) {
  const auto& info = transition_info(t);
  AnsatzCurve c;
  c.transition = t;
  c.beta_lo = info.beta_lo;
  c.beta_hi = info.beta_hi;
  c.pivot = info.pivot;
  c.exponents.assign(info.exponents.begin(), info.exponents.end());
  c.beta.assign(betas.begin(), betas.end());
  if (!std::is_sorted(c.beta.begin(), c.beta.end())) throw InvalidArgument("solve_gamma_curve: grid must ascend");
  for (double b : c.beta) detail::check_in_range(info, b);
  reference_entropies();
  c.gamma.assign(c.beta.size(), 0.0);
  parallel_for(c.beta.size(), threads, [&](std::size_t i) {
    try {
      c.gamma[i] = solve_gamma_for_entropy(c.beta[i], linear_entropy_target(t, c.beta[i]));
    } catch (const NoBracket& e) {
      throw NoBracket(std::string(e.what()) + " (grid point " + std::to_string(i) + ")");
    }
  });
  return c;
}

inline AnsatzCurve solve_gamma_curve(Transition t, std::size_t points = 101, unsigned threads = 0) {
  const auto& info = transition_info(t);
  const auto grid = uniform_grid(info.beta_lo, info.beta_hi, points);
  return solve_gamma_curve(t, grid, threads);
}

/// Least-squares polynomial in (pivot - beta) over the transition's monomials.
inline AnsatzCurve fit_ansatz_polynomial(const AnsatzCurve& tabulated) {
  if (tabulated.beta.size() < 20) throw InvalidArgument("fit_ansatz_polynomial: need at least 20 tabulated points");
  std::vector<Point2> pts;
  pts.reserve(tabulated.beta.size());
  for (std::size_t i = 0; i < tabulated.beta.size(); ++i) {
    pts.push_back({tabulated.pivot - tabulated.beta[i], tabulated.gamma[i]});
  }
  AnsatzCurve out = tabulated;
  out.coefficients = polyfit(pts, out.exponents);
  out.max_deviation = 0.0;
  for (const auto& p : pts) {
    out.max_deviation = std::max(out.max_deviation, std::abs(polyval(out.coefficients, out.exponents, p.x) - p.y));
  }
  return out;
}

}  // namespace rsurmise
