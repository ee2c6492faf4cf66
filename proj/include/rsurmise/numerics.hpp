#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/jacobi_elliptic.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "errors.hpp"

namespace rsurmise {

struct QuadratureResult {
  double value = 0.0;
  double abs_error_estimate = 0.0;
  std::size_t evaluations = 0;
};

namespace detail {
// The rule grows its abscissa tables lazily, so each thread owns one.
inline boost::math::quadrature::tanh_sinh<double>& tanh_sinh_rule() {
  thread_local boost::math::quadrature::tanh_sinh<double> rule(15);
  return rule;
}
}  // namespace detail

/// Integral of f over [0, inf). The half line is folded onto a finite interval
/// by a rational map and integrated with double-exponential quadrature, which
/// is insensitive to the r^beta endpoint behaviour of the surmise family.
/// Throws NonConvergence if the error estimate exceeds max(rel_tol*|I|, 1e-12).
template <class F>
QuadratureResult integrate_halfline(F&& f, double rel_tol = 1e-10) {
  QuadratureResult out;
  auto counted = [&](double r) {
    ++out.evaluations;
    const double v = f(r);
    return std::isfinite(v) ? v : 0.0;
  };
  double err = 0.0;
  double l1 = 0.0;
  out.value = detail::tanh_sinh_rule().integrate(counted, 0.0, std::numeric_limits<double>::infinity(),
                                                 rel_tol, &err, &l1);
  out.abs_error_estimate = std::abs(err);
  if (!std::isfinite(out.value) || out.abs_error_estimate > std::max(rel_tol * std::abs(out.value), 1e-12)) {
    throw NonConvergence("integrate_halfline: error estimate " + std::to_string(out.abs_error_estimate) +
                         " above tolerance");
  }
  return out;
}

/// Integral of f over the finite interval [a, b].
template <class F>
QuadratureResult integrate_interval(F&& f, double a, double b, double rel_tol = 1e-10) {
  QuadratureResult out;
  auto counted = [&](double r) {
    ++out.evaluations;
    const double v = f(r);
    return std::isfinite(v) ? v : 0.0;
  };
  double err = 0.0;
  double l1 = 0.0;
  out.value = detail::tanh_sinh_rule().integrate(counted, a, b, rel_tol, &err, &l1);
  out.abs_error_estimate = std::abs(err);
  if (!std::isfinite(out.value) || out.abs_error_estimate > std::max(rel_tol * std::abs(out.value), 1e-12)) {
    throw NonConvergence("integrate_interval: error estimate above tolerance");
  }
  return out;
}

struct JacobiElliptic {
  double sn;
  double cn;
  double dn;
};

/// Jacobi elliptic functions sn, cn, dn of real argument x and modulus kappa in [0, 1].
inline JacobiElliptic jacobi_sn_cn_dn(double x, double kappa) {
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw InvalidArgument("jacobi_sn_cn_dn: modulus outside [0, 1]");
  JacobiElliptic j{};
  j.sn = boost::math::jacobi_elliptic(kappa, x, &j.cn, &j.dn);
  return j;
}

/// Root of f in [lo, hi] to an absolute bracket width of tol.
template <class F>
double find_root(F&& f, double lo, double hi, double tol = 1e-12) {
  const double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (!(flo * fhi < 0.0)) {
    throw NoBracket("find_root: f(lo) and f(hi) have the same sign on [" + std::to_string(lo) + ", " +
                    std::to_string(hi) + "]");
  }
  std::uintmax_t max_iter = 500;
  auto done = [tol](double a, double b) { return std::abs(b - a) <= tol; };
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, done, max_iter);
  return 0.5 * (a + b);
}

/// Minimizer of a unimodal f on [lo, hi] (Brent).
template <class F>
std::pair<double, double> minimize_scalar(F&& f, double lo, double hi, int bits = 40) {
  std::uintmax_t max_iter = 200;
  return boost::math::tools::brent_find_minima(f, lo, hi, bits, max_iter);
}

struct Point2 {
  double x;
  double y;
};

/// Least-squares coefficients c_k for y ~ sum_k c_k x^{e_k}.
inline std::vector<double> polyfit(std::span<const Point2> points, std::span<const int> exponents) {
  const auto rows = static_cast<Eigen::Index>(points.size());
  const auto cols = static_cast<Eigen::Index>(exponents.size());
  if (cols == 0 || rows < cols) throw InvalidArgument("polyfit: fewer points than monomials");
  Eigen::MatrixXd design(rows, cols);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& p = points[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < cols; ++k) {
      design(i, k) = std::pow(p.x, exponents[static_cast<std::size_t>(k)]);
    }
    rhs(i) = p.y;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-12);
  if (qr.rank() < cols) throw SingularSystem("polyfit: design matrix is rank deficient");
  const Eigen::VectorXd c = qr.solve(rhs);
  return {c.data(), c.data() + c.size()};
}

inline double polyval(std::span<const double> coefficients, std::span<const int> exponents, double x) {
  double y = 0.0;
  for (std::size_t k = 0; k < coefficients.size(); ++k) y += coefficients[k] * std::pow(x, exponents[k]);
  return y;
}

struct LinearFit {
  double intercept;
  double slope;
  double slope_stderr;
};

/// Ordinary least-squares line through (x, y).
inline LinearFit linear_regression(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw InvalidArgument("linear_regression: need at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw SingularSystem("linear_regression: all x equal");
  LinearFit fit{};
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.slope_stderr = 0.0;
  if (n > 2) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = y[i] - fit.intercept - fit.slope * x[i];
      ssr += e * e;
    }
    fit.slope_stderr = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

}  // namespace rsurmise
