#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ensembles.hpp"
#include "entropy.hpp"
#include "errors.hpp"
#include "numerics.hpp"
#include "parallel.hpp"
#include "ratios.hpp"
#include "surmise.hpp"

namespace rsurmise {

enum class FitMode { FreeGamma, Ansatz };

inline std::string_view to_string(FitMode m) { return m == FitMode::FreeGamma ? "free" : "ansatz"; }

struct FitOptions {
  double beta_max = 6.0;
  double gamma_max = 4.0 - 1e-6;
  int max_iterations = 500;
  int restarts = 5;
  /// Weight residuals by the Poisson variance of the model counts instead of uniformly.
  bool poisson_weighted = false;
};

struct FitReport {
  FitMode mode = FitMode::FreeGamma;
  SurmiseParams params;
  double beta_err = 0.0;
  double gamma_err = 0.0;
  double c_err = 0.0;
  double mean_error = 0.0;  // (1/n) sum_j (P_H(r_j) - P(r_j))^2 over all n bins
  double gradient_norm = 0.0;
  int iterations = 0;
  int restarts_used = 0;
  bool converged = false;
  std::size_t bins = 0;
  std::uint64_t ratios = 0;
};

struct ErrorMetrics {
  std::vector<double> delta;  // P_H(r_j) - P(r_j) at bin centers
  double mean_error = 0.0;
};

/// Per-bin differences between histogram and model, and their mean square.
inline ErrorMetrics error_metrics(const RatioHistogram& h, const SurmiseParams& p) {
  ErrorMetrics m;
  m.delta.resize(h.bins());
  double acc = 0.0;
  for (std::size_t j = 0; j < h.bins(); ++j) {
    m.delta[j] = h.density(j) - eval_surmise(p, h.bin_center(j));
    acc += m.delta[j] * m.delta[j];
  }
  m.mean_error = h.bins() ? acc / static_cast<double>(h.bins()) : 0.0;
  return m;
}

/// Same metrics against the 3x3 Wigner-like surmise of index beta in {1, 2, 4}.
inline ErrorMetrics error_metrics_wigner(const RatioHistogram& h, int beta) {
  return error_metrics(h, wigner_params(beta));
}

/// Starting point: beta from <r~> interpolated between the Poisson, GOE and GUE
/// values, gamma from the tabulated ansatz, C from the normalization.
inline SurmiseParams initial_guess(double mean_folded) {
  constexpr std::array<double, 3> rt{0.38629436111989063, 0.52786404500042049, 0.59769037173413388};
  double beta = 0.0;
  if (mean_folded <= rt[0]) beta = 0.0;
  else if (mean_folded <= rt[1]) beta = (mean_folded - rt[0]) / (rt[1] - rt[0]);
  else beta = 1.0 + (mean_folded - rt[1]) / (rt[2] - rt[1]);
  beta = std::clamp(beta, 0.0, 4.0);
  double gamma = 8.0 / 9.0;
  if (beta <= 1.0) gamma = tabulated_ansatz(Transition::PoissonGOE).gamma_at(beta);
  else if (beta <= 2.0) gamma = tabulated_ansatz(Transition::GOEGUE).gamma_at(beta);
  return make_surmise(beta, gamma);
}

inline SurmiseParams initial_guess(const RatioHistogram& h) { return initial_guess(h.mean_folded_estimate()); }

namespace detail {

struct FitData {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> w;  // residual weights
};

inline FitData fit_data(const RatioHistogram& h) {
  FitData d;
  d.x.resize(h.bins());
  d.y.resize(h.bins());
  d.w.assign(h.bins(), 1.0);
  for (std::size_t j = 0; j < h.bins(); ++j) {
    d.x[j] = h.bin_center(j);
    d.y[j] = h.density(j);
  }
  return d;
}

inline void set_poisson_weights(FitData& d, const RatioHistogram& h, const SurmiseParams& p) {
  const double scale = static_cast<double>(h.total) * h.bin_width;
  const double floor = 1.0 / scale;  // one count
  for (std::size_t j = 0; j < d.x.size(); ++j) {
    const double model = std::max(eval_surmise(p, d.x[j]), floor);
    d.w[j] = std::sqrt(scale / model);
  }
}

inline void validate_histogram(const RatioHistogram& h) {
  if (h.total == 0 || h.nonempty_bins() < 10) {
    throw InvalidHistogram("fit: histogram needs at least 10 non-empty bins");
  }
}

struct LmResult {
  Eigen::Vector3d theta;
  double ssr = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  Eigen::Matrix3d jtj;
};

/// Residuals w_j (y_j - P(x_j)) and their analytic Jacobian in (beta, gamma, C).
inline double residuals(const FitData& d, const Eigen::Vector3d& t, Eigen::VectorXd& res, Eigen::MatrixXd* jac) {
  const double beta = t(0), gamma = t(1), c = t(2);
  double ssr = 0.0;
  for (Eigen::Index j = 0; j < res.size(); ++j) {
    const auto u = static_cast<std::size_t>(j);
    const double r = d.x[u];
    const double denom = (1.0 - r) * (1.0 - r) + (4.0 - gamma) * r;
    const double log_k = beta * std::log(r * (1.0 + r)) - (1.0 + 1.5 * beta) * std::log(denom);
    const double kernel = std::exp(log_k);
    const double model = c * kernel;
    res(j) = d.w[u] * (d.y[u] - model);
    ssr += res(j) * res(j);
    if (jac) {
      (*jac)(j, 0) = d.w[u] * model * (std::log(r * (1.0 + r)) - 1.5 * std::log(denom));
      (*jac)(j, 1) = d.w[u] * model * (1.0 + 1.5 * beta) * r / denom;
      (*jac)(j, 2) = d.w[u] * kernel;
    }
  }
  return ssr;
}

/// Box-projected Levenberg-Marquardt on (beta, gamma, C).
inline LmResult levenberg_marquardt(const FitData& d, Eigen::Vector3d theta, const FitOptions& opt) {
  const Eigen::Vector3d lower(0.0, -1e6, 1e-12);
  const Eigen::Vector3d upper(opt.beta_max, opt.gamma_max, 1e12);
  auto project = [&](Eigen::Vector3d t) { return t.cwiseMax(lower).cwiseMin(upper); };
  theta = project(theta);

  const auto n = static_cast<Eigen::Index>(d.x.size());
  Eigen::VectorXd res(n), trial_res(n);
  Eigen::MatrixXd jac(n, 3);
  LmResult out;
  double ssr = residuals(d, theta, res, &jac);
  double mu = 1e-3;
  double data_scale = 0.0;
  for (std::size_t j = 0; j < d.y.size(); ++j) data_scale += d.w[j] * d.w[j] * d.y[j] * d.y[j];
  // Largest cosine between the residual and a free Jacobian column, max_k |J_k.r| / (|J_k| |r|).
  // Zero when the residual reaches the rounding floor of the data.
  auto projected_gradient = [&](const Eigen::Vector3d& t, const Eigen::Vector3d& g) {
    if (ssr <= 1e-20 * data_scale) return 0.0;
    double worst = 0.0;
    for (int k = 0; k < 3; ++k) {
      const bool at_lo = t(k) <= lower(k) && g(k) > 0.0;
      const bool at_hi = t(k) >= upper(k) && g(k) < 0.0;
      if (at_lo || at_hi) continue;
      const double col = jac.col(k).norm();
      if (col > 0.0) worst = std::max(worst, 0.5 * std::abs(g(k)) / (col * std::sqrt(ssr)));
    }
    return worst;
  };

  for (out.iterations = 0; out.iterations < opt.max_iterations; ++out.iterations) {
    const Eigen::Matrix3d jtj = jac.transpose() * jac;
    const Eigen::Vector3d jtr = jac.transpose() * res;
    const Eigen::Vector3d grad = -2.0 * jtr;
    out.gradient_norm = projected_gradient(theta, grad);
    if (out.gradient_norm < 1e-8) {
      out.converged = true;
      break;
    }
    bool accepted = false;
    while (mu < 1e20) {
      Eigen::Matrix3d a = jtj;
      for (int k = 0; k < 3; ++k) a(k, k) += mu * std::max(jtj(k, k), 1e-30);
      const Eigen::Vector3d step = a.ldlt().solve(jtr);
      const Eigen::Vector3d trial = project(theta + step);
      const double trial_ssr = residuals(d, trial, trial_res, nullptr);
      if (std::isfinite(trial_ssr) && trial_ssr < ssr) {
        const double rel_step = ((trial - theta).cwiseAbs().array() /
                                 theta.cwiseAbs().cwiseMax(Eigen::Vector3d::Ones()).array()).maxCoeff();
        const double rel_drop = (ssr - trial_ssr) / ssr;
        theta = trial;
        ssr = residuals(d, theta, res, &jac);
        mu = std::max(mu / 3.0, 1e-12);
        accepted = true;
        if (rel_step < 1e-12 || rel_drop < 1e-15) {
          const Eigen::Vector3d g = -2.0 * (jac.transpose() * res);
          out.gradient_norm = projected_gradient(theta, g);
          out.converged = out.gradient_norm < 1e-5;
        }
        break;
      }
      mu *= 4.0;
    }
    if (out.converged) break;
    if (!accepted) {
      // No descent direction left: stationary up to rounding.
      out.converged = out.gradient_norm < 1e-5;
      break;
    }
  }
  out.theta = theta;
  out.ssr = ssr;
  out.jtj = jac.transpose() * jac;
  return out;
}

inline std::uint64_t jitter_hash(std::uint64_t x) { return detail::mix64(x + detail::kGolden); }

}  // namespace detail

/// Three-parameter least-squares fit of the surmise (beta, gamma, C all free)
/// to histogram densities at bin centers.
inline FitReport fit_free(const RatioHistogram& h, const SurmiseParams& init, const FitOptions& opt = {}) {
  detail::validate_histogram(h);
  auto data = detail::fit_data(h);
  Eigen::Vector3d start(init.beta, init.gamma, init.c);

  detail::LmResult best;
  int attempt = 0;
  for (; attempt <= opt.restarts; ++attempt) {
    Eigen::Vector3d t0 = start;
    if (attempt > 0) {
      // Deterministic jitter around the initial point.
      const std::uint64_t bits = detail::jitter_hash(static_cast<std::uint64_t>(attempt));
      const double u1 = static_cast<double>(bits & 0xFFFF) / 65535.0 - 0.5;
      const double u2 = static_cast<double>((bits >> 16) & 0xFFFF) / 65535.0 - 0.5;
      const double u3 = static_cast<double>((bits >> 32) & 0xFFFF) / 65535.0 - 0.5;
      t0 = Eigen::Vector3d(start(0) + 0.4 * u1, std::min(start(1) + 0.8 * u2, 3.5), start(2) * (1.0 + 0.4 * u3));
    }
    if (opt.poisson_weighted) {
      auto t = t0;
      detail::LmResult r;
      for (int pass = 0; pass < 3; ++pass) {
        SurmiseParams p{std::max(t(0), 0.0), std::min(t(1), opt.gamma_max), std::max(t(2), 1e-12)};
        detail::set_poisson_weights(data, h, p);
        r = detail::levenberg_marquardt(data, t, opt);
        t = r.theta;
      }
      best = r;
    } else {
      best = detail::levenberg_marquardt(data, t0, opt);
    }
    if (best.converged) break;
  }
  if (!best.converged) {
    throw NonConvergence("fit_free: Levenberg-Marquardt did not converge after " + std::to_string(opt.restarts) +
                         " restarts");
  }

  FitReport rep;
  rep.mode = FitMode::FreeGamma;
  rep.params = {best.theta(0), best.theta(1), best.theta(2)};
  rep.iterations = best.iterations;
  rep.restarts_used = attempt;
  rep.converged = true;
  rep.gradient_norm = best.gradient_norm;
  rep.bins = h.bins();
  rep.ratios = h.total;
  const double dof = std::max<double>(1.0, static_cast<double>(h.bins()) - 3.0);
  const double s2 = best.ssr / dof;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(best.jtj);
  if (lu.isInvertible()) {
    const Eigen::Matrix3d cov = s2 * lu.inverse();
    rep.beta_err = std::sqrt(std::max(cov(0, 0), 0.0));
    rep.gamma_err = std::sqrt(std::max(cov(1, 1), 0.0));
    rep.c_err = std::sqrt(std::max(cov(2, 2), 0.0));
  }
  rep.mean_error = error_metrics(h, rep.params).mean_error;
  return rep;
}

inline FitReport fit_free(const RatioHistogram& h, const FitOptions& opt = {}) {
  return fit_free(h, initial_guess(h), opt);
}

/// One-parameter fit along an ansatz curve: gamma = curve(beta), C = normalize(beta, gamma).
inline FitReport fit_ansatz(const RatioHistogram& h, const AnsatzCurve& curve, const FitOptions& opt = {}) {
  detail::validate_histogram(h);
  const auto data = detail::fit_data(h);
  auto model_at = [&](double beta) { return make_surmise(beta, curve.gamma_at(beta)); };
  auto ssr_at = [&](double beta) {
    const SurmiseParams p = model_at(beta);
    double acc = 0.0;
    for (std::size_t j = 0; j < data.x.size(); ++j) {
      const double e = data.y[j] - p.c * surmise_kernel(p.beta, p.gamma, data.x[j]);
      acc += e * e;
    }
    return acc;
  };

  const double lo = curve.beta_lo;
  const double hi = std::min(curve.beta_hi, opt.beta_max);
  constexpr int kScan = 40;
  int best_i = 0;
  double best_ssr = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kScan; ++i) {
    const double b = lo + (hi - lo) * i / kScan;
    const double s = ssr_at(b);
    if (s < best_ssr) {
      best_ssr = s;
      best_i = i;
    }
  }
  const double a = lo + (hi - lo) * std::max(best_i - 1, 0) / kScan;
  const double b = lo + (hi - lo) * std::min(best_i + 1, kScan) / kScan;
  const auto [beta, ssr] = minimize_scalar(ssr_at, a, b, 40);

  FitReport rep;
  rep.mode = FitMode::Ansatz;
  rep.params = model_at(beta);
  rep.converged = true;
  rep.iterations = kScan + 1;
  rep.bins = h.bins();
  rep.ratios = h.total;

  // Standard error from the linearized model around the optimum.
  const double step = 1e-5 * std::max(1.0, std::abs(beta));
  const double b_lo = std::max(lo, beta - step), b_hi = std::min(hi, beta + step);
  if (b_hi > b_lo) {
    const SurmiseParams pl = model_at(b_lo), ph = model_at(b_hi);
    const SurmiseParams p0 = rep.params;
    double jtj = 0.0, jtr = 0.0;
    for (std::size_t j = 0; j < data.x.size(); ++j) {
      const double x = data.x[j];
      const double dp = (eval_surmise(ph, x) - eval_surmise(pl, x)) / (b_hi - b_lo);
      jtj += dp * dp;
      jtr += dp * (data.y[j] - eval_surmise(p0, x));
    }
    const double s2 = ssr / std::max<double>(1.0, static_cast<double>(h.bins()) - 1.0);
    if (jtj > 0.0) {
      rep.beta_err = std::sqrt(s2 / jtj);
      rep.gamma_err = std::abs(curve.gamma_at(b_hi) - curve.gamma_at(b_lo)) / (b_hi - b_lo) * rep.beta_err;
    }
    if (jtj > 0.0 && ssr > 0.0) rep.gradient_norm = std::abs(jtr) / std::sqrt(jtj * ssr);
  }
  rep.mean_error = error_metrics(h, rep.params).mean_error;
  return rep;
}

// ---------------------------------------------------------------------------
// Histogram accumulation over many realizations
// ---------------------------------------------------------------------------

struct Binning {
  double bin_width = 0.005;
  double r_max = 5.0;
};

struct PooledStats {
  RatioHistogram histogram;
  double mean_r_tilde = 0.0;
  std::uint64_t merged_levels = 0;
};

/// Histogram of all ratios from `realizations` spectra produced by gen(m).
/// Counts are integers and per-realization sums are reduced in index order,
/// so the result does not depend on the thread count.
template <class Gen>
PooledStats accumulate_ratios(std::size_t realizations, Gen&& gen, const Binning& bins, const RatioOptions& ropt,
                              unsigned threads = 0) {
  if (realizations < 1) throw InvalidArgument("need at least one realization");
  if (threads == 0) threads = default_threads();
  const std::size_t chunks = std::min<std::size_t>(realizations, static_cast<std::size_t>(threads) * 8);
  std::vector<RatioHistogram> partial(chunks);
  std::vector<double> folded_sum(realizations, 0.0);
  std::vector<std::uint64_t> merged(realizations, 0);
  parallel_for(chunks, threads, [&](std::size_t c) {
    RatioHistogram local;
    local.bin_width = bins.bin_width;
    local.r_max = bins.r_max;
    local.counts.assign(bin_count(bins.bin_width, bins.r_max), 0);
    for (std::size_t m = c; m < realizations; m += chunks) {
      const std::vector<double> energies = gen(m);
      const RatioSeries s = ratios_from_energies(energies, ropt);
      local.merge(histogram(s.values, bins.bin_width, bins.r_max));
      double acc = 0.0;
      for (double f : s.folded) acc += f;
      folded_sum[m] = acc;
      merged[m] = s.merged_levels;
    }
    partial[c] = std::move(local);
  });
  PooledStats out;
  out.histogram = partial[0];
  for (std::size_t c = 1; c < chunks; ++c) out.histogram.merge(partial[c]);
  double acc = 0.0;
  for (double v : folded_sum) acc += v;
  out.mean_r_tilde = out.histogram.total ? acc / static_cast<double>(out.histogram.total) : 0.0;
  for (auto v : merged) out.merged_levels += v;
  return out;
}

inline PooledStats accumulate_ensemble(const EnsembleSpec& spec, std::size_t realizations, const Binning& bins,
                                       const RatioOptions& ropt = {}, unsigned threads = 0) {
  validate(spec);
  return accumulate_ratios(
      realizations, [&](std::size_t m) { return sample_spectrum(spec, m).energies; }, bins, ropt, threads);
}

// ---------------------------------------------------------------------------
// Scaling experiments and crossover curves
// ---------------------------------------------------------------------------

struct FitSettings {
  Binning binning;
  RatioOptions ratios;
  FitOptions fit;
};

struct ScalingRow {
  std::size_t order = 0;
  std::size_t realizations = 0;
  FitReport fit;
  double mean_r_tilde = 0.0;
};

/// For each N, M = round(budget / ratios-per-spectrum) realizations, fitted freely.
inline std::vector<ScalingRow> scaling_N(EnsembleKind kind, std::span<const std::size_t> orders, double budget,
                                         std::uint64_t seed, const FitSettings& settings = {}, unsigned threads = 0) {
  if (orders.empty() || !(budget >= 1.0)) throw InvalidArgument("scaling_N: need orders and a positive budget");
  std::vector<ScalingRow> rows;
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const std::size_t per = ratios_per_spectrum(orders[i], settings.ratios);
    if (per == 0) throw TooFewLevels("scaling_N: order too small for the trimming policy");
    const auto m = static_cast<std::size_t>(std::max(1.0, std::round(budget / static_cast<double>(per))));
    EnsembleSpec spec{kind, orders[i], 0.0, grid_point_seed(seed, i)};
    const auto pooled = accumulate_ensemble(spec, m, settings.binning, settings.ratios, threads);
    ScalingRow row;
    row.order = orders[i];
    row.realizations = m;
    row.mean_r_tilde = pooled.mean_r_tilde;
    row.fit = fit_free(pooled.histogram, initial_guess(pooled.mean_r_tilde), settings.fit);
    rows.push_back(row);
  }
  return rows;
}

struct ScalingMResult {
  std::vector<ScalingRow> rows;
  std::optional<LinearFit> slope;  // log10(mean error) vs log10(M); absent for fewer than two points
};

inline ScalingMResult scaling_M(EnsembleKind kind, std::size_t order, std::span<const std::size_t> realizations,
                                std::uint64_t seed, const FitSettings& settings = {}, unsigned threads = 0) {
  if (realizations.empty()) throw InvalidArgument("scaling_M: empty M grid");
  ScalingMResult out;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < realizations.size(); ++i) {
    EnsembleSpec spec{kind, order, 0.0, grid_point_seed(seed, i)};
    const auto pooled = accumulate_ensemble(spec, realizations[i], settings.binning, settings.ratios, threads);
    ScalingRow row;
    row.order = order;
    row.realizations = realizations[i];
    row.mean_r_tilde = pooled.mean_r_tilde;
    row.fit = fit_free(pooled.histogram, initial_guess(pooled.mean_r_tilde), settings.fit);
    lx.push_back(std::log10(static_cast<double>(realizations[i])));
    ly.push_back(std::log10(row.fit.mean_error));
    out.rows.push_back(row);
  }
  if (out.rows.size() >= 2) out.slope = linear_regression(lx, ly);
  return out;
}

struct CrossoverRow {
  double theta = 0.0;      // q / q_max
  double parameter = 0.0;  // raw transition parameter
  FitReport fit;
  double delta = 0.0;  // mean squared histogram-minus-fit difference
  double mean_r_tilde = 0.0;
};

/// Free fits along a sweep, given the pooled statistics of each grid point.
inline std::vector<CrossoverRow> crossover_curve(std::span<const double> parameters,
                                                 std::span<const PooledStats> pooled, const FitOptions& opt = {},
                                                 unsigned threads = 0) {
  if (parameters.empty() || parameters.size() != pooled.size()) {
    throw InvalidArgument("crossover_curve: one pooled histogram per parameter value required");
  }
  std::vector<CrossoverRow> rows(parameters.size());
  const auto q_max = static_cast<double>(parameters.size());
  parallel_for(rows.size(), threads, [&](std::size_t q) {
    auto& row = rows[q];
    row.theta = static_cast<double>(q + 1) / q_max;
    row.parameter = parameters[q];
    row.mean_r_tilde = pooled[q].mean_r_tilde;
    row.fit = fit_free(pooled[q].histogram, initial_guess(pooled[q].mean_r_tilde), opt);
    row.delta = row.fit.mean_error;
  });
  return rows;
}

}  // namespace rsurmise
