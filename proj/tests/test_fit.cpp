#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <rsurmise/fit.hpp>

using namespace rsurmise;

namespace {
// Inverse-CDF sampler for a normalized density on [0, inf), tabulated in t = r / (1 + r).
class InverseCdf {
 public:
  template <class Density>
  explicit InverseCdf(Density&& p, std::size_t n = 200000) : t_(n + 1), cdf_(n + 1, 0.0) {
    auto g = [&](double t) { return t >= 1.0 ? 0.0 : p(t / (1.0 - t)) / ((1.0 - t) * (1.0 - t)); };
    for (std::size_t i = 0; i <= n; ++i) t_[i] = static_cast<double>(i) / static_cast<double>(n);
    for (std::size_t i = 1; i <= n; ++i) {
      const double a = t_[i - 1], b = t_[i], m = 0.5 * (a + b);
      cdf_[i] = cdf_[i - 1] + (b - a) * (g(a) + 4.0 * g(m) + g(b)) / 6.0;
    }
    for (auto& c : cdf_) c /= cdf_.back();
  }

  double operator()(double u) const {
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto i = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - cdf_.begin(), 1, cdf_.size() - 1));
    const double f = (u - cdf_[i - 1]) / std::max(cdf_[i] - cdf_[i - 1], 1e-300);
    const double t = t_[i - 1] + f * (t_[i] - t_[i - 1]);
    return t / (1.0 - t);
  }

 private:
  std::vector<double> t_, cdf_;
};

std::vector<double> draw(const InverseCdf& inv, std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, 0);
  std::vector<double> out(n);
  for (auto& r : out) r = inv(rng.uniform());
  return out;
}

// Histogram whose counts are the exact bin masses of a density times a large total.
template <class Density>
RatioHistogram exact_histogram(Density&& p, double dr, double r_max) {
  const double total = 1e13;
  RatioHistogram h;
  h.bin_width = dr;
  h.r_max = r_max;
  h.counts.assign(bin_count(dr, r_max), 0);
  for (std::size_t j = 0; j < h.counts.size(); ++j) {
    const double a = j * dr;
    const double mass = integrate_interval(p, a, a + dr, 1e-12).value;
    h.counts[j] = static_cast<std::uint64_t>(std::llround(total * mass));
  }
  h.total = static_cast<std::uint64_t>(total);
  return h;
}

std::vector<double> exponential_levels(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, 0);
  std::vector<double> e(n);
  double x = 0.0;
  for (auto& v : e) {
    x += -std::log1p(-rng.uniform());
    v = x;
  }
  return e;
}

RatioHistogram ensemble_histogram(EnsembleKind kind, std::size_t n, std::size_t m, double dr) {
  return accumulate_ensemble({kind, n, 0.0, 7}, m, Binning{dr, 5.0}).histogram;
}
}  // namespace

TEST(FitFree, RecoversSyntheticDraws) {
  const auto truth = make_surmise(1.5, 0.5);
  const InverseCdf inv([&](double r) { return eval_surmise(truth, r); });
  const auto h = histogram(draw(inv, 1000000, 42), 0.02, 5.0);
  const auto fit = fit_free(h);
  ASSERT_TRUE(fit.converged);
  EXPECT_NEAR(fit.params.beta, 1.5, 3.0 * fit.beta_err);
  EXPECT_NEAR(fit.params.gamma, 0.5, 3.0 * fit.gamma_err);
  EXPECT_NEAR(fit.params.c, truth.c, 3.0 * fit.c_err);
  EXPECT_GT(fit.beta_err, 0.0);
}

TEST(FitFree, ExactHistogramIsReproduced) {
  const auto truth = make_surmise(1.2, 0.3);
  const auto h = exact_histogram([&](double r) { return eval_surmise(truth, r); }, 0.01, 5.0);
  const auto fit = fit_free(h);
  // Bin averages differ from center values at O(dr^2).
  EXPECT_NEAR(fit.params.beta, 1.2, 1e-3);
  EXPECT_NEAR(fit.params.gamma, 0.3, 2e-3);
  EXPECT_LT(fit.mean_error, 1e-8);
}

TEST(FitFree, Idempotent) {
  const auto h = ensemble_histogram(EnsembleKind::GOE, 100, 200, 0.02);
  const auto first = fit_free(h);
  const auto second = fit_free(h, first.params);
  EXPECT_LT(std::abs(second.params.beta - first.params.beta), 1e-6);
  EXPECT_LT(std::abs(second.params.gamma - first.params.gamma), 1e-6);
  EXPECT_LT(std::abs(second.params.c - first.params.c), 1e-6);
}

TEST(FitFree, ConvergedReportIsConsistent) {
  const auto h = ensemble_histogram(EnsembleKind::GUE, 100, 200, 0.02);
  const auto fit = fit_free(h);
  EXPECT_TRUE(fit.converged);
  EXPECT_LT(fit.gradient_norm, 1e-5);
  EXPECT_GE(fit.beta_err, 0.0);
  EXPECT_GE(fit.gamma_err, 0.0);
  EXPECT_GE(fit.c_err, 0.0);
  EXPECT_EQ(fit.bins, h.bins());
  EXPECT_EQ(fit.ratios, h.total);
}

TEST(FitFree, RejectsSparseHistogram) {
  const std::vector<double> few{0.5, 0.5, 1.0};
  const auto h = histogram(few, 0.05, 5.0);
  EXPECT_THROW(fit_free(h), InvalidHistogram);
  EXPECT_THROW(fit_ansatz(h, tabulated_ansatz(Transition::PoissonGOE)), InvalidHistogram);
}

TEST(FitAnsatz, NestedModelNeverBeatsFreeFit) {
  const auto h = ensemble_histogram(EnsembleKind::GOE, 100, 200, 0.02);
  const auto free = fit_free(h);
  const auto constrained = fit_ansatz(h, tabulated_ansatz(Transition::PoissonGOE));
  EXPECT_GE(constrained.mean_error, free.mean_error);
}

TEST(FitAnsatz, PoissonData) {
  std::vector<double> r;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto series = ratios_from_energies(exponential_levels(1000, s), RatioOptions{});
    r.insert(r.end(), series.values.begin(), series.values.end());
  }
  const auto fit = fit_ansatz(histogram(r, 0.02, 5.0), tabulated_ansatz(Transition::PoissonGOE));
  EXPECT_NEAR(fit.params.beta, 0.0, 0.05);
}

TEST(FitAnsatz, GoeData) {
  const auto fit = fit_ansatz(ensemble_histogram(EnsembleKind::GOE, 200, 200, 0.02),
                              tabulated_ansatz(Transition::PoissonGOE));
  EXPECT_NEAR(fit.params.beta, 1.0, 0.1);
  EXPECT_NEAR(fit.params.gamma, tabulated_ansatz(Transition::PoissonGOE).gamma_at(fit.params.beta), 1e-12);
}

TEST(FitAnsatz, GueData) {
  const auto fit =
      fit_ansatz(ensemble_histogram(EnsembleKind::GUE, 200, 200, 0.02), tabulated_ansatz(Transition::GOEGUE));
  EXPECT_NEAR(fit.params.beta, 2.0, 0.15);
}

TEST(FitAnsatz, TabulatedCurve) {
  const auto curve = solve_gamma_curve(Transition::PoissonGOE, 41);
  const auto fit = fit_ansatz(ensemble_histogram(EnsembleKind::GOE, 200, 200, 0.02), curve);
  EXPECT_NEAR(fit.params.beta, 1.0, 0.1);
}

TEST(FitFree, NearlyExactDataConverges) {
  // The 3x3 Wigner-like GOE density is the member (1, 1) of the family.
  const auto h = exact_histogram([](double r) { return eval_wigner(1, r); }, 0.005, 5.0);
  const auto fit = fit_free(h);
  EXPECT_NEAR(fit.params.beta, 1.0, 1e-3);
  EXPECT_NEAR(fit.params.gamma, 1.0, 1e-3);
}

TEST(ErrorMetrics, ExactModelHasNoError) {
  const auto p = make_surmise(1.0, 0.8);
  RatioHistogram h;
  h.bin_width = 0.05;
  h.r_max = 5.0;
  h.counts.assign(bin_count(0.05, 5.0), 0);
  const double total = 1e15;
  for (std::size_t j = 0; j < h.counts.size(); ++j) {
    h.counts[j] = static_cast<std::uint64_t>(std::llround(total * 0.05 * eval_surmise(p, (j + 0.5) * 0.05)));
  }
  h.total = static_cast<std::uint64_t>(total);
  const auto m = error_metrics(h, p);
  EXPECT_EQ(m.delta.size(), h.bins());
  for (double d : m.delta) EXPECT_LT(std::abs(d), 1e-12);
  EXPECT_LT(m.mean_error, 1e-24);
}

TEST(ErrorMetrics, RefinedBinsGiveSameMisfit) {
  // Noise-free histograms of a density outside the surmise family.
  const auto goe = make_surmise(1.0, 0.8), gue = make_surmise(2.0, 8.0 / 9.0);
  auto mixed = [&](double r) { return 0.5 * eval_surmise(goe, r) + 0.5 * eval_surmise(gue, r); };
  const auto coarse = fit_free(exact_histogram(mixed, 0.02, 5.0));
  const auto fine = fit_free(exact_histogram(mixed, 0.01, 5.0));
  ASSERT_GT(coarse.mean_error, 0.0);
  EXPECT_NEAR(fine.mean_error / coarse.mean_error, 1.0, 0.2);
}

TEST(ErrorMetrics, WignerComparison) {
  const auto h = ensemble_histogram(EnsembleKind::GOE, 200, 300, 0.02);
  const auto fit = fit_free(h);
  EXPECT_LT(fit.mean_error, error_metrics_wigner(h, 1).mean_error);
}

TEST(Scaling, SyntheticDrawsDecayAsInverseM) {
  const auto truth = make_surmise(1.0, 0.8);
  const InverseCdf inv([&](double r) { return eval_surmise(truth, r); });
  std::vector<double> lx, ly;
  for (std::size_t m : {10000u, 100000u, 1000000u}) {
    const auto fit = fit_free(histogram(draw(inv, m, 1000 + m), 0.02, 5.0));
    lx.push_back(std::log10(static_cast<double>(m)));
    ly.push_back(std::log10(fit.mean_error));
  }
  EXPECT_NEAR(linear_regression(lx, ly).slope, -1.0, 0.1);
}

TEST(Scaling, SinglePointHasNoSlope) {
  const std::vector<std::size_t> m{50};
  const auto res = scaling_M(EnsembleKind::GOE, 50, m, 3, FitSettings{Binning{0.05, 5.0}, {}, {}});
  EXPECT_EQ(res.rows.size(), 1u);
  EXPECT_FALSE(res.slope.has_value());
}

TEST(Scaling, BudgetSetsRealizations) {
  const std::vector<std::size_t> orders{10, 100};
  const auto rows = scaling_N(EnsembleKind::GOE, orders, 20000, 3, FitSettings{Binning{0.05, 5.0}, {}, {}});
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    const double per = static_cast<double>(ratios_per_spectrum(r.order, RatioOptions{}));
    EXPECT_NEAR(static_cast<double>(r.realizations) * per, 20000.0, per);
  }
}

TEST(Reproducibility, ThreadCountDoesNotChangeResults) {
  const EnsembleSpec spec{EnsembleKind::GOE, 60, 0.0, 9};
  const auto one = accumulate_ensemble(spec, 64, Binning{0.02, 5.0}, {}, 1);
  const auto many = accumulate_ensemble(spec, 64, Binning{0.02, 5.0}, {}, 4);
  EXPECT_EQ(one.histogram.counts, many.histogram.counts);
  EXPECT_EQ(one.mean_r_tilde, many.mean_r_tilde);
  const auto f1 = fit_free(one.histogram);
  const auto f4 = fit_free(many.histogram);
  EXPECT_EQ(f1.params.beta, f4.params.beta);
  EXPECT_EQ(f1.params.gamma, f4.params.gamma);
}

TEST(Crossover, SinglePoint) {
  const auto pooled = accumulate_ensemble({EnsembleKind::MixPoissonGOE, 60, 1.0, 5}, 60, Binning{0.05, 5.0});
  const std::vector<double> params{1.0};
  const std::vector<PooledStats> stats{pooled};
  const auto rows = crossover_curve(params, stats);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_DOUBLE_EQ(rows[0].theta, 1.0);
  EXPECT_EQ(rows[0].parameter, 1.0);
  EXPECT_EQ(rows[0].delta, rows[0].fit.mean_error);
  const std::vector<PooledStats> none;
  EXPECT_THROW(crossover_curve(params, none), InvalidArgument);
}
