#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <rsurmise/fit.hpp>
#include <rsurmise/models.hpp>

using namespace rsurmise;

namespace {
using cd = std::complex<double>;

// Operator `op` acting on site n of an L-site chain; basis bit n is site n, 1 = up.
Eigen::MatrixXcd site_op(const Eigen::Matrix2cd& op, int n, int sites) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
  for (int s = sites - 1; s >= 0; --s) {
    const Eigen::MatrixXcd f = s == n ? Eigen::MatrixXcd(op) : Eigen::MatrixXcd::Identity(2, 2);
    Eigen::MatrixXcd k(out.rows() * 2, out.cols() * 2);
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      for (Eigen::Index j = 0; j < out.cols(); ++j) k.block(2 * i, 2 * j, 2, 2) = out(i, j) * f;
    }
    out = k;
  }
  return out;
}

// Pauli matrices in the (down, up) basis.
Eigen::Matrix2cd pauli_x() { return (Eigen::Matrix2cd() << 0, 1, 1, 0).finished(); }
Eigen::Matrix2cd pauli_y() { return (Eigen::Matrix2cd() << 0, cd(0, 1), cd(0, -1), 0).finished(); }
Eigen::Matrix2cd pauli_z() { return (Eigen::Matrix2cd() << -1, 0, 0, 1).finished(); }

Eigen::MatrixXcd xxz_full(int sites, double j, const std::vector<double>& w, bool periodic) {
  const auto dim = Eigen::Index{1} << sites;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  for (int n = 0; n < sites; ++n) h += 0.5 * w[static_cast<std::size_t>(n)] * site_op(pauli_z(), n, sites);
  auto bond = [&](int n, int m) {
    for (const auto& p : {pauli_x(), pauli_y(), pauli_z()}) h += 0.25 * j * site_op(p, n, sites) * site_op(p, m, sites);
  };
  for (int n = 0; n + 1 < sites; ++n) bond(n, n + 1);
  if (periodic && sites > 2) bond(sites - 1, 0);
  return h;
}

std::vector<double> sorted_real_eigs(const Eigen::MatrixXcd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(v.begin(), v.end());
  return v;
}

GaudinParameters fixed_parameters(int d, std::uint64_t seed) {
  RngStream rng(seed, 0);
  return draw_gaudin_parameters(d, rng);
}
}  // namespace

TEST(Xxz, TwoSiteSinglet) {
  const std::vector<double> w{0.0, 0.0};
  const auto e = eigvals_sym(xxz_hamiltonian(2, 1.0, w, Boundary::Open, 1));
  ASSERT_EQ(e.size(), 2u);
  EXPECT_NEAR(e[0], -0.75, 1e-12);
  EXPECT_NEAR(e[1], 0.25, 1e-12);
}

TEST(Xxz, SectorDimension) {
  EXPECT_EQ(xxz_sector_dimension(11, -0.5), 462u);
  XXZSpec spec;
  EXPECT_EQ(xxz_spectrum(spec, 0).size(), 462u);
  EXPECT_THROW(xxz_up_spins(11, 0.0), InvalidArgument);
  XXZSpec tiny;
  tiny.sites = 2;
  tiny.sector_sz = 0.0;
  EXPECT_THROW(xxz_spectrum(tiny, 0), EmptySector);
}

TEST(Xxz, SectorsReproduceFullSpectrum) {
  const int sites = 6;
  RngStream rng(3, 0);
  std::vector<double> w(sites);
  for (auto& v : w) v = sample_uniform(rng, -2.0, 2.0);
  for (bool periodic : {false, true}) {
    const auto full = xxz_full(sites, 1.3, w, periodic);
    // Total S^z commutes with the unrestricted Hamiltonian.
    Eigen::MatrixXcd sz = Eigen::MatrixXcd::Zero(full.rows(), full.cols());
    for (int n = 0; n < sites; ++n) sz += 0.5 * site_op(pauli_z(), n, sites);
    EXPECT_LT((full * sz - sz * full).norm(), 1e-12);

    std::vector<double> pieces;
    for (int up = 0; up <= sites; ++up) {
      const auto e = eigvals_sym(xxz_hamiltonian(sites, 1.3, w, periodic ? Boundary::Periodic : Boundary::Open, up));
      pieces.insert(pieces.end(), e.begin(), e.end());
    }
    std::sort(pieces.begin(), pieces.end());
    const auto oracle = sorted_real_eigs(full);
    ASSERT_EQ(pieces.size(), oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) EXPECT_NEAR(pieces[i], oracle[i], 1e-10);
  }
}

TEST(Xxz, HeisenbergRingGroundState) {
  const std::vector<double> w(4, 0.0);
  const auto e = eigvals_sym(xxz_hamiltonian(4, 1.0, w, Boundary::Periodic, 2));
  EXPECT_NEAR(e.front(), -2.0, 1e-12);
}

TEST(Xxz, CleanChainIgnoresSeed) {
  XXZSpec a;
  a.sites = 8;
  a.sector_sz = 0.0;
  a.disorder = 0.0;
  a.seed = 1;
  XXZSpec b = a;
  b.seed = 99;
  EXPECT_EQ(xxz_spectrum(a, 0), xxz_spectrum(b, 5));
}

TEST(Xxz, SpectraAreSymmetricReal) {
  XXZSpec spec;
  spec.sites = 8;
  spec.sector_sz = 0.0;
  RngStream rng(spec.seed, 0);
  const auto h = build_xxz(spec, rng).dense();
  EXPECT_EQ((h - h.transpose()).norm(), 0.0);
}

TEST(Gaudin, IntegralsCommuteWhenIntegrable) {
  for (int d : {4, 5, 6}) {
    GaudinSpec spec;
    spec.spins = d;
    spec.alpha = 0.0;
    const auto g = gaudin_couplings(spec, fixed_parameters(d, 11 + d));
    std::vector<Eigen::MatrixXd> r;
    for (int i = 0; i < d; ++i) r.push_back(gaudin_integral(g, i).dense());
    for (int i = 0; i < d; ++i) {
      for (int j = i + 1; j < d; ++j) EXPECT_LT((r[i] * r[j] - r[j] * r[i]).norm(), 1e-10) << d << " " << i << " " << j;
    }
  }
}

TEST(Gaudin, PerturbationBreaksCommutation) {
  GaudinSpec spec;
  spec.spins = 5;
  spec.alpha = 0.5;
  const auto g = gaudin_couplings(spec, fixed_parameters(5, 2));
  const auto r0 = gaudin_integral(g, 0).dense();
  const auto r1 = gaudin_integral(g, 1).dense();
  EXPECT_GT((r0 * r1 - r1 * r0).norm(), 1e-3);
}

TEST(Gaudin, TrigonometricLimit) {
  GaudinSpec spec;
  spec.spins = 4;
  spec.kappa = 0.0;
  const auto p = fixed_parameters(4, 5);
  const auto g = gaudin_couplings(spec, p);
  for (int j = 0; j < 4; ++j) {
    for (int k = 0; k < 4; ++k) {
      if (j == k) continue;
      const double expect = 1.0 / std::sin(p.z[static_cast<std::size_t>(j)] - p.z[static_cast<std::size_t>(k)]);
      EXPECT_NEAR(g(g.x, j, k), expect, 1e-10 * std::max(1.0, std::abs(expect)));
      EXPECT_NEAR(g(g.y, j, k), expect, 1e-10 * std::max(1.0, std::abs(expect)));
    }
  }
}

TEST(Gaudin, HamiltonianMatchesPauliConstruction) {
  const int d = 4;
  GaudinSpec spec;
  spec.spins = d;
  spec.alpha = 0.7;
  spec.kappa = 0.3;
  const auto p = fixed_parameters(d, 8);
  const auto g = gaudin_couplings(spec, p);
  const auto dim = Eigen::Index{1} << d;
  Eigen::MatrixXcd oracle = Eigen::MatrixXcd::Zero(dim, dim);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      const double e = p.epsilon[static_cast<std::size_t>(i)];
      oracle += e * g(g.x, i, j) * site_op(pauli_x(), i, d) * site_op(pauli_x(), j, d);
      oracle += e * g(g.y, i, j) * site_op(pauli_y(), i, d) * site_op(pauli_y(), j, d);
      oracle += e * g(g.z, i, j) * site_op(pauli_z(), i, d) * site_op(pauli_z(), j, d);
    }
  }
  const Eigen::MatrixXd h = gaudin_full_hamiltonian(g, p.epsilon).dense();
  EXPECT_LT(oracle.imag().norm(), 1e-12);
  EXPECT_LT((oracle.real() - h).norm(), 1e-10 * std::max(1.0, h.norm()));
}

TEST(Gaudin, ParitySectorDimensions) {
  GaudinSpec spec;
  spec.spins = 11;
  spec.alpha = 1.0;
  const auto h = build_gaudin(spec, fixed_parameters(11, 4));
  EXPECT_EQ(h.order(), 1024u);
}

TEST(Gaudin, ParitySectorsPartitionSpectrum) {
  for (int d : {5, 6}) {
    GaudinSpec spec;
    spec.spins = d;
    spec.alpha = 0.9;
    const auto p = fixed_parameters(d, 21);
    const auto full = eigvals_sym(gaudin_full_hamiltonian(gaudin_couplings(spec, p), p.epsilon));
    spec.parity = +1;
    auto plus = eigvals_sym(build_gaudin(spec, p));
    spec.parity = -1;
    const auto minus = eigvals_sym(build_gaudin(spec, p));
    if (d % 2 == 1) {
      ASSERT_EQ(plus.size(), minus.size());
      for (std::size_t i = 0; i < plus.size(); ++i) EXPECT_NEAR(plus[i], minus[i], 1e-9);
    }
    plus.insert(plus.end(), minus.begin(), minus.end());
    std::sort(plus.begin(), plus.end());
    ASSERT_EQ(plus.size(), full.size());
    for (std::size_t i = 0; i < full.size(); ++i) EXPECT_NEAR(plus[i], full[i], 1e-9);
  }
}

TEST(Gaudin, ProjectingIdentity) {
  const int d = 4;
  SymmetricMatrix eye(16);
  for (std::size_t i = 0; i < 16; ++i) eye.set(i, i, 1.0);
  const auto p = parity_project(eye, d, +1).dense();
  EXPECT_EQ(p.rows(), 8);
  EXPECT_EQ((p - Eigen::MatrixXd::Identity(8, 8)).norm(), 0.0);
}

TEST(Gaudin, ProjectionRejectsParityMixing) {
  SymmetricMatrix h(16);
  h.set(1, 0, 1.0);  // single spin flip connects opposite parities
  EXPECT_THROW(parity_project(h, 4, +1), SymmetryViolation);
}

TEST(Gaudin, CoincidentRapiditiesRejected) {
  GaudinSpec spec;
  spec.spins = 4;
  auto p = fixed_parameters(4, 1);
  p.z[2] = p.z[1];
  EXPECT_THROW(gaudin_couplings(spec, p), DegenerateParameters);
}

TEST(Gaudin, InvalidSpecsRejected) {
  GaudinSpec spec;
  spec.spins = 3;
  RngStream rng(1, 0);
  EXPECT_THROW(build_gaudin(spec, rng), InvalidArgument);
  spec.spins = 5;
  spec.alpha = 2.0;
  EXPECT_THROW(build_gaudin(spec, rng), InvalidArgument);
  spec.alpha = 0.0;
  spec.kappa = 1.5;
  EXPECT_THROW(build_gaudin(spec, rng), InvalidArgument);
}

TEST(Gaudin, FullyChaoticIsOrthogonalClass) {
  GaudinSpec spec;
  spec.spins = 9;
  spec.alpha = std::numbers::pi / 2;
  spec.seed = 1;
  const auto pooled = accumulate_ratios(300, [&](std::size_t m) { return gaudin_spectrum(spec, m); }, Binning{0.05, 5.0},
                                        RatioOptions{});
  const auto fit = fit_free(pooled.histogram, initial_guess(pooled.mean_r_tilde));
  EXPECT_NEAR(fit.params.beta, 1.0, 0.15);
}
