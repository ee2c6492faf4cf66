#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace rsurmise {

/// Real symmetric matrix. Only the lower triangle is stored; reads of the
/// upper triangle are mirrored, so the matrix is exactly symmetric.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(std::size_t order) : m_(Eigen::MatrixXd::Zero(idx(order), idx(order))) {
    if (order < 1) throw InvalidArgument("SymmetricMatrix: order must be positive");
  }

  std::size_t order() const { return static_cast<std::size_t>(m_.rows()); }

  double operator()(std::size_t i, std::size_t j) const { return i >= j ? m_(idx(i), idx(j)) : m_(idx(j), idx(i)); }

  void set(std::size_t i, std::size_t j, double v) {
    if (i >= j) m_(idx(i), idx(j)) = v;
    else m_(idx(j), idx(i)) = v;
  }
  void add(std::size_t i, std::size_t j, double v) {
    if (i >= j) m_(idx(i), idx(j)) += v;
    else m_(idx(j), idx(i)) += v;
  }

  /// Raw storage; the strict upper triangle is unspecified.
  const Eigen::MatrixXd& lower() const { return m_; }
  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd d = m_.selfadjointView<Eigen::Lower>();
    return d;
  }

  double trace() const { return m_.diagonal().sum(); }
  double frobenius_norm() const { return dense().norm(); }

  SymmetricMatrix& operator*=(double s) {
    m_.triangularView<Eigen::Lower>() *= s;
    return *this;
  }
  /// this += s * other
  void axpy(double s, const SymmetricMatrix& other) {
    m_.triangularView<Eigen::Lower>() += s * other.m_;
  }

 private:
  static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }
  Eigen::MatrixXd m_;
};

/// Complex Hermitian matrix, lower triangle stored; diagonal is real.
class HermitianMatrix {
 public:
  using Complex = std::complex<double>;

  explicit HermitianMatrix(std::size_t order) : m_(Eigen::MatrixXcd::Zero(idx(order), idx(order))) {
    if (order < 1) throw InvalidArgument("HermitianMatrix: order must be positive");
  }

  /// Real symmetric matrix viewed as Hermitian.
  explicit HermitianMatrix(const SymmetricMatrix& s) : HermitianMatrix(s.order()) {
    m_.real() = s.lower();
    m_.triangularView<Eigen::StrictlyUpper>().setZero();
  }

  std::size_t order() const { return static_cast<std::size_t>(m_.rows()); }

  Complex operator()(std::size_t i, std::size_t j) const {
    return i >= j ? m_(idx(i), idx(j)) : std::conj(m_(idx(j), idx(i)));
  }

  void set(std::size_t i, std::size_t j, Complex v) {
    if (i == j) m_(idx(i), idx(i)) = Complex(v.real(), 0.0);
    else if (i > j) m_(idx(i), idx(j)) = v;
    else m_(idx(j), idx(i)) = std::conj(v);
  }

  const Eigen::MatrixXcd& lower() const { return m_; }
  Eigen::MatrixXcd dense() const {
    Eigen::MatrixXcd d = m_.selfadjointView<Eigen::Lower>();
    return d;
  }
  double trace() const { return m_.diagonal().real().sum(); }
  double frobenius_norm() const { return dense().norm(); }

  HermitianMatrix& operator*=(double s) {
    m_.triangularView<Eigen::Lower>() *= s;
    return *this;
  }
  void axpy(double s, const HermitianMatrix& other) { m_.triangularView<Eigen::Lower>() += s * other.m_; }

 private:
  static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }
  Eigen::MatrixXcd m_;
};

struct TridiagonalMatrix {
  std::vector<double> diagonal;
  std::vector<double> offdiagonal;  // size order - 1

  std::size_t order() const { return diagonal.size(); }

  SymmetricMatrix dense() const {
    SymmetricMatrix m(order());
    for (std::size_t i = 0; i < order(); ++i) m.set(i, i, diagonal[i]);
    for (std::size_t i = 0; i + 1 < order(); ++i) m.set(i + 1, i, offdiagonal[i]);
    return m;
  }
};

namespace detail {
inline std::vector<double> to_sorted(const Eigen::VectorXd& v) {
  std::vector<double> out(v.data(), v.data() + v.size());
  std::sort(out.begin(), out.end());
  return out;
}

inline void check_finite(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(std::string(what) + ": non-finite matrix entry");
}
}  // namespace detail

// Householder tridiagonalization followed by implicit QL/QR with Wilkinson
// shifts (Eigen). Eigen's iteration budget is 30 sweeps per eigenvalue.

inline std::vector<double> eigvals_sym(const SymmetricMatrix& m) {
  detail::check_finite(m.lower().triangularView<Eigen::Lower>().toDenseMatrix().allFinite(), "eigvals_sym");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.lower(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NonConvergence("eigvals_sym: QL iteration did not converge");
  return detail::to_sorted(solver.eigenvalues());
}

inline std::vector<double> eigvals_herm(const HermitianMatrix& m) {
  detail::check_finite(m.lower().triangularView<Eigen::Lower>().toDenseMatrix().allFinite(), "eigvals_herm");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m.lower(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NonConvergence("eigvals_herm: QL iteration did not converge");
  return detail::to_sorted(solver.eigenvalues());
}

inline std::vector<double> eigvals_tridiag(const TridiagonalMatrix& m) {
  const auto n = static_cast<Eigen::Index>(m.order());
  if (n < 1 || m.offdiagonal.size() + 1 != m.diagonal.size()) {
    throw InvalidArgument("eigvals_tridiag: offdiagonal must have order - 1 entries");
  }
  Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(m.diagonal.data(), n);
  Eigen::VectorXd sub = n > 1 ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(m.offdiagonal.data(), n - 1))
                              : Eigen::VectorXd(0);
  detail::check_finite(diag.allFinite() && sub.allFinite(), "eigvals_tridiag");
  if (n == 1) return {diag(0)};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NonConvergence("eigvals_tridiag: QL iteration did not converge");
  return detail::to_sorted(solver.eigenvalues());
}

}  // namespace rsurmise
