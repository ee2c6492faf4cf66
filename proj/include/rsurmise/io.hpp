#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "entropy.hpp"
#include "errors.hpp"
#include "fit.hpp"
#include "ratios.hpp"
#include "surmise.hpp"

namespace rsurmise {

static_assert(std::endian::native == std::endian::little, "spectrum batches assume a little-endian host");

/// Packed batch of M spectra with N levels each.
/// Layout: "RSPB" magic, u32 version, u64 N, u64 M, u64 seed, then N*M little-endian f64.
struct SpectrumBatch {
  std::uint64_t order = 0;
  std::uint64_t count = 0;
  std::uint64_t seed = 0;
  std::vector<double> levels;  // row-major, one spectrum per row

  std::span<const double> spectrum(std::size_t m) const {
    return std::span<const double>(levels).subspan(m * order, order);
  }
};

inline constexpr std::array<char, 4> kBatchMagic{'R', 'S', 'P', 'B'};
inline constexpr std::uint32_t kBatchVersion = 1;

class IoError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

namespace detail {
template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw IoError("spectrum batch: truncated header");
  return v;
}
}  // namespace detail

inline void write_batch(std::ostream& os, const SpectrumBatch& b) {
  if (b.levels.size() != b.order * b.count) throw InvalidArgument("spectrum batch: size mismatch");
  os.write(kBatchMagic.data(), kBatchMagic.size());
  detail::put(os, kBatchVersion);
  detail::put(os, b.order);
  detail::put(os, b.count);
  detail::put(os, b.seed);
  os.write(reinterpret_cast<const char*>(b.levels.data()), static_cast<std::streamsize>(b.levels.size() * 8));
  if (!os) throw IoError("spectrum batch: write failed");
}

inline SpectrumBatch read_batch(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kBatchMagic) throw IoError("spectrum batch: bad magic");
  if (detail::get<std::uint32_t>(is) != kBatchVersion) throw IoError("spectrum batch: unsupported version");
  SpectrumBatch b;
  b.order = detail::get<std::uint64_t>(is);
  b.count = detail::get<std::uint64_t>(is);
  b.seed = detail::get<std::uint64_t>(is);
  if (b.order == 0 || b.count == 0 || b.order > (std::uint64_t{1} << 32) / b.count) {
    throw IoError("spectrum batch: implausible dimensions");
  }
  b.levels.resize(b.order * b.count);
  if (!is.read(reinterpret_cast<char*>(b.levels.data()), static_cast<std::streamsize>(b.levels.size() * 8))) {
    throw IoError("spectrum batch: truncated payload");
  }
  return b;
}

inline void write_batch_file(const std::string& path, const SpectrumBatch& b) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path);
  write_batch(os, b);
}

inline SpectrumBatch read_batch_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  return read_batch(is);
}

// Shortest round-trip representation.
inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

/// One row per spectrum: realization index then N levels.
inline void write_batch_csv(std::ostream& os, const SpectrumBatch& b) {
  os << "realization";
  for (std::uint64_t i = 0; i < b.order; ++i) os << ",e" << i;
  os << '\n';
  for (std::uint64_t m = 0; m < b.count; ++m) {
    os << m;
    for (double e : b.spectrum(m)) os << ',' << fmt(e);
    os << '\n';
  }
}

inline void write_histogram_csv(std::ostream& os, const RatioHistogram& h) {
  os << "bin_left,bin_right,density,count\n";
  for (std::size_t j = 0; j < h.bins(); ++j) {
    os << fmt(h.bin_left(j)) << ',' << fmt(h.bin_left(j) + h.bin_width) << ',' << fmt(h.density(j)) << ','
       << h.counts[j] << '\n';
  }
}

inline nlohmann::ordered_json to_json(const FitReport& r) {
  nlohmann::ordered_json j;
  j["mode"] = std::string(to_string(r.mode));
  j["beta"] = r.params.beta;
  j["gamma"] = r.params.gamma;
  j["c"] = r.params.c;
  j["beta_err"] = r.beta_err;
  j["gamma_err"] = r.gamma_err;
  j["c_err"] = r.c_err;
  j["mean_error"] = r.mean_error;
  j["gradient_norm"] = r.gradient_norm;
  j["iterations"] = r.iterations;
  j["restarts_used"] = r.restarts_used;
  j["converged"] = r.converged;
  j["bins"] = r.bins;
  j["ratios"] = r.ratios;
  return j;
}

inline void write_table1_csv(std::ostream& os) {
  os << "ensemble,beta,gamma,c,mean_r,mean_r_tilde\n";
  for (const auto& row : table1()) {
    os << row.ensemble << ',' << fmt(row.beta) << ',' << fmt(row.gamma) << ',' << fmt(row.c) << ',';
    if (row.mean_r.diverges) os << "inf";
    else os << fmt(row.mean_r.value);
    os << ',' << fmt(row.mean_r_tilde) << '\n';
  }
}

inline void write_crossover_csv(std::ostream& os, std::span<const CrossoverRow> rows) {
  os << "theta,parameter,beta,gamma,c,delta,beta_err,gamma_err,mean_r_tilde\n";
  for (const auto& r : rows) {
    os << fmt(r.theta) << ',' << fmt(r.parameter) << ',' << fmt(r.fit.params.beta) << ','
       << fmt(r.fit.params.gamma) << ',' << fmt(r.fit.params.c) << ',' << fmt(r.delta) << ','
       << fmt(r.fit.beta_err) << ',' << fmt(r.fit.gamma_err) << ',' << fmt(r.mean_r_tilde) << '\n';
  }
}

inline void write_scaling_csv(std::ostream& os, std::span<const ScalingRow> rows) {
  os << "n,m,beta,gamma,c,mean_error,beta_err,gamma_err,mean_r_tilde\n";
  for (const auto& r : rows) {
    os << r.order << ',' << r.realizations << ',' << fmt(r.fit.params.beta) << ',' << fmt(r.fit.params.gamma) << ','
       << fmt(r.fit.params.c) << ',' << fmt(r.fit.mean_error) << ',' << fmt(r.fit.beta_err) << ','
       << fmt(r.fit.gamma_err) << ',' << fmt(r.mean_r_tilde) << '\n';
  }
}

/// Tabulated curve next to its polynomial fit.
inline void write_ansatz_csv(std::ostream& os, const AnsatzCurve& c) {
  os << "beta,gamma_tabulated,gamma_polynomial\n";
  for (std::size_t i = 0; i < c.beta.size(); ++i) {
    os << fmt(c.beta[i]) << ',' << fmt(c.gamma[i]) << ',' << fmt(c.gamma_at(c.beta[i])) << '\n';
  }
}

inline nlohmann::ordered_json ansatz_to_json(const AnsatzCurve& c) {
  nlohmann::ordered_json j;
  j["transition"] = std::string(to_string(c.transition));
  j["beta_lo"] = c.beta_lo;
  j["beta_hi"] = c.beta_hi;
  j["pivot"] = c.pivot;
  j["exponents"] = c.exponents;
  j["coefficients"] = c.coefficients;
  j["max_deviation"] = c.max_deviation;
  return j;
}

/// Polynomial-only curve; the tabulated grid is not needed to evaluate it.
inline AnsatzCurve ansatz_from_json(const nlohmann::json& j) {
  try {
    AnsatzCurve c;
    c.transition = parse_transition(j.at("transition").get<std::string>());
    c.beta_lo = j.at("beta_lo").get<double>();
    c.beta_hi = j.at("beta_hi").get<double>();
    c.pivot = j.at("pivot").get<double>();
    c.exponents = j.at("exponents").get<std::vector<int>>();
    c.coefficients = j.at("coefficients").get<std::vector<double>>();
    if (c.exponents.size() != c.coefficients.size() || c.exponents.empty() || !(c.beta_hi > c.beta_lo)) {
      throw InvalidArgument("ansatz manifest: inconsistent curve");
    }
    c.max_deviation = j.value("max_deviation", 0.0);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("ansatz manifest: ") + e.what());
  }
}

}  // namespace rsurmise
