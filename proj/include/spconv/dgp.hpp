#pragma once

// Synthetic data: regular lattices and the independent, spatial lag and
// spatial error data-generating processes.

#include "spconv/common.hpp"
#include "spconv/dataset.hpp"
#include "spconv/rng.hpp"
#include "spconv/weights.hpp"

#include <Eigen/LU>

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>

namespace spconv {

enum class DgpKind { Independent, Lag, Error };

inline std::string_view to_string(DgpKind k) {
  switch (k) {
    case DgpKind::Independent: return "independent";
    case DgpKind::Lag: return "lag";
    case DgpKind::Error: return "error";
  }
  return "independent";
}

inline DgpKind parse_dgp_kind(std::string_view s) {
  if (s == "independent" || s == "ols") return DgpKind::Independent;
  if (s == "lag" || s == "sar") return DgpKind::Lag;
  if (s == "error" || s == "sem") return DgpKind::Error;
  throw DataError("unknown DGP kind '" + std::string(s) + "' (expected independent, lag or error)");
}

template <typename Scalar = double>
struct DgpSpec {
  DgpKind kind = DgpKind::Independent;
  VectorX<Scalar> beta;
  Scalar spatial_coef{0};
  Scalar sigma{1};
  std::uint64_t seed{0};
};

/// rows × cols grid at (r·spacing, c·spacing), ids "r{r}c{c}" in row-major
/// order; products are set to 1 until filled by a simulation. With a cutoff
/// in [spacing, spacing·√2) the distance band equals rook contiguity.
inline Dataset make_lattice(Index rows, Index cols, double spacing = 1.0) {
  if (rows < 2 || cols < 2) throw DataError("lattice needs at least 2 rows and 2 columns");
  if (!(spacing > 0)) throw DataError("lattice spacing must be positive");
  Dataset ds;
  ds.coordinates = CoordinateSystem::PlanarKm;
  ds.records.reserve(static_cast<std::size_t>(rows * cols));
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c)
      ds.records.push_back({"r" + std::to_string(r) + "c" + std::to_string(c),
                            static_cast<double>(r) * spacing, static_cast<double>(c) * spacing, 1.0, 1.0});
  return ds;
}

/// n standard normal draws from the stream (seed, stream).
inline Eigen::VectorXd standard_normal(Index n, std::uint64_t seed, std::uint64_t stream = 0) {
  Rng rng(seed, stream);
  Eigen::VectorXd g(n);
  for (Index i = 0; i < n; ++i) g[i] = rng.normal();
  return g;
}

/// Draws y from the DGP:
///   Independent: y = Xβ + σg
///   Lag:         y = (I − ρW)⁻¹(Xβ + σg)
///   Error:       y = Xβ + (I − λW)⁻¹σg
/// with g standard normal from `spec.seed`. Reduced forms use a dense LU.
/// The coefficient must lie in `domain` when given, otherwise in (−1, 1),
/// which is always admissible for a row-standardized W.
template <typename Scalar = double>
VectorX<Scalar> simulate(const WeightMatrix<Scalar>& w, const MatrixX<Scalar>& x, const DgpSpec<Scalar>& spec,
                         std::optional<std::pair<Scalar, Scalar>> domain = std::nullopt) {
  const Index n = x.rows();
  if (spec.beta.size() != x.cols()) throw DataError("beta length does not match the design columns");
  if (!(spec.sigma >= 0)) throw DataError("sigma must be nonnegative");
  if (w.size() != n) throw DataError("weights dimension does not match the design");
  const VectorX<Scalar> mean = x * spec.beta;
  const VectorX<Scalar> noise = spec.sigma * standard_normal(n, spec.seed).template cast<Scalar>();
  if (spec.kind == DgpKind::Independent) return mean + noise;

  if (!w.standardized()) throw DataError("spatial DGPs require a row-standardized weight matrix");
  if (w.has_islands()) throw DataError("spatial DGPs require a weight matrix without islands");
  const auto [lo, hi] = domain.value_or(std::pair<Scalar, Scalar>{Scalar(-1), Scalar(1)});
  const Scalar c = spec.spatial_coef;
  if (!(c > lo && c < hi)) {
    std::ostringstream msg;
    msg << "spatial coefficient " << c << " outside the admissible interval (" << lo << ", " << hi << ")";
    throw DataError(msg.str());
  }
  if (c == 0) return mean + noise;

  MatrixX<Scalar> a = -c * MatrixX<Scalar>(w.matrix());
  a.diagonal().array() += 1;
  const Eigen::PartialPivLU<MatrixX<Scalar>> lu(a);
  if (spec.kind == DgpKind::Lag) return lu.solve(VectorX<Scalar>(mean + noise));
  return mean + lu.solve(noise);
}

/// Fills the products of `lattice` from a growth DGP: ln P0 = mean + sd·g
/// with g from the stream (spec.seed, 1), growth y from `simulate` on
/// X = [1, ln P0], and P_T = P0·exp(T·y).
inline Dataset simulate_growth(Dataset lattice, const WeightMatrixd& w, const DgpSpec<double>& spec,
                               double log_p0_mean = 8.0, double log_p0_sd = 1.0) {
  if (!(lattice.period_length > 0)) throw DataError("period length must be positive");
  const Index n = lattice.size();
  Eigen::MatrixXd x(n, 2);
  x.col(0).setOnes();
  x.col(1) = (log_p0_mean + log_p0_sd * standard_normal(n, spec.seed, 1).array()).matrix();
  const Eigen::VectorXd y = simulate(w, x, spec);
  for (Index i = 0; i < n; ++i) {
    auto& r = lattice.records[static_cast<std::size_t>(i)];
    r.p0 = std::exp(x(i, 1));
    r.pt = r.p0 * std::exp(lattice.period_length * y[i]);
  }
  return lattice;
}

}  // namespace spconv
