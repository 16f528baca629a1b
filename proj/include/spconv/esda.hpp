#pragma once

// Exploratory spatial data analysis: global Moran's I with Cliff–Ord moments
// and permutation inference, Moran scatterplot data, and LISA clusters.

#include "spconv/common.hpp"
#include "spconv/distributions.hpp"
#include "spconv/rng.hpp"
#include "spconv/weights.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string_view>
#include <vector>

namespace spconv {

template <typename Scalar = double>
struct MoranResult {
  Scalar i_value{0};
  Scalar expected{0};
  Scalar variance_normality{0};
  Scalar variance_randomization{0};
  Scalar z_normality{0};
  Scalar z_randomization{0};
  Scalar p_normality{1};      // two-sided, standard normal
  Scalar p_randomization{1};  // two-sided, standard normal
  std::optional<Scalar> pseudo_p;
  Index permutations{0};
};

template <typename Scalar = double>
struct MoranScatter {
  VectorX<Scalar> z;    // standardized variable (population sd)
  VectorX<Scalar> lag;  // W z
  Scalar slope{0};
  Scalar intercept{0};
};

enum class LisaCluster : std::uint8_t { HH, LL, HL, LH, NotSignificant, Island };

inline std::string_view to_string(LisaCluster c) {
  switch (c) {
    case LisaCluster::HH: return "HH";
    case LisaCluster::LL: return "LL";
    case LisaCluster::HL: return "HL";
    case LisaCluster::LH: return "LH";
    case LisaCluster::NotSignificant: return "NS";
    case LisaCluster::Island: return "ISLAND";
  }
  return "NS";
}

template <typename Scalar = double>
struct LisaResult {
  VectorX<Scalar> local_i;
  VectorX<Scalar> pseudo_p;
  std::vector<LisaCluster> cluster;
  VectorX<Scalar> z;    // centered variable
  VectorX<Scalar> lag;  // W z

  // Counts in the order HH, LL, HL, LH, NotSignificant, Island.
  std::array<Index, 6> counts() const {
    std::array<Index, 6> c{};
    for (const auto label : cluster) ++c[static_cast<std::size_t>(label)];
    return c;
  }
};

namespace detail {

template <typename Scalar, typename Derived>
VectorX<Scalar> centered_checked(const WeightMatrix<Scalar>& w, const Eigen::MatrixBase<Derived>& z_raw) {
  const Index n = z_raw.size();
  if (n < 3) throw DataError("Moran statistics need at least 3 observations");
  if (n != w.size())
    throw DataError("variable length " + std::to_string(n) + " does not match weights dimension " +
                    std::to_string(w.size()));
  if (w.nonzeros() == 0) throw DataError("weight matrix has no nonzero entries");
  VectorX<Scalar> z = z_raw.derived().template cast<Scalar>();
  if (!z.allFinite()) throw DataError("variable contains non-finite values");
  z.array() -= z.mean();
  const Scalar scale = z_raw.derived().template cast<Scalar>().cwiseAbs().maxCoeff();
  using std::sqrt;
  if (!(sqrt(z.squaredNorm() / n) > 64 * std::numeric_limits<Scalar>::epsilon() * scale))
    throw DataError("variable has zero variance");
  return z;
}

template <typename Scalar>
Scalar quadratic_form(const WeightMatrix<Scalar>& w, const VectorX<Scalar>& z) {
  return z.dot(w.matrix() * z);
}

// Exact permutation variance of I by enumeration (used for n = 3, where the
// closed-form randomization moment divides by n − 3).
template <typename Scalar>
Scalar enumerated_permutation_variance(const WeightMatrix<Scalar>& w, const VectorX<Scalar>& z) {
  const Index n = z.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));
  const Scalar scale = Scalar(n) / (w.s0() * z.squaredNorm());
  Scalar sum = 0, sum_sq = 0;
  Index count = 0;
  VectorX<Scalar> zp(n);
  do {
    for (Index i = 0; i < n; ++i) zp[i] = z[order[static_cast<std::size_t>(i)]];
    const Scalar value = scale * quadratic_form(w, zp);
    sum += value;
    sum_sq += value * value;
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  const Scalar mean = sum / count;
  return sum_sq / count - mean * mean;
}

}  // namespace detail

/// Global Moran's I, I = (n/S0)·z'Wz/z'z on the centered variable.
///
/// Analytical moments follow Cliff and Ord under the normality and the
/// randomization assumption. With `permutations` > 0 a two-sided pseudo
/// p-value (count{|I_perm| ≥ |I|} + 1)/(permutations + 1) is computed under
/// unconditional relabeling with the stream (seed, 0).
template <typename Scalar, typename Derived>
MoranResult<Scalar> morans_i(const WeightMatrix<Scalar>& w, const Eigen::MatrixBase<Derived>& z_raw,
                             Index permutations = 0, std::uint64_t seed = 0) {
  using std::sqrt;
  const VectorX<Scalar> z = detail::centered_checked(w, z_raw);
  const Scalar n = static_cast<Scalar>(z.size());
  const Scalar zz = z.squaredNorm();
  const Scalar s0 = w.s0(), s1 = w.s1(), s2 = w.s2();

  MoranResult<Scalar> r;
  r.i_value = (n / s0) * detail::quadratic_form(w, z) / zz;
  r.expected = Scalar(-1) / (n - 1);
  const Scalar e2 = r.expected * r.expected;

  r.variance_normality = (n * n * s1 - n * s2 + 3 * s0 * s0) / (s0 * s0 * (n * n - 1)) - e2;

  if (z.size() > 3) {
    const Scalar b2 = n * z.array().pow(4).sum() / (zz * zz);
    const Scalar num = n * ((n * n - 3 * n + 3) * s1 - n * s2 + 3 * s0 * s0) -
                       b2 * ((n * n - n) * s1 - 2 * n * s2 + 6 * s0 * s0);
    r.variance_randomization = num / ((n - 1) * (n - 2) * (n - 3) * s0 * s0) - e2;
  } else {
    r.variance_randomization = detail::enumerated_permutation_variance(w, z);
  }
  r.z_normality = (r.i_value - r.expected) / sqrt(r.variance_normality);
  r.z_randomization = (r.i_value - r.expected) / sqrt(r.variance_randomization);
  r.p_normality = normal_two_sided(r.z_normality);
  r.p_randomization = normal_two_sided(r.z_randomization);

  r.permutations = permutations;
  if (permutations > 0) {
    using std::abs;
    Rng rng(seed, 0);
    VectorX<Scalar> zp = z;
    const Scalar observed = abs(r.i_value);
    const Scalar tie = observed * Scalar(1e-12);
    Index extreme = 0;
    for (Index p = 0; p < permutations; ++p) {
      for (Index i = z.size() - 1; i > 0; --i) {
        const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
        std::swap(zp[i], zp[j]);
      }
      const Scalar value = (n / s0) * detail::quadratic_form(w, zp) / zz;
      if (abs(value) >= observed - tie) ++extreme;
    }
    r.pseudo_p = Scalar(extreme + 1) / Scalar(permutations + 1);
  }
  return r;
}

/// Points (z_i, (Wz)_i) of the Moran scatterplot on the standardized
/// variable, with the least-squares line through them. For row-standardized
/// island-free W the slope equals Moran's I.
template <typename Scalar, typename Derived>
MoranScatter<Scalar> moran_scatter(const WeightMatrix<Scalar>& w, const Eigen::MatrixBase<Derived>& z_raw) {
  using std::sqrt;
  VectorX<Scalar> z = detail::centered_checked(w, z_raw);
  z /= sqrt(z.squaredNorm() / Scalar(z.size()));
  MoranScatter<Scalar> s;
  s.lag = w.matrix() * z;
  s.slope = z.dot(s.lag) / z.squaredNorm();
  s.intercept = s.lag.mean();
  s.z = std::move(z);
  return s;
}

/// Local Moran statistics I_i = (z_i/m2)·Σ_j w_ij z_j with m2 = Σ z²/n.
///
/// Significance is by conditional permutation: z_i stays in place and the
/// neighbors' values are drawn without replacement from the other n − 1
/// observations. Region i uses the random stream (seed, i + 1), so results
/// do not depend on evaluation order. The pseudo p-value is one-sided in
/// the direction of the observed statistic.
template <typename Scalar, typename Derived>
LisaResult<Scalar> lisa(const WeightMatrix<Scalar>& w, const Eigen::MatrixBase<Derived>& z_raw,
                        Index permutations = 999, std::uint64_t seed = 0, Scalar alpha = Scalar(0.05)) {
  using Sparse = typename WeightMatrix<Scalar>::Sparse;
  if (permutations < 99) throw DataError("LISA needs at least 99 permutations");
  if (!(alpha > 0 && alpha < 1)) throw DataError("significance level must lie in (0, 1)");
  const VectorX<Scalar> z = detail::centered_checked(w, z_raw);
  const Index n = z.size();
  const Scalar m2 = z.squaredNorm() / Scalar(n);
  const Sparse& m = w.matrix();

  LisaResult<Scalar> r;
  r.lag = m * z;
  r.local_i = z.cwiseProduct(r.lag) / m2;
  r.pseudo_p = VectorX<Scalar>::Ones(n);
  r.cluster.assign(static_cast<std::size_t>(n), LisaCluster::NotSignificant);

  std::vector<Index> others(static_cast<std::size_t>(n - 1));
  std::vector<Scalar> row_weights;
  for (Index i = 0; i < n; ++i) {
    const Index k = w.neighbor_count(i);
    if (k == 0) {
      r.local_i[i] = 0;
      r.cluster[static_cast<std::size_t>(i)] = LisaCluster::Island;
      continue;
    }
    if (k > n - 1) throw DataError("region has more neighbors than other regions");
    row_weights.clear();
    for (typename Sparse::InnerIterator it(m, i); it; ++it) row_weights.push_back(it.value());
    for (Index j = 0, p = 0; j < n; ++j)
      if (j != i) others[static_cast<std::size_t>(p++)] = j;

    Rng rng(seed, static_cast<std::uint64_t>(i) + 1);
    const Scalar observed = r.local_i[i];
    const bool upper = observed >= 0;
    const Scalar tie = std::abs(observed) * Scalar(1e-12);
    Index extreme = 0;
    for (Index p = 0; p < permutations; ++p) {
      Scalar lag = 0;
      for (Index s = 0; s < k; ++s) {
        const auto pick = s + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - 1 - s)));
        std::swap(others[static_cast<std::size_t>(s)], others[static_cast<std::size_t>(pick)]);
        lag += row_weights[static_cast<std::size_t>(s)] * z[others[static_cast<std::size_t>(s)]];
      }
      const Scalar value = z[i] * lag / m2;
      if (upper ? value >= observed - tie : value <= observed + tie) ++extreme;
    }
    r.pseudo_p[i] = Scalar(extreme + 1) / Scalar(permutations + 1);

    if (r.pseudo_p[i] <= alpha) {
      const Scalar zi = z[i], li = r.lag[i];
      auto& label = r.cluster[static_cast<std::size_t>(i)];
      if (zi > 0 && li > 0) label = LisaCluster::HH;
      else if (zi < 0 && li < 0) label = LisaCluster::LL;
      else if (zi > 0 && li < 0) label = LisaCluster::HL;
      else if (zi < 0 && li > 0) label = LisaCluster::LH;
    }
  }
  return r;
}

}  // namespace spconv
