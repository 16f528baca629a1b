#pragma once

// Sparse spatial weights: distance-band construction, row standardization,
// the spatial lag operator and the Cliff–Ord sums S0, S1, S2.

#include "spconv/common.hpp"
#include "spconv/dataset.hpp"

#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace spconv {

/// S0 = Σ w_ij, S1 = ½ Σ (w_ij + w_ji)², S2 = Σ_i (w_i. + w_.i)².
template <typename Scalar>
struct CliffOrdSums {
  Scalar s0{0};
  Scalar s1{0};
  Scalar s2{0};
};

template <typename Scalar, int Options>
CliffOrdSums<Scalar> cliff_ord_sums(const Eigen::SparseMatrix<Scalar, Options>& w) {
  using Sparse = Eigen::SparseMatrix<Scalar, Options>;
  CliffOrdSums<Scalar> sums;
  sums.s0 = w.sum();
  const Sparse sym = Sparse(w) + Sparse(w.transpose());
  sums.s1 = sym.squaredNorm() / 2;
  const VectorX<Scalar> row = w * VectorX<Scalar>::Ones(w.cols());
  const VectorX<Scalar> col = w.transpose() * VectorX<Scalar>::Ones(w.rows());
  sums.s2 = (row + col).squaredNorm();
  return sums;
}

template <typename Scalar = double>
class WeightMatrix {
public:
  using Sparse = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

  WeightMatrix() = default;

  /// Takes ownership of a square, nonnegative, zero-diagonal matrix. Empty
  /// `ids` are replaced by "1".."n".
  WeightMatrix(Sparse w, std::vector<std::string> ids, bool standardized = false)
      : w_(std::move(w)), ids_(std::move(ids)), standardized_(standardized) {
    if (w_.rows() != w_.cols()) throw DataError("weight matrix must be square");
    if (ids_.empty()) {
      ids_.reserve(static_cast<std::size_t>(w_.rows()));
      for (Index i = 0; i < w_.rows(); ++i) ids_.push_back(std::to_string(i + 1));
    }
    if (static_cast<Index>(ids_.size()) != w_.rows())
      throw DataError("weight matrix id list does not match its dimension");
    w_.prune(Scalar(0));
    w_.makeCompressed();
    for (Index i = 0; i < w_.outerSize(); ++i) {
      Index count = 0;
      for (typename Sparse::InnerIterator it(w_, i); it; ++it) {
        if (it.col() == i) throw DataError("weight matrix has a nonzero diagonal at region " + ids_[i]);
        if (!(it.value() > 0) || !std::isfinite(static_cast<double>(it.value())))
          throw DataError("weights must be positive and finite");
        ++count;
      }
      if (count == 0) islands_.push_back(i);
    }
    sums_ = cliff_ord_sums(w_);
  }

  Index size() const { return w_.rows(); }
  const Sparse& matrix() const { return w_; }
  const std::vector<std::string>& ids() const { return ids_; }
  bool standardized() const { return standardized_; }
  const std::vector<Index>& islands() const { return islands_; }
  bool has_islands() const { return !islands_.empty(); }
  Index nonzeros() const { return w_.nonZeros(); }

  Scalar s0() const { return sums_.s0; }
  Scalar s1() const { return sums_.s1; }
  Scalar s2() const { return sums_.s2; }
  const CliffOrdSums<Scalar>& sums() const { return sums_; }

  Index neighbor_count(Index i) const {
    return w_.outerIndexPtr()[i + 1] - w_.outerIndexPtr()[i];
  }

  Scalar operator()(Index i, Index j) const { return w_.coeff(i, j); }

  MatrixX<Scalar> dense() const { return MatrixX<Scalar>(w_); }

  bool is_symmetric() const {
    const Sparse t = w_.transpose();
    return (Sparse(w_) - t).norm() == Scalar(0);
  }

private:
  Sparse w_;
  std::vector<std::string> ids_;
  bool standardized_ = false;
  std::vector<Index> islands_;
  CliffOrdSums<Scalar> sums_;
};

using WeightMatrixd = WeightMatrix<double>;

/// Mean Earth radius (km) used for great-circle distances.
inline constexpr double kEarthRadiusKm = 6371.0088;

inline double planar_distance(const RegionRecord& a, const RegionRecord& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// Haversine distance in km; x is longitude and y latitude, in degrees.
inline double great_circle_distance(const RegionRecord& a, const RegionRecord& b) {
  constexpr double rad = std::numbers::pi / 180.0;
  const double lat1 = a.y * rad, lat2 = b.y * rad;
  const double dlat = lat2 - lat1;
  const double dlon = (b.x - a.x) * rad;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1) * std::cos(lat2) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

inline double region_distance(const RegionRecord& a, const RegionRecord& b, CoordinateSystem cs) {
  return cs == CoordinateSystem::PlanarKm ? planar_distance(a, b) : great_circle_distance(a, b);
}

/// Binary distance-band weights: w_ij = 1 iff 0 < d(i, j) ≤ cutoff.
/// Regions without neighbors are reported by `islands()`. Coincident
/// centroids and an all-island result are errors.
template <typename Scalar = double>
WeightMatrix<Scalar> build_distance_band(const Dataset& dataset, double cutoff) {
  if (!(cutoff > 0) || !std::isfinite(cutoff)) throw DataError("distance cutoff must be positive");
  const auto& recs = dataset.records;
  const Index n = dataset.size();
  std::vector<Eigen::Triplet<Scalar>> triplets;
  for (Index i = 0; i < n; ++i) {
    const auto& a = recs[static_cast<std::size_t>(i)];
    if (!std::isfinite(a.x) || !std::isfinite(a.y))
      throw DataError("region '" + a.id + "' has non-finite coordinates");
    for (Index j = i + 1; j < n; ++j) {
      const auto& b = recs[static_cast<std::size_t>(j)];
      const double d = region_distance(a, b, dataset.coordinates);
      if (d == 0.0)
        throw DataError("regions '" + a.id + "' and '" + b.id + "' share the same coordinates");
      if (d <= cutoff) {
        triplets.emplace_back(i, j, Scalar(1));
        triplets.emplace_back(j, i, Scalar(1));
      }
    }
  }
  typename WeightMatrix<Scalar>::Sparse w(n, n);
  w.setFromTriplets(triplets.begin(), triplets.end());
  WeightMatrix<Scalar> out(std::move(w), dataset.ids(), false);
  if (n > 0 && static_cast<Index>(out.islands().size()) == n)
    throw DataError("every region is an island at this cutoff");
  return out;
}

/// Divides each nonempty row by its sum. Island rows stay zero. Idempotent.
template <typename Scalar>
WeightMatrix<Scalar> row_standardize(const WeightMatrix<Scalar>& w) {
  using Sparse = typename WeightMatrix<Scalar>::Sparse;
  if (w.standardized()) return w;
  Sparse m = w.matrix();
  for (Index i = 0; i < m.outerSize(); ++i) {
    Scalar sum = 0;
    for (typename Sparse::InnerIterator it(m, i); it; ++it) sum += it.value();
    if (sum > 0)
      for (typename Sparse::InnerIterator it(m, i); it; ++it) it.valueRef() /= sum;
  }
  return WeightMatrix<Scalar>(std::move(m), w.ids(), true);
}

/// Wz.
template <typename Scalar, typename Derived>
VectorX<Scalar> spatial_lag(const WeightMatrix<Scalar>& w, const Eigen::MatrixBase<Derived>& z) {
  if (z.size() != w.size())
    throw DataError("spatial_lag: vector length " + std::to_string(z.size()) +
                    " does not match weight dimension " + std::to_string(w.size()));
  return w.matrix() * z.derived().template cast<Scalar>();
}

/// Builds a WeightMatrix from (i, j, w) triplets; duplicates throw.
template <typename Scalar = double>
WeightMatrix<Scalar> weights_from_triplets(Index n, const std::vector<Eigen::Triplet<Scalar>>& t,
                                           std::vector<std::string> ids = {},
                                           bool standardized = false) {
  typename WeightMatrix<Scalar>::Sparse w(n, n);
  w.setFromTriplets(t.begin(), t.end(), [](const Scalar&, const Scalar&) -> Scalar {
    throw DataError("duplicate weight entry");
  });
  return WeightMatrix<Scalar>(std::move(w), std::move(ids), standardized);
}

}  // namespace spconv
