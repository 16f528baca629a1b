#include "spconv/esda.hpp"
#include "spconv/dgp.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace spconv;

namespace {

WeightMatrixd cycle4_standardized() {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(4, 4);
  for (Index i = 0; i < 4; ++i) w(i, (i + 1) % 4) = w((i + 1) % 4, i) = 1;
  return oracle::to_weights(oracle::row_normalize(w), true);
}

// Mean and variance of I over every permutation of z.
std::pair<double, double> enumerate_permutations(const Eigen::MatrixXd& w, const Eigen::VectorXd& z) {
  std::vector<int> idx(static_cast<std::size_t>(z.size()));
  std::iota(idx.begin(), idx.end(), 0);
  double s = 0, s2 = 0, count = 0;
  Eigen::VectorXd zp(z.size());
  do {
    for (Index i = 0; i < z.size(); ++i) zp[i] = z[idx[static_cast<std::size_t>(i)]];
    const double v = oracle::moran_double_sum(w, zp);
    s += v;
    s2 += v * v;
    ++count;
  } while (std::next_permutation(idx.begin(), idx.end()));
  return {s / count, s2 / count - (s / count) * (s / count)};
}

}  // namespace

TEST(Moran, CycleExamples) {
  const auto w = cycle4_standardized();
  const auto alt = morans_i(w, Eigen::Vector4d(1, -1, 1, -1));
  EXPECT_NEAR(alt.i_value, -1.0, 1e-15);
  EXPECT_EQ(alt.expected, -1.0 / 3.0);
  EXPECT_NEAR(morans_i(w, Eigen::Vector4d(1, 1, -1, -1)).i_value, 0.0, 1e-15);
}

TEST(Moran, DoubleSumOracle) {
  std::mt19937_64 gen(31);
  for (int rep = 0; rep < 20; ++rep) {
    const auto d = oracle::random_general(30, 0.15, gen);
    const Eigen::VectorXd z = oracle::random_normal(30, gen);
    const auto r = morans_i(oracle::to_weights(d), z);
    EXPECT_NEAR(r.i_value, oracle::moran_double_sum(d, z), 1e-12);
    EXPECT_EQ(r.expected, -1.0 / 29.0);
    EXPECT_NEAR(r.z_normality, (r.i_value - r.expected) / std::sqrt(r.variance_normality), 1e-12);
    EXPECT_NEAR(r.z_randomization, (r.i_value - r.expected) / std::sqrt(r.variance_randomization), 1e-12);
    EXPECT_GT(r.variance_normality, 0);
    EXPECT_GT(r.variance_randomization, 0);
    EXPECT_FALSE(r.pseudo_p.has_value());
  }
}

TEST(Moran, RandomizationMomentsMatchFullEnumeration) {
  // Over all 7! relabelings the mean of I is −1/(n−1) and its variance is the
  // randomization variance.
  std::mt19937_64 gen(8);
  const auto d = oracle::random_general(7, 0.4, gen);
  const Eigen::VectorXd z = oracle::random_normal(7, gen);
  const auto [mean, var] = enumerate_permutations(d, z);
  const auto r = morans_i(oracle::to_weights(d), z);
  EXPECT_NEAR(mean, r.expected, 1e-12);
  EXPECT_NEAR(var, r.variance_randomization, 1e-12);
}

TEST(Moran, ThreeRegionsUseExactPermutationVariance) {
  Eigen::Matrix3d d;
  d << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  const Eigen::Vector3d z(1.0, 4.0, 2.5);
  const auto [mean, var] = enumerate_permutations(d, z);
  const auto r = morans_i(oracle::to_weights(d), z);
  EXPECT_NEAR(mean, r.expected, 1e-12);
  EXPECT_NEAR(var, r.variance_randomization, 1e-14);
}

TEST(Moran, NormalityVarianceClosedForm) {
  // 4-cycle, binary: S0 = 8, S1 = 16, S2 = 64.
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(4, 4);
  for (Index i = 0; i < 4; ++i) d(i, (i + 1) % 4) = d((i + 1) % 4, i) = 1;
  const auto r = morans_i(oracle::to_weights(d), Eigen::Vector4d(1, 2, 0, 5));
  const double e2 = (16.0 * 16 - 4.0 * 64 + 3.0 * 64) / (64.0 * 15);
  EXPECT_NEAR(r.variance_normality, e2 - 1.0 / 9.0, 1e-15);
}

TEST(Moran, AffineInvariance) {
  std::mt19937_64 gen(4);
  const auto w = oracle::to_weights(oracle::random_general(25, 0.2, gen));
  const Eigen::VectorXd z = oracle::random_normal(25, gen);
  const double base = morans_i(w, z).i_value;
  for (double a : {-3.0, 0.01, 250.0})
    EXPECT_NEAR(morans_i(w, Eigen::VectorXd((a * z).array() + 17.0)).i_value, base, 1e-10);
}

TEST(Moran, PermutationPseudoP) {
  std::mt19937_64 gen(12);
  const auto w = oracle::to_weights(oracle::row_normalize(oracle::random_symmetric_binary(40, 0.08, gen)), true);
  const Eigen::VectorXd z = oracle::random_normal(40, gen);
  const auto a = morans_i(w, z, 199, 5);
  const auto b = morans_i(w, z, 199, 5);
  ASSERT_TRUE(a.pseudo_p.has_value());
  EXPECT_EQ(*a.pseudo_p, *b.pseudo_p);
  EXPECT_GE(*a.pseudo_p, 1.0 / 200);
  EXPECT_LE(*a.pseudo_p, 1.0);
  EXPECT_EQ(a.permutations, 199);

  // Strong pattern: the smallest attainable p.
  const auto lat = row_standardize(build_distance_band(make_lattice(8, 8), 1.0));
  Eigen::VectorXd stripes(64);
  for (Index i = 0; i < 64; ++i) stripes[i] = double(i / 8);
  EXPECT_EQ(*morans_i(lat, stripes, 99, 1).pseudo_p, 0.01);
}

TEST(Moran, Errors) {
  const auto w = cycle4_standardized();
  EXPECT_THROW(morans_i(w, Eigen::Vector4d::Constant(2.0)), DataError);
  EXPECT_THROW(morans_i(w, Eigen::Vector3d(1, 2, 3)), DataError);
  Eigen::Matrix2d two;
  two << 0, 1, 1, 0;
  EXPECT_THROW(morans_i(oracle::to_weights(two), Eigen::Vector2d(1, 2)), DataError);
  const WeightMatrixd empty(WeightMatrixd::Sparse(4, 4), {});
  EXPECT_THROW(morans_i(empty, Eigen::Vector4d(1, 2, 3, 4)), DataError);
}

TEST(Scatter, SlopeEqualsMoran) {
  const auto w = cycle4_standardized();
  EXPECT_NEAR(moran_scatter(w, Eigen::Vector4d(1, -1, 1, -1)).slope, -1.0, 1e-15);

  std::mt19937_64 gen(19);
  for (int rep = 0; rep < 10; ++rep) {
    const auto s = oracle::to_weights(oracle::row_normalize(oracle::random_symmetric_binary(35, 0.1, gen)), true);
    const Eigen::VectorXd z = oracle::random_normal(35, gen);
    const auto sc = moran_scatter(s, z);
    EXPECT_NEAR(sc.slope, morans_i(s, z).i_value, 1e-10);
    EXPECT_NEAR(sc.z.mean(), 0.0, 1e-12);
    EXPECT_NEAR(sc.z.squaredNorm() / 35.0, 1.0, 1e-12);
    // Standardizing again is a fixed point.
    EXPECT_LT((moran_scatter(s, sc.z).z - sc.z).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Lisa, SumOfLocalsIsNTimesGlobal) {
  std::mt19937_64 gen(23);
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = 20 + rep;
    const auto w = oracle::to_weights(oracle::row_normalize(oracle::random_symmetric_binary(n, 0.1, gen)), true);
    const Eigen::VectorXd z = oracle::random_normal(n, gen);
    const auto l = lisa(w, z, 99, rep);
    EXPECT_NEAR(l.local_i.sum(), double(n) * morans_i(w, z).i_value, 1e-10);
  }
}

TEST(Lisa, ZeroValueGivesZeroLocal) {
  const auto w = cycle4_standardized();
  // Mean is zero so the centered value of region 2 is zero.
  const auto l = lisa(w, Eigen::Vector4d(1, 2, 0, -3), 99, 0);
  EXPECT_EQ(l.local_i[2], 0.0);
}

TEST(Lisa, TwoBlobLattice) {
  const Dataset lat = make_lattice(10, 10);
  const auto w = row_standardize(build_distance_band(lat, 1.0));
  std::mt19937_64 gen(77);
  std::normal_distribution<double> noise(0.0, 0.1);
  Eigen::VectorXd z(100);
  for (Index r = 0; r < 10; ++r)
    for (Index c = 0; c < 10; ++c) {
      double v = noise(gen);
      if (r < 4 && c < 4) v += 3.0;
      if (r >= 6 && c >= 6) v -= 3.0;
      z[r * 10 + c] = v;
    }
  const auto l = lisa(w, z, 999, 2024, 0.05);
  for (Index r = 1; r <= 2; ++r)
    for (Index c = 1; c <= 2; ++c) {
      EXPECT_EQ(l.cluster[r * 10 + c], LisaCluster::HH) << r << "," << c;
      EXPECT_EQ(l.cluster[(r + 6) * 10 + (c + 6)], LisaCluster::LL) << r + 6 << "," << c + 6;
    }
  for (Index i = 0; i < 100; ++i) {
    EXPECT_GE(l.pseudo_p[i], 1.0 / 1000);
    EXPECT_LE(l.pseudo_p[i], 1.0);
    const auto c = l.cluster[static_cast<std::size_t>(i)];
    const double sign = z[i] * l.lag[i];
    if (c == LisaCluster::HH || c == LisaCluster::LL) {
      EXPECT_GT(sign, 0);
    }
    if (c == LisaCluster::HL || c == LisaCluster::LH) {
      EXPECT_LT(sign, 0);
    }
  }
  const auto again = lisa(w, z, 999, 2024, 0.05);
  EXPECT_EQ(again.pseudo_p, l.pseudo_p);
}

TEST(Lisa, IslandsAreLabelled) {
  Dataset ds;
  ds.records = {{"a", 0, 0, 1, 1}, {"b", 1, 0, 1, 1}, {"c", 2, 0, 1, 1}, {"d", 9, 0, 1, 1}};
  const auto w = row_standardize(build_distance_band(ds, 1.0));
  const auto l = lisa(w, Eigen::Vector4d(1, 3, 2, 7), 99, 3);
  EXPECT_EQ(l.cluster[3], LisaCluster::Island);
  EXPECT_EQ(l.local_i[3], 0.0);
  EXPECT_EQ(l.pseudo_p[3], 1.0);
  EXPECT_EQ(l.counts()[5], 1);
}

TEST(Lisa, Preconditions) {
  const auto w = cycle4_standardized();
  EXPECT_THROW(lisa(w, Eigen::Vector4d(1, 2, 3, 4), 50, 0), DataError);
  EXPECT_THROW(lisa(w, Eigen::Vector4d(1, 2, 3, 4), 99, 0, 1.5), DataError);
}
