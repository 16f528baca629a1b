#include "spconv/distributions.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace spconv;

TEST(Chi2, OneDegreeMatchesErfc) {
  for (double x : {0.01, 0.5, 1.0, 3.841458820694124, 10.0, 40.0})
    EXPECT_NEAR(chi2_sf(x, 1.0), std::erfc(std::sqrt(x / 2)), 1e-14 + 1e-10 * std::erfc(std::sqrt(x / 2)));
}

TEST(Chi2, TwoDegreesIsExponential) {
  for (double x : {0.1, 2.0, 5.991464547107979, 30.0, 200.0})
    EXPECT_NEAR(chi2_sf(x, 2.0) / std::exp(-x / 2), 1.0, 1e-10);
}

TEST(Chi2, ReferenceValues) {
  // Values from an independent statistics library.
  EXPECT_NEAR(chi2_sf(3.764, 1.0), 0.05236716256573125, 1e-12);
  EXPECT_NEAR(chi2_sf(3.841458820694124, 1.0), 0.05, 1e-12);
  EXPECT_NEAR(chi2_sf(10.5, 7.0), 0.1619644930794282, 1e-12);
  EXPECT_NEAR(chi2_sf(250.0, 200.0) / 0.009379131668826098, 1.0, 1e-10);
  EXPECT_NEAR(chi2_sf(0.01, 3.0), 0.9997348349413444, 1e-12);
}

TEST(Chi2, NonPositiveStatisticHasUnitP) {
  EXPECT_EQ(chi2_sf(0.0, 1.0), 1.0);
  EXPECT_EQ(chi2_sf(-1.0, 2.0), 1.0);
  const auto t = chi2_test(0.0, 3.0);
  EXPECT_EQ(t.p_value, 1.0);
  EXPECT_EQ(t.df, 3.0);
}

TEST(StudentT, ReferenceValues) {
  EXPECT_NEAR(student_t_two_sided(2.1, 5.0), 0.08975324988459868, 1e-12);
  EXPECT_NEAR(student_t_two_sided(-0.3, 200.0), 0.764488730189328, 1e-12);
  EXPECT_NEAR(student_t_two_sided(12.0, 3.0) / 0.001245015800789336, 1.0, 1e-10);
  EXPECT_EQ(student_t_two_sided(0.0, 4.0), 1.0);
}

TEST(Normal, ReferenceValues) {
  EXPECT_NEAR(normal_two_sided(1.959963984540054), 0.05, 1e-14);
  EXPECT_NEAR(normal_sf(8.0) / 6.22096057427174e-16, 1.0, 1e-10);
  EXPECT_NEAR(normal_sf(-1.0), 0.8413447460685429, 1e-15);
}

TEST(SpecialFunctions, IncompleteGammaAndBeta) {
  EXPECT_NEAR(incomplete_beta(2.5, 3.5, 0.3), 0.29675298929566646, 1e-13);
  EXPECT_NEAR(gamma_q(4.5, 2.0), 0.9114125268316792, 1e-13);
  EXPECT_EQ(incomplete_beta(2.0, 3.0, 0.0), 0.0);
  EXPECT_EQ(incomplete_beta(2.0, 3.0, 1.0), 1.0);
  // Symmetry I_x(a, b) = 1 − I_{1−x}(b, a).
  EXPECT_NEAR(incomplete_beta(1.7, 0.9, 0.42), 1 - incomplete_beta(0.9, 1.7, 0.58), 1e-14);
}

TEST(SpecialFunctions, RejectsBadShape) {
  EXPECT_THROW(gamma_q(0.0, 1.0), DataError);
  EXPECT_THROW(student_t_two_sided(1.0, 0.0), DataError);
}
