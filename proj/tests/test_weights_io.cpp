#include "spconv/weights_io.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace spconv;

namespace {

std::string write(const WeightMatrixd& w, WeightFormat f) {
  std::ostringstream out;
  write_weights(out, w, f);
  return out.str();
}

WeightMatrixd read(const std::string& text, WeightFormat f, const std::vector<std::string>& ids = {}) {
  std::istringstream in(text);
  return read_weights(in, f, ids);
}

std::size_t error_line(const std::string& text, WeightFormat f, const std::vector<std::string>& ids = {}) {
  try {
    read(text, f, ids);
  } catch (const ParseError& e) {
    return e.line();
  }
  ADD_FAILURE() << "no parse error for:\n" << text;
  return 0;
}

void expect_identical(const WeightMatrixd& a, const WeightMatrixd& b) {
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a.ids(), b.ids());
  EXPECT_EQ(a.nonzeros(), b.nonzeros());
  const Eigen::MatrixXd da = a.dense(), db = b.dense();
  for (Index i = 0; i < a.size(); ++i)
    for (Index j = 0; j < a.size(); ++j) ASSERT_EQ(da(i, j), db(i, j)) << i << "," << j;
}

WeightMatrixd with_ids(const Eigen::MatrixXd& dense, bool standardized = false) {
  std::vector<std::string> ids;
  for (Index i = 0; i < dense.rows(); ++i) ids.push_back("region_" + std::to_string(i * 7 + 3));
  WeightMatrixd::Sparse s = dense.sparseView();
  return WeightMatrixd(s, ids, standardized);
}

}  // namespace

TEST(Gal, TwoNodeRoundTrip) {
  Eigen::Matrix2d d;
  d << 0, 1, 1, 0;
  const auto w = oracle::to_weights(d);
  const std::string text = write(w, WeightFormat::Gal);
  EXPECT_EQ(text, "0 2 spconv id\n1 1\n2\n2 1\n1\n");
  expect_identical(read(text, WeightFormat::Gal), w);
}

TEST(Gwt, ThreePointLineHasFourLines) {
  Dataset ds;
  ds.records = {{"a", 0, 0, 1, 1}, {"b", 1, 0, 1, 1}, {"c", 3, 0, 1, 1}};
  const auto w = build_distance_band(ds, 2.0);
  const std::string text = write(w, WeightFormat::Gwt);
  EXPECT_EQ(text, "0 3 spconv id\na b 1\nb a 1\nb c 1\nc b 1\n");
  expect_identical(read(text, WeightFormat::Gwt), w);
}

TEST(RoundTrip, RandomBinaryGal) {
  std::mt19937_64 gen(101);
  for (int rep = 0; rep < 20; ++rep) {
    auto d = oracle::random_symmetric_binary(100, 0.04, gen);
    // Knock out a few rows and columns to exercise empty neighbor lists.
    d.row(rep).setZero();
    d.col(rep).setZero();
    const auto w = with_ids(d);
    expect_identical(read(write(w, WeightFormat::Gal), WeightFormat::Gal), w);
  }
}

TEST(RoundTrip, RandomWeightedGwt) {
  std::mt19937_64 gen(202);
  for (int rep = 0; rep < 20; ++rep) {
    const auto w = with_ids(oracle::row_normalize(oracle::random_general(100, 0.05, gen)), true);
    // Regions without pairs need the id list to keep their position.
    const auto back = read(write(w, WeightFormat::Gwt), WeightFormat::Gwt, w.ids());
    expect_identical(back, w);
    EXPECT_TRUE(back.standardized());
  }
}

TEST(RoundTrip, BandGalViaFile) {
  std::mt19937_64 gen(7);
  const auto w = with_ids(oracle::random_symmetric_binary(40, 0.1, gen));
  const std::string path = testing::TempDir() + "/rt.gal";
  write_weights_file(path, w, WeightFormat::Gal);
  expect_identical(read_weights_file(path, weight_format_from_path(path)), w);
}

TEST(Header, AcceptsBareCount) {
  const auto w = read("2\n1 2 0.5\n2 1 0.5\n", WeightFormat::Gwt);
  EXPECT_EQ(w(0, 1), 0.5);
}

TEST(Errors, CarryLineNumbers) {
  EXPECT_EQ(error_line("0 2 x\n", WeightFormat::Gal), 1u);
  EXPECT_EQ(error_line("0 n x id\n", WeightFormat::Gwt), 1u);
  EXPECT_EQ(error_line("0 2 x id\na b 1\nb a 1\na b 2\n", WeightFormat::Gwt), 4u);
  EXPECT_EQ(error_line("0 2 x id\na b 1\nb z 1\n", WeightFormat::Gwt, {"a", "b"}), 3u);
  EXPECT_EQ(error_line("0 2 x id\na a 1\n", WeightFormat::Gwt), 2u);
  EXPECT_EQ(error_line("0 2 x id\na b -1\n", WeightFormat::Gwt), 2u);
  EXPECT_EQ(error_line("0 2 x id\na 1\nb\nb 2\na c\n", WeightFormat::Gal), 5u);
  EXPECT_EQ(error_line("0 2 x id\na 1\nb\na 1\nb\n", WeightFormat::Gal), 4u);
  EXPECT_EQ(error_line("0 2 x id\na 2\nb\n", WeightFormat::Gal), 3u);
}

TEST(Errors, MessagePrefixesLine) {
  try {
    read("0 2 x id\na b 1\nb z 1\n", WeightFormat::Gwt, {"a", "b"});
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("'z'"), std::string::npos);
  }
}

TEST(Errors, GwtWithoutIdsNeedsEveryRegion) {
  EXPECT_THROW(read("0 3 x id\na b 1\nb a 1\n", WeightFormat::Gwt), ParseError);
  const auto w = read("0 3 x id\na b 1\nb a 1\n", WeightFormat::Gwt, {"a", "b", "c"});
  EXPECT_EQ(w.islands(), std::vector<Index>{2});
}

TEST(Write, RejectsWeightedGalAndWhitespaceIds) {
  Eigen::Matrix2d d;
  d << 0, 0.5, 1, 0;
  std::ostringstream out;
  EXPECT_THROW(write_weights(out, oracle::to_weights(d), WeightFormat::Gal), DataError);
  WeightMatrixd::Sparse s = Eigen::Matrix2d(d.cwiseSign()).sparseView();
  const WeightMatrixd spaced(s, {"a b", "c"});
  EXPECT_THROW(write_weights(out, spaced, WeightFormat::Gwt), DataError);
}

TEST(Format, Parsing) {
  EXPECT_EQ(weight_format_from_path("x/y.GAL"), WeightFormat::Gal);
  EXPECT_EQ(weight_format_from_path("w.gwt"), WeightFormat::Gwt);
  EXPECT_THROW(weight_format_from_path("weights"), DataError);
  EXPECT_THROW(parse_weight_format("csv"), DataError);
}
